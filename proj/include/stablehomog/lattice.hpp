// lattice.hpp -- scaled lattice boxes, grid functions, dyadic decomposition.
//
// Geometry convention: every box is half-open, B_R(y) = y + (-R, R]^d, on the
// scaled lattice k^-1 Z^d. A box stores n = 2Mk points per side; the index
// coordinates j (integers, real position j/k) run over center + (-n/2, n/2].
// Point ordering is row-major with the last coordinate fastest.
#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "stablehomog/errors.hpp"

namespace stablehomog {

struct LatticeBox {
    int d = 1;
    std::int64_t k = 1;                    // lattice scale, points at j/k
    std::int64_t n = 0;                    // points per side = 2*M*k
    std::array<std::int64_t, 12> center{}; // index coords of the box center

    // M half-width with 2*M*k integral (validated to 1e-9); center on the
    // lattice in index units (default origin).
    static LatticeBox create(int d, std::int64_t k, double M);
    static LatticeBox create_centered(int d, std::int64_t k, double M,
                                      const std::int64_t* center_idx);

    double half_width() const { return static_cast<double>(n) / (2.0 * static_cast<double>(k)); }
    std::int64_t side() const { return n; }

    // Per-dim index range relative to center: (-n/2, n/2] as integers.
    std::int64_t jmin() const { return -((n - 1) / 2); }
    std::int64_t jmax() const { return n / 2; }

    std::size_t point_count() const;
    bool contains(const std::int64_t* j) const;
    std::size_t index_of(const std::int64_t* j) const;       // domain_error if outside
    void coords_of(std::size_t idx, std::int64_t* j) const;  // index coords out

    // Whether this box's points are a subset of parent's (same k required).
    bool inside(const LatticeBox& parent) const;

    bool operator==(const LatticeBox& o) const {
        return d == o.d && k == o.k && n == o.n && center == o.center;
    }
};

// All index-coordinate tuples of the box in storage order.
std::vector<std::vector<std::int64_t>> box_points(const LatticeBox& box);

// SoA int32 coordinate arrays plus packed point keys, the layout the compute
// kernels consume. Keys are single-word (d <= 3) or empty for larger d.
struct BoxArrays {
    std::vector<std::int32_t> coords[3];
    std::vector<std::uint64_t> keys;
};
BoxArrays materialize_box(const LatticeBox& box);

struct GridFunction {
    LatticeBox box;
    int ncomp = 1;
    std::vector<double> values;  // planar: comp * point_count + idx

    static GridFunction zeros(const LatticeBox& box, int ncomp = 1);

    double& at(std::size_t idx, int comp = 0) { return values[static_cast<std::size_t>(comp) * box.point_count() + idx]; }
    double at(std::size_t idx, int comp = 0) const { return values[static_cast<std::size_t>(comp) * box.point_count() + idx]; }
    double* comp_data(int comp) { return values.data() + static_cast<std::size_t>(comp) * box.point_count(); }
    const double* comp_data(int comp) const { return values.data() + static_cast<std::size_t>(comp) * box.point_count(); }

    // L2(mu^k) norm: (k^-d sum |v|^2)^(1/2) over all components.
    double l2_norm() const;
    // Plain mean over box points of one component.
    double mean(int comp = 0) const;
};

// ||u - v|| in L2(mu^k); boxes must match exactly.
double l2_distance(const GridFunction& u, const GridFunction& v);

// Mean of f over the points of sub (same k; sub must lie inside f.box).
double average_over(const GridFunction& f, const LatticeBox& sub, int comp = 0);

// Centers Z^d_{m,n} = {z in B_{2^m}: z_i = odd * 2^n}; Z^d_{m,m} = {0}.
// Cells z + (-2^n, 2^n]^d partition B_{2^m}.
std::vector<std::vector<std::int64_t>> multiscale_centers(int d, int m, int n);

struct DyadicDecomposition {
    int d = 1, m = 0, n = 0;
    std::vector<std::vector<std::int64_t>> centers;

    static DyadicDecomposition create(int d, int m, int n);
    LatticeBox cell(std::size_t i) const;  // B_{2^n}(center_i) at k = 1
    LatticeBox whole() const;              // B_{2^m} at k = 1
};

// Piecewise-constant extension: x maps to the lattice point w with
// w_i = ceil(k x_i)/k (the point owning the half-open cell (w - 1/k, w]).
// Returns 0 outside the box.
double eval_piecewise_constant(const GridFunction& f, const double* x, int comp = 0);

// Padded evaluation grids larger than this many points are refused.
inline constexpr std::int64_t kPaddedPointCap = std::int64_t(1) << 26;

// Box extended by pad index units per side; same center, same parity.
// Throws past the coordinate limit or kPaddedPointCap.
LatticeBox dilate(const LatticeBox& box, std::int64_t pad);

// Contiguous row-major runs covering center + [-J, J]^d, which must lie
// inside the box. center in absolute index coords; fn(offset, length).
void window_runs(const LatticeBox& box, const std::int64_t* center,
                 std::int64_t J,
                 const std::function<void(std::size_t, std::size_t)>& fn);

// Persistence. CSV columns: x0..x{d-1}, v0..v{ncomp-1}; optional comment
// lines ("# ...") are emitted first. Binary: five little-endian u64 words
// {k, M_num, M_den, d, value_count} then value_count doubles (planar).
// Only origin-centered boxes round-trip.
void write_grid_csv(const GridFunction& f, const std::string& path,
                    const std::vector<std::string>& comments = {});
void write_grid_binary(const GridFunction& f, const std::string& path);
GridFunction read_grid_binary(const std::string& path);

}  // namespace stablehomog
