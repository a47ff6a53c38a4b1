// lattice.cpp
#include "stablehomog/lattice.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>

#include "stablehomog/environment.hpp"
#include "stablehomog/parallel.hpp"

namespace stablehomog {

LatticeBox LatticeBox::create(int d, std::int64_t k, double M) {
    return create_centered(d, k, M, nullptr);
}

LatticeBox LatticeBox::create_centered(int d, std::int64_t k, double M,
                                       const std::int64_t* center_idx) {
    if (d < 1 || d > kMaxDim) throw domain_error("box dimension must be in [1, 12]");
    if (k < 1) throw domain_error("lattice scale k must be a positive integer");
    if (!(M > 0.0)) throw domain_error("box half-width M must be positive");
    double n_real = 2.0 * M * static_cast<double>(k);
    std::int64_t n = std::llround(n_real);
    if (n < 1 || std::fabs(n_real - static_cast<double>(n)) > 1e-9) {
        throw domain_error("2*M*k must be a positive integer, got " + std::to_string(n_real));
    }
    LatticeBox box;
    box.d = d;
    box.k = k;
    box.n = n;
    if (center_idx != nullptr) {
        for (int i = 0; i < d; ++i) box.center[i] = center_idx[i];
    }
    // Every point key must stay packable.
    for (int i = 0; i < d; ++i) {
        std::int64_t lo = box.center[i] + box.jmin();
        std::int64_t hi = box.center[i] + box.jmax();
        if (lo <= -kCoordLimit || hi >= kCoordLimit) {
            throw domain_error("box extends beyond coordinate range (|c| < 2^20)");
        }
    }
    return box;
}

std::size_t LatticeBox::point_count() const {
    std::size_t count = 1;
    for (int i = 0; i < d; ++i) count *= static_cast<std::size_t>(n);
    return count;
}

bool LatticeBox::contains(const std::int64_t* j) const {
    for (int i = 0; i < d; ++i) {
        std::int64_t r = j[i] - center[i];
        if (r < jmin() || r > jmax()) return false;
    }
    return true;
}

std::size_t LatticeBox::index_of(const std::int64_t* j) const {
    if (!contains(j)) throw domain_error("point outside box");
    std::size_t idx = 0;
    for (int i = 0; i < d; ++i) {
        idx = idx * static_cast<std::size_t>(n) +
              static_cast<std::size_t>(j[i] - center[i] - jmin());
    }
    return idx;
}

void LatticeBox::coords_of(std::size_t idx, std::int64_t* j) const {
    for (int i = d - 1; i >= 0; --i) {
        j[i] = center[i] + jmin() + static_cast<std::int64_t>(idx % static_cast<std::size_t>(n));
        idx /= static_cast<std::size_t>(n);
    }
}

bool LatticeBox::inside(const LatticeBox& parent) const {
    if (d != parent.d || k != parent.k) return false;
    for (int i = 0; i < d; ++i) {
        if (center[i] + jmin() < parent.center[i] + parent.jmin()) return false;
        if (center[i] + jmax() > parent.center[i] + parent.jmax()) return false;
    }
    return true;
}

std::vector<std::vector<std::int64_t>> box_points(const LatticeBox& box) {
    std::vector<std::vector<std::int64_t>> pts;
    pts.reserve(box.point_count());
    std::vector<std::int64_t> j(box.d);
    for (std::size_t idx = 0; idx < box.point_count(); ++idx) {
        box.coords_of(idx, j.data());
        pts.push_back(j);
    }
    return pts;
}

BoxArrays materialize_box(const LatticeBox& box) {
    BoxArrays ba;
    std::size_t np = box.point_count();
    int dc = box.d <= 3 ? box.d : 3;
    for (int i = 0; i < dc; ++i) ba.coords[i].resize(np);
    if (box.d <= 3) ba.keys.resize(np);
    std::vector<std::int64_t> j(box.d);
    for (std::size_t idx = 0; idx < np; ++idx) {
        box.coords_of(idx, j.data());
        for (int i = 0; i < dc; ++i) ba.coords[i][idx] = static_cast<std::int32_t>(j[i]);
        if (box.d <= 3) ba.keys[idx] = pack_key3(j.data(), box.d);
    }
    return ba;
}

GridFunction GridFunction::zeros(const LatticeBox& box, int ncomp) {
    if (ncomp < 1) throw domain_error("ncomp must be >= 1");
    GridFunction f;
    f.box = box;
    f.ncomp = ncomp;
    f.values.assign(box.point_count() * static_cast<std::size_t>(ncomp), 0.0);
    return f;
}

double GridFunction::l2_norm() const {
    double ss = det_sumsq(values.data(), values.size());
    double mu = std::pow(static_cast<double>(box.k), -box.d);
    return std::sqrt(mu * ss);
}

double GridFunction::mean(int comp) const {
    std::size_t np = box.point_count();
    const double* v = comp_data(comp);
    double s = 0.0;
    for (std::size_t i = 0; i < np; ++i) s += v[i];
    return s / static_cast<double>(np);
}

double l2_distance(const GridFunction& u, const GridFunction& v) {
    if (!(u.box == v.box) || u.ncomp != v.ncomp) {
        throw domain_error("l2_distance requires identical boxes and components");
    }
    double ss = 0.0;
    // Chunked deterministic reduction.
    ss = deterministic_sum(u.values.size(), [&](std::size_t i) {
        double dvi = u.values[i] - v.values[i];
        return dvi * dvi;
    });
    double mu = std::pow(static_cast<double>(u.box.k), -u.box.d);
    return std::sqrt(mu * ss);
}

double average_over(const GridFunction& f, const LatticeBox& sub, int comp) {
    if (!sub.inside(f.box)) throw domain_error("average_over: sub-box not inside");
    std::vector<std::int64_t> j(sub.d);
    double s = 0.0;
    for (std::size_t idx = 0; idx < sub.point_count(); ++idx) {
        sub.coords_of(idx, j.data());
        s += f.at(f.box.index_of(j.data()), comp);
    }
    return s / static_cast<double>(sub.point_count());
}

std::vector<std::vector<std::int64_t>> multiscale_centers(int d, int m, int n) {
    if (d < 1 || d > kMaxDim) throw domain_error("multiscale_centers: bad dimension");
    if (n < 0 || m < n) throw domain_error("multiscale_centers requires 0 <= n <= m");
    std::vector<std::vector<std::int64_t>> out;
    if (m == n) {
        out.push_back(std::vector<std::int64_t>(d, 0));
        return out;
    }
    // Odd multiples of 2^n in (-2^m, 2^m]: q*2^n for odd q in (-2^(m-n), 2^(m-n)].
    std::vector<std::int64_t> axis;
    std::int64_t qmax = std::int64_t(1) << (m - n);
    for (std::int64_t q = -qmax + 1; q <= qmax; q += 2) {
        axis.push_back(q << n);
    }
    std::vector<std::size_t> pos(d, 0);
    std::vector<std::int64_t> z(d);
    for (;;) {
        for (int i = 0; i < d; ++i) z[i] = axis[pos[i]];
        out.push_back(z);
        int i = d - 1;
        while (i >= 0 && ++pos[i] == axis.size()) {
            pos[i] = 0;
            --i;
        }
        if (i < 0) break;
    }
    return out;
}

DyadicDecomposition DyadicDecomposition::create(int d, int m, int n) {
    if (m < 0 || n < 0 || n > m) throw domain_error("DyadicDecomposition requires 0 <= n <= m");
    DyadicDecomposition dec;
    dec.d = d;
    dec.m = m;
    dec.n = n;
    dec.centers = multiscale_centers(d, m, n);
    return dec;
}

LatticeBox DyadicDecomposition::cell(std::size_t i) const {
    return LatticeBox::create_centered(d, 1, static_cast<double>(std::int64_t(1) << n),
                                       centers.at(i).data());
}

LatticeBox DyadicDecomposition::whole() const {
    return LatticeBox::create(d, 1, static_cast<double>(std::int64_t(1) << m));
}

double eval_piecewise_constant(const GridFunction& f, const double* x, int comp) {
    std::int64_t j[12];
    const LatticeBox& box = f.box;
    for (int i = 0; i < box.d; ++i) {
        j[i] = static_cast<std::int64_t>(std::ceil(static_cast<double>(box.k) * x[i]));
    }
    if (!box.contains(j)) return 0.0;
    return f.at(box.index_of(j), comp);
}

// ---- persistence ----

namespace {
void require_origin(const LatticeBox& box, const char* what) {
    for (int i = 0; i < box.d; ++i) {
        if (box.center[i] != 0) {
            throw domain_error(std::string(what) + ": only origin-centered boxes persist");
        }
    }
}

void put_u64(std::ofstream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64(std::ifstream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}
}  // namespace

void write_grid_csv(const GridFunction& f, const std::string& path,
                    const std::vector<std::string>& comments) {
    require_origin(f.box, "write_grid_csv");
    std::ofstream os(path);
    if (!os) throw resource_error("cannot open for write: " + path);
    for (const auto& c : comments) os << "# " << c << "\n";
    for (int i = 0; i < f.box.d; ++i) os << "x" << i << ",";
    for (int c = 0; c < f.ncomp; ++c) os << "v" << c << (c + 1 < f.ncomp ? "," : "\n");
    std::vector<std::int64_t> j(f.box.d);
    char buf[64];
    for (std::size_t idx = 0; idx < f.box.point_count(); ++idx) {
        f.box.coords_of(idx, j.data());
        for (int i = 0; i < f.box.d; ++i) {
            std::snprintf(buf, sizeof buf, "%.17g",
                          static_cast<double>(j[i]) / static_cast<double>(f.box.k));
            os << buf << ",";
        }
        for (int c = 0; c < f.ncomp; ++c) {
            std::snprintf(buf, sizeof buf, "%.17g", f.at(idx, c));
            os << buf << (c + 1 < f.ncomp ? "," : "\n");
        }
    }
    if (!os) throw resource_error("write failed: " + path);
}

void write_grid_binary(const GridFunction& f, const std::string& path) {
    require_origin(f.box, "write_grid_binary");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw resource_error("cannot open for write: " + path);
    std::uint64_t num = static_cast<std::uint64_t>(f.box.n);
    std::uint64_t den = static_cast<std::uint64_t>(2 * f.box.k);
    std::uint64_t g = std::gcd(num, den);
    put_u64(os, static_cast<std::uint64_t>(f.box.k));
    put_u64(os, num / g);
    put_u64(os, den / g);
    put_u64(os, static_cast<std::uint64_t>(f.box.d));
    put_u64(os, static_cast<std::uint64_t>(f.values.size()));
    for (double v : f.values) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        put_u64(os, bits);
    }
    if (!os) throw resource_error("write failed: " + path);
}

GridFunction read_grid_binary(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw resource_error("cannot open for read: " + path);
    std::uint64_t k = get_u64(is);
    std::uint64_t mnum = get_u64(is);
    std::uint64_t mden = get_u64(is);
    std::uint64_t d = get_u64(is);
    std::uint64_t count = get_u64(is);
    if (!is || k < 1 || mden == 0 || d < 1 || d > static_cast<std::uint64_t>(kMaxDim)) {
        throw config_error("corrupt grid binary header: " + path);
    }
    double M = static_cast<double>(mnum) / static_cast<double>(mden);
    LatticeBox box = LatticeBox::create(static_cast<int>(d), static_cast<std::int64_t>(k), M);
    std::size_t np = box.point_count();
    if (count == 0 || count % np != 0) {
        throw config_error("grid binary value count does not tile the box: " + path);
    }
    GridFunction f = GridFunction::zeros(box, static_cast<int>(count / np));
    for (std::size_t i = 0; i < count; ++i) {
        std::uint64_t bits = get_u64(is);
        std::memcpy(&f.values[i], &bits, 8);
    }
    if (!is) throw config_error("grid binary truncated: " + path);
    return f;
}

LatticeBox dilate(const LatticeBox& box, std::int64_t pad) {
    LatticeBox p = box;
    p.n = box.n + 2 * pad;
    for (int i = 0; i < box.d; ++i) {
        std::int64_t lo = p.center[i] + p.jmin(), hi = p.center[i] + p.jmax();
        if (lo <= -kCoordLimit || hi >= kCoordLimit)
            throw domain_error("dilated box exceeds the coordinate limit");
    }
    if (static_cast<std::int64_t>(p.point_count()) > kPaddedPointCap)
        throw resource_error("padded evaluation grid too large");
    return p;
}

void window_runs(const LatticeBox& box, const std::int64_t* center,
                 std::int64_t J,
                 const std::function<void(std::size_t, std::size_t)>& fn) {
    const int d = box.d;
    const std::int64_t np = box.n;
    std::int64_t cmin[3], rel[3];
    for (int i = 0; i < d; ++i) cmin[i] = box.center[i] + box.jmin();
    const std::size_t len = static_cast<std::size_t>(2 * J + 1);
    if (d == 1) {
        fn(static_cast<std::size_t>(center[0] - J - cmin[0]), len);
        return;
    }
    if (d == 2) {
        for (rel[0] = -J; rel[0] <= J; ++rel[0]) {
            std::size_t off =
                static_cast<std::size_t>(center[0] + rel[0] - cmin[0]) *
                    static_cast<std::size_t>(np) +
                static_cast<std::size_t>(center[1] - J - cmin[1]);
            fn(off, len);
        }
        return;
    }
    for (rel[0] = -J; rel[0] <= J; ++rel[0])
        for (rel[1] = -J; rel[1] <= J; ++rel[1]) {
            std::size_t off =
                (static_cast<std::size_t>(center[0] + rel[0] - cmin[0]) *
                     static_cast<std::size_t>(np) +
                 static_cast<std::size_t>(center[1] + rel[1] - cmin[1])) *
                    static_cast<std::size_t>(np) +
                static_cast<std::size_t>(center[2] - J - cmin[2]);
            fn(off, len);
        }
}

}  // namespace stablehomog
