// operators.hpp -- discrete nonlocal generators, Dirichlet energies, and the
// drift potential.
//
// Index-unit folding: the scale-k generator on the box,
//   (Lf)(x) = k^{-d} sum_y (f(y)-f(x)) w_{kx,ky} / |x-y|^{d+alpha},
// becomes k^alpha * sum_j (f_j - f_i) w_ij t(|i-j|^2) over integer indices,
// with t(s) = s^{-(d+alpha)/2}. Row sums run through the SIMD kernels and the
// k^alpha prefactor is applied last, so the scale-1 and scale-k row sums on
// the same index box agree bitwise.
#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "stablehomog/environment.hpp"
#include "stablehomog/kernels.hpp"
#include "stablehomog/lattice.hpp"

namespace stablehomog {

enum class Variant { random, reference, compensated };
enum class Boundary { restricted, killed };

const char* to_string(Variant v);
const char* to_string(Boundary b);

// Compactly supported smooth test data, evaluated at continuum points.
struct SmoothFunction {
    std::function<double(const double*)> value;
    // gradient(x, out[d]); empty when no analytic gradient is available.
    std::function<void(const double*, double*)> gradient;
    double support_radius = 0.0;  // supp(value) inside ball(center, radius)
    std::array<double, 3> support_center{0.0, 0.0, 0.0};
};

class NonlocalOperator {
  public:
    struct Options {
        std::optional<std::int64_t> jump_cutoff;  // Z^d (index) units
        double r_ext_factor = 2.0;                // R_ext over box diameter
        std::size_t dense_limit = 4096;
    };

    // env == nullopt means the deterministic field w == 1. variant=reference
    // ignores env. variant=compensated requires restricted boundary and
    // gradient components in the applied function.
    NonlocalOperator(std::optional<Environment> env, const LatticeBox& box,
                     Variant variant, Boundary boundary, double alpha,
                     Options opt);
    NonlocalOperator(std::optional<Environment> env, const LatticeBox& box,
                     Variant variant, Boundary boundary, double alpha);

    const LatticeBox& box() const { return box_; }
    std::int64_t scale() const { return box_.k; }
    double alpha() const { return alpha_; }
    Variant variant() const { return variant_; }
    Boundary boundary() const { return boundary_; }
    double prefactor() const { return prefactor_; }
    const std::optional<Environment>& environment() const { return env_; }
    // Unscaled kill rate kappa(x)/k^alpha (killed mode only).
    double kappa0(std::size_t idx) const { return kappa0_[idx]; }

    // diag(-L): prefactor * (sum_j w t + kappa0) per point.
    std::vector<double> diagonal() const;
    // FFT-basis eigenvalues of the translation-invariant unit-weight torus
    // surrogate of -L (mean kill rate folded in for killed mode). Used by the
    // circulant preconditioner; power-of-two box sides only.
    std::vector<double> circulant_symbol() const;

    // f.ncomp == 1 for random/reference; compensated wants ncomp == 1 + d
    // with components 1..d the analytic gradient in continuum coordinates.
    GridFunction apply(const GridFunction& f) const;

    // Row-major N x N matrix with A v = apply(v); A = A^T exactly.
    std::vector<double> assemble_dense() const;

    // <f, g>_{mu^k} = k^{-d} sum f g on the box.
    double mu_dot(const GridFunction& f, const GridFunction& g) const;

  private:
    double row_diff(std::size_t idx, const double* values, double fc) const;
    void build_kappa();

    std::optional<Environment> env_;
    LatticeBox box_;
    Variant variant_;
    Boundary boundary_;
    double alpha_;
    Options opt_;
    double prefactor_;        // k^alpha
    double grad_prefactor_;   // k^(alpha-1)
    kernels::WeightMode mode_;
    kernels::LawParams law_{};
    std::uint64_t seed_state_ = 0;
    std::int64_t ball_r2_ = 0;  // jump cutoff squared, 0 = none
    BoxArrays arrays_;
    std::vector<double> table_;
    std::vector<double> kappa0_;
};

inline NonlocalOperator::NonlocalOperator(std::optional<Environment> env,
                                          const LatticeBox& box,
                                          Variant variant, Boundary boundary,
                                          double alpha)
    : NonlocalOperator(std::move(env), box, variant, boundary, alpha,
                       Options()) {}

// Counting-measure Dirichlet form on a Z^d box (k = 1):
//   E_U(f,f) = 1/2 sum_{x != y in U} |f(x)-f(y)|^2 w_{x,y} |x-y|^{-d-alpha};
// vector-valued f contributes the sum of componentwise energies.
double dirichlet_energy(const std::optional<Environment>& env,
                        const LatticeBox& U, const GridFunction& f,
                        double alpha);

struct Potential {
    double alpha = 0.0;
    double radius = 0.0;  // effective truncation min(R_V, truncated_at)
    GridFunction values;  // ncomp = d
};

// V^{(i)}(x) = sum_{0 < |z| <= R} z_i |z|^{-d-alpha} xi_{x,x+z} on a k=1 box.
// raw_weights switches xi = w-1 to plain w (the deterministic part cancels on
// the symmetric ball; a test asserts the two paths agree).
Potential potential_field(const Environment& env, double alpha,
                          const LatticeBox& box, double R_V,
                          std::optional<double> truncated_at = {},
                          bool raw_weights = false);

// Windowed full-lattice evaluation of the scale-k operator on smooth g at the
// points of eval_box (eval_box.k is the scale). Jumps are summed over the
// Euclidean window |z| <= window_radius (index units; 0 picks a radius large
// enough that g vanishes outside every window). With add_tail the remainder
// -g(x) * (T - S(window_radius)) is added, using unit weights for the tail
// (exact for reference, mean-field for random). Compensated subtracts
// k^{alpha-1} <grad g(x), sum z w t> with the ball |z| <= k for alpha <= 1
// and the full window for alpha > 1.
GridFunction apply_full_lattice(const std::optional<Environment>& env,
                                double alpha, Variant variant,
                                const SmoothFunction& g,
                                const LatticeBox& eval_box,
                                std::int64_t window_radius = 0,
                                bool add_tail = true);

// Max over a unit box at scale k of |L^k g - Lhat^k g - k^{alpha-1}
// <grad g, V(k.)>| with every jump sum truncated at the same radius
// (default 4k). The three pieces come from independent code paths; the
// identity is algebraically exact at matching truncations. Returns the
// residual divided by the max term magnitude.
double generator_compensator_identity_check(
    const Environment& env, std::int64_t k, double alpha,
    const SmoothFunction& g, std::int64_t jump_truncation = 0,
    std::int64_t potential_truncation = 0);

}  // namespace stablehomog
