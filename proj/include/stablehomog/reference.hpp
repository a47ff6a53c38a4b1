// reference.hpp -- the continuum side: bump test data, the limit generator
// evaluated by a near/far split, and test functions with closed-form
// resolvents.
//
// Near field (points within max(2r, 1) of the bump support): compensated
// fine-lattice sum at refinement K with the exact full-lattice tail
// -g(x)(T - S(J)); the discretization error is the usual K^-(2-alpha)
// (K^-1 log K at alpha = 1, K^-1 below) envelope and is reported, not hidden.
// Far field: g vanishes near x, so the generator reduces to the smooth
// integral of g(y)|x-y|^{-d-alpha} over the support, done by tensor Gauss
// quadrature with an internal consistency check.
#pragma once

#include <array>
#include <cstdint>

#include "stablehomog/lattice.hpp"
#include "stablehomog/operators.hpp"

namespace stablehomog {

// amplitude * exp(1 - 1/(1 - |x-c|^2/r^2)) inside the ball, 0 outside.
struct SmoothBump {
    int d = 1;
    std::array<double, 3> center{0.0, 0.0, 0.0};
    double radius = 1.0;
    double amplitude = 1.0;

    double value(const double* x) const;
    void gradient(const double* x, double* out) const;
    SmoothFunction as_function() const;
};

struct RefQuadrature {
    int K_ref = 256;        // fine-lattice refinement of the near field
    // Per-axis far-field tensor rule. The bump's flat edge caps the rule's
    // convergence at superalgebraic; 96 points reach ~1e-11 on the worst
    // d = 2 geometry, two orders under the default self-check tolerance.
    int gauss_points = 96;
    double tol = 1e-9;      // far-field self-check threshold
    // Drift compensation in the near sum: -1 follows the alpha branches of
    // the generator (ball |z| <= 1 at alpha = 1, full window above 1, none
    // below), 0 forces it off, 1 forces the |z| <= 1 ball on. On centered
    // windows the compensator sum vanishes by symmetry, so this changes the
    // value only at roundoff level; tests exercise both paths.
    int compensator = -1;
};

// Limit generator applied to the bump at one continuum point. alpha outside
// (0,2) is a domain error; a far-field quadrature self-check failure is an
// accuracy error with the estimate attached. accuracy_out (optional) receives
// the K vs K/2 near-field difference, or the far-field check residual.
double frac_generator_apply(const SmoothBump& g, const double* x, double alpha,
                            const RefQuadrature& quad = {},
                            double* accuracy_out = nullptr);

// The generator sampled at every box point, sharing one fine sample grid
// across the near-field windows. Requires quad.K_ref % box.k == 0.
GridFunction continuum_generator_on_box(const SmoothBump& g, double alpha,
                                        const LatticeBox& box,
                                        const RefQuadrature& quad = {});

struct TestFunction {
    SmoothBump g;
    double lambda = 0.0;
    double alpha = 0.0;
    GridFunction f;        // lambda g - Lbar g at the box points
    GridFunction u_exact;  // g at the box points: the resolvent in closed form
    double accuracy = 0.0; // max over the box of the per-point estimate
};

// f = lambda g - Lbar g with R_lambda f = g by construction. The accuracy
// field is the max K_ref vs K_ref/2 disagreement, so quad.K_ref must be an
// even multiple of box.k.
TestFunction make_test_function(const SmoothBump& g, double lambda,
                                double alpha, const LatticeBox& box,
                                const RefQuadrature& quad = {});

// c(d, alpha) with int (1 - cos(xi.z)) |z|^{-d-alpha} dz = c |xi|^alpha,
// by radial quadrature: power series below the first oscillation, then
// alternating half-wave sums of the angular cosine average.
double symbol_constant(int d, double alpha, double tol = 1e-10);
// Same integral for an explicit frequency vector (diagnostics and the
// homogeneity / rotation-invariance checks).
double symbol_value(int d, double alpha, const double* xi, double tol = 1e-10);

}  // namespace stablehomog
