// solvers.hpp -- symmetric iterative solves built on NonlocalOperator::apply.
#pragma once

#include <utility>

#include "stablehomog/lattice.hpp"
#include "stablehomog/operators.hpp"

namespace stablehomog {

enum class Precond {
    none,
    jacobi,
    // Torus symbol of the unit-weight surrogate operator, inverted per FFT
    // mode. Power-of-two box sides only. Exact for the reference operator up
    // to boundary effects, and a mean-field preconditioner for random laws.
    circulant,
};

struct SolveOptions {
    double tol = 1e-9;           // relative residual target
    int max_iterations = 0;      // 0 -> 10 sqrt(N) + 200
    Precond precond = Precond::none;
};

struct SolveReport {
    int iterations = 0;
    double relative_residual = 0.0;
    double tolerance = 0.0;
    double wall_ms = 0.0;
};

// Conjugate directions on the positive-definite form lambda<.,.> + E.
// Post: ||(lambda - L)u - f|| <= tol ||f||. Throws solver_error with the
// iteration count on non-convergence.
std::pair<GridFunction, SolveReport> solve_resolvent(const NonlocalOperator& op,
                                                     double lambda,
                                                     const GridFunction& f,
                                                     const SolveOptions& opt = {});

struct CorrectorField {
    int m = 0;              // box is B_{2^m}, side 2^{m+1}
    GridFunction values;    // ncomp = d
    double energy = 0.0;    // E_{B_{2^m}}(phi, phi), counting measure
    SolveReport report;
};

// Mean-zero Poisson solve L phi = rhs - avg(rhs) on a restricted k=1 box with
// side 2^{m+1}; the mean of rhs is subtracted per component, so passing the
// negated potential field yields the local corrector. Components are solved
// as independent scalar systems. The iteration projects constants out of x
// and r every step; residual stagnation (disconnected weighted graph) raises
// solver_error.
CorrectorField solve_poisson_meanzero(const NonlocalOperator& op,
                                      const GridFunction& rhs,
                                      const SolveOptions& opt = {});

struct GapResult {
    double value = 0.0;
    bool zero_gap = false;
    int iterations = 0;
    std::vector<double> vector;  // normalized mean-zero eigenvector estimate
};

// Smallest nonzero eigenvalue of -L on the restricted box (counting-measure
// inner product), by inverse iteration with the constant vector deflated.
// Gaps below 1e-12 report zero_gap instead of erroring.
GapResult smallest_nonzero_eigenvalue(const NonlocalOperator& op,
                                      double tol = 1e-10,
                                      const SolveOptions& inner = {});

bool circulant_supported(const LatticeBox& box);

}  // namespace stablehomog
