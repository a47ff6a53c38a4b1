// analysis.hpp -- empirical checks of the estimates the solver stack is
// built on: neighbor-density, local and multi-scale Poincare inequalities,
// corrector energy growth, block-average concentration of the drift
// potential, operator-difference norms, and the two-scale expansion.
#pragma once

#include <cstdint>
#include <vector>

#include "stablehomog/environment.hpp"
#include "stablehomog/lattice.hpp"
#include "stablehomog/operators.hpp"
#include "stablehomog/reference.hpp"
#include "stablehomog/solvers.hpp"

namespace stablehomog {

enum class Status { ok, censored };
const char* to_string(Status s);

// Fraction of z in the box B_r(y), excluding x1 and x2 themselves, whose
// conductances to both x1 and x2 exceed delta. Denominator is the full box
// count. x1 == x2 is a domain error; r >= 1.
double common_neighbor_density(const Environment& env, const std::int64_t* x1,
                               const std::int64_t* x2, const std::int64_t* y,
                               std::int64_t r, double delta);

struct PoincareRecord {
    std::int64_t r = 0;
    double gap = 0.0;            // smallest nonzero eigenvalue of -L on B_r(y)
    std::int64_t box_size = 0;   // |B_r| = (2r)^d
    double statistic = 0.0;      // s(r) = r^{d-alpha} / (gap * |B_r|)
    bool zero_gap = false;       // disconnected box: statistic is +inf
};

// Sharp constant of the normalized local Poincare inequality on B_r(y):
// avg f^2 - (avg f)^2 <= s(r) r^{alpha-d} E_{B_r}(f,f), with equality for
// the gap eigenvector. r >= 2.
PoincareRecord poincare_statistic(const Environment& env, double alpha,
                                  std::int64_t r, const std::int64_t* y,
                                  double tol = 1e-10,
                                  const SolveOptions& inner = {});

struct MultiscaleSides {
    double lhs = 0.0;          // sum_B f (g - avg_B g) on B_{2^m}
    double block_term = 0.0;   // same sum split over the level-n cells
    double energy_factor = 0.0;  // E(g,g)^{1/2} sum_k 2^{k(d+alpha)/2} (...)^{1/2}
    // (lhs - block_term) / energy_factor; 0 when the factor vanishes.
    double empirical_constant = 0.0;

    double rhs(double c2) const { return block_term + c2 * energy_factor; }
};

// Both sides of the multi-scale Poincare inequality, evaluated as stated:
// lhs <= block_term + C2 * energy_factor. f and g live on B_{2^m} (k = 1,
// side 2^{m+1}); n <= m.
MultiscaleSides multiscale_poincare_check(const Environment& env, double alpha,
                                          int m, int n, const GridFunction& f,
                                          const GridFunction& g);

struct CorrectorScanRecord {
    int m = 0;
    double energy = 0.0;      // E_{B_{2^m}}(phi, phi)
    double normalized = 0.0;  // energy / 2^{md}; see scan doc for alpha < 1
    int iterations = 0;
    Status status = Status::ok;
};

// Corrector energies across box levels. rhs of the Poisson solve is the
// negated drift potential; for the untruncated path (alpha in (1,2)) the
// potential radius is 2^{m+2}, the truncated path uses V_m cut at 2^m.
// Truncated alpha in (0,1) scans normalize by 2^{m(d+2(1-alpha))}, matching
// that branch's energy growth; everything else by 2^{md}. Solver failures
// yield censored records.
std::vector<CorrectorScanRecord> corrector_energy_scan(
    const Environment& env, double alpha, const std::vector<int>& m_values,
    bool truncated, const SolveOptions& opt = {});

struct ConcentrationRecord {
    int m = 0;
    int k_sub = 0;
    double statistic = 0.0;  // sum over level-k blocks of |block avg of V|^2
    double bound = 0.0;      // 2^{(m-k)d - theta k d}
    double theta = 0.0;
    Status status = Status::ok;
};

// Block-average concentration of the drift potential V truncated at 2^m:
// for each k the statistic sums |avg over B_{2^k}(y) of V|^2 (euclidean over
// the d components) across the dyadic centers. theta in (alpha/d, 1) and
// d > alpha are required.
std::vector<ConcentrationRecord> block_average_concentration(
    const Environment& env, double alpha, int m,
    const std::vector<int>& k_values, double theta);

enum class DiffKind { ref_vs_continuum, hat_vs_ref, random_vs_ref };
const char* to_string(DiffKind w);

struct DiffRecord {
    std::int64_t k = 0;
    DiffKind which = DiffKind::ref_vs_continuum;
    double sq_norm = 0.0;  // squared L2(mu^k) distance over the box
    Status status = Status::ok;
};

// Squared L2(mu^k) norm over the M = 2 box of the designated difference:
//   ref_vs_continuum : unit-weight scale-k operator minus the limit operator
//   hat_vs_ref       : compensated random operator minus the unit-weight one
//   random_vs_ref    : plain random operator minus the unit-weight one,
//                      which carries a rate only for alpha in (0,1)
// Random branches use one shared jump window for both operands so the tail
// convention cancels. K_ref = 0 picks 4k for the continuum evaluation.
DiffRecord operator_difference_norm(const Environment& env, double alpha,
                                    std::int64_t k, DiffKind which,
                                    const SmoothBump& g, int K_ref = 0);

struct TwoScaleResult {
    int m = 0;                      // 2^m <= k < 2^{m+1}
    double v_vs_u = 0.0;            // ||v_k - u|| in L2(mu^k)
    double resolvent_vs_v = 0.0;    // ||u_k - v_k|| in L2(mu^k)
    double corrector_energy = 0.0;  // E(phi_{m+2}, phi_{m+2})
    double test_accuracy = 0.0;     // continuum evaluation estimate for f
};

// Two-scale expansion v_k(x) = u(x) + k^{-1} <grad u(x), phi_{m+2}(kx)> with
// u = g, against the killed-mode resolvent u_k of f = lambda g - Lbar g.
// alpha must lie in (1,2) (no corrector otherwise); lambda > 0.
TwoScaleResult two_scale_diagnostic(const Environment& env, double alpha,
                                    std::int64_t k, const SmoothBump& g,
                                    double lambda,
                                    const SolveOptions& opt = {});

}  // namespace stablehomog
