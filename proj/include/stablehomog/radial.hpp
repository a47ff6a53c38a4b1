#pragma once

#include <cstdint>
#include <utility>
#include <vector>

// Radial jump-kernel sums on the integer lattice. Everything here is about
// t(s) = s^{-(d+alpha)/2} with s a squared lattice distance, the tabulated
// form of |z|^{-d-alpha}.

namespace stablehomog {

// t[s] for s = 0..max_s, with t[0] = 0 so self-pairs drop out of row sums.
// Throws resource_error past kKernelTableCap entries.
inline constexpr std::int64_t kKernelTableCap = std::int64_t(1) << 24;
std::vector<double> make_kernel_table(int d, double alpha, std::int64_t max_s);

// Surface measure of the unit sphere in R^d: 2 pi^{d/2} / Gamma(d/2).
double sphere_surface(int d);

// S(R) = sum over 0 < |z| <= R of |z|^{-d-alpha}, sharp cutoff.
double lattice_ball_sum(int d, double alpha, double R);

// T = sum over all z != 0 of |z|^{-d-alpha}, evaluated with a smooth radial
// cutoff plus the analytic integral remainder; accurate to near machine
// precision. Cached per (d, alpha).
double lattice_total(int d, double alpha);

// Gauss-Legendre nodes and weights on [-1, 1].
std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n);

}  // namespace stablehomog
