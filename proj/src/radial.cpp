#include "stablehomog/radial.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include "stablehomog/errors.hpp"

namespace stablehomog {

namespace {

void check_dim_alpha(int d, double alpha, const char* who) {
  if (d < 1 || d > 3)
    throw domain_error(std::string(who) + ": d must be 1, 2 or 3");
  if (!(alpha > 0.0) || !(alpha < 2.0))
    throw domain_error(std::string(who) + ": alpha must lie in (0, 2)");
}

// C-infinity transition, 1 on (-inf, 1], 0 on [2, inf).
double smooth_cut(double u) {
  if (u <= 1.0) return 1.0;
  if (u >= 2.0) return 0.0;
  auto phi = [](double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; };
  double a = phi(2.0 - u), b = phi(u - 1.0);
  return a / (a + b);
}

struct KahanSum {
  double s = 0.0, c = 0.0;
  void add(double x) {
    double y = x - c;
    double t = s + y;
    c = (t - s) - y;
    s = t;
  }
};

}  // namespace

std::vector<double> make_kernel_table(int d, double alpha, std::int64_t max_s) {
  check_dim_alpha(d, alpha, "make_kernel_table");
  if (max_s < 0) throw domain_error("make_kernel_table: max_s must be >= 0");
  if (max_s + 1 > kKernelTableCap)
    throw resource_error("make_kernel_table: table of " +
                         std::to_string(max_s + 1) + " entries exceeds cap");
  std::vector<double> t(static_cast<std::size_t>(max_s) + 1);
  const double e = 0.5 * (d + alpha);
  t[0] = 0.0;
  for (std::int64_t s = 1; s <= max_s; ++s)
    t[static_cast<std::size_t>(s)] = std::pow(static_cast<double>(s), -e);
  return t;
}

double sphere_surface(int d) {
  if (d < 1) throw domain_error("sphere_surface: d must be >= 1");
  const double pi = 4.0 * std::atan(1.0);
  return 2.0 * std::pow(pi, 0.5 * d) / std::tgamma(0.5 * d);
}

double lattice_ball_sum(int d, double alpha, double R) {
  check_dim_alpha(d, alpha, "lattice_ball_sum");
  if (!(R >= 0.0)) throw domain_error("lattice_ball_sum: R must be >= 0");
  const double e = 0.5 * (d + alpha);
  const double s2max = R * R * (1.0 + 1e-12);
  const std::int64_t Z = static_cast<std::int64_t>(std::floor(R + 1e-12));
  KahanSum acc;
  if (d == 1) {
    for (std::int64_t z = 1; z <= Z; ++z)
      acc.add(2.0 * std::pow(static_cast<double>(z * z), -e));
  } else if (d == 2) {
    for (std::int64_t z1 = 0; z1 <= Z; ++z1)
      for (std::int64_t z2 = 0; z2 <= Z; ++z2) {
        std::int64_t s = z1 * z1 + z2 * z2;
        if (s == 0 || static_cast<double>(s) > s2max) continue;
        double f = (z1 > 0 ? 2.0 : 1.0) * (z2 > 0 ? 2.0 : 1.0);
        acc.add(f * std::pow(static_cast<double>(s), -e));
      }
  } else {
    for (std::int64_t z1 = 0; z1 <= Z; ++z1)
      for (std::int64_t z2 = 0; z2 <= Z; ++z2)
        for (std::int64_t z3 = 0; z3 <= Z; ++z3) {
          std::int64_t s = z1 * z1 + z2 * z2 + z3 * z3;
          if (s == 0 || static_cast<double>(s) > s2max) continue;
          double f = (z1 > 0 ? 2.0 : 1.0) * (z2 > 0 ? 2.0 : 1.0) *
                     (z3 > 0 ? 2.0 : 1.0);
          acc.add(f * std::pow(static_cast<double>(s), -e));
        }
  }
  return acc.s;
}

double lattice_total(int d, double alpha) {
  check_dim_alpha(d, alpha, "lattice_total");
  static std::map<std::pair<int, double>, double> cache;
  static std::mutex mu;
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find({d, alpha});
    if (it != cache.end()) return it->second;
  }

  // Smoothly windowed lattice part on |z| <= 2R plus the analytic integral
  // of the complementary window. Poisson summation bounds the error by the
  // Fourier tail of the C-infinity window, superpolynomial in R.
  const double R = 48.0;
  const double e = 0.5 * (d + alpha);
  const std::int64_t Z = static_cast<std::int64_t>(std::floor(2.0 * R));
  KahanSum acc;
  auto term = [&](std::int64_t s, double f) {
    double r = std::sqrt(static_cast<double>(s));
    double w = smooth_cut(r / R);
    if (w > 0.0) acc.add(f * w * std::pow(static_cast<double>(s), -e));
  };
  if (d == 1) {
    for (std::int64_t z = 1; z <= Z; ++z) term(z * z, 2.0);
  } else if (d == 2) {
    for (std::int64_t z1 = 0; z1 <= Z; ++z1)
      for (std::int64_t z2 = 0; z2 <= Z; ++z2) {
        std::int64_t s = z1 * z1 + z2 * z2;
        if (s == 0 || s > 4 * static_cast<std::int64_t>(R * R)) continue;
        term(s, (z1 > 0 ? 2.0 : 1.0) * (z2 > 0 ? 2.0 : 1.0));
      }
  } else {
    for (std::int64_t z1 = 0; z1 <= Z; ++z1)
      for (std::int64_t z2 = 0; z2 <= Z; ++z2)
        for (std::int64_t z3 = 0; z3 <= Z; ++z3) {
          std::int64_t s = z1 * z1 + z2 * z2 + z3 * z3;
          if (s == 0 || s > 4 * static_cast<std::int64_t>(R * R)) continue;
          term(s, (z1 > 0 ? 2.0 : 1.0) * (z2 > 0 ? 2.0 : 1.0) *
                      (z3 > 0 ? 2.0 : 1.0));
        }
  }

  // integral of u^{-1-alpha} (1 - W(u)) over [1, 2], then the exact tail.
  auto [xs, ws] = gauss_legendre(96);
  double cw = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double u = 1.5 + 0.5 * xs[i];
    cw += 0.5 * ws[i] * std::pow(u, -1.0 - alpha) * (1.0 - smooth_cut(u));
  }
  cw += std::pow(2.0, -alpha) / alpha;
  double total = acc.s + sphere_surface(d) * std::pow(R, -alpha) * cw;

  std::lock_guard<std::mutex> lock(mu);
  cache[{d, alpha}] = total;
  return total;
}

std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n) {
  if (n < 1) throw domain_error("gauss_legendre: n must be >= 1");
  std::vector<double> x(n), w(n);
  const double pi = 4.0 * std::atan(1.0);
  for (int i = 0; i < n; ++i) {
    // Tricomi initial guess, Newton on the recurrence.
    double xi = std::cos(pi * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = xi;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * xi * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      double dp = n * (xi * p1 - p0) / (xi * xi - 1.0);
      double dx = p1 / dp;
      xi -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    double p0 = 1.0, p1 = xi;
    for (int k = 2; k <= n; ++k) {
      double p2 = ((2.0 * k - 1.0) * xi * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    double dp = n * (xi * p1 - p0) / (xi * xi - 1.0);
    x[i] = xi;
    w[i] = 2.0 / ((1.0 - xi * xi) * dp * dp);
  }
  return {x, w};
}

}  // namespace stablehomog
