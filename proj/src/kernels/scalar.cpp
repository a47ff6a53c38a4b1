#include "stablehomog/kernels.hpp"

#include <cmath>

#include "stablehomog/environment.hpp"

// Reference kernels. Accumulation geometry is the contract: 4 lane
// accumulators filled in block order (element 4b+l goes to lane l), lanes
// reduced as (l0+l1)+(l2+l3), then the tail folded in sequentially. The
// AVX2 variant reproduces this bitwise, so keep every fma/mul placement
// as is.

namespace stablehomog::kernels {
namespace {

constexpr double kInv52 = 0x1.0p-52;

inline double pair_weight(std::uint64_t seed_state, std::uint64_t ka,
                          std::uint64_t kb, const LawParams& law) {
  std::uint64_t h = mix64(mix64(seed_state ^ (ka + kb)) ^ (ka ^ kb));
  double u = static_cast<double>(h >> 12) * kInv52;
  return (u < law.threshold) ? law.atom : std::fma(law.slope, u, law.base);
}

template <int D, WeightMode M>
struct Element {
  const RowArgs& a;
  // Computes q = w*t (masked) and e = f_j - f_c for element j.
  inline void eval(std::int64_t j, double& e, double& q, double dz[3]) const {
    std::int32_t s = 0;
    std::int32_t idz[3];
    for (int i = 0; i < D; ++i) {
      idz[i] = a.coords[i][j] - a.center[i];
      s += idz[i] * idz[i];
    }
    double t = a.table[s];
    double w;
    if constexpr (M == WeightMode::unit) {
      w = 1.0;
    } else {
      w = pair_weight(a.seed_state, a.keys[j], a.center_key, a.law);
      if constexpr (M == WeightMode::fluct) w -= 1.0;
    }
    q = w * t;
    if (a.ball_r2 > 0 && s > a.ball_r2) q = 0.0;
    e = a.values[j] - a.center_value;
    for (int i = 0; i < D; ++i) dz[i] = static_cast<double>(idz[i]);
  }
};

template <int D, WeightMode M>
double row_diff_impl(const RowArgs& a) {
  Element<D, M> el{a};
  double lane[4] = {0.0, 0.0, 0.0, 0.0};
  const std::int64_t blocks = a.n / 4;
  for (std::int64_t b = 0; b < blocks; ++b) {
    for (int l = 0; l < 4; ++l) {
      double e, q, dz[3];
      el.eval(4 * b + l, e, q, dz);
      lane[l] = std::fma(e, q, lane[l]);
    }
  }
  double acc = (lane[0] + lane[1]) + (lane[2] + lane[3]);
  for (std::int64_t j = 4 * blocks; j < a.n; ++j) {
    double e, q, dz[3];
    el.eval(j, e, q, dz);
    acc = std::fma(e, q, acc);
  }
  return acc;
}

template <int D, WeightMode M>
void row_full_impl(const RowArgs& a, RowAccum& out) {
  Element<D, M> el{a};
  double ld[4] = {}, lsq[4] = {}, lwt[4] = {}, lm[3][4] = {};
  const std::int64_t blocks = a.n / 4;
  for (std::int64_t b = 0; b < blocks; ++b) {
    for (int l = 0; l < 4; ++l) {
      double e, q, dz[3];
      el.eval(4 * b + l, e, q, dz);
      ld[l] = std::fma(e, q, ld[l]);
      double p = e * q;
      lsq[l] = std::fma(e, p, lsq[l]);
      lwt[l] = lwt[l] + q;
      for (int i = 0; i < D; ++i) lm[i][l] = std::fma(dz[i], q, lm[i][l]);
    }
  }
  double diff = (ld[0] + ld[1]) + (ld[2] + ld[3]);
  double diff_sq = (lsq[0] + lsq[1]) + (lsq[2] + lsq[3]);
  double wt = (lwt[0] + lwt[1]) + (lwt[2] + lwt[3]);
  double mom[3];
  for (int i = 0; i < D; ++i) mom[i] = (lm[i][0] + lm[i][1]) + (lm[i][2] + lm[i][3]);
  for (std::int64_t j = 4 * blocks; j < a.n; ++j) {
    double e, q, dz[3];
    el.eval(j, e, q, dz);
    diff = std::fma(e, q, diff);
    double p = e * q;
    diff_sq = std::fma(e, p, diff_sq);
    wt = wt + q;
    for (int i = 0; i < D; ++i) mom[i] = std::fma(dz[i], q, mom[i]);
  }
  out.diff = diff;
  out.diff_sq = diff_sq;
  out.wt = wt;
  for (int i = 0; i < D; ++i) out.mom[i] = mom[i];
  for (int i = D; i < 3; ++i) out.mom[i] = 0.0;
}

template <WeightMode M>
void fill_weights_impl(const RowArgs& a, double* out) {
  for (std::int64_t j = 0; j < a.n; ++j) {
    double w;
    if constexpr (M == WeightMode::unit) {
      w = 1.0;
    } else {
      w = pair_weight(a.seed_state, a.keys[j], a.center_key, a.law);
      if constexpr (M == WeightMode::fluct) w -= 1.0;
    }
    out[j] = w;
  }
}

template <WeightMode M>
double row_diff_dispatch_d(const RowArgs& a) {
  switch (a.d) {
    case 1: return row_diff_impl<1, M>(a);
    case 2: return row_diff_impl<2, M>(a);
    default: return row_diff_impl<3, M>(a);
  }
}

double row_diff_entry(const RowArgs& a) {
  switch (a.mode) {
    case WeightMode::unit: return row_diff_dispatch_d<WeightMode::unit>(a);
    case WeightMode::law: return row_diff_dispatch_d<WeightMode::law>(a);
    default: return row_diff_dispatch_d<WeightMode::fluct>(a);
  }
}

template <WeightMode M>
void row_full_dispatch_d(const RowArgs& a, RowAccum& out) {
  switch (a.d) {
    case 1: row_full_impl<1, M>(a, out); break;
    case 2: row_full_impl<2, M>(a, out); break;
    default: row_full_impl<3, M>(a, out); break;
  }
}

void row_full_entry(const RowArgs& a, RowAccum& out) {
  switch (a.mode) {
    case WeightMode::unit: row_full_dispatch_d<WeightMode::unit>(a, out); break;
    case WeightMode::law: row_full_dispatch_d<WeightMode::law>(a, out); break;
    default: row_full_dispatch_d<WeightMode::fluct>(a, out); break;
  }
}

void fill_weights_entry(const RowArgs& a, double* out) {
  switch (a.mode) {
    case WeightMode::unit: fill_weights_impl<WeightMode::unit>(a, out); break;
    case WeightMode::law: fill_weights_impl<WeightMode::law>(a, out); break;
    default: fill_weights_impl<WeightMode::fluct>(a, out); break;
  }
}

}  // namespace

const Kernels& scalar_kernels() {
  static const Kernels k{row_diff_entry, row_full_entry, fill_weights_entry,
                         "scalar"};
  return k;
}

}  // namespace stablehomog::kernels
