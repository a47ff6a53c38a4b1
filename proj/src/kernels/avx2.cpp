#include "stablehomog/kernels.hpp"

#if defined(STABLEHOMOG_BUILD_AVX2) && defined(__x86_64__)

#include <immintrin.h>

#include <cmath>

#include "stablehomog/environment.hpp"

// AVX2 variant. Bitwise-identical to the scalar kernels by construction:
// vector lane l holds element 4b+l exactly as the scalar lane accumulators
// do, the lane reduction is (l0+l1)+(l2+l3), and the tail loop below is the
// scalar code. Unit-interval doubles come out of the 2^52 bias trick, which
// matches the scalar (double)(h >> 12) cast exactly because h >> 12 < 2^52.

namespace stablehomog::kernels {
namespace {

constexpr double kInv52 = 0x1.0p-52;

inline __m256i mullo64(__m256i a, __m256i b) {
  __m256i lolo = _mm256_mul_epu32(a, b);
  __m256i hi1 = _mm256_mul_epu32(_mm256_srli_epi64(a, 32), b);
  __m256i hi2 = _mm256_mul_epu32(a, _mm256_srli_epi64(b, 32));
  __m256i hi = _mm256_add_epi64(hi1, hi2);
  return _mm256_add_epi64(lolo, _mm256_slli_epi64(hi, 32));
}

inline __m256i mix64v(__m256i z) {
  z = _mm256_xor_si256(z, _mm256_srli_epi64(z, 30));
  z = mullo64(z, _mm256_set1_epi64x(static_cast<long long>(0xbf58476d1ce4e5b9ULL)));
  z = _mm256_xor_si256(z, _mm256_srli_epi64(z, 27));
  z = mullo64(z, _mm256_set1_epi64x(static_cast<long long>(0x94d049bb133111ebULL)));
  z = _mm256_xor_si256(z, _mm256_srli_epi64(z, 31));
  return z;
}

// Exact u64 -> f64 for values below 2^52.
inline __m256d u52_to_double(__m256i v) {
  const __m256d bias = _mm256_set1_pd(0x1.0p52);
  __m256i x = _mm256_or_si256(v, _mm256_castpd_si256(bias));
  return _mm256_sub_pd(_mm256_castsi256_pd(x), bias);
}

struct LawVec {
  __m256d threshold, atom, base, slope;
  explicit LawVec(const LawParams& p)
      : threshold(_mm256_set1_pd(p.threshold)),
        atom(_mm256_set1_pd(p.atom)),
        base(_mm256_set1_pd(p.base)),
        slope(_mm256_set1_pd(p.slope)) {}
};

template <WeightMode M>
inline __m256d weights4(const RowArgs& a, std::int64_t j, __m256i seed_v,
                        __m256i ckey_v, const LawVec& law) {
  __m256i k = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(a.keys + j));
  __m256i sum = _mm256_add_epi64(k, ckey_v);
  __m256i xr = _mm256_xor_si256(k, ckey_v);
  __m256i h = mix64v(_mm256_xor_si256(mix64v(_mm256_xor_si256(seed_v, sum)), xr));
  __m256d u = _mm256_mul_pd(u52_to_double(_mm256_srli_epi64(h, 12)),
                            _mm256_set1_pd(kInv52));
  __m256d lin = _mm256_fmadd_pd(law.slope, u, law.base);
  __m256d mask = _mm256_cmp_pd(u, law.threshold, _CMP_LT_OQ);
  __m256d w = _mm256_blendv_pd(lin, law.atom, mask);
  if constexpr (M == WeightMode::fluct) w = _mm256_sub_pd(w, _mm256_set1_pd(1.0));
  return w;
}

// Scalar per-element path for tails; identical to scalar.cpp.
inline double pair_weight_scalar(std::uint64_t seed_state, std::uint64_t ka,
                                 std::uint64_t kb, const LawParams& law) {
  std::uint64_t h = mix64(mix64(seed_state ^ (ka + kb)) ^ (ka ^ kb));
  double u = static_cast<double>(h >> 12) * kInv52;
  return (u < law.threshold) ? law.atom : std::fma(law.slope, u, law.base);
}

template <int D, WeightMode M>
inline void eval_scalar(const RowArgs& a, std::int64_t j, double& e, double& q,
                        double dz[3]) {
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
    w = pair_weight_scalar(a.seed_state, a.keys[j], a.center_key, a.law);
    if constexpr (M == WeightMode::fluct) w -= 1.0;
  }
  q = w * t;
  if (a.ball_r2 > 0 && s > a.ball_r2) q = 0.0;
  e = a.values[j] - a.center_value;
  for (int i = 0; i < D; ++i) dz[i] = static_cast<double>(idz[i]);
}

struct Block {
  __m256d e, q;
  __m128i dz[3];
};

template <int D, WeightMode M>
inline Block load_block(const RowArgs& a, std::int64_t j, __m256i seed_v,
                        __m256i ckey_v, const LawVec& law) {
  Block blk;
  __m128i s = _mm_setzero_si128();
  for (int i = 0; i < D; ++i) {
    __m128i c = _mm_loadu_si128(reinterpret_cast<const __m128i*>(a.coords[i] + j));
    __m128i dz = _mm_sub_epi32(c, _mm_set1_epi32(a.center[i]));
    blk.dz[i] = dz;
    s = _mm_add_epi32(s, _mm_mullo_epi32(dz, dz));
  }
  __m256d t = _mm256_i32gather_pd(a.table, s, 8);
  __m256d w;
  if constexpr (M == WeightMode::unit)
    w = _mm256_set1_pd(1.0);
  else
    w = weights4<M>(a, j, seed_v, ckey_v, law);
  __m256d q = _mm256_mul_pd(w, t);
  if (a.ball_r2 > 0) {
    __m128i over = _mm_cmpgt_epi32(s, _mm_set1_epi32(static_cast<std::int32_t>(a.ball_r2)));
    __m256d maskpd = _mm256_castsi256_pd(_mm256_cvtepi32_epi64(over));
    q = _mm256_andnot_pd(maskpd, q);
  }
  blk.q = q;
  blk.e = _mm256_sub_pd(_mm256_loadu_pd(a.values + j),
                        _mm256_set1_pd(a.center_value));
  return blk;
}

inline double reduce_lanes(__m256d v) {
  alignas(32) double tmp[4];
  _mm256_store_pd(tmp, v);
  return (tmp[0] + tmp[1]) + (tmp[2] + tmp[3]);
}

template <int D, WeightMode M>
double row_diff_impl(const RowArgs& a) {
  const __m256i seed_v = _mm256_set1_epi64x(static_cast<long long>(a.seed_state));
  const __m256i ckey_v = _mm256_set1_epi64x(static_cast<long long>(a.center_key));
  const LawVec law(a.law);
  __m256d acc = _mm256_setzero_pd();
  const std::int64_t blocks = a.n / 4;
  for (std::int64_t b = 0; b < blocks; ++b) {
    Block blk = load_block<D, M>(a, 4 * b, seed_v, ckey_v, law);
    acc = _mm256_fmadd_pd(blk.e, blk.q, acc);
  }
  double total = reduce_lanes(acc);
  for (std::int64_t j = 4 * blocks; j < a.n; ++j) {
    double e, q, dz[3];
    eval_scalar<D, M>(a, j, e, q, dz);
    total = std::fma(e, q, total);
  }
  return total;
}

template <int D, WeightMode M>
void row_full_impl(const RowArgs& a, RowAccum& out) {
  const __m256i seed_v = _mm256_set1_epi64x(static_cast<long long>(a.seed_state));
  const __m256i ckey_v = _mm256_set1_epi64x(static_cast<long long>(a.center_key));
  const LawVec law(a.law);
  __m256d ad = _mm256_setzero_pd(), asq = _mm256_setzero_pd(),
          awt = _mm256_setzero_pd();
  __m256d am[3] = {_mm256_setzero_pd(), _mm256_setzero_pd(), _mm256_setzero_pd()};
  const std::int64_t blocks = a.n / 4;
  for (std::int64_t b = 0; b < blocks; ++b) {
    Block blk = load_block<D, M>(a, 4 * b, seed_v, ckey_v, law);
    ad = _mm256_fmadd_pd(blk.e, blk.q, ad);
    __m256d p = _mm256_mul_pd(blk.e, blk.q);
    asq = _mm256_fmadd_pd(blk.e, p, asq);
    awt = _mm256_add_pd(awt, blk.q);
    for (int i = 0; i < D; ++i)
      am[i] = _mm256_fmadd_pd(_mm256_cvtepi32_pd(blk.dz[i]), blk.q, am[i]);
  }
  double diff = reduce_lanes(ad);
  double diff_sq = reduce_lanes(asq);
  double wt = reduce_lanes(awt);
  double mom[3] = {0.0, 0.0, 0.0};
  for (int i = 0; i < D; ++i) mom[i] = reduce_lanes(am[i]);
  for (std::int64_t j = 4 * blocks; j < a.n; ++j) {
    double e, q, dz[3];
    eval_scalar<D, M>(a, j, e, q, dz);
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
  const __m256i seed_v = _mm256_set1_epi64x(static_cast<long long>(a.seed_state));
  const __m256i ckey_v = _mm256_set1_epi64x(static_cast<long long>(a.center_key));
  const LawVec law(a.law);
  const std::int64_t blocks = a.n / 4;
  for (std::int64_t b = 0; b < blocks; ++b) {
    __m256d w;
    if constexpr (M == WeightMode::unit)
      w = _mm256_set1_pd(1.0);
    else
      w = weights4<M>(a, 4 * b, seed_v, ckey_v, law);
    _mm256_storeu_pd(out + 4 * b, w);
  }
  for (std::int64_t j = 4 * blocks; j < a.n; ++j) {
    double w;
    if constexpr (M == WeightMode::unit) {
      w = 1.0;
    } else {
      w = pair_weight_scalar(a.seed_state, a.keys[j], a.center_key, a.law);
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

const Kernels& avx2_kernels() {
  static const Kernels k{row_diff_entry, row_full_entry, fill_weights_entry,
                         "avx2"};
  return k;
}

}  // namespace stablehomog::kernels

#endif  // STABLEHOMOG_BUILD_AVX2 && __x86_64__
