#pragma once

#include <cstdint>

// Row kernels: the inner loops shared by every operator apply / assembly /
// diagnostic path. A "row" is one contiguous run of neighbor points (SoA
// coords + packed keys + values) combined against a single center point.
//
// Two implementations exist (scalar, AVX2) and they must agree BITWISE:
// both use 4-lane block accumulation with a sequential tail, fused
// multiply-adds at the same spots, and the same unit->double conversion.
// Callers split work into runs however they like; the per-run result is
// deterministic and implementation-independent.

namespace stablehomog::kernels {

enum class WeightMode : int {
  unit = 0,   // w = 1, no hashing (reference operator)
  law = 1,    // w = conductance law applied to the pair hash
  fluct = 2,  // w - 1 (potential / fluctuation sums)
};

// Branchless law map: u < threshold ? atom : slope*u + base.
// Mirrors ConductanceLaw::map_params() in environment.hpp.
struct LawParams {
  double threshold;
  double atom;
  double base;
  double slope;
};

struct RowArgs {
  const double* table;       // t[s] = s^{-(d+alpha)/2}, t[0] = 0
  const int32_t* coords[3];  // neighbor lattice coords, one array per axis
  const std::uint64_t* keys; // packed point keys (unused for mode == unit)
  const double* values;      // f at the neighbors
  std::int64_t n;            // run length
  int d;                     // 1, 2 or 3
  std::int32_t center[3];    // center lattice coords
  std::uint64_t center_key;  // packed key of the center
  double center_value;       // f at the center
  std::uint64_t seed_state;  // environment seed state
  LawParams law;
  WeightMode mode;
  std::int64_t ball_r2;      // > 0: zero out pairs with |dz|^2 > ball_r2
};

// All accumulators of one pass. q = w * t[s] after masking:
//   diff    = sum (f_j - f_c) * q
//   diff_sq = sum (f_j - f_c)^2 * q
//   wt      = sum q
//   mom[i]  = sum dz_i * q
struct RowAccum {
  double diff = 0.0;
  double diff_sq = 0.0;
  double wt = 0.0;
  double mom[3] = {0.0, 0.0, 0.0};
};

using RowDiffFn = double (*)(const RowArgs&);
using RowFullFn = void (*)(const RowArgs&, RowAccum&);
// Weights only (mode-mapped, no kernel factor, no ball mask), one per point.
using FillWeightsFn = void (*)(const RowArgs&, double*);

struct Kernels {
  RowDiffFn row_diff = nullptr;
  RowFullFn row_full = nullptr;
  FillWeightsFn fill_weights = nullptr;
  const char* name = "";
};

const Kernels& scalar_kernels();
// Null-function struct when the binary carries no AVX2 variant or the CPU
// lacks avx2/fma.
const Kernels& avx2_kernels();

// Runtime selection: STABLE_HOMOG_SIMD=scalar|avx2|auto (default auto).
// Cached after the first call.
const Kernels& active();

}  // namespace stablehomog::kernels
