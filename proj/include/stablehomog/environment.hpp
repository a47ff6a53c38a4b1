// environment.hpp -- random conductance field on unordered lattice pairs.
//
// Weights are generated counter-style: w_{x,y} = law(U(seed, {x,y})) where U
// is a uniform deviate derived by hashing the unordered pair. No state is
// stored; any pair can be queried in any order on any rank and two
// environments with equal (seed, law, d) agree bitwise.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "stablehomog/errors.hpp"

namespace stablehomog {

// Coordinates are packed 21 bits each (zigzag), three per 64-bit word, so a
// point key for d <= 3 is a single word with the top bit clear.
constexpr std::int64_t kCoordLimit = std::int64_t(1) << 20;  // |c| < 2^20
constexpr int kMaxDim = 12;                                  // 4 words

inline std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ull;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebull;
    z ^= z >> 31;
    return z;
}

inline std::uint64_t zigzag64(std::int64_t v) {
    return (static_cast<std::uint64_t>(v) << 1) ^ static_cast<std::uint64_t>(v >> 63);
}

void validate_coords(const std::int64_t* x, int d);

// Packs coords [0, d) for d <= 3 into one word. Callers validate range.
inline std::uint64_t pack_key3(const std::int64_t* x, int d) {
    std::uint64_t w = 0;
    for (int i = 0; i < d; ++i) w |= zigzag64(x[i]) << (21 * i);
    return w;
}

struct PointKey {
    std::array<std::uint64_t, 4> words{};
    int nwords = 1;
};

PointKey pack_key(const std::int64_t* x, int d);

// Uniform deviate for an unordered pair of single-word keys. (ka+kb, ka^kb)
// encodes the unordered pair exactly (keys < 2^63, so the sum cannot wrap).
// 52 mantissa bits so scalar and SIMD lanes convert identically.
inline std::uint64_t pair_hash(std::uint64_t seed_state, std::uint64_t ka,
                               std::uint64_t kb) {
    std::uint64_t h = mix64(seed_state ^ (ka + kb));
    return mix64(h ^ (ka ^ kb));
}

inline double hash_to_unit(std::uint64_t h) {
    return static_cast<double>(h >> 12) * 0x1.0p-52;
}

struct ConductanceLaw {
    enum class Kind { constant, uniform_symmetric, bernoulli };
    Kind kind = Kind::constant;
    double param = 0.0;  // h for uniform_symmetric, p for bernoulli

    // Deterministic upper bound C1 with E[w] = 1.
    double upper_bound() const;
    bool is_deterministic() const {
        return kind == Kind::constant ||
               (kind == Kind::uniform_symmetric && param == 0.0) ||
               (kind == Kind::bernoulli && param == 1.0);
    }

    // Branchless map from a uniform deviate to a weight:
    //   u < threshold ? atom : base + slope * u
    // constant:          threshold=-1, base=1, slope=0
    // uniform_symmetric: threshold=-1, base=1-h, slope=2h
    // bernoulli:         threshold=p, atom=1/p, base=0, slope=0
    struct MapParams {
        double threshold, atom, base, slope;
    };
    MapParams map_params() const;
    // fma keeps this bitwise-identical to the SIMD law map.
    double map(double u) const {
        MapParams m = map_params();
        return u < m.threshold ? m.atom : std::fma(m.slope, u, m.base);
    }

    // Grammar: "constant" | "uniform:h" with h in [0,1] | "bernoulli:p" with
    // p in (0,1]. Throws config_error otherwise.
    static ConductanceLaw parse(const std::string& text);
    std::string to_string() const;
};

// Unordered pair of lattice points stored in canonical order (lexicographically
// smaller coordinate tuple first).
struct PairKey {
    std::vector<std::int64_t> first, second;

    PairKey(const std::int64_t* x, const std::int64_t* y, int d);
    bool operator==(const PairKey& o) const {
        return first == o.first && second == o.second;
    }
};

class Environment {
public:
    Environment(std::uint64_t seed, ConductanceLaw law, int d);

    std::uint64_t seed() const { return seed_; }
    const ConductanceLaw& law() const { return law_; }
    int dim() const { return d_; }
    std::uint64_t seed_state() const { return seed_state_; }

    // Weight of the unordered pair {x, y}; x == y is a domain error.
    double conductance(const std::int64_t* x, const std::int64_t* y) const;
    double conductance(const std::vector<std::int64_t>& x,
                       const std::vector<std::int64_t>& y) const;

    // xi_{x,y} = w_{x,y} - 1 (centered field).
    double fluctuation(const std::int64_t* x, const std::int64_t* y) const;

private:
    std::uint64_t seed_;
    ConductanceLaw law_;
    int d_;
    std::uint64_t seed_state_;
};

}  // namespace stablehomog
