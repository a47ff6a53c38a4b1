// environment.cpp
#include "stablehomog/environment.hpp"

#include <cmath>
#include <cstdlib>

namespace stablehomog {

void validate_coords(const std::int64_t* x, int d) {
    for (int i = 0; i < d; ++i) {
        if (x[i] <= -kCoordLimit || x[i] >= kCoordLimit) {
            throw domain_error("lattice coordinate out of range (|c| < 2^20): " +
                               std::to_string(x[i]));
        }
    }
}

PointKey pack_key(const std::int64_t* x, int d) {
    if (d < 1 || d > kMaxDim) throw domain_error("dimension must be in [1, 12]");
    validate_coords(x, d);
    PointKey k;
    k.nwords = (d + 2) / 3;
    for (int i = 0; i < d; ++i) {
        k.words[i / 3] |= zigzag64(x[i]) << (21 * (i % 3));
    }
    return k;
}

double ConductanceLaw::upper_bound() const {
    switch (kind) {
        case Kind::constant: return 1.0;
        case Kind::uniform_symmetric: return 1.0 + param;
        case Kind::bernoulli: return 1.0 / param;
    }
    return 1.0;
}

ConductanceLaw::MapParams ConductanceLaw::map_params() const {
    switch (kind) {
        case Kind::constant: return {-1.0, 0.0, 1.0, 0.0};
        case Kind::uniform_symmetric: return {-1.0, 0.0, 1.0 - param, 2.0 * param};
        case Kind::bernoulli: return {param, 1.0 / param, 0.0, 0.0};
    }
    return {-1.0, 0.0, 1.0, 0.0};
}

ConductanceLaw ConductanceLaw::parse(const std::string& text) {
    ConductanceLaw law;
    if (text == "constant") {
        law.kind = Kind::constant;
        law.param = 0.0;
        return law;
    }
    auto colon = text.find(':');
    if (colon == std::string::npos) {
        throw config_error("unknown conductance law '" + text +
                           "' (expected constant | uniform:h | bernoulli:p)");
    }
    std::string name = text.substr(0, colon);
    std::string arg = text.substr(colon + 1);
    char* end = nullptr;
    double v = std::strtod(arg.c_str(), &end);
    if (end == arg.c_str() || *end != '\0' || !std::isfinite(v)) {
        throw config_error("bad numeric parameter in law '" + text + "'");
    }
    if (name == "uniform") {
        if (v < 0.0 || v > 1.0) {
            throw config_error("uniform:h requires h in [0,1], got " + arg);
        }
        law.kind = Kind::uniform_symmetric;
        law.param = v;
    } else if (name == "bernoulli") {
        if (!(v > 0.0) || v > 1.0) {
            throw config_error("bernoulli:p requires p in (0,1], got " + arg);
        }
        law.kind = Kind::bernoulli;
        law.param = v;
    } else {
        throw config_error("unknown conductance law '" + name + "'");
    }
    return law;
}

std::string ConductanceLaw::to_string() const {
    switch (kind) {
        case Kind::constant: return "constant";
        case Kind::uniform_symmetric: {
            char buf[64];
            std::snprintf(buf, sizeof buf, "uniform:%g", param);
            return buf;
        }
        case Kind::bernoulli: {
            char buf[64];
            std::snprintf(buf, sizeof buf, "bernoulli:%g", param);
            return buf;
        }
    }
    return "constant";
}

namespace {
bool lex_less(const std::int64_t* a, const std::int64_t* b, int d) {
    for (int i = 0; i < d; ++i) {
        if (a[i] != b[i]) return a[i] < b[i];
    }
    return false;
}
}  // namespace

PairKey::PairKey(const std::int64_t* x, const std::int64_t* y, int d) {
    validate_coords(x, d);
    validate_coords(y, d);
    bool equal = true;
    for (int i = 0; i < d; ++i) equal = equal && x[i] == y[i];
    if (equal) throw domain_error("PairKey requires two distinct points");
    const std::int64_t* lo = lex_less(x, y, d) ? x : y;
    const std::int64_t* hi = lo == x ? y : x;
    first.assign(lo, lo + d);
    second.assign(hi, hi + d);
}

Environment::Environment(std::uint64_t seed, ConductanceLaw law, int d)
    : seed_(seed), law_(law), d_(d) {
    if (d < 1 || d > kMaxDim) throw domain_error("dimension must be in [1, 12]");
    seed_state_ = mix64(seed ^ 0x9e3779b97f4a7c15ull);
}

double Environment::conductance(const std::int64_t* x, const std::int64_t* y) const {
    PointKey ka = pack_key(x, d_);
    PointKey kb = pack_key(y, d_);
    bool equal = true;
    for (int w = 0; w < ka.nwords; ++w) equal = equal && ka.words[w] == kb.words[w];
    if (equal) throw domain_error("conductance requires two distinct points");
    std::uint64_t h;
    if (ka.nwords == 1) {
        h = pair_hash(seed_state_, ka.words[0], kb.words[0]);
    } else {
        // Multi-word chain; canonical order first so the result is symmetric.
        const PointKey* lo = &ka;
        const PointKey* hi = &kb;
        for (int w = 0; w < ka.nwords; ++w) {
            if (ka.words[w] != kb.words[w]) {
                if (ka.words[w] > kb.words[w]) std::swap(lo, hi);
                break;
            }
        }
        h = seed_state_;
        for (int w = 0; w < ka.nwords; ++w) h = mix64(h ^ lo->words[w]);
        for (int w = 0; w < ka.nwords; ++w) h = mix64(h ^ hi->words[w]);
    }
    return law_.map(hash_to_unit(h));
}

double Environment::conductance(const std::vector<std::int64_t>& x,
                                const std::vector<std::int64_t>& y) const {
    if (static_cast<int>(x.size()) != d_ || static_cast<int>(y.size()) != d_) {
        throw domain_error("conductance: point dimension mismatch");
    }
    return conductance(x.data(), y.data());
}

double Environment::fluctuation(const std::int64_t* x, const std::int64_t* y) const {
    return conductance(x, y) - 1.0;
}

}  // namespace stablehomog
