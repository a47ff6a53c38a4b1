#include "stablehomog/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "stablehomog/kernels.hpp"
#include "stablehomog/parallel.hpp"

namespace stablehomog {

namespace {

using nlohmann::json;

std::string fnv1a_hex(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
    return buf;
}

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
    auto dt = std::chrono::steady_clock::now() - t0;
    return std::chrono::duration<double, std::milli>(dt).count();
}

// Sharper deterministic branch for constant-type laws; random laws take the
// envelope of the known bounds (the tightest decaying one wins).
double predicted_rate_exponent(double alpha, int d, bool deterministic_law) {
    if (deterministic_law) return alpha > 1.0 ? -(2.0 - alpha) : -1.0;
    if (alpha < 1.0)
        return -std::max(alpha / 2.0,
                         std::min(1.0 - alpha, static_cast<double>(d) / 2.0));
    if (alpha == 1.0) return -0.5;
    return -(2.0 - alpha) / 2.0;
}

const char* const kConfigKeys[] = {
    "d",           "alpha",      "lambda",        "law",
    "seeds",       "k_values",   "box_m",         "boundary",
    "bump_radius", "bump_center", "solver_tol",   "max_iterations",
    "precond",     "k_ref_multiplier", "output_dir", "deterministic",
};

[[noreturn]] void bad_key(const std::string& key, const char* why) {
    throw config_error("config key '" + key + "': " + why);
}

}  // namespace

Boundary ExperimentConfig::boundary_mode() const {
    if (boundary == "killed") return Boundary::killed;
    if (boundary == "restricted") return Boundary::restricted;
    throw config_error("boundary must be 'killed' or 'restricted', got '" +
                       boundary + "'");
}

SolveOptions ExperimentConfig::solve_options(const LatticeBox& box) const {
    SolveOptions o;
    o.tol = solver_tol;
    o.max_iterations = max_iterations;
    if (precond == "none") {
        o.precond = Precond::none;
    } else if (precond == "jacobi") {
        o.precond = Precond::jacobi;
    } else if (precond == "circulant") {
        o.precond = Precond::circulant;
    } else if (precond == "auto") {
        o.precond =
            circulant_supported(box) ? Precond::circulant : Precond::none;
    } else {
        throw config_error("precond must be auto, none, jacobi or circulant");
    }
    return o;
}

void ExperimentConfig::validate() const {
    if (d < 1 || d > 3) throw config_error("d must be 1, 2 or 3");
    if (!(alpha > 0.0) || !(alpha < 2.0))
        throw config_error("alpha must lie in (0, 2)");
    if (!(lambda > 0.0)) throw config_error("lambda must be positive");
    if (!(static_cast<double>(d) > alpha))
        throw config_error("rate experiments require d > alpha");
    law();  // throws config_error on an unparsable law string
    if (seeds.empty()) throw config_error("seeds must be non-empty");
    if (k_values.empty()) throw config_error("k_values must be non-empty");
    for (std::size_t i = 0; i < k_values.size(); ++i) {
        if (k_values[i] < 1) throw config_error("k values must be >= 1");
        if (i > 0 && k_values[i] <= k_values[i - 1])
            throw config_error("k_values must be strictly increasing");
    }
    if (!(box_m > 0.0)) throw config_error("box_m must be positive");
    boundary_mode();
    if (!(bump_radius > 0.0)) throw config_error("bump_radius must be positive");
    if (!(solver_tol > 0.0)) throw config_error("solver_tol must be positive");
    if (max_iterations < 0) throw config_error("max_iterations must be >= 0");
    if (precond != "auto" && precond != "none" && precond != "jacobi" &&
        precond != "circulant")
        throw config_error("precond must be auto, none, jacobi or circulant");
    if (k_ref_multiplier < 2 || k_ref_multiplier % 2 != 0)
        throw config_error("k_ref_multiplier must be an even integer >= 2");
    if (output_dir.empty()) throw config_error("output_dir must be non-empty");
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw config_error(std::string("config parse error: ") + e.what());
    }
    if (!j.is_object()) throw config_error("config root must be a JSON object");
    for (const auto& item : j.items()) {
        bool known = false;
        for (const char* k : kConfigKeys)
            if (item.key() == k) known = true;
        if (!known) throw config_error("unknown config key '" + item.key() + "'");
    }
    ExperimentConfig cfg;
    auto want = [&](const char* key, json::value_t t, const char* name) {
        if (!j.contains(key)) return false;
        const auto& v = j.at(key);
        bool ok = v.type() == t ||
                  (t == json::value_t::number_float && v.is_number()) ||
                  (t == json::value_t::number_integer && v.is_number_integer()) ||
                  (t == json::value_t::number_unsigned && v.is_number_integer());
        if (!ok) bad_key(key, (std::string("expected ") + name).c_str());
        return true;
    };
    if (want("d", json::value_t::number_integer, "an integer"))
        cfg.d = j.at("d").get<int>();
    if (want("alpha", json::value_t::number_float, "a number"))
        cfg.alpha = j.at("alpha").get<double>();
    if (want("lambda", json::value_t::number_float, "a number"))
        cfg.lambda = j.at("lambda").get<double>();
    if (want("law", json::value_t::string, "a string"))
        cfg.law_text = j.at("law").get<std::string>();
    if (j.contains("seeds")) {
        if (!j.at("seeds").is_array()) bad_key("seeds", "expected an array");
        cfg.seeds.clear();
        for (const auto& v : j.at("seeds")) {
            if (!v.is_number_integer()) bad_key("seeds", "expected integers");
            cfg.seeds.push_back(v.get<std::uint64_t>());
        }
    }
    if (j.contains("k_values")) {
        if (!j.at("k_values").is_array()) bad_key("k_values", "expected an array");
        cfg.k_values.clear();
        for (const auto& v : j.at("k_values")) {
            if (!v.is_number_integer()) bad_key("k_values", "expected integers");
            cfg.k_values.push_back(v.get<std::int64_t>());
        }
    }
    if (want("box_m", json::value_t::number_float, "a number"))
        cfg.box_m = j.at("box_m").get<double>();
    if (want("boundary", json::value_t::string, "a string"))
        cfg.boundary = j.at("boundary").get<std::string>();
    if (want("bump_radius", json::value_t::number_float, "a number"))
        cfg.bump_radius = j.at("bump_radius").get<double>();
    if (j.contains("bump_center")) {
        if (!j.at("bump_center").is_array())
            bad_key("bump_center", "expected an array");
        const auto& arr = j.at("bump_center");
        if (arr.size() > 3) bad_key("bump_center", "at most 3 entries");
        cfg.bump_center = {0.0, 0.0, 0.0};
        for (std::size_t i = 0; i < arr.size(); ++i) {
            if (!arr[i].is_number()) bad_key("bump_center", "expected numbers");
            cfg.bump_center[i] = arr[i].get<double>();
        }
    }
    if (want("solver_tol", json::value_t::number_float, "a number"))
        cfg.solver_tol = j.at("solver_tol").get<double>();
    if (want("max_iterations", json::value_t::number_integer, "an integer"))
        cfg.max_iterations = j.at("max_iterations").get<int>();
    if (want("precond", json::value_t::string, "a string"))
        cfg.precond = j.at("precond").get<std::string>();
    if (want("k_ref_multiplier", json::value_t::number_integer, "an integer"))
        cfg.k_ref_multiplier = j.at("k_ref_multiplier").get<int>();
    if (want("output_dir", json::value_t::string, "a string"))
        cfg.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("deterministic")) {
        if (!j.at("deterministic").is_boolean())
            bad_key("deterministic", "expected a boolean");
        cfg.deterministic = j.at("deterministic").get<bool>();
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("config file not found: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

std::string ExperimentConfig::canonical_json() const {
    json j;
    j["d"] = d;
    j["alpha"] = alpha;
    j["lambda"] = lambda;
    j["law"] = law_text;
    j["seeds"] = seeds;
    j["k_values"] = k_values;
    j["box_m"] = box_m;
    j["boundary"] = boundary;
    j["bump_radius"] = bump_radius;
    j["bump_center"] = std::vector<double>(bump_center.begin(),
                                           bump_center.begin() + d);
    j["solver_tol"] = solver_tol;
    j["max_iterations"] = max_iterations;
    j["precond"] = precond;
    j["k_ref_multiplier"] = k_ref_multiplier;
    j["output_dir"] = output_dir;
    j["deterministic"] = deterministic;
    return j.dump();
}

std::string ExperimentConfig::hash() const { return fnv1a_hex(canonical_json()); }

std::vector<SweepRecord> run_sweep(const ExperimentConfig& cfg) {
    cfg.validate();
    const ConductanceLaw law = cfg.law();
    const Boundary bmode = cfg.boundary_mode();
    std::vector<SweepRecord> out;
    out.reserve(cfg.k_values.size() * cfg.seeds.size());
    for (std::int64_t k : cfg.k_values) {
        LatticeBox box = LatticeBox::create(cfg.d, k, cfg.box_m);
        SmoothBump g;
        g.d = cfg.d;
        g.center = cfg.bump_center;
        g.radius = cfg.bump_radius;
        RefQuadrature quad;
        quad.K_ref = cfg.k_ref_multiplier * static_cast<int>(k);
        TestFunction tf;
        bool level_ok = true;
        std::string level_reason;
        try {
            tf = make_test_function(g, cfg.lambda, cfg.alpha, box, quad);
        } catch (const std::exception& e) {
            level_ok = false;
            level_reason = std::string("test function: ") + e.what();
        }
        const SolveOptions so = cfg.solve_options(box);
        for (std::uint64_t seed : cfg.seeds) {
            SweepRecord rec;
            rec.alpha = cfg.alpha;
            rec.d = cfg.d;
            rec.law = cfg.law_text;
            rec.seed = seed;
            rec.k = k;
            rec.box_m = cfg.box_m;
            rec.boundary = cfg.boundary;
            auto t0 = std::chrono::steady_clock::now();
            if (!level_ok) {
                rec.status = Status::censored;
                rec.reason = level_reason;
                out.push_back(rec);
                continue;
            }
            try {
                Environment env(seed, law, cfg.d);
                NonlocalOperator op(env, box, Variant::random, bmode, cfg.alpha);
                auto solved = solve_resolvent(op, cfg.lambda, tf.f, so);
                const GridFunction& u = solved.first;
                const double fn = tf.f.l2_norm();
                const double un = u.l2_norm();
                if (!(un <= fn / cfg.lambda +
                                so.tol * (1.0 + fn / cfg.lambda))) {
                    rec.status = Status::censored;
                    rec.reason = "resolvent contraction violated";
                } else {
                    rec.l2_error = l2_distance(u, tf.u_exact);
                }
            } catch (const std::exception& e) {
                rec.status = Status::censored;
                rec.reason = e.what();
            }
            rec.wall_ms = cfg.deterministic ? 0.0 : elapsed_ms(t0);
            out.push_back(rec);
        }
    }
    return out;
}

RateFit fit_rate(const std::vector<SweepRecord>& records) {
    if (records.empty()) throw domain_error("fit_rate: no records");
    const SweepRecord& f0 = records.front();
    for (const SweepRecord& r : records) {
        if (r.alpha != f0.alpha || r.d != f0.d || r.law != f0.law ||
            r.box_m != f0.box_m || r.boundary != f0.boundary)
            throw config_error(
                "fit_rate: records from mismatched configurations");
    }
    std::map<std::int64_t, std::pair<double, int>> per_k;
    for (const SweepRecord& r : records) {
        if (r.status != Status::ok) continue;
        auto& slot = per_k[r.k];
        slot.first += r.l2_error;
        slot.second += 1;
    }
    if (per_k.size() < 3)
        throw domain_error("fit_rate: need ok records at >= 3 distinct k");
    std::vector<double> xs, ys;
    for (const auto& [k, slot] : per_k) {
        double mean = slot.first / slot.second;
        if (!(mean > 0.0))
            throw domain_error("fit_rate: non-positive mean error at a level");
        xs.push_back(std::log(static_cast<double>(k)));
        ys.push_back(std::log(mean));
    }
    const int n = static_cast<int>(xs.size());
    double xb = 0.0, yb = 0.0;
    for (int i = 0; i < n; ++i) {
        xb += xs[i];
        yb += ys[i];
    }
    xb /= n;
    yb /= n;
    double sxx = 0.0, sxy = 0.0;
    for (int i = 0; i < n; ++i) {
        sxx += (xs[i] - xb) * (xs[i] - xb);
        sxy += (xs[i] - xb) * (ys[i] - yb);
    }
    RateFit fit;
    fit.n_points = n;
    fit.slope = sxy / sxx;
    fit.intercept = yb - fit.slope * xb;
    double rss = 0.0;
    for (int i = 0; i < n; ++i) {
        double r = ys[i] - (fit.intercept + fit.slope * xs[i]);
        rss += r * r;
    }
    fit.stderr_slope = n > 2 ? std::sqrt(rss / (n - 2) / sxx) : 0.0;
    fit.predicted_exponent = predicted_rate_exponent(
        f0.alpha, f0.d, ConductanceLaw::parse(f0.law).is_deterministic());
    return fit;
}

namespace {
const char* kSweepHeader =
    "alpha,d,law,seed,k,box_m,boundary,l2_error,status,wall_ms";
}

void write_sweep_csv(const std::vector<SweepRecord>& records,
                     const std::string& config_hash, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw resource_error("cannot open for writing: " + path);
    std::fprintf(f, "# config_hash=%s\n%s\n", config_hash.c_str(), kSweepHeader);
    for (const SweepRecord& r : records) {
        std::fprintf(f, "%.17g,%d,%s,%" PRIu64 ",%" PRId64 ",%.17g,%s,%.17g,%s,%.3f\n",
                     r.alpha, r.d, r.law.c_str(), r.seed, r.k, r.box_m,
                     r.boundary.c_str(), r.l2_error, to_string(r.status),
                     r.wall_ms);
    }
    std::fclose(f);
}

std::vector<SweepRecord> read_sweep_csv(const std::string& path,
                                        std::string* config_hash_out) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open csv: " + path);
    std::vector<SweepRecord> out;
    std::string line;
    bool saw_header = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            auto pos = line.find("config_hash=");
            if (pos != std::string::npos && config_hash_out)
                *config_hash_out = line.substr(pos + 12);
            continue;
        }
        if (!saw_header) {
            if (line != kSweepHeader)
                throw config_error("unrecognized csv header in " + path);
            saw_header = true;
            continue;
        }
        std::vector<std::string> cols;
        std::stringstream ss(line);
        std::string c;
        while (std::getline(ss, c, ',')) cols.push_back(c);
        if (cols.size() != 10)
            throw config_error("malformed csv row in " + path + ": " + line);
        SweepRecord r;
        r.alpha = std::stod(cols[0]);
        r.d = std::stoi(cols[1]);
        r.law = cols[2];
        r.seed = std::stoull(cols[3]);
        r.k = std::stoll(cols[4]);
        r.box_m = std::stod(cols[5]);
        r.boundary = cols[6];
        r.l2_error = std::stod(cols[7]);
        if (cols[8] == "ok") {
            r.status = Status::ok;
        } else if (cols[8] == "censored") {
            r.status = Status::censored;
        } else {
            throw config_error("bad status in " + path + ": " + cols[8]);
        }
        r.wall_ms = std::stod(cols[9]);
        out.push_back(r);
    }
    if (!saw_header) throw config_error("csv has no header: " + path);
    return out;
}

std::string summary_json(const ExperimentConfig& cfg,
                         const std::vector<SweepRecord>& records) {
    json j;
    j["config_hash"] = cfg.hash();
    j["alpha"] = cfg.alpha;
    j["d"] = cfg.d;
    j["law"] = cfg.law_text;
    j["lambda"] = cfg.lambda;
    j["boundary"] = cfg.boundary;
    j["deterministic"] = cfg.deterministic;
    j["fit_input"] = "log of seed-mean error per k; censored records excluded";
    j["note"] =
        cfg.law().is_deterministic()
            ? "deterministic discretization experiment; rates reproducible "
              "run to run"
            : "desk-scale trend check: the fitted slope tracks the predicted "
              "exponent only up to logarithmic corrections and unresolved "
              "constants";
    json per_k = json::array();
    for (std::int64_t k : cfg.k_values) {
        double sum = 0.0;
        int n_ok = 0, n_cens = 0;
        for (const SweepRecord& r : records) {
            if (r.k != k) continue;
            if (r.status == Status::ok) {
                sum += r.l2_error;
                ++n_ok;
            } else {
                ++n_cens;
            }
        }
        json row;
        row["k"] = k;
        row["n_ok"] = n_ok;
        row["n_censored"] = n_cens;
        if (n_ok > 0) {
            double mean = sum / n_ok;
            row["mean_error"] = mean;
            double var = 0.0;
            for (const SweepRecord& r : records) {
                if (r.k != k || r.status != Status::ok) continue;
                var += (r.l2_error - mean) * (r.l2_error - mean);
            }
            row["stderr"] =
                n_ok > 1 ? std::sqrt(var / (n_ok - 1) / n_ok) : 0.0;
        } else {
            row["mean_error"] = nullptr;
            row["stderr"] = nullptr;
        }
        per_k.push_back(row);
    }
    j["per_k"] = per_k;
    try {
        RateFit fit = fit_rate(records);
        json jf;
        jf["slope"] = fit.slope;
        jf["intercept"] = fit.intercept;
        jf["stderr"] = fit.stderr_slope;
        jf["n_points"] = fit.n_points;
        jf["predicted_exponent"] = fit.predicted_exponent;
        j["fit"] = jf;
    } catch (const std::exception&) {
        j["fit"] = nullptr;
    }
    return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// CLI

namespace {

std::FILE* open_out(const std::string& path) {
    if (path == "-") return stdout;
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw resource_error("cannot open for writing: " + path);
    return f;
}

void close_out(std::FILE* f) {
    if (f != stdout) std::fclose(f);
}

void write_text(const std::string& path, const std::string& text) {
    std::FILE* f = open_out(path);
    std::fwrite(text.data(), 1, text.size(), f);
    close_out(f);
}

Environment make_env(std::uint64_t seed, const std::string& law_text, int d) {
    return Environment(seed, ConductanceLaw::parse(law_text), d);
}

struct CsvSink {
    std::FILE* f = nullptr;
    explicit CsvSink(const std::string& path) : f(open_out(path)) {}
    ~CsvSink() { close_out(f); }
    void line(const std::string& s) { std::fprintf(f, "%s\n", s.c_str()); }
};

std::string fmt(const char* format, ...) {
    va_list ap;
    va_start(ap, format);
    char buf[512];
    std::vsnprintf(buf, sizeof buf, format, ap);
    va_end(ap);
    return buf;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
    CLI::App app{"lattice toolkit for stable-like generators in random media"};
    app.require_subcommand(1);

    // env
    auto* c_env = app.add_subcommand("env", "inspect a conductance field");
    std::uint64_t env_seed = 0;
    std::string env_law = "constant";
    int env_d = 2, env_pairs = 5;
    c_env->add_option("--seed", env_seed, "environment seed");
    c_env->add_option("--law", env_law, "conductance law");
    c_env->add_option("--d", env_d, "dimension")->check(CLI::Range(1, 3));
    c_env->add_option("--pairs", env_pairs, "sample pairs to print");

    // ref
    auto* c_ref = app.add_subcommand("ref", "limit-generator reference values");
    double ref_alpha = 1.5, ref_radius = 1.0, ref_tol = 1e-9;
    int ref_d = 2, ref_kref = 256;
    std::vector<double> ref_point;
    c_ref->add_option("--alpha", ref_alpha, "stability index")->required();
    c_ref->add_option("--d", ref_d, "dimension")->check(CLI::Range(1, 3));
    c_ref->add_option("--radius", ref_radius, "bump radius");
    c_ref->add_option("--k-ref", ref_kref, "near-field refinement");
    c_ref->add_option("--tol", ref_tol, "far-field check tolerance");
    c_ref->add_option("--point", ref_point, "evaluation point (d numbers)")
        ->expected(-1);

    // resolve
    auto* c_res = app.add_subcommand("resolve", "single resolvent experiment");
    std::string res_config;
    std::int64_t res_k = 0;
    std::uint64_t res_seed = 0;
    c_res->add_option("--config", res_config, "config json path")->required();
    c_res->add_option("--k", res_k, "lattice scale")->required();
    c_res->add_option("--seed", res_seed, "environment seed")->required();

    // corrector
    auto* c_cor = app.add_subcommand("corrector", "local corrector solve");
    double cor_alpha = 1.5, cor_tol = 1e-9;
    int cor_d = 2, cor_m = 3;
    std::uint64_t cor_seed = 0;
    std::string cor_law = "bernoulli:0.5", cor_out;
    bool cor_trunc = false;
    c_cor->add_option("--alpha", cor_alpha, "stability index")->required();
    c_cor->add_option("--d", cor_d, "dimension")->check(CLI::Range(1, 3));
    c_cor->add_option("--m", cor_m, "box level (side 2^{m+1})")->required();
    c_cor->add_option("--seed", cor_seed, "environment seed");
    c_cor->add_option("--law", cor_law, "conductance law");
    c_cor->add_option("--tol", cor_tol, "solver tolerance");
    c_cor->add_flag("--truncated", cor_trunc,
                    "truncate the potential at 2^m (the V_m variant)");
    c_cor->add_option("--out", cor_out, "write the corrector grid (binary)");

    // poincare
    auto* c_poi = app.add_subcommand("poincare", "local Poincare statistics");
    double poi_alpha = 1.0, poi_tol = 1e-10;
    int poi_d = 2;
    std::string poi_law = "uniform:1", poi_out = "-", poi_json;
    std::vector<std::uint64_t> poi_seeds{0};
    std::vector<std::int64_t> poi_r{4, 8, 16, 32};
    c_poi->add_option("--alpha", poi_alpha, "stability index")->required();
    c_poi->add_option("--d", poi_d, "dimension")->check(CLI::Range(1, 3));
    c_poi->add_option("--law", poi_law, "conductance law");
    c_poi->add_option("--seeds", poi_seeds, "environment seeds")->expected(-1);
    c_poi->add_option("--r", poi_r, "box radii")->expected(-1);
    c_poi->add_option("--tol", poi_tol, "gap tolerance");
    c_poi->add_option("--out", poi_out, "csv output path ('-' = stdout)");
    c_poi->add_option("--json", poi_json, "summary json path");

    // concentration
    auto* c_con = app.add_subcommand("concentration",
                                     "block-average concentration of V");
    double con_alpha = 1.5, con_theta = 0.0;
    int con_d = 2, con_m = 6;
    std::string con_law = "bernoulli:0.5", con_out = "-", con_json;
    std::vector<std::uint64_t> con_seeds{0};
    std::vector<int> con_k{2, 3, 4};
    c_con->add_option("--alpha", con_alpha, "stability index")->required();
    c_con->add_option("--d", con_d, "dimension")->check(CLI::Range(1, 3));
    c_con->add_option("--m", con_m, "box level");
    c_con->add_option("--law", con_law, "conductance law");
    c_con->add_option("--seeds", con_seeds, "environment seeds")->expected(-1);
    c_con->add_option("--k", con_k, "block levels")->expected(-1);
    c_con->add_option("--theta", con_theta,
                      "exponent in (alpha/d, 1); 0 picks the midpoint");
    c_con->add_option("--out", con_out, "csv output path ('-' = stdout)");
    c_con->add_option("--json", con_json, "summary json path");

    // opdiff
    auto* c_opd = app.add_subcommand("opdiff", "operator-difference norms");
    double opd_alpha = 1.5, opd_radius = 1.0;
    int opd_d = 2, opd_kref = 0;
    std::string opd_law = "uniform:1", opd_which = "ref_vs_continuum",
                opd_out = "-", opd_json;
    std::vector<std::uint64_t> opd_seeds{0};
    std::vector<std::int64_t> opd_k{8, 16, 32};
    c_opd->add_option("--alpha", opd_alpha, "stability index")->required();
    c_opd->add_option("--d", opd_d, "dimension")->check(CLI::Range(1, 3));
    c_opd->add_option("--law", opd_law, "conductance law");
    c_opd->add_option("--seeds", opd_seeds, "environment seeds")->expected(-1);
    c_opd->add_option("--k", opd_k, "lattice scales")->expected(-1);
    c_opd->add_option("--which", opd_which,
                      "ref_vs_continuum | hat_vs_ref | random_vs_ref");
    c_opd->add_option("--radius", opd_radius, "bump radius");
    c_opd->add_option("--k-ref", opd_kref, "continuum refinement (0 = 4k)");
    c_opd->add_option("--out", opd_out, "csv output path ('-' = stdout)");
    c_opd->add_option("--json", opd_json, "summary json path");

    // twoscale
    auto* c_two = app.add_subcommand("twoscale", "two-scale expansion check");
    double two_alpha = 1.5, two_lambda = 1.0, two_radius = 1.0, two_tol = 1e-9;
    int two_d = 2;
    std::string two_law = "bernoulli:0.5", two_out = "-", two_json;
    std::vector<std::uint64_t> two_seeds{0};
    std::vector<std::int64_t> two_k{8, 16};
    c_two->add_option("--alpha", two_alpha, "stability index in (1,2)")
        ->required();
    c_two->add_option("--d", two_d, "dimension")->check(CLI::Range(1, 3));
    c_two->add_option("--law", two_law, "conductance law");
    c_two->add_option("--seeds", two_seeds, "environment seeds")->expected(-1);
    c_two->add_option("--k", two_k, "lattice scales")->expected(-1);
    c_two->add_option("--lambda", two_lambda, "resolvent parameter");
    c_two->add_option("--radius", two_radius, "bump radius");
    c_two->add_option("--tol", two_tol, "solver tolerance");
    c_two->add_option("--out", two_out, "csv output path ('-' = stdout)");
    c_two->add_option("--json", two_json, "summary json path");

    // sweep
    auto* c_swp = app.add_subcommand("sweep", "resolvent rate sweep");
    std::string swp_config, swp_csv = "sweep.csv", swp_json = "summary.json";
    c_swp->add_option("--config", swp_config, "config json path")->required();
    c_swp->add_option("--csv", swp_csv, "csv file name (under output_dir)");
    c_swp->add_option("--json", swp_json, "summary file name (under output_dir)");

    // fit
    auto* c_fit = app.add_subcommand("fit", "rate fit from a sweep csv");
    std::string fit_in;
    c_fit->add_option("--in", fit_in, "sweep csv path")->required();

    // plot-data
    auto* c_plt = app.add_subcommand("plot-data",
                                     "plot-ready data + gnuplot script");
    std::string plt_in, plt_x = "k", plt_y = "l2_error", plt_out;
    bool plt_nolog = false;
    c_plt->add_option("--in", plt_in, "csv path")->required();
    c_plt->add_option("--x", plt_x, "x column name");
    c_plt->add_option("--y", plt_y, "y column name");
    c_plt->add_option("--out", plt_out, "script path (default <in>.gp)");
    c_plt->add_flag("--no-log", plt_nolog, "linear axes instead of log-log");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*c_env) {
            Environment env = make_env(env_seed, env_law, env_d);
            std::printf("kernel=%s workers=%d\n", kernels::active().name,
                        worker_count());
            std::printf("law=%s upper_bound=%.17g deterministic=%d\n",
                        env.law().to_string().c_str(),
                        env.law().upper_bound(),
                        env.law().is_deterministic() ? 1 : 0);
            std::int64_t origin[3] = {0, 0, 0};
            for (int j = 1; j <= env_pairs; ++j) {
                std::int64_t p[3] = {0, 0, 0};
                p[0] = j;
                std::printf("w(0, %d e1) = %.17g\n", j,
                            env.conductance(origin, p));
            }
            return 0;
        }
        if (*c_ref) {
            double c = symbol_constant(ref_d, ref_alpha);
            std::printf("symbol_constant(d=%d, alpha=%.17g) = %.17g\n", ref_d,
                        ref_alpha, c);
            if (!ref_point.empty()) {
                if (static_cast<int>(ref_point.size()) != ref_d)
                    throw domain_error("--point needs exactly d numbers");
                SmoothBump g;
                g.d = ref_d;
                g.radius = ref_radius;
                RefQuadrature quad;
                quad.K_ref = ref_kref;
                quad.tol = ref_tol;
                double est = 0.0;
                double v = frac_generator_apply(g, ref_point.data(), ref_alpha,
                                                quad, &est);
                std::printf("generator(bump)(point) = %.17g accuracy=%.3g\n", v,
                            est);
            }
            return 0;
        }
        if (*c_res) {
            ExperimentConfig cfg = ExperimentConfig::from_file(res_config);
            cfg.k_values = {res_k};
            cfg.seeds = {res_seed};
            std::vector<SweepRecord> recs = run_sweep(cfg);
            const SweepRecord& r = recs.at(0);
            std::printf("k=%" PRId64 " seed=%" PRIu64
                        " l2_error=%.12g status=%s wall_ms=%.3f%s%s\n",
                        r.k, r.seed, r.l2_error, to_string(r.status), r.wall_ms,
                        r.reason.empty() ? "" : " reason=",
                        r.reason.c_str());
            return 0;
        }
        if (*c_cor) {
            if (!cor_trunc && !(cor_alpha > 1.0 && cor_alpha < 2.0))
                throw domain_error(
                    "untruncated potential needs alpha in (1,2); pass "
                    "--truncated otherwise");
            Environment env = make_env(cor_seed, cor_law, cor_d);
            SolveOptions opt;
            opt.tol = cor_tol;
            std::vector<CorrectorScanRecord> recs = corrector_energy_scan(
                env, cor_alpha, {cor_m}, cor_trunc, opt);
            const CorrectorScanRecord& r = recs.at(0);
            std::printf("m=%d energy=%.12g normalized=%.12g iterations=%d "
                        "status=%s\n",
                        r.m, r.energy, r.normalized, r.iterations,
                        to_string(r.status));
            if (!cor_out.empty() && r.status == Status::ok) {
                LatticeBox box = LatticeBox::create(
                    cor_d, 1, static_cast<double>(std::int64_t(1) << cor_m));
                Potential V = potential_field(
                    env, cor_alpha, box,
                    static_cast<double>(std::int64_t(1) << (cor_m + 2)),
                    cor_trunc ? std::optional<double>(static_cast<double>(
                                    std::int64_t(1) << cor_m))
                              : std::nullopt);
                GridFunction rhs = V.values;
                for (double& t : rhs.values) t = -t;
                NonlocalOperator op(env, box, Variant::random,
                                    Boundary::restricted, cor_alpha);
                SolveOptions o2 = opt;
                if (circulant_supported(box)) o2.precond = Precond::circulant;
                CorrectorField cf = solve_poisson_meanzero(op, rhs, o2);
                write_grid_binary(cf.values, cor_out);
                std::printf("wrote %s\n", cor_out.c_str());
            }
            return 0;
        }
        if (*c_poi) {
            CsvSink csv(poi_out);
            csv.line("alpha,d,law,seed,r,gap,box_size,statistic,zero_gap");
            json stats = json::array();
            for (std::uint64_t seed : poi_seeds) {
                Environment env = make_env(seed, poi_law, poi_d);
                double mx = 0.0, mn = 0.0;
                bool any = false, degenerate = false;
                for (std::int64_t r : poi_r) {
                    std::int64_t origin[3] = {0, 0, 0};
                    PoincareRecord rec =
                        poincare_statistic(env, poi_alpha, r, origin, poi_tol);
                    csv.line(fmt("%.17g,%d,%s,%" PRIu64 ",%" PRId64
                                 ",%.17g,%" PRId64 ",%.17g,%d",
                                 poi_alpha, poi_d, poi_law.c_str(), seed, rec.r,
                                 rec.gap, rec.box_size, rec.statistic,
                                 rec.zero_gap ? 1 : 0));
                    if (rec.zero_gap) {
                        degenerate = true;
                        continue;
                    }
                    if (!any || rec.statistic > mx) mx = rec.statistic;
                    if (!any || rec.statistic < mn) mn = rec.statistic;
                    any = true;
                }
                json s;
                s["seed"] = seed;
                s["zero_gap_seen"] = degenerate;
                if (any) {
                    s["max_statistic"] = mx;
                    s["min_statistic"] = mn;
                    s["max_over_min"] = mx / mn;
                }
                stats.push_back(s);
            }
            if (!poi_json.empty()) {
                json j;
                j["command"] = "poincare";
                j["alpha"] = poi_alpha;
                j["d"] = poi_d;
                j["law"] = poi_law;
                j["r"] = poi_r;
                j["per_seed"] = stats;
                write_text(poi_json, j.dump(2) + "\n");
            }
            return 0;
        }
        if (*c_con) {
            double theta = con_theta > 0.0
                               ? con_theta
                               : (con_alpha / con_d + 1.0) / 2.0;
            CsvSink csv(con_out);
            csv.line("alpha,d,law,seed,m,k,statistic,bound,theta,status");
            std::map<int, std::pair<double, int>> mean_k;
            for (std::uint64_t seed : con_seeds) {
                Environment env = make_env(seed, con_law, con_d);
                auto recs = block_average_concentration(env, con_alpha, con_m,
                                                        con_k, theta);
                for (const ConcentrationRecord& r : recs) {
                    csv.line(fmt("%.17g,%d,%s,%" PRIu64
                                 ",%d,%d,%.17g,%.17g,%.17g,%s",
                                 con_alpha, con_d, con_law.c_str(), seed, r.m,
                                 r.k_sub, r.statistic, r.bound, r.theta,
                                 to_string(r.status)));
                    auto& slot = mean_k[r.k_sub];
                    slot.first += r.statistic;
                    slot.second += 1;
                }
            }
            if (!con_json.empty()) {
                json j;
                j["command"] = "concentration";
                j["alpha"] = con_alpha;
                j["d"] = con_d;
                j["law"] = con_law;
                j["m"] = con_m;
                j["theta"] = theta;
                json per = json::array();
                for (const auto& [k, slot] : mean_k) {
                    json row;
                    row["k"] = k;
                    row["mean_statistic"] = slot.first / slot.second;
                    per.push_back(row);
                }
                j["per_k"] = per;
                write_text(con_json, j.dump(2) + "\n");
            }
            return 0;
        }
        if (*c_opd) {
            DiffKind which;
            if (opd_which == "ref_vs_continuum") {
                which = DiffKind::ref_vs_continuum;
            } else if (opd_which == "hat_vs_ref") {
                which = DiffKind::hat_vs_ref;
            } else if (opd_which == "random_vs_ref") {
                which = DiffKind::random_vs_ref;
            } else {
                throw config_error("--which must be ref_vs_continuum, "
                                   "hat_vs_ref or random_vs_ref");
            }
            CsvSink csv(opd_out);
            csv.line("alpha,d,law,seed,k,which,sq_norm,status");
            json rows = json::array();
            for (std::uint64_t seed : opd_seeds) {
                Environment env = make_env(seed, opd_law, opd_d);
                for (std::int64_t k : opd_k) {
                    SmoothBump g;
                    g.d = opd_d;
                    g.radius = opd_radius;
                    DiffRecord r = operator_difference_norm(env, opd_alpha, k,
                                                            which, g, opd_kref);
                    csv.line(fmt("%.17g,%d,%s,%" PRIu64 ",%" PRId64
                                 ",%s,%.17g,%s",
                                 opd_alpha, opd_d, opd_law.c_str(), seed, r.k,
                                 to_string(r.which), r.sq_norm,
                                 to_string(r.status)));
                    json row;
                    row["seed"] = seed;
                    row["k"] = k;
                    row["sq_norm"] = r.sq_norm;
                    rows.push_back(row);
                }
                if (which == DiffKind::ref_vs_continuum) break;  // seed-free
            }
            if (!opd_json.empty()) {
                json j;
                j["command"] = "opdiff";
                j["alpha"] = opd_alpha;
                j["d"] = opd_d;
                j["law"] = opd_law;
                j["which"] = opd_which;
                j["records"] = rows;
                write_text(opd_json, j.dump(2) + "\n");
            }
            return 0;
        }
        if (*c_two) {
            CsvSink csv(two_out);
            csv.line("alpha,d,law,seed,k,m,v_vs_u,resolvent_vs_v,"
                     "corrector_energy,test_accuracy,status");
            json rows = json::array();
            for (std::uint64_t seed : two_seeds) {
                Environment env = make_env(seed, two_law, two_d);
                for (std::int64_t k : two_k) {
                    SmoothBump g;
                    g.d = two_d;
                    g.radius = two_radius;
                    SolveOptions opt;
                    opt.tol = two_tol;
                    std::string status = "ok";
                    TwoScaleResult r{};
                    try {
                        r = two_scale_diagnostic(env, two_alpha, k, g,
                                                 two_lambda, opt);
                    } catch (const solver_error&) {
                        status = "censored";
                    }
                    csv.line(fmt("%.17g,%d,%s,%" PRIu64 ",%" PRId64
                                 ",%d,%.17g,%.17g,%.17g,%.17g,%s",
                                 two_alpha, two_d, two_law.c_str(), seed, k,
                                 r.m, r.v_vs_u, r.resolvent_vs_v,
                                 r.corrector_energy, r.test_accuracy,
                                 status.c_str()));
                    json row;
                    row["seed"] = seed;
                    row["k"] = k;
                    row["v_vs_u"] = r.v_vs_u;
                    row["resolvent_vs_v"] = r.resolvent_vs_v;
                    row["status"] = status;
                    rows.push_back(row);
                }
            }
            if (!two_json.empty()) {
                json j;
                j["command"] = "twoscale";
                j["alpha"] = two_alpha;
                j["d"] = two_d;
                j["law"] = two_law;
                j["lambda"] = two_lambda;
                j["records"] = rows;
                write_text(two_json, j.dump(2) + "\n");
            }
            return 0;
        }
        if (*c_swp) {
            ExperimentConfig cfg = ExperimentConfig::from_file(swp_config);
            std::vector<SweepRecord> recs = run_sweep(cfg);
            std::filesystem::create_directories(cfg.output_dir);
            std::string csv_path =
                (std::filesystem::path(cfg.output_dir) / swp_csv).string();
            std::string json_path =
                (std::filesystem::path(cfg.output_dir) / swp_json).string();
            write_sweep_csv(recs, cfg.hash(), csv_path);
            write_text(json_path, summary_json(cfg, recs));
            std::printf("wrote %s\nwrote %s\n", csv_path.c_str(),
                        json_path.c_str());
            try {
                RateFit fit = fit_rate(recs);
                std::printf("slope=%.6g stderr=%.3g predicted=%.6g\n",
                            fit.slope, fit.stderr_slope,
                            fit.predicted_exponent);
            } catch (const std::exception& e) {
                std::printf("fit unavailable: %s\n", e.what());
            }
            return 0;
        }
        if (*c_fit) {
            std::string hash;
            std::vector<SweepRecord> recs = read_sweep_csv(fit_in, &hash);
            RateFit fit = fit_rate(recs);
            json j;
            j["config_hash"] = hash;
            j["slope"] = fit.slope;
            j["intercept"] = fit.intercept;
            j["stderr"] = fit.stderr_slope;
            j["n_points"] = fit.n_points;
            j["predicted_exponent"] = fit.predicted_exponent;
            std::printf("%s\n", j.dump(2).c_str());
            return 0;
        }
        if (*c_plt) {
            std::ifstream in(plt_in);
            if (!in) throw config_error("cannot open csv: " + plt_in);
            std::string line;
            std::vector<std::string> header;
            std::vector<std::pair<double, double>> pts;
            int xi = -1, yi = -1, status_col = -1;
            while (std::getline(in, line)) {
                if (line.empty() || line[0] == '#') continue;
                std::vector<std::string> cols;
                std::stringstream ss(line);
                std::string c;
                while (std::getline(ss, c, ',')) cols.push_back(c);
                if (header.empty()) {
                    header = cols;
                    for (std::size_t i = 0; i < cols.size(); ++i) {
                        if (cols[i] == plt_x) xi = static_cast<int>(i);
                        if (cols[i] == plt_y) yi = static_cast<int>(i);
                        if (cols[i] == "status") status_col = static_cast<int>(i);
                    }
                    if (xi < 0 || yi < 0)
                        throw config_error("columns '" + plt_x + "'/'" + plt_y +
                                           "' not found in " + plt_in);
                    continue;
                }
                if (status_col >= 0 &&
                    status_col < static_cast<int>(cols.size()) &&
                    cols[status_col] != "ok")
                    continue;
                try {
                    pts.emplace_back(std::stod(cols.at(xi)),
                                     std::stod(cols.at(yi)));
                } catch (const std::exception&) {
                    throw config_error("non-numeric cell in " + plt_in);
                }
            }
            std::string data_path = plt_in + ".plot.csv";
            std::FILE* f = open_out(data_path);
            std::fprintf(f, "%s,%s\n", plt_x.c_str(), plt_y.c_str());
            for (auto& [x, y] : pts) std::fprintf(f, "%.17g,%.17g\n", x, y);
            close_out(f);
            std::string gp_path = plt_out.empty() ? plt_in + ".gp" : plt_out;
            std::ostringstream gp;
            gp << "set datafile separator ','\n";
            if (!plt_nolog) gp << "set logscale xy\n";
            gp << "set xlabel '" << plt_x << "'\nset ylabel '" << plt_y
               << "'\nset key top right\n"
               << "plot '" << data_path << "' skip 1 using 1:2 "
               << "with points pt 7 title '" << plt_y << "'\n";
            write_text(gp_path, gp.str());
            std::printf("wrote %s\nwrote %s\n", data_path.c_str(),
                        gp_path.c_str());
            return 0;
        }
    } catch (const config_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 1;
}

}  // namespace stablehomog
