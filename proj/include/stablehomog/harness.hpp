// harness.hpp -- experiment orchestration: config parsing, the resolvent
// rate sweep, slope fits, CSV/JSON persistence, and the CLI entry point.
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "stablehomog/analysis.hpp"
#include "stablehomog/environment.hpp"

namespace stablehomog {

// Strict snake_case JSON config; unknown keys are rejected so typos cannot
// silently fall back to defaults.
struct ExperimentConfig {
    int d = 2;
    double alpha = 1.5;
    double lambda = 1.0;
    std::string law_text = "constant";
    std::vector<std::uint64_t> seeds{0};
    std::vector<std::int64_t> k_values{4, 8, 16, 32};
    double box_m = 2.0;
    std::string boundary = "killed";  // killed | restricted
    double bump_radius = 1.0;
    std::array<double, 3> bump_center{0.0, 0.0, 0.0};
    double solver_tol = 1e-9;
    int max_iterations = 0;           // 0 -> solver default
    std::string precond = "auto";     // auto | none | jacobi | circulant
    int k_ref_multiplier = 8;         // continuum refinement = multiplier * k
    std::string output_dir = ".";
    bool deterministic = false;       // fixed reductions, wall_ms written as 0

    ConductanceLaw law() const { return ConductanceLaw::parse(law_text); }
    Boundary boundary_mode() const;
    // Resolved solver options for a given box (auto preconditioner).
    SolveOptions solve_options(const LatticeBox& box) const;

    // Throws config_error on any violated invariant.
    void validate() const;

    static ExperimentConfig from_json_text(const std::string& text);
    // config_error naming the path when the file is missing.
    static ExperimentConfig from_file(const std::string& path);

    // All fields, sorted keys, round-trip doubles; hash() is an FNV-1a of it.
    std::string canonical_json() const;
    std::string hash() const;
};

struct SweepRecord {
    double alpha = 0.0;
    int d = 0;
    std::string law;
    std::uint64_t seed = 0;
    std::int64_t k = 0;
    double box_m = 0.0;
    std::string boundary;
    double l2_error = 0.0;  // 0 when censored
    Status status = Status::ok;
    double wall_ms = 0.0;
    std::string reason;  // censoring cause; not serialized to CSV
};

// One resolvent experiment per (k, seed): f = lambda g - Lbar g built once
// per k and shared across seeds, u_k from the killed-mode (or restricted)
// solve, error ||u_k - g|| in L2(mu^k). Any stage failure censors the record
// with a reason; the contraction bound ||u|| <= ||f||/lambda (up to solver
// tolerance) is checked on every ok record.
std::vector<SweepRecord> run_sweep(const ExperimentConfig& cfg);

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    double stderr_slope = 0.0;
    int n_points = 0;
    double predicted_exponent = 0.0;
};

// Least squares on (log k, log seed-mean error) over ok records. Fewer than
// 3 distinct k levels or a non-positive mean is a domain error. The
// predicted exponent follows the rate table for the records' (alpha, d, law)
// branch; deterministic laws get the sharper deterministic-rate branch.
RateFit fit_rate(const std::vector<SweepRecord>& records);

// Columns: alpha,d,law,seed,k,box_m,boundary,l2_error,status,wall_ms.
// A "# config_hash=..." comment line precedes the header.
void write_sweep_csv(const std::vector<SweepRecord>& records,
                     const std::string& config_hash, const std::string& path);
std::vector<SweepRecord> read_sweep_csv(const std::string& path,
                                        std::string* config_hash_out = nullptr);

// {config_hash, per_k: [...], fit: {...}} plus run metadata and the fit-input
// note. fit is null when fewer than 3 levels survive.
std::string summary_json(const ExperimentConfig& cfg,
                         const std::vector<SweepRecord>& records);

// Subcommands: env, ref, resolve, corrector, poincare, concentration,
// opdiff, twoscale, sweep, fit, plot-data. Exit 0 success, 1 usage or
// config error, 2 runtime failure.
int cli_main(int argc, const char* const* argv);

}  // namespace stablehomog
