#include "stablehomog/operators.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

#include "stablehomog/fft.hpp"
#include "stablehomog/parallel.hpp"
#include "stablehomog/radial.hpp"

namespace stablehomog {

namespace {

void check_alpha(double alpha, const char* who) {
    if (!(alpha > 0.0) || !(alpha < 2.0))
        throw domain_error(std::string(who) + ": alpha must lie in (0, 2)");
}

std::int64_t max_squared_span(const LatticeBox& box) {
    std::int64_t span = box.n - 1;
    return static_cast<std::int64_t>(box.d) * span * span;
}

kernels::LawParams law_params_of(const std::optional<Environment>& env) {
    kernels::LawParams lp{-1.0, 0.0, 1.0, 0.0};
    if (env) {
        auto mp = env->law().map_params();
        lp = {mp.threshold, mp.atom, mp.base, mp.slope};
    }
    return lp;
}

}  // namespace

const char* to_string(Variant v) {
    switch (v) {
        case Variant::random: return "random";
        case Variant::reference: return "reference";
        default: return "compensated";
    }
}

const char* to_string(Boundary b) {
    return b == Boundary::restricted ? "restricted" : "killed";
}

NonlocalOperator::NonlocalOperator(std::optional<Environment> env,
                                   const LatticeBox& box, Variant variant,
                                   Boundary boundary, double alpha,
                                   Options opt)
    : env_(std::move(env)),
      box_(box),
      variant_(variant),
      boundary_(boundary),
      alpha_(alpha),
      opt_(opt) {
    check_alpha(alpha, "NonlocalOperator");
    if (box.d < 1 || box.d > 3)
        throw domain_error("NonlocalOperator: d must be 1, 2 or 3");
    if (env_ && env_->dim() != box.d)
        throw domain_error("NonlocalOperator: environment dimension mismatch");
    if (variant_ == Variant::compensated && boundary_ == Boundary::killed)
        throw domain_error(
            "NonlocalOperator: compensated variant supports restricted mode only");
    prefactor_ = std::pow(static_cast<double>(box.k), alpha_);
    grad_prefactor_ = std::pow(static_cast<double>(box.k), alpha_ - 1.0);
    const bool use_law = variant_ != Variant::reference && env_.has_value();
    mode_ = use_law ? kernels::WeightMode::law : kernels::WeightMode::unit;
    law_ = law_params_of(use_law ? env_ : std::nullopt);
    seed_state_ = env_ ? env_->seed_state() : 0;
    const std::int64_t max_s = max_squared_span(box);
    table_ = make_kernel_table(box.d, alpha_, max_s);
    if (opt_.jump_cutoff) {
        if (*opt_.jump_cutoff < 1)
            throw domain_error("NonlocalOperator: jump_cutoff must be >= 1");
        ball_r2_ = std::min(max_s, *opt_.jump_cutoff * *opt_.jump_cutoff);
    }
    arrays_ = materialize_box(box);
    if (boundary_ == Boundary::killed) build_kappa();
}

void NonlocalOperator::build_kappa() {
    const std::size_t N = box_.point_count();
    kappa0_.assign(N, 0.0);
    double ext_total;
    if (opt_.jump_cutoff) {
        // Truncated jumps: the exterior sum is finite and exact.
        ext_total = lattice_ball_sum(
            box_.d, alpha_, static_cast<double>(*opt_.jump_cutoff));
    } else {
        const double diam =
            static_cast<double>(std::max<std::int64_t>(box_.n - 1, 1)) *
            std::sqrt(static_cast<double>(box_.d));
        const double r_ext = opt_.r_ext_factor * diam;
        ext_total = lattice_ball_sum(box_.d, alpha_, r_ext) +
                    sphere_surface(box_.d) * std::pow(r_ext, -alpha_) / alpha_;
    }
    // kappa0(x) = exterior row sum = full unit row sum minus the in-box part.
    std::vector<double> zeros(N, 0.0);
    const auto& kern = kernels::active();
    parallel_for(N, [&](std::size_t b, std::size_t e) {
        for (std::size_t idx = b; idx < e; ++idx) {
            kernels::RowArgs args{};
            args.table = table_.data();
            for (int i = 0; i < box_.d; ++i) args.coords[i] = arrays_.coords[i].data();
            args.keys = nullptr;
            args.values = zeros.data();
            args.n = static_cast<std::int64_t>(N);
            args.d = box_.d;
            for (int i = 0; i < box_.d; ++i) args.center[i] = arrays_.coords[i][idx];
            args.center_key = 0;
            args.center_value = 0.0;
            args.seed_state = 0;
            args.law = kernels::LawParams{-1.0, 0.0, 1.0, 0.0};
            args.mode = kernels::WeightMode::unit;
            args.ball_r2 = ball_r2_;
            kernels::RowAccum acc;
            kern.row_full(args, acc);
            kappa0_[idx] = ext_total - acc.wt;
        }
    });
}

double NonlocalOperator::row_diff(std::size_t idx, const double* values,
                                  double fc) const {
    kernels::RowArgs args{};
    args.table = table_.data();
    for (int i = 0; i < box_.d; ++i) args.coords[i] = arrays_.coords[i].data();
    args.keys = arrays_.keys.empty() ? nullptr : arrays_.keys.data();
    args.values = values;
    args.n = static_cast<std::int64_t>(box_.point_count());
    args.d = box_.d;
    for (int i = 0; i < box_.d; ++i) args.center[i] = arrays_.coords[i][idx];
    args.center_key = args.keys ? args.keys[idx] : 0;
    args.center_value = fc;
    args.seed_state = seed_state_;
    args.law = law_;
    args.mode = mode_;
    args.ball_r2 = ball_r2_;
    return kernels::active().row_diff(args);
}

GridFunction NonlocalOperator::apply(const GridFunction& f) const {
    if (!(f.box == box_))
        throw domain_error("NonlocalOperator::apply: box mismatch");
    const int d = box_.d;
    if (variant_ == Variant::compensated) {
        if (f.ncomp != 1 + d)
            throw domain_error(
                "NonlocalOperator::apply: compensated variant needs the "
                "analytic gradient (ncomp = 1 + d)");
    } else if (f.ncomp != 1) {
        throw domain_error("NonlocalOperator::apply: expected scalar input");
    }
    const std::size_t N = box_.point_count();
    GridFunction out = GridFunction::zeros(box_);
    const double* vals = f.comp_data(0);
    const auto& kern = kernels::active();
    std::int64_t comp_ball = 0;
    if (variant_ == Variant::compensated) {
        if (alpha_ <= 1.0) {
            comp_ball = box_.k * box_.k;
            if (ball_r2_ > 0) comp_ball = std::min(comp_ball, ball_r2_);
        } else {
            comp_ball = ball_r2_;
        }
    }
    parallel_for(N, [&](std::size_t b, std::size_t e) {
        for (std::size_t idx = b; idx < e; ++idx) {
            double s = row_diff(idx, vals, vals[idx]);
            if (boundary_ == Boundary::killed) s -= vals[idx] * kappa0_[idx];
            double result = prefactor_ * s;
            if (variant_ == Variant::compensated) {
                kernels::RowArgs args{};
                args.table = table_.data();
                for (int i = 0; i < d; ++i) args.coords[i] = arrays_.coords[i].data();
                args.keys = arrays_.keys.empty() ? nullptr : arrays_.keys.data();
                args.values = vals;
                args.n = static_cast<std::int64_t>(N);
                args.d = d;
                for (int i = 0; i < d; ++i) args.center[i] = arrays_.coords[i][idx];
                args.center_key = args.keys ? args.keys[idx] : 0;
                args.center_value = vals[idx];
                args.seed_state = seed_state_;
                args.law = law_;
                args.mode = mode_;
                args.ball_r2 = comp_ball;
                kernels::RowAccum acc;
                kern.row_full(args, acc);
                double dot = 0.0;
                for (int i = 0; i < d; ++i) dot += f.at(idx, 1 + i) * acc.mom[i];
                result -= grad_prefactor_ * dot;
            }
            out.values[idx] = result;
        }
    });
    return out;
}

std::vector<double> NonlocalOperator::assemble_dense() const {
    if (variant_ == Variant::compensated)
        throw domain_error(
            "assemble_dense: compensated variant is not a matrix in f alone");
    const std::size_t N = box_.point_count();
    if (N > opt_.dense_limit)
        throw resource_error("assemble_dense: " + std::to_string(N) +
                             " points exceed the dense limit of " +
                             std::to_string(opt_.dense_limit));
    std::vector<double> A(N * N, 0.0);
    const auto& kern = kernels::active();
    parallel_for(N, [&](std::size_t b, std::size_t e) {
        std::vector<double> wrow(N);
        for (std::size_t i = b; i < e; ++i) {
            kernels::RowArgs args{};
            args.table = table_.data();
            for (int c = 0; c < box_.d; ++c) args.coords[c] = arrays_.coords[c].data();
            args.keys = arrays_.keys.empty() ? nullptr : arrays_.keys.data();
            args.values = nullptr;
            args.n = static_cast<std::int64_t>(N);
            args.d = box_.d;
            for (int c = 0; c < box_.d; ++c) args.center[c] = arrays_.coords[c][i];
            args.center_key = args.keys ? args.keys[i] : 0;
            args.center_value = 0.0;
            args.seed_state = seed_state_;
            args.law = law_;
            args.mode = mode_;
            args.ball_r2 = ball_r2_;
            kern.fill_weights(args, wrow.data());
            for (std::size_t j = i + 1; j < N; ++j) {
                std::int64_t s = 0;
                for (int c = 0; c < box_.d; ++c) {
                    std::int64_t dz = static_cast<std::int64_t>(arrays_.coords[c][j]) -
                                      arrays_.coords[c][i];
                    s += dz * dz;
                }
                if (ball_r2_ > 0 && s > ball_r2_) continue;
                double a = prefactor_ *
                           (wrow[j] * table_[static_cast<std::size_t>(s)]);
                A[i * N + j] = a;
                A[j * N + i] = a;
            }
        }
    });
    // Diagonal once the full symmetric off-diagonal part exists.
    parallel_for(N, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < N; ++j)
                if (j != i) s += A[i * N + j];
            double diag = -s;
            if (boundary_ == Boundary::killed)
                diag -= prefactor_ * kappa0_[i];
            A[i * N + i] = diag;
        }
    });
    return A;
}

std::vector<double> NonlocalOperator::diagonal() const {
    const std::size_t N = box_.point_count();
    std::vector<double> diag(N, 0.0);
    std::vector<double> zeros(N, 0.0);
    const auto& kern = kernels::active();
    parallel_for(N, [&](std::size_t b, std::size_t e) {
        for (std::size_t idx = b; idx < e; ++idx) {
            kernels::RowArgs args{};
            args.table = table_.data();
            for (int i = 0; i < box_.d; ++i) args.coords[i] = arrays_.coords[i].data();
            args.keys = arrays_.keys.empty() ? nullptr : arrays_.keys.data();
            args.values = zeros.data();
            args.n = static_cast<std::int64_t>(N);
            args.d = box_.d;
            for (int i = 0; i < box_.d; ++i) args.center[i] = arrays_.coords[i][idx];
            args.center_key = args.keys ? args.keys[idx] : 0;
            args.center_value = 0.0;
            args.seed_state = seed_state_;
            args.law = law_;
            args.mode = mode_;
            args.ball_r2 = ball_r2_;
            kernels::RowAccum acc;
            kern.row_full(args, acc);
            double v = acc.wt;
            if (boundary_ == Boundary::killed) v += kappa0_[idx];
            diag[idx] = prefactor_ * v;
        }
    });
    return diag;
}

std::vector<double> NonlocalOperator::circulant_symbol() const {
    const std::size_t n = static_cast<std::size_t>(box_.n);
    if (!((n > 0) && ((n & (n - 1)) == 0)))
        throw domain_error("circulant_symbol: box side must be a power of two");
    const std::size_t N = box_.point_count();
    // Unit-weight torus row with minimum-image distances.
    std::vector<std::complex<double>> row(N, 0.0);
    const int d = box_.d;
    std::int64_t half = box_.n / 2;
    for (std::size_t p = 0; p < N; ++p) {
        std::size_t rem = p;
        std::int64_t s = 0;
        for (int i = d - 1; i >= 0; --i) {
            std::int64_t o = static_cast<std::int64_t>(rem % n);
            rem /= n;
            std::int64_t m = o > half ? o - box_.n : o;
            s += m * m;
        }
        if (s == 0) continue;
        if (ball_r2_ > 0 && s > ball_r2_) continue;
        row[p] = table_[static_cast<std::size_t>(s)];
    }
    double c_total = 0.0;
    for (std::size_t p = 0; p < N; ++p) c_total += row[p].real();
    fft_nd(row.data(), n, d, false);
    double kbar = 0.0;
    if (boundary_ == Boundary::killed) {
        for (std::size_t p = 0; p < N; ++p) kbar += kappa0_[p];
        kbar /= static_cast<double>(N);
    }
    std::vector<double> sym(N);
    for (std::size_t p = 0; p < N; ++p)
        sym[p] = prefactor_ * (c_total - row[p].real() + kbar);
    return sym;
}

double NonlocalOperator::mu_dot(const GridFunction& f,
                                const GridFunction& g) const {
    if (!(f.box == box_) || !(g.box == box_) || f.ncomp != g.ncomp)
        throw domain_error("mu_dot: grid mismatch");
    double mass = std::pow(static_cast<double>(box_.k), -box_.d);
    return mass * det_dot(f.values.data(), g.values.data(), f.values.size());
}

double dirichlet_energy(const std::optional<Environment>& env,
                        const LatticeBox& U, const GridFunction& f,
                        double alpha) {
    check_alpha(alpha, "dirichlet_energy");
    if (U.k != 1)
        throw domain_error("dirichlet_energy: counting-measure form needs k = 1");
    if (!(f.box == U)) throw domain_error("dirichlet_energy: box mismatch");
    if (env && env->dim() != U.d)
        throw domain_error("dirichlet_energy: environment dimension mismatch");
    const std::size_t N = U.point_count();
    BoxArrays arrays = materialize_box(U);
    std::vector<double> table = make_kernel_table(U.d, alpha, max_squared_span(U));
    const bool use_law = env.has_value();
    kernels::LawParams law = law_params_of(env);
    const auto& kern = kernels::active();
    double total = 0.0;
    for (int c = 0; c < f.ncomp; ++c) {
        const double* vals = f.comp_data(c);
        total += deterministic_sum(N, [&](std::size_t idx) {
            kernels::RowArgs args{};
            args.table = table.data();
            for (int i = 0; i < U.d; ++i) args.coords[i] = arrays.coords[i].data();
            args.keys = arrays.keys.empty() ? nullptr : arrays.keys.data();
            args.values = vals;
            args.n = static_cast<std::int64_t>(N);
            args.d = U.d;
            for (int i = 0; i < U.d; ++i) args.center[i] = arrays.coords[i][idx];
            args.center_key = args.keys ? args.keys[idx] : 0;
            args.center_value = vals[idx];
            args.seed_state = env ? env->seed_state() : 0;
            args.law = law;
            args.mode = use_law ? kernels::WeightMode::law : kernels::WeightMode::unit;
            args.ball_r2 = 0;
            kernels::RowAccum acc;
            kern.row_full(args, acc);
            return acc.diff_sq;
        });
    }
    return 0.5 * total;
}

Potential potential_field(const Environment& env, double alpha,
                          const LatticeBox& box, double R_V,
                          std::optional<double> truncated_at,
                          bool raw_weights) {
    check_alpha(alpha, "potential_field");
    if (box.k != 1)
        throw domain_error("potential_field: the potential lives on Z^d (k = 1)");
    if (env.dim() != box.d)
        throw domain_error("potential_field: environment dimension mismatch");
    if (!(R_V >= 1.0) || !std::isfinite(R_V))
        throw domain_error("potential_field: truncation radius must be finite and >= 1");
    double R = R_V;
    if (truncated_at) R = std::min(R, *truncated_at);
    const std::int64_t J = static_cast<std::int64_t>(std::floor(R + 1e-12));
    const std::int64_t ball_r2 =
        static_cast<std::int64_t>(std::floor(R * R * (1.0 + 1e-12)));
    const int d = box.d;
    LatticeBox padded = dilate(box, J);
    BoxArrays parr = materialize_box(padded);
    const std::size_t NP = padded.point_count();
    std::vector<double> zeros(NP, 0.0);
    std::vector<double> table = make_kernel_table(d, alpha, d * J * J);
    kernels::LawParams law = law_params_of(env);
    const auto& kern = kernels::active();
    const std::size_t N = box.point_count();
    Potential pot;
    pot.alpha = alpha;
    pot.radius = R;
    pot.values = GridFunction::zeros(box, d);
    parallel_for(N, [&](std::size_t b, std::size_t e) {
        std::int64_t cidx[3];
        for (std::size_t idx = b; idx < e; ++idx) {
            box.coords_of(idx, cidx);
            kernels::RowArgs args{};
            args.table = table.data();
            args.d = d;
            for (int i = 0; i < d; ++i)
                args.center[i] = static_cast<std::int32_t>(cidx[i]);
            args.center_key =
                parr.keys.empty() ? 0 : pack_key3(cidx, d);
            args.center_value = 0.0;
            args.seed_state = env.seed_state();
            args.law = law;
            args.mode = raw_weights ? kernels::WeightMode::law
                                    : kernels::WeightMode::fluct;
            args.ball_r2 = ball_r2;
            double mom[3] = {0.0, 0.0, 0.0};
            window_runs(padded, cidx, J, [&](std::size_t off, std::size_t len) {
                for (int i = 0; i < d; ++i) args.coords[i] = parr.coords[i].data() + off;
                args.keys = parr.keys.empty() ? nullptr : parr.keys.data() + off;
                args.values = zeros.data() + off;
                args.n = static_cast<std::int64_t>(len);
                kernels::RowAccum acc;
                kern.row_full(args, acc);
                for (int i = 0; i < d; ++i) mom[i] += acc.mom[i];
            });
            for (int i = 0; i < d; ++i) pot.values.at(idx, i) = mom[i];
        }
    });
    return pot;
}

GridFunction apply_full_lattice(const std::optional<Environment>& env,
                                double alpha, Variant variant,
                                const SmoothFunction& g,
                                const LatticeBox& eval_box,
                                std::int64_t window_radius, bool add_tail) {
    check_alpha(alpha, "apply_full_lattice");
    const int d = eval_box.d;
    if (d < 1 || d > 3)
        throw domain_error("apply_full_lattice: d must be 1, 2 or 3");
    if (env && env->dim() != d)
        throw domain_error("apply_full_lattice: environment dimension mismatch");
    if (!g.value) throw domain_error("apply_full_lattice: missing value callback");
    if (variant == Variant::compensated && !g.gradient)
        throw domain_error(
            "apply_full_lattice: compensated variant needs the analytic gradient");
    const std::int64_t k = eval_box.k;
    std::int64_t J = window_radius;
    if (J <= 0) {
        if (!(g.support_radius > 0.0))
            throw domain_error(
                "apply_full_lattice: window_radius required when the support "
                "radius is not set");
        double cnorm = 0.0;
        for (int i = 0; i < d; ++i)
            cnorm += g.support_center[i] * g.support_center[i];
        double need = eval_box.half_width() * std::sqrt(static_cast<double>(d)) +
                      std::sqrt(cnorm) + g.support_radius;
        J = static_cast<std::int64_t>(std::ceil(static_cast<double>(k) * need)) + 2;
    }
    LatticeBox padded = dilate(eval_box, J);
    BoxArrays parr = materialize_box(padded);
    const std::size_t NP = padded.point_count();
    std::vector<double> samples(NP);
    parallel_for(NP, [&](std::size_t b, std::size_t e) {
        std::int64_t jc[3];
        double x[3];
        for (std::size_t p = b; p < e; ++p) {
            padded.coords_of(p, jc);
            for (int i = 0; i < d; ++i)
                x[i] = static_cast<double>(jc[i]) / static_cast<double>(k);
            samples[p] = g.value(x);
        }
    });
    std::vector<double> table = make_kernel_table(d, alpha, d * J * J);
    const bool use_law = variant != Variant::reference && env.has_value();
    kernels::LawParams law = law_params_of(use_law ? env : std::nullopt);
    const double tail0 =
        add_tail ? lattice_total(d, alpha) -
                       lattice_ball_sum(d, alpha, static_cast<double>(J))
                 : 0.0;
    const double pref = std::pow(static_cast<double>(k), alpha);
    const double grad_pref = std::pow(static_cast<double>(k), alpha - 1.0);
    const std::int64_t window_r2 = J * J;
    std::int64_t comp_ball = window_r2;
    if (variant == Variant::compensated && alpha <= 1.0)
        comp_ball = std::min(window_r2, k * k);
    const bool two_pass = variant == Variant::compensated && comp_ball != window_r2;
    const auto& kern = kernels::active();
    const std::size_t N = eval_box.point_count();
    GridFunction out = GridFunction::zeros(eval_box);
    parallel_for(N, [&](std::size_t b, std::size_t e) {
        std::int64_t cidx[3];
        double x[3], grad[3];
        for (std::size_t idx = b; idx < e; ++idx) {
            eval_box.coords_of(idx, cidx);
            for (int i = 0; i < d; ++i)
                x[i] = static_cast<double>(cidx[i]) / static_cast<double>(k);
            const double gx = g.value(x);
            kernels::RowArgs args{};
            args.table = table.data();
            args.d = d;
            for (int i = 0; i < d; ++i)
                args.center[i] = static_cast<std::int32_t>(cidx[i]);
            args.center_key = parr.keys.empty() ? 0 : pack_key3(cidx, d);
            args.center_value = gx;
            args.seed_state = env ? env->seed_state() : 0;
            args.law = law;
            args.mode = use_law ? kernels::WeightMode::law
                                : kernels::WeightMode::unit;
            double diff = 0.0, mom[3] = {0.0, 0.0, 0.0};
            if (variant == Variant::compensated && !two_pass) {
                args.ball_r2 = window_r2;
                window_runs(padded, cidx, J, [&](std::size_t off, std::size_t len) {
                    for (int i = 0; i < d; ++i)
                        args.coords[i] = parr.coords[i].data() + off;
                    args.keys = parr.keys.empty() ? nullptr : parr.keys.data() + off;
                    args.values = samples.data() + off;
                    args.n = static_cast<std::int64_t>(len);
                    kernels::RowAccum acc;
                    kern.row_full(args, acc);
                    diff += acc.diff;
                    for (int i = 0; i < d; ++i) mom[i] += acc.mom[i];
                });
            } else {
                args.ball_r2 = window_r2;
                window_runs(padded, cidx, J, [&](std::size_t off, std::size_t len) {
                    for (int i = 0; i < d; ++i)
                        args.coords[i] = parr.coords[i].data() + off;
                    args.keys = parr.keys.empty() ? nullptr : parr.keys.data() + off;
                    args.values = samples.data() + off;
                    args.n = static_cast<std::int64_t>(len);
                    diff += kern.row_diff(args);
                });
                if (two_pass) {
                    args.ball_r2 = comp_ball;
                    window_runs(padded, cidx, J,
                                    [&](std::size_t off, std::size_t len) {
                        for (int i = 0; i < d; ++i)
                            args.coords[i] = parr.coords[i].data() + off;
                        args.keys =
                            parr.keys.empty() ? nullptr : parr.keys.data() + off;
                        args.values = samples.data() + off;
                        args.n = static_cast<std::int64_t>(len);
                        kernels::RowAccum acc;
                        kern.row_full(args, acc);
                        for (int i = 0; i < d; ++i) mom[i] += acc.mom[i];
                    });
                }
            }
            double result = pref * (diff - gx * tail0);
            if (variant == Variant::compensated) {
                g.gradient(x, grad);
                double dot = 0.0;
                for (int i = 0; i < d; ++i) dot += grad[i] * mom[i];
                result -= grad_pref * dot;
            }
            out.values[idx] = result;
        }
    });
    return out;
}

double generator_compensator_identity_check(const Environment& env,
                                            std::int64_t k, double alpha,
                                            const SmoothFunction& g,
                                            std::int64_t jump_truncation,
                                            std::int64_t potential_truncation) {
    if (!(alpha > 1.0) || !(alpha < 2.0))
        throw domain_error(
            "generator_compensator_identity_check: alpha must lie in (1, 2)");
    if (k < 1)
        throw domain_error("generator_compensator_identity_check: k must be >= 1");
    if (!g.gradient)
        throw domain_error(
            "generator_compensator_identity_check: analytic gradient required");
    std::int64_t R = jump_truncation > 0 ? jump_truncation : 4 * k;
    std::int64_t RP = potential_truncation > 0 ? potential_truncation : R;
    if (RP != R)
        throw domain_error(
            "generator_compensator_identity_check: jump and potential "
            "truncations must match");
    const int d = env.dim();
    LatticeBox eval_box = LatticeBox::create(d, k, 1.0);
    GridFunction Lg = apply_full_lattice(env, alpha, Variant::random, g,
                                         eval_box, R, /*add_tail=*/false);
    GridFunction Lhat = apply_full_lattice(env, alpha, Variant::compensated, g,
                                           eval_box, R, /*add_tail=*/false);
    LatticeBox vbox;
    vbox.d = d;
    vbox.k = 1;
    vbox.n = eval_box.n;
    vbox.center = eval_box.center;
    Potential V = potential_field(env, alpha, vbox, static_cast<double>(R));
    const double grad_pref = std::pow(static_cast<double>(k), alpha - 1.0);
    const std::size_t N = eval_box.point_count();
    double worst = 0.0, scale = 0.0;
    std::int64_t cidx[3];
    double x[3], grad[3];
    for (std::size_t idx = 0; idx < N; ++idx) {
        eval_box.coords_of(idx, cidx);
        for (int i = 0; i < d; ++i)
            x[i] = static_cast<double>(cidx[i]) / static_cast<double>(k);
        g.gradient(x, grad);
        double drift = 0.0;
        for (int i = 0; i < d; ++i) drift += grad[i] * V.values.at(idx, i);
        drift *= grad_pref;
        double res = Lg.values[idx] - Lhat.values[idx] - drift;
        worst = std::max(worst, std::abs(res));
        scale = std::max({scale, std::abs(Lg.values[idx]),
                          std::abs(Lhat.values[idx]), std::abs(drift)});
    }
    return scale > 0.0 ? worst / scale : worst;
}

}  // namespace stablehomog
