#include "stablehomog/reference.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "stablehomog/environment.hpp"
#include "stablehomog/kernels.hpp"
#include "stablehomog/parallel.hpp"
#include "stablehomog/radial.hpp"

namespace stablehomog {

namespace {

constexpr double kPi = 3.14159265358979323846;

void check_alpha(double alpha, const char* who) {
    if (!(alpha > 0.0) || !(alpha < 2.0))
        throw domain_error(std::string(who) + ": alpha must lie in (0, 2)");
}

void check_bump(const SmoothBump& g, const char* who) {
    if (g.d < 1 || g.d > 3)
        throw domain_error(std::string(who) + ": d must be 1, 2 or 3");
    if (!(g.radius > 0.0))
        throw domain_error(std::string(who) + ": bump radius must be positive");
}

double dist_to_center(const SmoothBump& g, const double* x) {
    double s = 0.0;
    for (int i = 0; i < g.d; ++i) {
        double t = x[i] - g.center[i];
        s += t * t;
    }
    return std::sqrt(s);
}

// Near/far split distance from the support.
double split_distance(const SmoothBump& g) {
    return std::max(2.0 * g.radius, 1.0);
}

struct CompChoice {
    bool on = false;
    bool ball_is_unit = false;  // |z| <= 1 (lattice ball K); else full window
};

CompChoice compensator_choice(double alpha, int flag) {
    if (flag == 0) return {false, false};
    if (flag == 1) return {true, true};
    if (alpha > 1.0) return {true, false};
    if (alpha == 1.0) return {true, true};
    return {false, false};
}

kernels::LawParams unit_law() { return {-1.0, 0.0, 1.0, 0.0}; }

// Windowed fine-lattice sum at refinement K around one continuum point x,
// with the exact full-lattice tail -g(x)(T - S(J)). The window ball |w| <= J
// covers the support seen from x, so only the tail leaves the window and the
// tail integrand is the constant -g(x).
double near_point(const SmoothBump& g, const double* x, double alpha,
                  std::int64_t K, const CompChoice& comp) {
    const int d = g.d;
    const std::int64_t J =
        static_cast<std::int64_t>(std::ceil(
            static_cast<double>(K) * (dist_to_center(g, x) + g.radius))) + 2;
    LatticeBox win;
    win.d = d;
    win.k = K;
    win.n = 2 * J + 1;
    double npf = 1.0;
    for (int i = 0; i < d; ++i) npf *= static_cast<double>(win.n);
    if (npf > static_cast<double>(kPaddedPointCap))
        throw resource_error("near-field window too large");
    BoxArrays arr = materialize_box(win);
    const std::size_t NP = win.point_count();
    std::vector<double> samples(NP);
    parallel_for(NP, [&](std::size_t b, std::size_t e) {
        std::int64_t w[3];
        double y[3] = {0.0, 0.0, 0.0};
        for (std::size_t p = b; p < e; ++p) {
            win.coords_of(p, w);
            for (int i = 0; i < d; ++i)
                y[i] = x[i] + static_cast<double>(w[i]) / static_cast<double>(K);
            samples[p] = g.value(y);
        }
    });
    std::vector<double> table = make_kernel_table(d, alpha, d * J * J);
    const double gx = g.value(x);
    kernels::RowArgs args{};
    args.table = table.data();
    for (int i = 0; i < d; ++i) args.coords[i] = arr.coords[i].data();
    args.keys = arr.keys.empty() ? nullptr : arr.keys.data();
    args.values = samples.data();
    args.n = static_cast<std::int64_t>(NP);
    args.d = d;
    std::int64_t zero[3] = {0, 0, 0};
    args.center_key = arr.keys.empty() ? 0 : pack_key3(zero, d);
    args.center_value = gx;
    args.law = unit_law();
    args.mode = kernels::WeightMode::unit;
    const auto& kern = kernels::active();
    const std::int64_t window_r2 = J * J;
    const std::int64_t comp_r2 = comp.ball_is_unit ? K * K : window_r2;
    double diff = 0.0, mom[3] = {0.0, 0.0, 0.0};
    if (comp.on && comp_r2 == window_r2) {
        args.ball_r2 = window_r2;
        kernels::RowAccum acc;
        kern.row_full(args, acc);
        diff = acc.diff;
        for (int i = 0; i < d; ++i) mom[i] = acc.mom[i];
    } else {
        args.ball_r2 = window_r2;
        diff = kern.row_diff(args);
        if (comp.on) {
            args.ball_r2 = comp_r2;
            kernels::RowAccum acc;
            kern.row_full(args, acc);
            for (int i = 0; i < d; ++i) mom[i] = acc.mom[i];
        }
    }
    const double tail =
        lattice_total(d, alpha) - lattice_ball_sum(d, alpha, static_cast<double>(J));
    double value = std::pow(static_cast<double>(K), alpha) * (diff - gx * tail);
    if (comp.on) {
        double grad[3];
        g.gradient(x, grad);
        double dot = 0.0;
        for (int i = 0; i < d; ++i) dot += grad[i] * mom[i];
        value -= std::pow(static_cast<double>(K), alpha - 1.0) * dot;
    }
    return value;
}

// int over the support's bounding cube of g(y) |x-y|^{-d-alpha} dy by a
// tensor Gauss-Legendre rule with n points per axis.
double far_gauss(const SmoothBump& g, const double* x, double alpha, int n) {
    const int d = g.d;
    auto [nodes, weights] = gauss_legendre(n);
    const double r = g.radius;
    auto kern = [&](const double* y) {
        double s = 0.0;
        for (int i = 0; i < d; ++i) {
            double t = y[i] - x[i];
            s += t * t;
        }
        return g.value(y) * std::pow(s, -0.5 * (d + alpha));
    };
    double total = 0.0;
    double y[3] = {0.0, 0.0, 0.0};
    if (d == 1) {
        for (int i = 0; i < n; ++i) {
            y[0] = g.center[0] + r * nodes[i];
            total += weights[i] * kern(y);
        }
        return total * r;
    }
    if (d == 2) {
        for (int i = 0; i < n; ++i) {
            y[0] = g.center[0] + r * nodes[i];
            double row = 0.0;
            for (int j = 0; j < n; ++j) {
                y[1] = g.center[1] + r * nodes[j];
                row += weights[j] * kern(y);
            }
            total += weights[i] * row;
        }
        return total * r * r;
    }
    for (int i = 0; i < n; ++i) {
        y[0] = g.center[0] + r * nodes[i];
        double plane = 0.0;
        for (int j = 0; j < n; ++j) {
            y[1] = g.center[1] + r * nodes[j];
            double row = 0.0;
            for (int l = 0; l < n; ++l) {
                y[2] = g.center[2] + r * nodes[l];
                row += weights[l] * kern(y);
            }
            plane += weights[j] * row;
        }
        total += weights[i] * plane;
    }
    return total * r * r * r;
}

// Far-field value with the internal n vs n+16 consistency check.
double far_checked(const SmoothBump& g, const double* x, double alpha,
                   const RefQuadrature& quad, double* est_out) {
    double coarse = far_gauss(g, x, alpha, quad.gauss_points);
    double fine = far_gauss(g, x, alpha, quad.gauss_points + 16);
    double est = std::abs(fine - coarse);
    if (est_out) *est_out = est;
    if (est > quad.tol * std::max(1.0, std::abs(fine)))
        throw accuracy_error("far-field quadrature self-check failed", est);
    return fine;
}

void check_quad(const RefQuadrature& quad, const char* who) {
    if (quad.K_ref < 2)
        throw domain_error(std::string(who) + ": refinement must be >= 2");
    if (quad.gauss_points < 4)
        throw domain_error(std::string(who) + ": quadrature rule too small");
    if (!(quad.tol > 0.0))
        throw domain_error(std::string(who) + ": tolerance must be positive");
}

}  // namespace

double SmoothBump::value(const double* x) const {
    double s = 0.0;
    for (int i = 0; i < d; ++i) {
        double t = x[i] - center[i];
        s += t * t;
    }
    double u = s / (radius * radius);
    if (u >= 1.0) return 0.0;
    return amplitude * std::exp(1.0 - 1.0 / (1.0 - u));
}

void SmoothBump::gradient(const double* x, double* out) const {
    double s = 0.0;
    for (int i = 0; i < d; ++i) {
        double t = x[i] - center[i];
        s += t * t;
    }
    double u = s / (radius * radius);
    if (u >= 1.0) {
        for (int i = 0; i < d; ++i) out[i] = 0.0;
        return;
    }
    double v = amplitude * std::exp(1.0 - 1.0 / (1.0 - u));
    double q = 1.0 - u;
    double factor = -v * 2.0 / (radius * radius * q * q);
    for (int i = 0; i < d; ++i) out[i] = factor * (x[i] - center[i]);
}

SmoothFunction SmoothBump::as_function() const {
    SmoothBump copy = *this;
    SmoothFunction f;
    f.value = [copy](const double* x) { return copy.value(x); };
    f.gradient = [copy](const double* x, double* out) { copy.gradient(x, out); };
    f.support_radius = radius;
    f.support_center = center;
    return f;
}

double frac_generator_apply(const SmoothBump& g, const double* x, double alpha,
                            const RefQuadrature& quad, double* accuracy_out) {
    check_alpha(alpha, "frac_generator_apply");
    check_bump(g, "frac_generator_apply");
    check_quad(quad, "frac_generator_apply");
    const double dist = dist_to_center(g, x) - g.radius;
    if (dist >= split_distance(g)) {
        double est = 0.0;
        double v = far_checked(g, x, alpha, quad, &est);
        if (accuracy_out) *accuracy_out = est;
        return v;
    }
    CompChoice comp = compensator_choice(alpha, quad.compensator);
    double v = near_point(g, x, alpha, quad.K_ref, comp);
    if (accuracy_out) {
        if (quad.K_ref % 2 != 0)
            throw domain_error(
                "frac_generator_apply: refinement must be even for the "
                "half-resolution estimate");
        double vh = near_point(g, x, alpha, quad.K_ref / 2, comp);
        *accuracy_out = std::abs(v - vh);
    }
    return v;
}

GridFunction continuum_generator_on_box(const SmoothBump& g, double alpha,
                                        const LatticeBox& box,
                                        const RefQuadrature& quad) {
    check_alpha(alpha, "continuum_generator_on_box");
    check_bump(g, "continuum_generator_on_box");
    check_quad(quad, "continuum_generator_on_box");
    if (g.d != box.d)
        throw domain_error("continuum_generator_on_box: dimension mismatch");
    const std::int64_t K = quad.K_ref;
    if (K % box.k != 0)
        throw domain_error(
            "continuum_generator_on_box: refinement must be a multiple of the "
            "box scale");
    const std::int64_t stride = K / box.k;
    const int d = box.d;
    const std::size_t N = box.point_count();
    const double dsplit = split_distance(g);
    // Classify points and find the largest near-field window.
    std::vector<unsigned char> near(N, 0);
    double max_dc = 0.0;
    bool any_near = false;
    {
        std::int64_t jc[3];
        double x[3];
        for (std::size_t idx = 0; idx < N; ++idx) {
            box.coords_of(idx, jc);
            for (int i = 0; i < d; ++i)
                x[i] = static_cast<double>(jc[i]) / static_cast<double>(box.k);
            double dc = dist_to_center(g, x);
            if (dc - g.radius < dsplit) {
                near[idx] = 1;
                any_near = true;
                max_dc = std::max(max_dc, dc);
            }
        }
    }
    GridFunction out = GridFunction::zeros(box);
    const CompChoice comp = compensator_choice(alpha, quad.compensator);
    std::int64_t J = 0;
    LatticeBox padded;
    BoxArrays parr;
    std::vector<double> samples;
    std::vector<double> table;
    double tail = 0.0;
    if (any_near) {
        J = static_cast<std::int64_t>(std::ceil(
                static_cast<double>(K) * (max_dc + g.radius))) + 2;
        LatticeBox fine;
        fine.d = d;
        fine.k = K;
        fine.n = box.n * stride;
        for (int i = 0; i < d; ++i) fine.center[i] = box.center[i] * stride;
        padded = dilate(fine, J);
        parr = materialize_box(padded);
        const std::size_t NP = padded.point_count();
        samples.resize(NP);
        parallel_for(NP, [&](std::size_t b, std::size_t e) {
            std::int64_t jc[3];
            double y[3] = {0.0, 0.0, 0.0};
            for (std::size_t p = b; p < e; ++p) {
                padded.coords_of(p, jc);
                for (int i = 0; i < d; ++i)
                    y[i] = static_cast<double>(jc[i]) / static_cast<double>(K);
                samples[p] = g.value(y);
            }
        });
        table = make_kernel_table(d, alpha, d * J * J);
        tail = lattice_total(d, alpha) -
               lattice_ball_sum(d, alpha, static_cast<double>(J));
    }
    const double pref = std::pow(static_cast<double>(K), alpha);
    const double grad_pref = std::pow(static_cast<double>(K), alpha - 1.0);
    const std::int64_t window_r2 = J * J;
    const std::int64_t comp_r2 = comp.ball_is_unit ? K * K : window_r2;
    const auto& kern = kernels::active();
    parallel_for(N, [&](std::size_t b, std::size_t e) {
        std::int64_t jc[3], fc[3];
        double x[3], grad[3];
        for (std::size_t idx = b; idx < e; ++idx) {
            box.coords_of(idx, jc);
            for (int i = 0; i < d; ++i)
                x[i] = static_cast<double>(jc[i]) / static_cast<double>(box.k);
            if (!near[idx]) {
                out.values[idx] = far_checked(g, x, alpha, quad, nullptr);
                continue;
            }
            for (int i = 0; i < d; ++i) fc[i] = jc[i] * stride;
            const double gx = g.value(x);
            kernels::RowArgs args{};
            args.table = table.data();
            args.d = d;
            for (int i = 0; i < d; ++i)
                args.center[i] = static_cast<std::int32_t>(fc[i]);
            args.center_key = parr.keys.empty() ? 0 : pack_key3(fc, d);
            args.center_value = gx;
            args.law = unit_law();
            args.mode = kernels::WeightMode::unit;
            double diff = 0.0, mom[3] = {0.0, 0.0, 0.0};
            if (comp.on && comp_r2 == window_r2) {
                args.ball_r2 = window_r2;
                window_runs(padded, fc, J, [&](std::size_t off, std::size_t len) {
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
                window_runs(padded, fc, J, [&](std::size_t off, std::size_t len) {
                    for (int i = 0; i < d; ++i)
                        args.coords[i] = parr.coords[i].data() + off;
                    args.keys = parr.keys.empty() ? nullptr : parr.keys.data() + off;
                    args.values = samples.data() + off;
                    args.n = static_cast<std::int64_t>(len);
                    diff += kern.row_diff(args);
                });
                if (comp.on) {
                    args.ball_r2 = comp_r2;
                    window_runs(padded, fc, J,
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
            double value = pref * (diff - gx * tail);
            if (comp.on) {
                g.gradient(x, grad);
                double dot = 0.0;
                for (int i = 0; i < d; ++i) dot += grad[i] * mom[i];
                value -= grad_pref * dot;
            }
            out.values[idx] = value;
        }
    });
    return out;
}

TestFunction make_test_function(const SmoothBump& g, double lambda,
                                double alpha, const LatticeBox& box,
                                const RefQuadrature& quad) {
    if (!(lambda > 0.0))
        throw domain_error("make_test_function: lambda must be positive");
    if (quad.K_ref % (2 * box.k) != 0)
        throw domain_error(
            "make_test_function: refinement must be an even multiple of the "
            "box scale");
    GridFunction lg = continuum_generator_on_box(g, alpha, box, quad);
    RefQuadrature half = quad;
    half.K_ref = quad.K_ref / 2;
    GridFunction lg_half = continuum_generator_on_box(g, alpha, box, half);
    const std::size_t N = box.point_count();
    TestFunction tf;
    tf.g = g;
    tf.lambda = lambda;
    tf.alpha = alpha;
    tf.f = GridFunction::zeros(box);
    tf.u_exact = GridFunction::zeros(box);
    double acc = 0.0;
    std::int64_t jc[3];
    double x[3];
    for (std::size_t idx = 0; idx < N; ++idx) {
        box.coords_of(idx, jc);
        for (int i = 0; i < box.d; ++i)
            x[i] = static_cast<double>(jc[i]) / static_cast<double>(box.k);
        double gx = g.value(x);
        tf.u_exact.values[idx] = gx;
        tf.f.values[idx] = lambda * gx - lg.values[idx];
        acc = std::max(acc, std::abs(lg.values[idx] - lg_half.values[idx]));
    }
    tf.accuracy = acc;
    return tf;
}

namespace {

// Mean of cos(s <e1, theta>) over the unit sphere.
double angular_cos_avg(int d, double s) {
    if (d == 1) return std::cos(s);
    if (d == 2) return std::cyl_bessel_j(0.0, s);
    if (s == 0.0) return 1.0;
    return std::sin(s) / s;
}

// k-th positive zero of the angular average (McMahon expansion for J0).
double angular_zero(int d, int k) {
    if (d == 1) return kPi * (static_cast<double>(k) - 0.5);
    if (d == 3) return kPi * static_cast<double>(k);
    double b = (static_cast<double>(k) - 0.25) * kPi;
    return b + 1.0 / (8.0 * b);
}

}  // namespace

double symbol_constant(int d, double alpha, double tol) {
    double xi[3] = {1.0, 0.0, 0.0};
    return symbol_value(d, alpha, xi, tol);
}

double symbol_value(int d, double alpha, const double* xi, double tol) {
    check_alpha(alpha, "symbol_value");
    if (d < 1 || d > 3) throw domain_error("symbol_value: d must be 1, 2 or 3");
    if (!(tol > 0.0)) throw domain_error("symbol_value: tolerance must be positive");
    double u2 = 0.0;
    for (int i = 0; i < d; ++i) u2 += xi[i] * xi[i];
    const double u = std::sqrt(u2);
    if (!(u > 0.0)) throw domain_error("symbol_value: xi must be nonzero");
    const double sigma = sphere_surface(d);
    // Head: int_0^1 r^{-1-alpha} sigma (1 - C(ur)) dr by the sphere-moment
    // series of the cosine average, 1 - C(s) = sum_j (-1)^{j+1} M_{2j}
    // s^{2j} / (2j)! with M_{2j} the 2j-th coordinate moment.
    double head = 0.0;
    {
        double pw = 1.0;      // u^{2j} / (2j)!
        double moment = 1.0;  // M_{2j}
        double sign = 1.0;
        for (int j = 1; j <= 200; ++j) {
            pw *= u * u / static_cast<double>((2 * j - 1) * (2 * j));
            moment *= static_cast<double>(2 * j - 1) /
                      static_cast<double>(d + 2 * j - 2);
            double term = sign * moment * pw / (static_cast<double>(2 * j) - alpha);
            head += term;
            sign = -sign;
            if (j > 3 && std::abs(term) < tol * 1e-4) break;
        }
        head *= sigma;
    }
    // Tail: sigma/alpha minus the oscillatory integral of r^{-1-alpha} C(ur)
    // over [1, inf). Half-wave chunks between consecutive zeros of C form an
    // (asymptotically) alternating sequence; repeated averaging of the
    // partial sums (Euler transform) extrapolates the remainder.
    auto integrand = [&](double r) {
        return std::pow(r, -1.0 - alpha) * angular_cos_avg(d, u * r);
    };
    static const auto rule = gauss_legendre(16);
    auto segment = [&](double a, double b) {
        double mid = 0.5 * (a + b), hw = 0.5 * (b - a);
        double s = 0.0;
        for (std::size_t i = 0; i < rule.first.size(); ++i)
            s += rule.second[i] * integrand(mid + hw * rule.first[i]);
        return s * hw;
    };
    int k0 = 1;
    while (angular_zero(d, k0) / u <= 1.0) ++k0;
    double osc = segment(1.0, angular_zero(d, k0) / u);
    const int kWaves = 96;
    std::vector<double> partial(kWaves);
    double run = 0.0;
    for (int w = 0; w < kWaves; ++w) {
        double a = angular_zero(d, k0 + w) / u;
        double b = angular_zero(d, k0 + w + 1) / u;
        run += segment(a, b);
        partial[w] = run;
    }
    for (int len = kWaves; len > 1; --len)
        for (int i = 0; i + 1 < len; ++i)
            partial[i] = 0.5 * (partial[i] + partial[i + 1]);
    osc += partial[0];
    return head + sigma / alpha - sigma * osc;
}

}  // namespace stablehomog
