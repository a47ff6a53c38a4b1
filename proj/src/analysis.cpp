#include "stablehomog/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace stablehomog {

const char* to_string(Status s) {
    return s == Status::ok ? "ok" : "censored";
}

const char* to_string(DiffKind w) {
    switch (w) {
        case DiffKind::ref_vs_continuum: return "ref_vs_continuum";
        case DiffKind::hat_vs_ref: return "hat_vs_ref";
        default: return "random_vs_ref";
    }
}

namespace {

LatticeBox dyadic_box(int d, int m, const std::int64_t* center = nullptr) {
    std::int64_t zero[3] = {0, 0, 0};
    return LatticeBox::create_centered(
        d, 1, static_cast<double>(std::int64_t(1) << m),
        center ? center : zero);
}

bool same_point(const std::int64_t* a, const std::int64_t* b, int d) {
    for (int i = 0; i < d; ++i)
        if (a[i] != b[i]) return false;
    return true;
}

SolveOptions with_circulant(const SolveOptions& opt, const LatticeBox& box) {
    SolveOptions o = opt;
    if (o.precond == Precond::none && circulant_supported(box))
        o.precond = Precond::circulant;
    return o;
}

}  // namespace

double common_neighbor_density(const Environment& env, const std::int64_t* x1,
                               const std::int64_t* x2, const std::int64_t* y,
                               std::int64_t r, double delta) {
    const int d = env.dim();
    if (same_point(x1, x2, d))
        throw domain_error("common_neighbor_density: the two base points coincide");
    if (r < 1) throw domain_error("common_neighbor_density: r must be >= 1");
    LatticeBox box = LatticeBox::create_centered(d, 1, static_cast<double>(r), y);
    const std::size_t N = box.point_count();
    std::int64_t z[3];
    std::size_t hits = 0;
    for (std::size_t idx = 0; idx < N; ++idx) {
        box.coords_of(idx, z);
        if (same_point(z, x1, d) || same_point(z, x2, d)) continue;
        if (env.conductance(x1, z) > delta && env.conductance(x2, z) > delta)
            ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(N);
}

PoincareRecord poincare_statistic(const Environment& env, double alpha,
                                  std::int64_t r, const std::int64_t* y,
                                  double tol, const SolveOptions& inner) {
    if (r < 2) throw domain_error("poincare_statistic: r must be >= 2");
    LatticeBox box = LatticeBox::create_centered(env.dim(), 1,
                                                 static_cast<double>(r), y);
    NonlocalOperator op(env, box, Variant::random, Boundary::restricted, alpha);
    GapResult gap = smallest_nonzero_eigenvalue(op, tol, with_circulant(inner, box));
    PoincareRecord rec;
    rec.r = r;
    rec.gap = gap.value;
    rec.box_size = static_cast<std::int64_t>(box.point_count());
    rec.zero_gap = gap.zero_gap;
    if (gap.zero_gap) {
        rec.statistic = std::numeric_limits<double>::infinity();
    } else {
        rec.statistic = std::pow(static_cast<double>(r),
                                 static_cast<double>(env.dim()) - alpha) /
                        (gap.value * static_cast<double>(rec.box_size));
    }
    return rec;
}

MultiscaleSides multiscale_poincare_check(const Environment& env, double alpha,
                                          int m, int n, const GridFunction& f,
                                          const GridFunction& g) {
    if (n < 0 || n > m)
        throw domain_error("multiscale_poincare_check: need 0 <= n <= m");
    const int d = env.dim();
    LatticeBox whole = dyadic_box(d, m);
    if (!(f.box == whole) || !(g.box == whole))
        throw domain_error("multiscale_poincare_check: f, g must live on B_{2^m}");
    if (f.ncomp != 1 || g.ncomp != 1)
        throw domain_error("multiscale_poincare_check: scalar f, g expected");
    const std::size_t N = whole.point_count();
    MultiscaleSides out;
    const double gbar = g.mean();
    double lhs = 0.0;
    for (std::size_t i = 0; i < N; ++i) lhs += f.values[i] * (g.values[i] - gbar);
    out.lhs = lhs;

    DyadicDecomposition dec = DyadicDecomposition::create(d, m, n);
    double block = 0.0;
    std::int64_t jc[3];
    for (std::size_t ci = 0; ci < dec.centers.size(); ++ci) {
        LatticeBox cell = dec.cell(ci);
        const double gcell = average_over(g, cell);
        const std::size_t M = cell.point_count();
        for (std::size_t p = 0; p < M; ++p) {
            cell.coords_of(p, jc);
            std::size_t idx = whole.index_of(jc);
            block += f.values[idx] * (g.values[idx] - gcell);
        }
    }
    out.block_term = block;

    const double energy = dirichlet_energy(env, whole, g, alpha);
    double scale_sum = 0.0;
    for (int k = n; k < m; ++k) {
        DyadicDecomposition deck = DyadicDecomposition::create(d, m, k);
        double sq = 0.0;
        for (std::size_t ci = 0; ci < deck.centers.size(); ++ci) {
            double a = average_over(f, deck.cell(ci));
            sq += a * a;
        }
        scale_sum += std::pow(2.0, 0.5 * k * (d + alpha)) * std::sqrt(sq);
    }
    out.energy_factor = std::sqrt(energy) * scale_sum;
    out.empirical_constant =
        out.energy_factor > 0.0 ? (out.lhs - out.block_term) / out.energy_factor
                                : 0.0;
    return out;
}

std::vector<CorrectorScanRecord> corrector_energy_scan(
    const Environment& env, double alpha, const std::vector<int>& m_values,
    bool truncated, const SolveOptions& opt) {
    if (!truncated && !(alpha > 1.0 && alpha < 2.0))
        throw domain_error(
            "corrector_energy_scan: the untruncated potential needs alpha in "
            "(1,2); use the truncated scan otherwise");
    const int d = env.dim();
    std::vector<CorrectorScanRecord> out;
    out.reserve(m_values.size());
    for (int m : m_values) {
        if (m < 1) throw domain_error("corrector_energy_scan: m must be >= 1");
        LatticeBox box = dyadic_box(d, m);
        const double R_V = static_cast<double>(std::int64_t(1) << (m + 2));
        std::optional<double> trunc;
        if (truncated) trunc = static_cast<double>(std::int64_t(1) << m);
        Potential V = potential_field(env, alpha, box, R_V, trunc);
        GridFunction rhs = V.values;
        for (double& t : rhs.values) t = -t;
        NonlocalOperator op(env, box, Variant::random, Boundary::restricted,
                            alpha);
        CorrectorScanRecord rec;
        rec.m = m;
        try {
            CorrectorField cf =
                solve_poisson_meanzero(op, rhs, with_circulant(opt, box));
            rec.energy = cf.energy;
            rec.iterations = cf.report.iterations;
            double expo = (truncated && alpha < 1.0)
                              ? static_cast<double>(m) *
                                    (d + 2.0 * (1.0 - alpha))
                              : static_cast<double>(m) * d;
            rec.normalized = cf.energy / std::pow(2.0, expo);
        } catch (const solver_error&) {
            rec.status = Status::censored;
        }
        out.push_back(rec);
    }
    return out;
}

std::vector<ConcentrationRecord> block_average_concentration(
    const Environment& env, double alpha, int m,
    const std::vector<int>& k_values, double theta) {
    const int d = env.dim();
    if (!(static_cast<double>(d) > alpha))
        throw domain_error("block_average_concentration: requires d > alpha");
    if (!(theta > alpha / d) || !(theta < 1.0))
        throw domain_error(
            "block_average_concentration: theta must lie in (alpha/d, 1)");
    if (m < 0) throw domain_error("block_average_concentration: m must be >= 0");
    LatticeBox box = dyadic_box(d, m);
    Potential V = potential_field(env, alpha, box,
                                  static_cast<double>(std::int64_t(1) << m));
    std::vector<ConcentrationRecord> out;
    out.reserve(k_values.size());
    for (int k : k_values) {
        if (k < 0 || k > m)
            throw domain_error("block_average_concentration: need 0 <= k <= m");
        DyadicDecomposition dec = DyadicDecomposition::create(d, m, k);
        double stat = 0.0;
        for (std::size_t ci = 0; ci < dec.centers.size(); ++ci) {
            LatticeBox cell = dec.cell(ci);
            for (int c = 0; c < d; ++c) {
                double a = average_over(V.values, cell, c);
                stat += a * a;
            }
        }
        ConcentrationRecord rec;
        rec.m = m;
        rec.k_sub = k;
        rec.statistic = stat;
        rec.bound = std::pow(2.0, static_cast<double>((m - k) * d) -
                                      theta * static_cast<double>(k * d));
        rec.theta = theta;
        out.push_back(rec);
    }
    return out;
}

DiffRecord operator_difference_norm(const Environment& env, double alpha,
                                    std::int64_t k, DiffKind which,
                                    const SmoothBump& g, int K_ref) {
    if (k < 1) throw domain_error("operator_difference_norm: k must be >= 1");
    if (which == DiffKind::random_vs_ref && alpha >= 1.0)
        throw domain_error(
            "operator_difference_norm: random_vs_ref carries a rate only "
            "under the alpha in (0,1) hypothesis");
    LatticeBox box = LatticeBox::create(g.d, k, 2.0);
    SmoothFunction fn = g.as_function();
    GridFunction a, b;
    if (which == DiffKind::ref_vs_continuum) {
        a = apply_full_lattice(std::nullopt, alpha, Variant::reference, fn, box);
        RefQuadrature quad;
        quad.K_ref = K_ref > 0 ? K_ref : static_cast<int>(4 * k);
        if (quad.K_ref % box.k != 0)
            throw domain_error(
                "operator_difference_norm: K_ref must be a multiple of k");
        b = continuum_generator_on_box(g, alpha, box, quad);
    } else {
        Variant v = which == DiffKind::hat_vs_ref ? Variant::compensated
                                                  : Variant::random;
        a = apply_full_lattice(env, alpha, v, fn, box);
        b = apply_full_lattice(std::nullopt, alpha, Variant::reference, fn, box);
    }
    double dist = l2_distance(a, b);
    DiffRecord rec;
    rec.k = k;
    rec.which = which;
    rec.sq_norm = dist * dist;
    return rec;
}

TwoScaleResult two_scale_diagnostic(const Environment& env, double alpha,
                                    std::int64_t k, const SmoothBump& g,
                                    double lambda, const SolveOptions& opt) {
    if (!(alpha > 1.0 && alpha < 2.0))
        throw domain_error(
            "two_scale_diagnostic: the corrector exists only for alpha in "
            "(1,2)");
    if (k < 1) throw domain_error("two_scale_diagnostic: k must be >= 1");
    if (!(lambda > 0.0))
        throw domain_error("two_scale_diagnostic: lambda must be positive");
    const int d = env.dim();
    int m = 0;
    while ((std::int64_t(1) << (m + 1)) <= k) ++m;
    const int mc = m + 2;

    LatticeBox box = LatticeBox::create(d, k, 2.0);
    RefQuadrature quad;
    quad.K_ref = static_cast<int>(8 * k);
    TestFunction tf = make_test_function(g, lambda, alpha, box, quad);
    NonlocalOperator op_k(env, box, Variant::random, Boundary::killed, alpha);
    GridFunction u_k =
        solve_resolvent(op_k, lambda, tf.f, with_circulant(opt, box)).first;

    LatticeBox cbox = dyadic_box(d, mc);
    Potential V = potential_field(
        env, alpha, cbox, static_cast<double>(std::int64_t(1) << (mc + 2)));
    GridFunction rhs = V.values;
    for (double& t : rhs.values) t = -t;
    NonlocalOperator op_c(env, cbox, Variant::random, Boundary::restricted,
                          alpha);
    CorrectorField phi = solve_poisson_meanzero(op_c, rhs, with_circulant(opt, cbox));

    GridFunction v = GridFunction::zeros(box);
    const std::size_t N = box.point_count();
    std::int64_t jc[3];
    double x[3], grad[3];
    for (std::size_t idx = 0; idx < N; ++idx) {
        box.coords_of(idx, jc);
        for (int i = 0; i < d; ++i)
            x[i] = static_cast<double>(jc[i]) / static_cast<double>(k);
        g.gradient(x, grad);
        std::size_t ci = cbox.index_of(jc);
        double corr = 0.0;
        for (int i = 0; i < d; ++i) corr += grad[i] * phi.values.at(ci, i);
        v.values[idx] = tf.u_exact.values[idx] +
                        corr / static_cast<double>(k);
    }
    TwoScaleResult res;
    res.m = m;
    res.v_vs_u = l2_distance(v, tf.u_exact);
    res.resolvent_vs_v = l2_distance(u_k, v);
    res.corrector_energy = phi.energy;
    res.test_accuracy = tf.accuracy;
    return res;
}

}  // namespace stablehomog
