#include "stablehomog/solvers.hpp"

#include <chrono>
#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include "stablehomog/fft.hpp"
#include "stablehomog/parallel.hpp"

namespace stablehomog {

namespace {

using Clock = std::chrono::steady_clock;

double wall_ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

double det_sum(const std::vector<double>& v) {
    return deterministic_sum(v.size(), [&](std::size_t i) { return v[i]; });
}

void project_mean(std::vector<double>& v) {
    double m = det_sum(v) / static_cast<double>(v.size());
    for (double& x : v) x -= m;
}

struct Preconditioner {
    Precond kind = Precond::none;
    std::vector<double> inv_diag;  // jacobi
    std::vector<double> inv_eig;   // circulant, FFT basis
    std::size_t side = 0;
    int d = 1;

    void apply(const std::vector<double>& r, std::vector<double>& z) const {
        const std::size_t N = r.size();
        if (kind == Precond::none) {
            z = r;
            return;
        }
        if (kind == Precond::jacobi) {
            z.resize(N);
            for (std::size_t i = 0; i < N; ++i) z[i] = r[i] * inv_diag[i];
            return;
        }
        std::vector<std::complex<double>> buf(N);
        for (std::size_t i = 0; i < N; ++i) buf[i] = r[i];
        fft_nd(buf.data(), side, d, false);
        for (std::size_t i = 0; i < N; ++i) buf[i] *= inv_eig[i];
        fft_nd(buf.data(), side, d, true);
        z.resize(N);
        for (std::size_t i = 0; i < N; ++i) z[i] = buf[i].real();
    }
};

Preconditioner make_precond(const NonlocalOperator& op, double lambda,
                            Precond kind) {
    Preconditioner P;
    P.kind = kind;
    if (kind == Precond::jacobi) {
        std::vector<double> diag = op.diagonal();
        P.inv_diag.resize(diag.size());
        for (std::size_t i = 0; i < diag.size(); ++i) {
            double v = lambda + diag[i];
            P.inv_diag[i] = v > 1e-300 ? 1.0 / v : 1.0;
        }
    } else if (kind == Precond::circulant) {
        std::vector<double> sym = op.circulant_symbol();
        P.inv_eig.resize(sym.size());
        for (std::size_t i = 0; i < sym.size(); ++i) {
            double v = lambda + sym[i];
            P.inv_eig[i] = v > 1e-300 ? 1.0 / v : 0.0;
        }
        P.side = static_cast<std::size_t>(op.box().n);
        P.d = op.box().d;
    }
    return P;
}

struct CGOutcome {
    int iterations = 0;
    double rel_res = 0.0;
    bool converged = false;
    bool stagnated = false;
};

// Preconditioned conjugate gradients; with project everything (x, r, z) is
// kept mean-zero every iteration so the singular constant mode never enters.
CGOutcome pcg(const std::function<void(const std::vector<double>&,
                                       std::vector<double>&)>& apply_A,
              const std::vector<double>& b_in, std::vector<double>& x,
              double tol, int maxit, const Preconditioner& P, bool project) {
    const std::size_t N = b_in.size();
    std::vector<double> b = b_in;
    if (project) project_mean(b);
    x.assign(N, 0.0);
    std::vector<double> r = b, z, p, Ap;
    double bnorm = std::sqrt(det_sumsq(b.data(), N));
    CGOutcome out;
    if (bnorm == 0.0) {
        out.converged = true;
        return out;
    }
    P.apply(r, z);
    if (project) project_mean(z);
    p = z;
    double rz = det_dot(r.data(), z.data(), N);
    double res = 1.0;
    double best = 1.0;
    int best_it = 0;
    for (int it = 1; it <= maxit; ++it) {
        apply_A(p, Ap);
        if (project) project_mean(Ap);
        double pAp = det_dot(p.data(), Ap.data(), N);
        out.iterations = it;
        if (!(pAp > 0.0)) {
            out.rel_res = res;
            out.stagnated = true;
            return out;
        }
        double alpha = rz / pAp;
        for (std::size_t i = 0; i < N; ++i) x[i] += alpha * p[i];
        for (std::size_t i = 0; i < N; ++i) r[i] -= alpha * Ap[i];
        if (project) {
            project_mean(x);
            project_mean(r);
        }
        res = std::sqrt(det_sumsq(r.data(), N)) / bnorm;
        out.rel_res = res;
        if (res <= tol) {
            out.converged = true;
            return out;
        }
        if (res < 0.999 * best) {
            best = res;
            best_it = it;
        } else if (it - best_it > 80) {
            out.stagnated = true;
            return out;
        }
        P.apply(r, z);
        if (project) project_mean(z);
        double rz2 = det_dot(r.data(), z.data(), N);
        double beta = rz2 / rz;
        rz = rz2;
        for (std::size_t i = 0; i < N; ++i) p[i] = z[i] + beta * p[i];
    }
    return out;
}

int auto_maxit(std::size_t N, int requested) {
    if (requested > 0) return requested;
    return static_cast<int>(10.0 * std::sqrt(static_cast<double>(N))) + 200;
}

}  // namespace

bool circulant_supported(const LatticeBox& box) {
    return is_power_of_two(static_cast<std::size_t>(box.n));
}

std::pair<GridFunction, SolveReport> solve_resolvent(const NonlocalOperator& op,
                                                     double lambda,
                                                     const GridFunction& f,
                                                     const SolveOptions& opt) {
    if (!(lambda > 0.0)) throw domain_error("solve_resolvent: lambda must be > 0");
    if (!(opt.tol > 0.0)) throw domain_error("solve_resolvent: tol must be > 0");
    if (!(f.box == op.box()) || f.ncomp != 1)
        throw domain_error("solve_resolvent: rhs grid mismatch");
    auto t0 = Clock::now();
    const std::size_t N = op.box().point_count();
    const int maxit = auto_maxit(N, opt.max_iterations);
    Preconditioner P = make_precond(op, lambda, opt.precond);
    GridFunction work = GridFunction::zeros(op.box());
    auto apply_A = [&](const std::vector<double>& v, std::vector<double>& out) {
        work.values = v;
        GridFunction Lv = op.apply(work);
        out.resize(N);
        for (std::size_t i = 0; i < N; ++i) out[i] = lambda * v[i] - Lv.values[i];
    };
    std::vector<double> x;
    CGOutcome cg = pcg(apply_A, f.values, x, opt.tol, maxit, P, false);
    SolveReport rep{cg.iterations, cg.rel_res, opt.tol, wall_ms_since(t0)};
    if (!cg.converged)
        throw solver_error("solve_resolvent: no convergence after " +
                           std::to_string(rep.iterations) +
                           " iterations (relative residual " +
                           std::to_string(rep.relative_residual) + ")");
    GridFunction u = GridFunction::zeros(op.box());
    u.values = std::move(x);
    return {std::move(u), rep};
}

CorrectorField solve_poisson_meanzero(const NonlocalOperator& op,
                                      const GridFunction& rhs,
                                      const SolveOptions& opt) {
    if (op.boundary() != Boundary::restricted)
        throw domain_error("solve_poisson_meanzero: operator must be restricted");
    if (op.box().k != 1)
        throw domain_error("solve_poisson_meanzero: corrector boxes live on Z^d");
    if (!(rhs.box == op.box()))
        throw domain_error("solve_poisson_meanzero: rhs grid mismatch");
    if (!(opt.tol > 0.0)) throw domain_error("solve_poisson_meanzero: tol must be > 0");
    const std::size_t n = static_cast<std::size_t>(op.box().n);
    if (!is_power_of_two(n))
        throw domain_error("solve_poisson_meanzero: box side must be 2^(m+1)");
    auto t0 = Clock::now();
    int m = 0;
    while ((std::size_t(1) << (m + 1)) < n) ++m;
    const std::size_t N = op.box().point_count();
    const int maxit = auto_maxit(N, opt.max_iterations);
    Preconditioner P = make_precond(op, 0.0, opt.precond);
    GridFunction work = GridFunction::zeros(op.box());
    auto apply_A = [&](const std::vector<double>& v, std::vector<double>& out) {
        work.values = v;
        GridFunction Lv = op.apply(work);
        out = std::move(Lv.values);
        for (std::size_t i = 0; i < N; ++i) out[i] = -out[i];
    };
    CorrectorField field;
    field.m = m;
    field.values = GridFunction::zeros(op.box(), rhs.ncomp);
    field.report.tolerance = opt.tol;
    for (int c = 0; c < rhs.ncomp; ++c) {
        // Solve (-L) phi = -(rhs - mean rhs) componentwise.
        std::vector<double> b(rhs.comp_data(c), rhs.comp_data(c) + N);
        double mean = det_sum(b) / static_cast<double>(N);
        for (double& v : b) v = -(v - mean);
        std::vector<double> x;
        CGOutcome cg = pcg(apply_A, b, x, opt.tol, maxit, P, true);
        field.report.iterations += cg.iterations;
        field.report.relative_residual =
            std::max(field.report.relative_residual, cg.rel_res);
        if (cg.stagnated)
            throw solver_error(
                "solve_poisson_meanzero: residual stagnated (weighted graph "
                "disconnected) in component " + std::to_string(c) + " after " +
                std::to_string(cg.iterations) + " iterations");
        if (!cg.converged)
            throw solver_error("solve_poisson_meanzero: no convergence in component " +
                               std::to_string(c) + " after " +
                               std::to_string(cg.iterations) + " iterations");
        for (std::size_t i = 0; i < N; ++i) field.values.at(i, c) = x[i];
    }
    field.energy = dirichlet_energy(op.environment(), op.box(), field.values,
                                    op.alpha());
    field.report.wall_ms = wall_ms_since(t0);
    return field;
}

GapResult smallest_nonzero_eigenvalue(const NonlocalOperator& op, double tol,
                                      const SolveOptions& inner) {
    if (op.boundary() != Boundary::restricted)
        throw domain_error("smallest_nonzero_eigenvalue: operator must be restricted");
    const std::size_t N = op.box().point_count();
    if (N < 2)
        throw domain_error("smallest_nonzero_eigenvalue: need at least two points");
    Preconditioner P = make_precond(op, 0.0, inner.precond);
    const int maxit = auto_maxit(N, inner.max_iterations);
    const double inner_tol = std::min(inner.tol, 0.1 * tol);
    GridFunction work = GridFunction::zeros(op.box());
    auto apply_A = [&](const std::vector<double>& v, std::vector<double>& out) {
        work.values = v;
        GridFunction Lv = op.apply(work);
        out = std::move(Lv.values);
        for (std::size_t i = 0; i < N; ++i) out[i] = -out[i];
    };
    // Deterministic generic start vector, deflated against constants.
    std::vector<double> x(N);
    for (std::size_t i = 0; i < N; ++i)
        x[i] = hash_to_unit(mix64(0x5851f42d4c957f2dULL + i)) - 0.5;
    project_mean(x);
    double nrm = std::sqrt(det_sumsq(x.data(), N));
    for (double& v : x) v /= nrm;
    GapResult res;
    double lam_prev = -1.0;
    for (int it = 1; it <= 300; ++it) {
        std::vector<double> y;
        CGOutcome cg = pcg(apply_A, x, y, inner_tol, maxit, P, true);
        res.iterations = it;
        if (cg.stagnated) {
            res.value = 0.0;
            res.zero_gap = true;
            return res;
        }
        if (!cg.converged)
            throw solver_error(
                "smallest_nonzero_eigenvalue: inner solve did not converge");
        // Rayleigh quotient of y: A y ~ x, so <y,Ay>/<y,y> ~ <y,x>/<y,y>.
        double yy = det_sumsq(y.data(), N);
        double lam = det_dot(y.data(), x.data(), N) / yy;
        double ynrm = std::sqrt(yy);
        for (std::size_t i = 0; i < N; ++i) x[i] = y[i] / ynrm;
        project_mean(x);
        if (lam_prev >= 0.0 && std::abs(lam - lam_prev) <= tol * std::max(lam, 1e-300)) {
            res.value = lam;
            break;
        }
        lam_prev = lam;
        res.value = lam;
    }
    if (res.value < 1e-12) {
        res.value = 0.0;
        res.zero_gap = true;
    }
    res.vector = std::move(x);
    return res;
}

}  // namespace stablehomog
