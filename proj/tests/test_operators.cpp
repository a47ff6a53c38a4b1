#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <vector>

#include "stablehomog/operators.hpp"
#include "stablehomog/radial.hpp"
#include "stablehomog/reference.hpp"

#ifdef SH_HAVE_EIGEN
#include <Eigen/Dense>
#endif

using namespace stablehomog;

namespace {

GridFunction random_grid(const LatticeBox& box, std::uint64_t seed, int ncomp = 1) {
    GridFunction f = GridFunction::zeros(box, ncomp);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (double& v : f.values) v = U(rng);
    return f;
}

}  // namespace

TEST_CASE("dense matrix is exactly symmetric") {
    LatticeBox box = LatticeBox::create(2, 1, 3.0);  // N = 36
    Environment env(13, ConductanceLaw::parse("uniform:1"), 2);
    for (Variant v : {Variant::random, Variant::reference}) {
        for (Boundary b : {Boundary::restricted, Boundary::killed}) {
            NonlocalOperator op(v == Variant::reference ? std::nullopt
                                                        : std::optional(env),
                                box, v, b, 1.3);
            auto A = op.assemble_dense();
            std::size_t N = box.point_count();
            for (std::size_t i = 0; i < N; ++i)
                for (std::size_t j = i + 1; j < N; ++j)
                    CHECK(A[i * N + j] == A[j * N + i]);  // bitwise
        }
    }
}

TEST_CASE("apply agrees with the dense assembly") {
    LatticeBox box = LatticeBox::create(2, 2, 1.5);  // N = 36
    Environment env(4, ConductanceLaw::parse("bernoulli:0.5"), 2);
    NonlocalOperator op(env, box, Variant::random, Boundary::killed, 0.8);
    auto A = op.assemble_dense();
    GridFunction f = random_grid(box, 77);
    GridFunction got = op.apply(f);
    std::size_t N = box.point_count();
    for (std::size_t i = 0; i < N; ++i) {
        double want = 0.0;
        for (std::size_t j = 0; j < N; ++j) want += A[i * N + j] * f.at(j);
        CHECK(got.at(i) == doctest::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("restricted generator kills constants") {
    LatticeBox box = LatticeBox::create(2, 1, 4.0);
    Environment env(2, ConductanceLaw::parse("uniform:1"), 2);
    NonlocalOperator op(env, box, Variant::random, Boundary::restricted, 1.5);
    GridFunction one = GridFunction::zeros(box);
    for (double& v : one.values) v = 1.0;
    GridFunction img = op.apply(one);
    for (std::size_t i = 0; i < box.point_count(); ++i)
        CHECK(std::abs(img.at(i)) <= 1e-12);
}

TEST_CASE("killed generator charges constants with the kill rate") {
    LatticeBox box = LatticeBox::create(1, 2, 2.0);
    NonlocalOperator op(std::nullopt, box, Variant::reference, Boundary::killed, 1.0);
    GridFunction one = GridFunction::zeros(box);
    for (double& v : one.values) v = 1.0;
    GridFunction img = op.apply(one);
    for (std::size_t i = 0; i < box.point_count(); ++i) {
        CHECK(img.at(i) < 0.0);  // -kappa(x) < 0: mass escapes everywhere
        CHECK(img.at(i) == doctest::Approx(-op.prefactor() * op.kappa0(i)).epsilon(1e-12));
    }
    // Kill grows toward the boundary.
    CHECK(op.kappa0(0) > op.kappa0(box.point_count() / 2));
}

TEST_CASE("negative semidefinite and the energy identity") {
    LatticeBox box = LatticeBox::create(2, 1, 3.0);
    Environment env(9, ConductanceLaw::parse("uniform:1"), 2);
    NonlocalOperator op(env, box, Variant::random, Boundary::restricted, 0.6);
    for (std::uint64_t s = 0; s < 20; ++s) {
        GridFunction f = random_grid(box, 1000 + s);
        GridFunction Lf = op.apply(f);
        double quad = op.mu_dot(Lf, f);
        double n2 = op.mu_dot(f, f);
        CHECK(quad <= 1e-12 * n2);
        // k = 1: <-Lf, f> under counting measure equals the Dirichlet form.
        double energy = dirichlet_energy(env, box, f, 0.6);
        CHECK(-quad == doctest::Approx(energy).epsilon(1e-10));
    }
}

#ifdef SH_HAVE_EIGEN
TEST_CASE("spectrum of -L is nonnegative with the expected kernel") {
    LatticeBox box = LatticeBox::create(2, 1, 2.5);  // N = 25
    Environment env(5, ConductanceLaw::parse("uniform:1"), 2);
    NonlocalOperator op(env, box, Variant::random, Boundary::restricted, 1.5);
    auto A = op.assemble_dense();
    std::size_t N = box.point_count();
    Eigen::MatrixXd M(N, N);
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j) M(i, j) = -A[i * N + j];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
    CHECK(es.eigenvalues()(0) >= -1e-11);                   // -L >= 0
    CHECK(std::abs(es.eigenvalues()(0)) <= 1e-11);          // constants
    CHECK(es.eigenvalues()(1) > 1e-6);  // connected: gap above the kernel
}
#endif

TEST_CASE("index folding matches a direct scale-k row sum") {
    // d = 1, k = 2, box (-1, 1]: points {-1/2, 0, 1/2, 1}.
    LatticeBox box = LatticeBox::create(1, 2, 1.0);
    NonlocalOperator op(std::nullopt, box, Variant::reference,
                        Boundary::restricted, 0.7);
    GridFunction f = random_grid(box, 3);
    GridFunction Lf = op.apply(f);
    double alpha = 0.7;
    for (std::size_t i = 0; i < 4; ++i) {
        std::int64_t ji[1];
        box.coords_of(i, ji);
        double want = 0.0;
        for (std::size_t j = 0; j < 4; ++j) {
            if (j == i) continue;
            std::int64_t jj[1];
            box.coords_of(j, jj);
            double dist = std::abs(double(jj[0] - ji[0])) / 2.0;  // k = 2
            // mu^k weight k^{-d} against kernel |x-y|^{-d-alpha}
            want += (f.at(j) - f.at(i)) * std::pow(dist, -1.0 - alpha) / 2.0;
        }
        CHECK(Lf.at(i) == doctest::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("jump cutoff masks long pairs") {
    LatticeBox box = LatticeBox::create(1, 1, 6.0);
    NonlocalOperator::Options opt;
    opt.jump_cutoff = 2;
    NonlocalOperator op(std::nullopt, box, Variant::reference,
                        Boundary::restricted, 1.0, opt);
    auto A = op.assemble_dense();
    std::size_t N = box.point_count();
    std::int64_t ji[1], jj[1];
    for (std::size_t i = 0; i < N; ++i) {
        box.coords_of(i, ji);
        for (std::size_t j = 0; j < N; ++j) {
            if (i == j) continue;
            box.coords_of(j, jj);
            if (std::abs(jj[0] - ji[0]) > 2) {
                CHECK(A[i * N + j] == 0.0);
            } else {
                CHECK(A[i * N + j] != 0.0);
            }
        }
    }
}

TEST_CASE("compensated variant demands the restricted boundary and gradients") {
    LatticeBox box = LatticeBox::create(2, 2, 1.0);
    Environment env(1, ConductanceLaw::parse("uniform:1"), 2);
    CHECK_THROWS_AS(NonlocalOperator(env, box, Variant::compensated,
                                     Boundary::killed, 1.5),
                    domain_error);
    NonlocalOperator op(env, box, Variant::compensated, Boundary::restricted, 1.5);
    GridFunction scalar_only = random_grid(box, 8, 1);
    CHECK_THROWS_AS(op.apply(scalar_only), domain_error);
}

TEST_CASE("compensated with zero gradient equals the random variant") {
    LatticeBox box = LatticeBox::create(2, 2, 1.0);
    Environment env(6, ConductanceLaw::parse("bernoulli:0.5"), 2);
    NonlocalOperator hat(env, box, Variant::compensated, Boundary::restricted, 1.2);
    NonlocalOperator raw(env, box, Variant::random, Boundary::restricted, 1.2);
    GridFunction f = random_grid(box, 44, 3);  // comps 1,2 = gradient
    for (std::size_t i = 0; i < box.point_count(); ++i) {
        f.at(i, 1) = 0.0;
        f.at(i, 2) = 0.0;
    }
    GridFunction scalar = GridFunction::zeros(box);
    for (std::size_t i = 0; i < box.point_count(); ++i) scalar.at(i) = f.at(i, 0);
    GridFunction a = hat.apply(f);
    GridFunction b = raw.apply(scalar);
    for (std::size_t i = 0; i < box.point_count(); ++i)
        CHECK(a.at(i) == doctest::Approx(b.at(i)).epsilon(1e-14));
}

TEST_CASE("potential field centering and truncation") {
    Environment env(17, ConductanceLaw::parse("uniform:1"), 2);
    LatticeBox box = LatticeBox::create(2, 1, 4.0);
    Potential V = potential_field(env, 1.5, box, 10.0);
    CHECK(V.values.ncomp == 2);
    CHECK(V.radius == doctest::Approx(10.0));

    // Centered field (w - 1) and raw weights agree: the unit part is odd
    // under z -> -z on the symmetric ball.
    Potential Vraw = potential_field(env, 1.5, box, 10.0, {}, true);
    for (std::size_t i = 0; i < V.values.values.size(); ++i)
        CHECK(V.values.values[i] == doctest::Approx(Vraw.values.values[i]).epsilon(1e-10));

    // Constant law: xi = 0 identically.
    Environment det(17, ConductanceLaw::parse("constant"), 2);
    Potential Vdet = potential_field(det, 1.5, box, 10.0);
    for (double v : Vdet.values.values) CHECK(v == 0.0);

    // Truncation caps the radius.
    Potential Vtr = potential_field(env, 1.5, box, 10.0, 4.0);
    CHECK(Vtr.radius == doctest::Approx(4.0));
    double diff = 0.0;
    for (std::size_t i = 0; i < V.values.values.size(); ++i)
        diff += std::abs(V.values.values[i] - Vtr.values.values[i]);
    CHECK(diff > 1e-3);  // longer jumps genuinely contribute
}

TEST_CASE("potential matches a brute-force pair sum") {
    Environment env(23, ConductanceLaw::parse("bernoulli:0.5"), 1);
    LatticeBox box = LatticeBox::create(1, 1, 2.0);
    double R = 5.0;
    Potential V = potential_field(env, 0.9, box, R);
    std::int64_t j[1];
    for (std::size_t i = 0; i < box.point_count(); ++i) {
        box.coords_of(i, j);
        double want = 0.0;
        for (std::int64_t z = -5; z <= 5; ++z) {
            if (z == 0) continue;
            std::int64_t y[1] = {j[0] + z};
            want += double(z) * std::pow(std::abs(double(z)), -1.9) *
                    env.fluctuation(j, y);
        }
        CHECK(V.values.at(i) == doctest::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("full lattice apply reproduces the reference generator") {
    // Reference variant, k = 2 grid on a small box: the windowed sum plus
    // analytic tail must land on the adaptive-quadrature values of L g.
    SmoothBump g;
    g.d = 1;
    g.radius = 1.0;
    LatticeBox eval = LatticeBox::create(1, 2, 1.0);
    GridFunction got = apply_full_lattice(std::nullopt, 1.5, Variant::reference,
                                          g.as_function(), eval);
    RefQuadrature quad;
    quad.K_ref = 1024;
    std::int64_t j[1];
    for (std::size_t i = 0; i < eval.point_count(); ++i) {
        eval.coords_of(i, j);
        double x = double(j[0]) / 2.0;
        double ref = frac_generator_apply(g, &x, 1.5, quad);
        // both sides carry the k^{-(2-alpha)} discretization error of their
        // own scale; k = 2 dominates
        CHECK(got.at(i) == doctest::Approx(ref).epsilon(0.75));
    }
    // And at matching scale the two paths agree tightly: compare the k-grid
    // row sums against near_point at the same refinement via the public API.
    GridFunction fine = apply_full_lattice(std::nullopt, 1.5, Variant::reference,
                                           g.as_function(),
                                           LatticeBox::create(1, 64, 1.0));
    double center_val = 0.0;
    LatticeBox fb = LatticeBox::create(1, 64, 1.0);
    for (std::size_t i = 0; i < fb.point_count(); ++i) {
        fb.coords_of(i, j);
        if (j[0] == 0) center_val = fine.at(i);
    }
    quad.K_ref = 64;
    double x0 = 0.0;
    CHECK(center_val == doctest::Approx(frac_generator_apply(g, &x0, 1.5, quad))
                            .epsilon(1e-6));
}

TEST_CASE("compensator identity across independent code paths") {
    SmoothBump g;
    g.d = 2;
    g.radius = 1.0;
    Environment env(31, ConductanceLaw::parse("bernoulli:0.5"), 2);
    for (double alpha : {1.2, 1.5, 1.8}) {
        double rel = generator_compensator_identity_check(env, 4, alpha,
                                                          g.as_function());
        CHECK(rel <= 1e-10);
    }
    CHECK_THROWS_AS(
        generator_compensator_identity_check(env, 4, 0.7, g.as_function()),
        domain_error);
}

TEST_CASE("dirichlet energy brute force") {
    Environment env(3, ConductanceLaw::parse("uniform:1"), 1);
    LatticeBox box = LatticeBox::create(1, 1, 3.0);
    GridFunction f = random_grid(box, 12);
    double want = 0.0;
    std::int64_t ji[1], jj[1];
    for (std::size_t i = 0; i < box.point_count(); ++i) {
        box.coords_of(i, ji);
        for (std::size_t j = 0; j < box.point_count(); ++j) {
            if (i == j) continue;
            box.coords_of(j, jj);
            double w = env.conductance(ji, jj);
            double df = f.at(i) - f.at(j);
            want += 0.5 * df * df * w *
                    std::pow(std::abs(double(ji[0] - jj[0])), -1.9);
        }
    }
    CHECK(dirichlet_energy(env, box, f, 0.9) == doctest::Approx(want).epsilon(1e-12));

    // Vector grids add componentwise energies.
    GridFunction v = GridFunction::zeros(box, 2);
    for (std::size_t i = 0; i < box.point_count(); ++i) {
        v.at(i, 0) = f.at(i);
        v.at(i, 1) = 2.0 * f.at(i);
    }
    CHECK(dirichlet_energy(env, box, v, 0.9) == doctest::Approx(5.0 * want).epsilon(1e-12));
}

TEST_CASE("dense assembly refuses huge boxes") {
    LatticeBox box = LatticeBox::create(2, 1, 40.0);  // N = 6400 > dense cap
    NonlocalOperator op(std::nullopt, box, Variant::reference,
                        Boundary::restricted, 1.0);
    CHECK_THROWS_AS(op.assemble_dense(), resource_error);
}

TEST_CASE("alpha domain is enforced") {
    LatticeBox box = LatticeBox::create(1, 1, 2.0);
    CHECK_THROWS_AS(NonlocalOperator(std::nullopt, box, Variant::reference,
                                     Boundary::restricted, 0.0),
                    domain_error);
    CHECK_THROWS_AS(NonlocalOperator(std::nullopt, box, Variant::reference,
                                     Boundary::restricted, 2.0),
                    domain_error);
}
