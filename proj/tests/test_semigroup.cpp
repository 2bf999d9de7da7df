#include "test_support.hpp"

using namespace rptest;
using Catch::Approx;

namespace {

const Mat diag12{{-1.0, 0.0}, {0.0, -2.0}};

RoughPath smooth_driver(std::size_t n) {
    return lift_piecewise_linear(SampledPath::from_function(TimeGrid::uniform(1.0, n), 1, [](double t) { return Vec{t}; }));
}

// Constant operator-valued integrand c (m x d) with zero derivative.
ControlledPath constant_integrand(const TimeGrid& g, const Mat& c) {
    return ControlledPath::from_nodes(
        g, c.rows() * c.cols(), c.cols(), [&](std::size_t) { return Vec(c.span()); },
        [&](std::size_t) { return Mat(c.rows() * c.cols(), c.cols()); });
}

Mat add_identity_scaled(const Mat& a, double s) { return a + s * Mat::identity(a.rows()); }

} // namespace

TEST_CASE("matrix exponential", "[semigroup]") {
    SECTION("zero generator") {
        const MatrixSemigroup g(Mat(3, 3));
        for (double t : {0.0, 0.5, 7.0}) CHECK(max_abs_diff(g.at(t).span(), Mat::identity(3).span()) == 0.0);
    }
    SECTION("diagonal generator") {
        const Vec s = semigroup_apply(MatrixSemigroup(diag12), 1.0, Vec{1.0, 1.0}.span());
        CHECK(s[0] == Approx(std::exp(-1.0)).margin(1e-12));
        CHECK(s[1] == Approx(std::exp(-2.0)).margin(1e-12));
    }
    SECTION("generator by finite differences") {
        const double h = 1e-6;
        for (int trial = 0; trial < 20; ++trial) {
            const Mat a = random_mat(3, 3);
            const Vec y = random_vec(3);
            const MatrixSemigroup g(a);
            const Vec fd = (1.0 / h) * (semigroup_apply(g, h, y.span()) - y);
            CHECK(max_abs_diff(fd.span(), (a * y).span()) <= 1e-4);
        }
    }
    SECTION("argument checks") {
        const MatrixSemigroup g(diag12);
        CHECK_THROWS_AS(g.at(-0.1), std::invalid_argument);
        CHECK_THROWS_AS(semigroup_apply(g, 1.0, Vec{1.0}.span()), ShapeError);
        CHECK_THROWS_AS(MatrixSemigroup(Mat(2, 3)), ShapeError);
        CHECK_THROWS_AS(MatrixSemigroup(diag12, 0.5, 1.0), std::invalid_argument);
    }
}

TEST_CASE("semigroup laws", "[semigroup]") {
    for (int trial = 0; trial < 20; ++trial) {
        const Mat a = random_mat(3, 3, 1.5);
        const MatrixSemigroup g(a);
        const double s = uniform(0.0, 1.0), t = uniform(0.0, 1.0);
        CHECK(max_abs_diff(g.at(0.0).span(), Mat::identity(3).span()) <= 1e-12);
        CHECK(max_abs_diff(g.at(s + t).span(), (g.at(s) * g.at(t)).span()) <= 1e-10);
        CHECK(max_abs_diff((g.at(t) * a).span(), (a * g.at(t)).span()) <= 1e-10);
        // Operator norm <= Frobenius norm <= M e^{omega t}.
        CHECK(frobenius_norm(g.at(t)) <= g.growth_bound(t) * std::sqrt(3.0));
    }
}

TEST_CASE("integral of the orbit", "[semigroup]") {
    // A int_0^t S_s y ds = S_t y - y, integral by trapezoid on 2^12 cells.
    for (int trial = 0; trial < 5; ++trial) {
        const Mat a = random_mat(2, 2);
        const Vec y = random_vec(2);
        const MatrixSemigroup g(a);
        const TimeGrid grid = TimeGrid::uniform(1.0, 1 << 12);
        const SampledPath orbit = SampledPath::from_function(grid, 2, [&](double s) { return semigroup_apply(g, s, y.span()); });
        const Vec lhs = a * drift_integral(orbit, 0, grid.steps());
        const Vec rhs = semigroup_apply(g, 1.0, y.span()) - y;
        CHECK(max_abs_diff(lhs.span(), rhs.span()) <= 1e-6);
    }
}

TEST_CASE("second-order increment estimate", "[semigroup]") {
    // |S_{s-r,t-r} y - S_{s-q,t-q} y| <= M e^{2 omega T} |y|_{D(A^2)} |t-s| |r-q|
    const double horizon = 1.0;
    for (int trial = 0; trial < 200; ++trial) {
        const Mat a = random_mat(2, 2, 2.0);
        const MatrixSemigroup g(a);
        const Vec y = random_vec(2, 3.0);
        double s = uniform(0.0, horizon), t = uniform(0.0, horizon);
        if (s > t) std::swap(s, t);
        const double q = uniform(0.0, s), r = uniform(0.0, s);
        const Vec inc_r = semigroup_apply(g, t - r, y.span()) - semigroup_apply(g, s - r, y.span());
        const Vec inc_q = semigroup_apply(g, t - q, y.span()) - semigroup_apply(g, s - q, y.span());
        const double lhs = euclidean_norm((inc_r - inc_q).span());
        const double rhs = g.growth_bound(2 * horizon) * graph_norm_da2(a, y.span()) * (t - s) * std::abs(r - q);
        CHECK(lhs <= rhs * (1 + 1e-12) + 1e-15);
    }
    CHECK(graph_norm_da(diag12, Vec{1.0, 1.0}.span()) == Approx(std::sqrt(2.0) + std::sqrt(5.0)));
    CHECK(graph_norm_da2(diag12, Vec{1.0, 0.0}.span()) == Approx(3.0));
}

TEST_CASE("rough convolution", "[semigroup]") {
    SECTION("zero generator is the plain integral") {
        const RoughPath r = random_rough_path(2, 40);
        const auto c = ControlledPath::from_nodes(
            r.grid(), 6, 2, [&](std::size_t) { return random_vec(6); }, [&](std::size_t) { return random_mat(6, 2); });
        const MatrixSemigroup zero(Mat(3, 3));
        for (std::size_t j : {0, 1, 17, 40})
            CHECK(max_abs_diff(rough_convolution(zero, c, r, j).span(), rough_integral(c, r, 0, j).value.span()) <= 1e-12);
    }
    SECTION("constant integrand against time") {
        // Upsilon' = S Y' = 0, so the compensated sum is a left-point rule: first order in h.
        const Mat a = add_identity_scaled(random_mat(2, 2), -1.0);
        const MatrixSemigroup g(a);
        const Vec c{0.7, -0.4};
        std::vector<double> errs, hs;
        for (std::size_t n : {256, 512, 1024}) {
            const RoughPath r = smooth_driver(n);
            const Vec conv = rough_convolution(g, constant_integrand(r.grid(), Mat(2, 1, {c[0], c[1]})), r, n);
            // Trapezoid oracle for int_0^1 S_{1-s} c ds on a 64x finer grid.
            const SampledPath integrand = SampledPath::from_function(TimeGrid::uniform(1.0, 64 * n), 2,
                                                                     [&](double s) { return semigroup_apply(g, 1.0 - s, c.span()); });
            const Vec oracle = drift_integral(integrand, 0, 64 * n);
            hs.push_back(1.0 / static_cast<double>(n));
            errs.push_back(max_abs_diff(conv.span(), oracle.span()));
            // Left-point error is at most (h/2) sup|A S c|.
            CHECK(errs.back() <= 0.5 * hs.back() * frobenius_norm(a) * g.growth_bound(1.0) * euclidean_norm(c.span()));
        }
        CHECK(fitted_order(hs, errs) == Approx(1.0).margin(0.05));
    }
    SECTION("additive noise against an independent sum") {
        const RoughPath r = bm_driver(1, 512, Enhancement::Ito, 23, 8);
        const MatrixSemigroup g(diag12);
        const Mat sigma(2, 1, {0.5, 0.5});
        const Vec conv = rough_convolution(g, constant_integrand(r.grid(), sigma), r, 512);
        Vec brute(2);
        for (std::size_t k = 0; k < 512; ++k) {
            const double dx = r.path().value(k + 1)[0] - r.path().value(k)[0];
            const Mat s = g.at(1.0 - r.grid()[k]);
            for (std::size_t i = 0; i < 2; ++i) brute[i] += (s(i, 0) * 0.5 + s(i, 1) * 0.5) * dx;
        }
        CHECK(max_abs_diff(conv.span(), brute.span()) <= 1e-12);
    }
    SECTION("shape mismatch") {
        const RoughPath r = random_rough_path(1, 8);
        CHECK_THROWS_AS(rough_convolution(MatrixSemigroup(Mat(3, 3)), constant_integrand(r.grid(), Mat(2, 1)), r, 8), ShapeError);
    }
}

TEST_CASE("drift convolution", "[semigroup]") {
    const TimeGrid grid = TimeGrid::uniform(1.0, 1 << 12);
    SECTION("zero generator") {
        const SampledPath p = random_path(2, 64);
        CHECK(max_abs_diff(drift_convolution(MatrixSemigroup(Mat(2, 2)), p, 64).span(), drift_integral(p, 0, 64).span()) <= 1e-12);
    }
    SECTION("constant integrand") {
        const MatrixSemigroup g(Mat{{-1.0}});
        const SampledPath p = SampledPath::from_function(grid, 1, [](double) { return Vec{2.5}; });
        CHECK(drift_convolution(g, p, grid.steps())[0] == Approx((1.0 - std::exp(-1.0)) * 2.5).margin(1e-8));
    }
    SECTION("orbit integrand collapses") {
        const MatrixSemigroup g(Mat{{-0.5, 1.0}, {-1.0, -0.5}});
        const Vec xi{1.0, 2.0};
        const SampledPath p = SampledPath::from_function(grid, 2, [&](double s) { return semigroup_apply(g, s, xi.span()); });
        const Vec expected = semigroup_apply(g, 1.0, xi.span());
        CHECK(max_abs_diff(drift_convolution(g, p, grid.steps()).span(), expected.span()) <= 1e-8);
    }
    SECTION("increment bound") {
        const MatrixSemigroup g(diag12);
        const SampledPath p = random_path(2, 64);
        for (std::size_t j = 1; j <= 64; j += 9) {
            const double t = p.grid()[j];
            CHECK(euclidean_norm(drift_convolution(g, p, j).span()) <= 2.0 * g.growth_bound(1.0) * sup_norm(p) * t);
        }
    }
}

TEST_CASE("mild step scheme", "[semigroup]") {
    SECTION("zero generator reduces to the step scheme") {
        const RoughPath r = bm_driver(1, 256, Enhancement::Strat, 2, 4);
        const RPDEProblem p = rpde_preset("linear", Mat(2, 2), r);
        const RDESolution mild = solve_mild_step(p), plain = solve_step_scheme(p.as_rde());
        CHECK(max_abs_diff(mild.path.raw_values(), plain.path.raw_values()) <= 1e-12);
    }
    SECTION("orbit map") {
        const RoughPath r = bm_driver(2, 256, Enhancement::Ito, 3, 4);
        const RPDEProblem p = rpde_preset("orbit", diag12, r);
        const RDESolution s = solve_mild_step(p);
        for (std::size_t k = 0; k < s.nodes(); ++k)
            CHECK(max_abs_diff(s.state(k), semigroup_apply(p.semigroup, r.grid()[k], p.xi.span()).span()) <= 1e-10);
    }
    SECTION("additive noise against the convolution oracle") {
        const RoughPath r = bm_driver(1, 1 << 12, Enhancement::Ito, 5, 4);
        const RPDEProblem p = rpde_preset("additive", diag12, r);
        const RDESolution s = solve_mild_step(p);
        const ControlledPath integrand = constant_integrand(r.grid(), Mat(2, 1, {0.5, 0.5}));
        double worst = 0.0;
        for (std::size_t k = 0; k < s.nodes(); k += 97) {
            const Vec oracle = semigroup_apply(p.semigroup, r.grid()[k], p.xi.span()) + rough_convolution(p.semigroup, integrand, r, k);
            worst = std::max(worst, max_abs_diff(s.state(k), oracle.span()));
        }
        CHECK(worst <= 2e-3);
    }
}

TEST_CASE("mild Picard iteration", "[semigroup]") {
    SECTION("zero generator reduces to Picard") {
        const RoughPath r = bm_driver(1, 256, Enhancement::Strat, 6, 4);
        const RPDEProblem p = rpde_preset("linear", Mat(2, 2), r);
        PicardOptions opts;
        opts.tol = 1e-12;
        const RDESolution mild = solve_mild_picard(p, opts), plain = solve_picard(p.as_rde(), opts);
        CHECK(max_abs_diff(mild.path.raw_values(), plain.path.raw_values()) <= 1e-10);
    }
    SECTION("orbit map converges at once") {
        const RPDEProblem p = rpde_preset("orbit", diag12, bm_driver(1, 128, Enhancement::Ito, 7, 4));
        const RDESolution s = solve_mild_picard(p);
        REQUIRE(s.picard);
        for (std::size_t it : s.picard->iterations) CHECK(it == 1);
    }
    SECTION("additive noise") {
        const RoughPath r = bm_driver(1, 1 << 12, Enhancement::Ito, 8, 4);
        const RPDEProblem p = rpde_preset("additive", diag12, r);
        PicardOptions opts;
        opts.tol = 1e-10;
        const RDESolution pic = solve_mild_picard(p, opts);
        REQUIRE(pic.picard);
        CHECK(pic.picard->converged);
        CHECK(max_abs_diff(pic.path.raw_values(), solve_mild_step(p).path.raw_values()) <= 2e-3);
        CHECK(mild_residual(pic, p, 64) <= 10 * opts.tol);
    }
    SECTION("linear noise residual") {
        const RoughPath r = bm_driver(2, 512, Enhancement::Strat, 9, 4);
        const RPDEProblem p = rpde_preset("linear", diag12, r);
        PicardOptions opts;
        opts.tol = 1e-11;
        const RDESolution pic = solve_mild_picard(p, opts);
        CHECK(mild_residual(pic, p, 8) <= 10 * opts.tol);
    }
}
