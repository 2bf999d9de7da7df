#include "test_support.hpp"

using namespace rptest;
using Catch::Approx;

namespace {

RoughPath smooth_driver(std::size_t n) {
    return lift_piecewise_linear(SampledPath::from_function(TimeGrid::uniform(1.0, n), 1, [](double t) { return Vec{t}; }));
}

RDEProblem zero_problem(RoughPath driver, Vec xi) {
    const std::size_t p = xi.size(), d = driver.dim();
    return RDEProblem{std::move(driver), FunctionModel::constant(Vec(p), p), FunctionModel::constant(Vec(p * d), p), std::move(xi)};
}

RDEProblem gbm_problem(RoughPath driver, double sigma) {
    return RDEProblem{std::move(driver), FunctionModel::constant(Vec{0.0}, 1), FunctionModel::affine(Mat{{sigma}}, Vec{0.0}), Vec{1.0}};
}

double sup_gap(const RDESolution& a, const RDESolution& b) { return max_abs_diff(a.path.raw_values(), b.path.raw_values()); }

// Y'_k = f(t_k, Y_k) entrywise.
double derivative_gap(const RDESolution& s, const RDEProblem& p) {
    double worst = 0.0;
    for (std::size_t k = 0; k < s.nodes(); ++k) {
        const Vec f = p.diffusion.eval(s.path.grid()[k], s.state(k));
        worst = std::max(worst, max_abs_diff(f.span(), s.path.derivative_span(k)));
    }
    return worst;
}

} // namespace

TEST_CASE("step scheme", "[rde]") {
    SECTION("zero coefficients keep the initial value") {
        const RDEProblem p = zero_problem(random_rough_path(2, 32), Vec{1.0, -2.0, 3.0});
        const RDESolution s = solve_step_scheme(p);
        for (std::size_t k = 0; k < s.nodes(); ++k) CHECK(s.path.value_vec(k) == p.xi);
        CHECK(residual_check(s, p) == 0.0);
    }
    SECTION("Euler on an ODE") {
        const RDEProblem p{smooth_driver(1 << 12), FunctionModel::identity(1), FunctionModel::constant(Vec{0.0}, 1), Vec{1.0}};
        CHECK(solve_step_scheme(p).terminal()[0] == Approx(std::exp(1.0)).margin(1e-3));
    }
    SECTION("second-order term on a smooth driver") {
        const RDEProblem p = gbm_problem(smooth_driver(1 << 12), 1.0);
        const RDESolution s = solve_step_scheme(p);
        CHECK(s.terminal()[0] == Approx(std::exp(1.0)).margin(1e-6));
        CHECK(derivative_gap(s, p) <= 1e-12);
    }
    SECTION("residual on a smooth driver") {
        RDEProblem p = gbm_problem(smooth_driver(1 << 12), 1.0);
        p.drift = FunctionModel::affine(Mat{{0.1}}, Vec{0.0});
        CHECK(residual_check(solve_step_scheme(p), p) <= 1e-4);
    }
    SECTION("non-finite state names the node") {
        RDEProblem p = zero_problem(smooth_driver(16), Vec{1.0});
        p.drift = FunctionModel::elementwise(1, [](double y) { return 1e300 * y; }, [](double) { return 1e300; });
        CHECK_THROWS_AS(solve_step_scheme(p), NumericalError);
    }
    SECTION("shape mismatch") {
        RDEProblem p = zero_problem(random_rough_path(2, 8), Vec{1.0});
        p.diffusion = FunctionModel::constant(Vec{1.0}, 1);
        CHECK_THROWS_AS(solve_step_scheme(p), ShapeError);
    }
}

TEST_CASE("Picard iteration", "[rde]") {
    SECTION("zero problem converges at once") {
        const RDEProblem p = zero_problem(random_rough_path(2, 64), Vec{0.5, 0.25});
        const RDESolution s = solve_picard(p);
        REQUIRE(s.picard);
        CHECK(s.picard->converged);
        for (std::size_t it : s.picard->iterations) CHECK(it == 1);
        for (std::size_t k = 0; k < s.nodes(); ++k) CHECK(s.path.value_vec(k) == p.xi);
    }
    SECTION("geometric problem under Stratonovich noise") {
        const DriverSample ds = simulate_driver(1, 1 << 12, 1.0, 8, 21, 0, Enhancement::Strat);
        const RDEProblem p = gbm_problem(ds.driver, 0.5);
        PicardOptions opts;
        opts.tol = 1e-10;
        const RDESolution pic = solve_picard(p, opts);
        const RDESolution step = solve_step_scheme(p);
        REQUIRE(pic.picard);
        CHECK(pic.picard->converged);
        CHECK(sup_gap(pic, step) <= 2e-3);
        double worst = 0.0;
        for (std::size_t k = 0; k < pic.nodes(); ++k)
            worst = std::max(worst, std::abs(pic.state(k)[0] - std::exp(0.5 * ds.driver.path().value(k)[0])));
        CHECK(worst <= 2e-3);
        CHECK(residual_check(pic, p) <= 10 * opts.tol);
        CHECK(derivative_gap(pic, p) <= 1e-12);
    }
    SECTION("linear drift") {
        const RDEProblem p{smooth_driver(1 << 12), FunctionModel::identity(1), FunctionModel::constant(Vec{0.0}, 1), Vec{1.0}};
        PicardOptions opts;
        opts.tol = 1e-13;
        const RDESolution s = solve_picard(p, opts);
        CHECK(s.terminal()[0] == Approx(std::exp(1.0)).margin(1e-6));
    }
    SECTION("non-convergence keeps a partial solution") {
        const RDEProblem p = gbm_problem(bm_driver(1, 64, Enhancement::Strat, 4, 4), 0.5);
        PicardOptions opts;
        opts.max_iter = 1;
        opts.max_halvings = 2;
        const RDESolution s = solve_picard(p, opts);
        REQUIRE(s.picard);
        CHECK_FALSE(s.picard->converged);
        CHECK(s.picard->halvings == 2);
        CHECK(s.nodes() == 65);
    }
    SECTION("option checks") {
        const RDEProblem p = zero_problem(random_rough_path(1, 8), Vec{1.0});
        PicardOptions opts;
        opts.tol = 0.0;
        CHECK_THROWS_AS(solve_picard(p, opts), std::invalid_argument);
    }
}

TEST_CASE("concatenation", "[rde]") {
    const RDEProblem p = gbm_problem(bm_driver(1, 256, Enhancement::Strat, 9, 8), 0.5);
    const std::size_t mid = 128;
    SECTION("step scheme") {
        const RDESolution full = solve_step_scheme(p);
        const RDESolution first = solve_step_scheme(p.restricted(0, mid, p.xi));
        const RDESolution second = solve_step_scheme(p.restricted(mid, 256, first.path.value_vec(mid)));
        for (std::size_t k = 0; k <= mid; ++k) {
            CHECK(max_abs_diff(full.state(k), first.state(k)) <= 1e-12);
            CHECK(max_abs_diff(full.state(mid + k), second.state(k)) <= 1e-12);
        }
    }
    SECTION("Picard") {
        PicardOptions opts;
        opts.tol = 1e-12;
        opts.window = 0.125;
        const RDESolution full = solve_picard(p, opts);
        const RDESolution first = solve_picard(p.restricted(0, mid, p.xi), opts);
        const RDESolution second = solve_picard(p.restricted(mid, 256, first.path.value_vec(mid)), opts);
        for (std::size_t k = 0; k <= mid; ++k) {
            CHECK(max_abs_diff(full.state(k), first.state(k)) <= 2 * opts.tol);
            CHECK(max_abs_diff(full.state(mid + k), second.state(k)) <= 2 * opts.tol);
        }
    }
}

TEST_CASE("a priori bound", "[rde]") {
    const RDEProblem zero = zero_problem(random_rough_path(1, 16), Vec{2.0});
    CHECK(apriori_bound_check(solve_step_scheme(zero), zero, 2.0));

    // Bounded coefficients, small driver.
    const RoughPath r = bm_driver(1, 256, Enhancement::Strat, 12, 4, 0, 1.0);
    const RDEProblem p{RoughPath(SampledPath(r.grid(), 1, [&] {
                                     auto v = r.path().raw();
                                     for (auto& x : v) x *= 0.1;
                                     return v;
                                 }()),
                                 [&] {
                                     auto b = r.raw_blocks();
                                     for (auto& x : b) x *= 0.01;
                                     return b;
                                 }()),
                       FunctionModel::elementwise(1, [](double y) { return std::cos(y); }, [](double y) { return -std::sin(y); }),
                       FunctionModel::elementwise(1, [](double y) { return std::sin(y); }, [](double y) { return std::cos(y); }),
                       Vec{1.0}};
    const RDESolution s = solve_step_scheme(p);
    // |xi| + ||f0|| T + 10 with ||cos|| = 1.
    CHECK(apriori_bound_check(s, p, 1.0 + 1.0 + 10.0));
    CHECK_FALSE(apriori_bound_check(s, p, 0.5));
    CHECK_THROWS_AS(apriori_bound_check(s, p, 0.0), std::invalid_argument);
}

TEST_CASE("driver perturbation is Lipschitz", "[rde]") {
    const RoughPath r = bm_driver(1, 1 << 10, Enhancement::Strat, 31, 8);
    const RDESolution base = solve_step_scheme(gbm_problem(r, 0.5));
    std::vector<double> eps, gaps;
    for (double e : {1e-2, 1e-3, 1e-4}) {
        // Geometric lift of X + e sin(2 pi t) in d = 1: blocks are half the squared increments.
        const SampledPath shifted = SampledPath::from_function(r.grid(), 1, [&, k = std::size_t{0}](double t) mutable {
            return Vec{r.path().value(k++)[0] + e * std::sin(2 * std::numbers::pi * t)};
        });
        const RDESolution s = solve_step_scheme(gbm_problem(lift_piecewise_linear(shifted), 0.5));
        eps.push_back(e);
        gaps.push_back(sup_gap(s, base));
    }
    CHECK(fitted_order(eps, gaps) >= 0.9);
}
