#include "test_support.hpp"

#include <algorithm>

using namespace rptest;
using Catch::Approx;

namespace {

// Independent O(n^2) reference over ordered pairs, no windowing or subsampling.
double brute_holder(const SampledPath& p, double alpha) {
    double best = 0.0;
    for (std::size_t i = 0; i < p.nodes(); ++i)
        for (std::size_t j = i + 1; j < p.nodes(); ++j) {
            double s = 0.0;
            for (std::size_t a = 0; a < p.dim(); ++a) s += std::pow(p.value(j)[a] - p.value(i)[a], 2);
            best = std::max(best, std::sqrt(s) / std::pow(p.grid()[j] - p.grid()[i], alpha));
        }
    return best;
}

SampledPath dyadic_sqrt(int levels) {
    std::vector<double> t{0.0};
    for (int l = levels; l >= 0; --l) t.push_back(std::ldexp(1.0, -l));
    const TimeGrid g(t);
    return SampledPath::from_function(g, 1, [](double s) { return Vec{std::sqrt(s)}; });
}

} // namespace

TEST_CASE("time grid construction", "[grid]") {
    const TimeGrid g = TimeGrid::uniform(2.0, 4);
    CHECK(g.steps() == 4);
    CHECK(g.nodes() == 5);
    CHECK(g.horizon() == 2.0);
    CHECK(g[2] == 1.0);
    CHECK(g.is_uniform());
    CHECK_THROWS_AS(TimeGrid({0.0, 0.5, 0.5}), DataError);
    CHECK_THROWS_AS(TimeGrid({0.0}), std::invalid_argument);
    const TimeGrid r = TimeGrid::uniform(1.0, 2).refine(4);
    CHECK(r.steps() == 8);
    CHECK(r[4] == Approx(0.5).margin(1e-15));
}

TEST_CASE("increment", "[grid]") {
    const SampledPath p(TimeGrid({0.0, 0.5, 1.0}), 1, {0.0, 1.0, 3.0});
    CHECK(p.increment(0, 2)[0] == 3.0);
    CHECK(p.increment(1, 1)[0] == 0.0);
    CHECK(p.increment(2, 0)[0] == -3.0);
    CHECK_THROWS_AS(p.increment(0, 3), std::out_of_range);
    const SampledPath c = SampledPath::from_function(TimeGrid::uniform(1.0, 8), 2, [](double) { return Vec{1.5, -2.0}; });
    for (std::size_t i = 0; i < c.nodes(); ++i)
        for (std::size_t j = 0; j < c.nodes(); ++j) CHECK(max_abs(c.increment(i, j).span()) == 0.0);
}

TEST_CASE("holder seminorm", "[grid]") {
    SECTION("constant path") {
        const SampledPath c = SampledPath::from_function(TimeGrid::uniform(1.0, 16), 1, [](double) { return Vec{7.0}; });
        CHECK(holder_seminorm(c, 0.5) == 0.0);
    }
    SECTION("linear path at alpha 1") {
        const SampledPath p = SampledPath::from_function(TimeGrid::uniform(1.0, 64), 1, [](double t) { return Vec{t}; });
        CHECK(holder_seminorm(p, 1.0) == Approx(1.0).epsilon(1e-12));
    }
    SECTION("sqrt on a dyadic grid at alpha 1/2") {
        const SampledPath p = dyadic_sqrt(10);
        CHECK(brute_holder(p, 0.5) == Approx(1.0).epsilon(1e-14));
        CHECK(holder_seminorm(p, 0.5) == Approx(1.0).epsilon(1e-14));
    }
    SECTION("matches brute force on random paths") {
        for (int trial = 0; trial < 5; ++trial) {
            const SampledPath p = random_path(3, 100);
            CHECK(holder_seminorm(p, 0.4) == Approx(brute_holder(p, 0.4)).epsilon(1e-14));
        }
    }
    SECTION("exponent range") {
        const SampledPath p = random_path(1, 10);
        CHECK_THROWS_AS(holder_seminorm(p, 0.0), std::invalid_argument);
        CHECK_THROWS_AS(holder_seminorm(p, 1.5), std::invalid_argument);
    }
    SECTION("nonincreasing in alpha on T = 1 for small paths") {
        for (int trial = 0; trial < 10; ++trial) {
            SampledPath p = random_path(2, 64, 1.0, 0.2);
            std::vector<double> a{0.1, 0.3, 0.5, 0.7};
            // |X_{s,t}| / |t-s|^beta >= |X_{s,t}| / |t-s|^alpha for beta > alpha when |t - s| <= 1.
            for (std::size_t k = 1; k < a.size(); ++k) CHECK(holder_seminorm(p, a[k - 1]) <= holder_seminorm(p, a[k]) + 1e-15);
        }
    }
    SECTION("large grids give a lower bound") {
        const SampledPath p = random_path(1, 6000);
        SeminormOptions opts;
        const double est = holder_seminorm(p, 0.4, opts);
        CHECK(est <= brute_holder(p, 0.4) + 1e-15);
        CHECK(est > 0.0);
        opts.subsample_large = false;
        CHECK_THROWS_AS(holder_seminorm(p, 0.4, opts), std::invalid_argument);
    }
}

TEST_CASE("two-parameter seminorm", "[grid]") {
    const TimeGrid g = TimeGrid::uniform(1.0, 20);
    SECTION("zero field") { CHECK(two_param_holder_seminorm(TwoParameterField(g, 2, 2), 0.5) == 0.0); }
    SECTION("F = t - s at alpha 1") {
        const auto f = TwoParameterField::from_function(g, 1, 1, [&](std::size_t i, std::size_t j) { return Mat{{g[j] - g[i]}}; });
        CHECK(two_param_holder_seminorm(f, 1.0) == Approx(1.0).epsilon(1e-12));
    }
    SECTION("increments of a path reproduce the path seminorm") {
        const SampledPath p = random_path(2, 40);
        const auto f = TwoParameterField::from_function(p.grid(), 2, 1, [&](std::size_t i, std::size_t j) { return p.increment(i, j); });
        CHECK(two_param_holder_seminorm(f, 0.45) == Approx(holder_seminorm(p, 0.45)).epsilon(1e-15));
    }
    SECTION("lifted Brownian sample against a brute-force scan") {
        const RoughPath r = bm_driver(2, 64, Enhancement::Ito, 11);
        const RawLevel2 raw = r.to_raw();
        double best = 0.0;
        for (std::size_t i = 0; i < r.nodes(); ++i)
            for (std::size_t j = 0; j < r.nodes(); ++j)
                if (i != j) best = std::max(best, frobenius_norm(r.second_level(i, j)) / std::abs(r.grid()[j] - r.grid()[i]));
        CHECK(two_param_holder_seminorm(raw, 1.0) == Approx(best).epsilon(1e-13));
    }
}

TEST_CASE("localized seminorm", "[grid]") {
    const SampledPath p = random_path(2, 64);
    CHECK(localized_seminorm(p, 0.4, 1.0) == Approx(holder_seminorm(p, 0.4)).epsilon(1e-15));
    const SampledPath c = SampledPath::from_function(p.grid(), 1, [](double) { return Vec{2.0}; });
    for (double h : {1.0 / 64, 0.25, 1.0}) CHECK(localized_seminorm(c, 0.4, h) == 0.0);
    double prev = 0.0;
    for (double h : {1.0 / 64, 1.0 / 32, 0.1, 0.25, 0.5, 1.0}) {
        const double v = localized_seminorm(p, 0.4, h);
        CHECK(v >= prev);
        prev = v;
    }
    CHECK_THROWS_AS(localized_seminorm(p, 0.4, 1.0 / 128), std::invalid_argument);
    CHECK_THROWS_AS(localized_seminorm(p, 0.4, 2.0), std::invalid_argument);
}

TEST_CASE("restriction and subsampling", "[grid]") {
    const SampledPath p = random_path(2, 16);
    const SampledPath r = p.restrict(4, 12);
    CHECK(r.nodes() == 9);
    CHECK(r.grid()[0] == p.grid()[4]);
    CHECK(max_abs_diff(r.value(8), p.value(12)) == 0.0);
    const SampledPath s = p.subsample(4);
    CHECK(s.nodes() == 5);
    CHECK(max_abs_diff(s.value(4), p.value(16)) == 0.0);
}
