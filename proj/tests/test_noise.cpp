#include "test_support.hpp"

using namespace rptest;
using Catch::Approx;

namespace {

NoiseConfig config(std::size_t dim, std::size_t steps, std::size_t q, std::uint64_t seed, std::uint64_t path = 0, double horizon = 1.0) {
    NoiseConfig cfg;
    cfg.dim = dim;
    cfg.coarse = TimeGrid::uniform(horizon, steps);
    cfg.oversample = q;
    cfg.seed = seed;
    cfg.path_index = path;
    return cfg;
}

} // namespace

TEST_CASE("Philox known answers", "[noise]") {
    using C = Philox4x32::Counter;
    CHECK(Philox4x32::generate(C{0, 0, 0, 0}, {0, 0}) == C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(Philox4x32::generate(C{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
          C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(Philox4x32::generate(C{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
          C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("Brownian increments", "[noise]") {
    const std::size_t draws = 100000;
    const double dt = 0.5;
    double s0 = 0, s1 = 0, s00 = 0, s11 = 0, s01 = 0;
    for (std::size_t path = 0; path < draws; ++path) {
        const SampledPath b = sample_bm(config(2, 1, 1, 99, path, dt));
        CHECK(max_abs(b.value(0)) == 0.0);
        const double x = b.value(1)[0], y = b.value(1)[1];
        s0 += x;
        s1 += y;
        s00 += x * x;
        s11 += y * y;
        s01 += x * y;
    }
    const double n = static_cast<double>(draws);
    const double var0 = s00 / n - (s0 / n) * (s0 / n), var1 = s11 / n - (s1 / n) * (s1 / n);
    const double cov = s01 / n - (s0 / n) * (s1 / n);
    CHECK(var0 == Approx(dt).epsilon(0.03));
    CHECK(var1 == Approx(dt).epsilon(0.03));
    CHECK(std::abs(cov) <= 0.03 * dt);
}

TEST_CASE("streams are keyed by seed and path", "[noise]") {
    const SampledPath a = sample_bm(config(3, 8, 4, 5, 2));
    CHECK(a.raw() == sample_bm(config(3, 8, 4, 5, 2)).raw());
    CHECK(a.raw() != sample_bm(config(3, 8, 4, 5, 3)).raw());
    CHECK(a.raw() != sample_bm(config(3, 8, 4, 6, 2)).raw());
    CHECK_THROWS_AS(sample_bm(config(0, 8, 4, 5)), std::invalid_argument);
}

TEST_CASE("Ito enhancement", "[noise]") {
    SECTION("no oversampling gives zero blocks") {
        const auto cfg = config(2, 16, 1, 3);
        CHECK(max_abs(ito_enhance(sample_bm(cfg), cfg.coarse).raw_blocks()) == 0.0);
    }
    SECTION("scalar identity and bracket") {
        const auto cfg = config(1, 64, 16, 4);
        const SampledPath fine = sample_bm(cfg);
        const RoughPath r = ito_enhance(fine, cfg.coarse);
        double qv = 0.0;
        for (std::size_t f = 0; f < fine.steps(); ++f) qv += std::pow(fine.increment(f, f + 1)[0], 2);
        const double bt = fine.value(fine.steps())[0];
        CHECK(r.second_level(0, 64)(0, 0) == Approx(0.5 * (bt * bt - qv)).margin(1e-12));
        CHECK(bracket_one_param(r, 64)(0, 0) == Approx(qv).margin(1e-12));
    }
    SECTION("bracket is the realized quadratic variation") {
        const auto cfg = config(3, 32, 8, 5);
        const SampledPath fine = sample_bm(cfg);
        const RoughPath r = ito_enhance(fine, cfg.coarse);
        for (std::size_t j = 0; j <= 32; j += 4)
            CHECK(max_abs_diff(bracket_one_param(r, j).span(), realized_qv(fine, 0, 8 * j).span()) <= 1e-12);
        CHECK(max_chen_defect(r) <= 1e-12);
    }
    SECTION("coarse grid must sit inside the fine grid") {
        const auto cfg = config(1, 8, 4, 6);
        CHECK_THROWS_AS(ito_enhance(sample_bm(cfg), TimeGrid::uniform(1.0, 5)), ShapeError);
    }
}

TEST_CASE("expected Ito bracket", "[noise]") {
    Mat mean(2, 2);
    const std::size_t paths = 200;
    for (std::size_t p = 0; p < paths; ++p) {
        const RoughPath r = bm_driver(2, 128, Enhancement::Ito, 42, 32, p);
        mean += bracket_one_param(r, 128);
    }
    mean *= 1.0 / static_cast<double>(paths);
    CHECK(mean(0, 0) == Approx(1.0).margin(0.05));
    CHECK(mean(1, 1) == Approx(1.0).margin(0.05));
    CHECK(std::abs(mean(0, 1)) <= 0.05);
    CHECK(std::abs(mean(1, 0)) <= 0.05);
}

TEST_CASE("Stratonovich enhancement", "[noise]") {
    const auto cfg = config(2, 64, 8, 8);
    const SampledPath fine = sample_bm(cfg);
    const RoughPath r = strat_enhance(fine, cfg.coarse);
    CHECK(is_weakly_geometric(r, 1e-12));
    for (std::size_t j = 0; j < r.nodes(); ++j) CHECK(max_abs(bracket_one_param(r, j).span()) <= 1e-12);
    CHECK(max_chen_defect(r) <= 1e-12);

    const auto cfg1 = config(1, 64, 8, 8);
    const RoughPath r1 = strat_enhance(sample_bm(cfg1), cfg1.coarse);
    const double bt = r1.path().value(64)[0];
    CHECK(r1.second_level(0, 64)(0, 0) == Approx(0.5 * bt * bt).margin(1e-12));
}

TEST_CASE("shifted Stratonovich enhancement", "[noise]") {
    const auto cfg = config(2, 32, 8, 10);
    const SampledPath fine = sample_bm(cfg);
    const RoughPath ito = ito_enhance(fine, cfg.coarse);
    const RoughPath shift = strat_shift(ito);
    const RoughPath strat = strat_enhance(fine, cfg.coarse);
    CHECK(max_chen_defect(shift) <= 1e-12);
    for (std::size_t j = 0; j < shift.nodes(); ++j) {
        const Mat expected = bracket_one_param(ito, j) - cfg.coarse[j] * Mat::identity(2);
        CHECK(max_abs_diff(bracket_one_param(shift, j).span(), expected.span()) <= 1e-12);
    }
    double fluctuation = 0.0;
    for (std::size_t k = 0; k < 32; ++k) {
        const Mat dev = realized_qv(fine, 8 * k, 8 * (k + 1)) - cfg.coarse.dt(k) * Mat::identity(2);
        fluctuation = std::max(fluctuation, frobenius_norm(dev));
    }
    for (std::size_t k = 0; k < 32; ++k)
        CHECK(frobenius_norm(sym(shift.block(k) - strat.block(k))) <= 0.5 * fluctuation + 1e-14);

    const auto flat = config(2, 16, 1, 11);
    const RoughPath zero = strat_shift(ito_enhance(sample_bm(flat), flat.coarse));
    for (std::size_t k = 0; k < 16; ++k) CHECK(max_abs_diff(zero.block(k).span(), (0.5 * flat.coarse.dt(k) * Mat::identity(2)).span()) == 0.0);
}

TEST_CASE("enhancement names", "[noise]") {
    for (Enhancement e : {Enhancement::Ito, Enhancement::Strat, Enhancement::StratShift}) CHECK(parse_enhancement(to_string(e)) == e);
    CHECK_FALSE(parse_enhancement("levy").has_value());
}
