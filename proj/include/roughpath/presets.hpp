#pragma once

#include <roughpath/controlled.hpp>
#include <roughpath/errors.hpp>
#include <roughpath/grid.hpp>
#include <roughpath/noise.hpp>
#include <roughpath/rde.hpp>
#include <roughpath/rough_path.hpp>
#include <roughpath/semigroup.hpp>
#include <roughpath/tensor.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace roughpath {

/// Driver sample: fine Brownian path plus its enhancement on a uniform coarse grid.
struct DriverSample {
    SampledPath fine;
    RoughPath driver;
};

inline DriverSample simulate_driver(std::size_t dim, std::size_t steps, double horizon, std::size_t oversample,
                                    std::uint64_t seed, std::uint64_t path_index, Enhancement kind) {
    NoiseConfig cfg;
    cfg.dim = dim;
    cfg.coarse = TimeGrid::uniform(horizon, steps);
    cfg.oversample = oversample;
    cfg.seed = seed;
    cfg.path_index = path_index;
    SampledPath fine = sample_bm(cfg);
    RoughPath r = enhance(fine, cfg.coarse, kind);
    return {std::move(fine), std::move(r)};
}

/**
 * @brief Named scalar RDE driven by one-dimensional noise.
 *
 * `exact`, when present, maps (t, B_t) to the closed-form solution.
 * `deterministic` presets have f = 0, so the driver does not matter and
 * the Picard solver (trapezoidal drift) is used.
 */
struct RDEPreset {
    std::string name;
    Enhancement enhancement = Enhancement::Strat;
    FunctionModel drift;
    FunctionModel diffusion;
    Vec xi;
    std::function<double(double, double)> exact;
    bool deterministic = false;

    RDEProblem problem(RoughPath driver) const { return RDEProblem{std::move(driver), drift, diffusion, xi}; }

    RDESolution solve(const RDEProblem& p) const {
        if (!deterministic) return solve_step_scheme(p);
        PicardOptions opts;
        opts.tol = 1e-13;
        return solve_picard(p, opts);
    }
};

inline constexpr double gbm_sigma = 0.5;
inline constexpr double ou_theta = 1.0;
inline constexpr double ou_sigma = 0.5;

/**
 * Names: gbm, linear-drift, sine-diffusion, ou, optionally suffixed with
 * -ito, -strat or -strat-shift; without a suffix `fallback` is used.
 */
inline RDEPreset rde_preset(std::string_view name, Enhancement fallback = Enhancement::Strat) {
    RDEPreset p;
    p.enhancement = fallback;
    std::string_view base = name;
    for (Enhancement e : {Enhancement::StratShift, Enhancement::Strat, Enhancement::Ito}) {
        const std::string suffix = "-" + std::string(to_string(e));
        if (base.size() > suffix.size() && base.substr(base.size() - suffix.size()) == suffix) {
            base = base.substr(0, base.size() - suffix.size());
            p.enhancement = e;
            break;
        }
    }
    p.name = std::string(name);
    p.xi = Vec{1.0};
    const double s = gbm_sigma;
    if (base == "gbm") {
        p.drift = FunctionModel::constant(Vec{0.0}, 1);
        p.diffusion = FunctionModel::affine(Mat{{s}}, Vec{0.0});
        if (p.enhancement == Enhancement::Ito)
            p.exact = [s](double t, double b) { return std::exp(s * b - 0.5 * s * s * t); };
        else
            p.exact = [s](double, double b) { return std::exp(s * b); };
    } else if (base == "linear-drift") {
        p.drift = FunctionModel::identity(1);
        p.diffusion = FunctionModel::constant(Vec{0.0}, 1);
        p.exact = [](double t, double) { return std::exp(t); };
        p.deterministic = true;
    } else if (base == "sine-diffusion") {
        p.drift = FunctionModel::constant(Vec{0.0}, 1);
        p.diffusion = FunctionModel::elementwise(
            1, [](double y) { return std::sin(y); }, [](double y) { return std::cos(y); }, [](double y) { return -std::sin(y); });
    } else if (base == "ou") {
        p.drift = FunctionModel::affine(Mat{{-ou_theta}}, Vec{0.0});
        p.diffusion = FunctionModel::constant(Vec{ou_sigma}, 1);
    } else {
        throw std::invalid_argument("unknown RDE preset '" + std::string(name) +
                                    "' (expected gbm, linear-drift, sine-diffusion or ou)");
    }
    return p;
}

/// RPDE presets on R^m with generator A: orbit (f0 = f = 0), additive (f = Sigma), linear (f(y) = sigma y).
inline RPDEProblem rpde_preset(std::string_view name, const Mat& a, RoughPath driver) {
    const std::size_t m = a.rows(), d = driver.dim();
    detail::require_shape(a.is_square() && m >= 1, "rpde_preset: A must be square");
    const MatrixSemigroup g(a);
    const Vec xi(m, 1.0);
    const FunctionModel zero_drift = FunctionModel::constant(Vec(m), m);
    if (name == "orbit") return RPDEProblem{g, std::move(driver), zero_drift, FunctionModel::constant(Vec(m * d), m), xi};
    if (name == "additive") return RPDEProblem{g, std::move(driver), zero_drift, FunctionModel::constant(Vec(m * d, 0.5), m), xi};
    if (name == "linear") {
        // f(y)[i][a] = sigma y_i for every driver coordinate a.
        Mat lin(m * d, m);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t b = 0; b < d; ++b) lin(i * d + b, i) = gbm_sigma;
        return RPDEProblem{g, std::move(driver), zero_drift, FunctionModel::affine(lin, Vec(m * d)), xi};
    }
    throw std::invalid_argument("unknown RPDE preset '" + std::string(name) + "' (expected orbit, additive or linear)");
}

struct ConvergenceConfig {
    std::string preset = "gbm-strat";
    int coarsest_level = 6;   ///< h = 2^-coarsest_level
    int finest_level = 12;
    std::size_t samples = 64;
    std::uint64_t seed = 0;
    std::size_t oversample = 32;  ///< fine steps per cell of the finest rung
    std::size_t jobs = 1;
    double horizon = 1.0;
};

struct ConvergenceRow {
    double h = 0.0;
    double mean_strong_error = 0.0;
    double fitted_order = 0.0;
};

/// Least-squares slope of log(err) against log(h).
inline double fitted_order(const std::vector<double>& h, const std::vector<double>& err) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t m = 0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        if (!(err[i] > 0.0)) continue;
        const double x = std::log(h[i]), y = std::log(err[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++m;
    }
    if (m < 2) throw NumericalError("fitted_order: fewer than two positive errors");
    const double mm = static_cast<double>(m);
    return (mm * sxy - sx * sy) / (mm * sxx - sx * sx);
}

namespace detail {

// sup over rung nodes of |Y_k - reference(t_k)| for one sample, each rung.
inline std::vector<double> sample_errors(const RDEPreset& preset, const ConvergenceConfig& cfg, std::uint64_t path) {
    const std::size_t finest = std::size_t{1} << cfg.finest_level;
    const DriverSample base = simulate_driver(1, finest, cfg.horizon, cfg.oversample, cfg.seed, path, preset.enhancement);
    const std::size_t q_total = cfg.oversample * finest;

    // Reference on the fine grid when no closed form exists.
    std::vector<double> reference;
    if (!preset.exact) {
        const RoughPath fine_driver = enhance(base.fine, base.fine.grid(), preset.enhancement);
        const RDESolution ref = preset.solve(preset.problem(fine_driver));
        reference.reserve(ref.nodes());
        for (std::size_t k = 0; k < ref.nodes(); ++k) reference.push_back(ref.state(k)[0]);
    }

    std::vector<double> errs;
    for (int level = cfg.coarsest_level; level <= cfg.finest_level; ++level) {
        const std::size_t n = std::size_t{1} << level;
        const TimeGrid coarse = TimeGrid::uniform(cfg.horizon, n);
        const RDESolution sol = preset.solve(preset.problem(enhance(base.fine, coarse, preset.enhancement)));
        const std::size_t stride = q_total / n;
        double worst = 0.0;
        for (std::size_t k = 0; k <= n; ++k) {
            const std::size_t f = k * stride;
            const double target = preset.exact ? preset.exact(coarse[k], base.fine.value(f)[0]) : reference[f];
            worst = std::max(worst, std::abs(sol.state(k)[0] - target));
        }
        errs.push_back(worst);
    }
    return errs;
}

} // namespace detail

/**
 * Mean over samples of the sup-norm error on each rung h = 2^-level; every
 * rung of one sample reuses the same fine Brownian path. fitted_order is the
 * least-squares slope over the whole ladder, repeated on each row.
 * Results do not depend on `jobs`: per-sample errors are summed in sample order.
 */
inline std::vector<ConvergenceRow> convergence_study(const ConvergenceConfig& cfg) {
    if (cfg.finest_level < cfg.coarsest_level || cfg.finest_level - cfg.coarsest_level + 1 < 4)
        throw std::invalid_argument("convergence: need a ladder of at least 4 dyadic step sizes, got " +
                                    std::to_string(std::max(0, cfg.finest_level - cfg.coarsest_level + 1)));
    detail::require_arg(cfg.coarsest_level >= 1 && cfg.finest_level <= 20, "convergence: levels must lie in [1, 20]");
    detail::require_arg(cfg.samples >= 1, "convergence: need at least one sample");
    detail::require_arg(cfg.oversample >= 1 && cfg.horizon > 0.0, "convergence: invalid oversample or horizon");
    const RDEPreset preset = rde_preset(cfg.preset);
    const std::size_t rungs = static_cast<std::size_t>(cfg.finest_level - cfg.coarsest_level + 1);

    std::vector<std::vector<double>> per_sample(cfg.samples);
    const std::size_t jobs = std::max<std::size_t>(1, std::min(cfg.jobs, cfg.samples));
    std::vector<std::exception_ptr> failures(jobs);
    {
        std::vector<std::jthread> workers;
        for (std::size_t w = 0; w < jobs; ++w)
            workers.emplace_back([&, w] {
                try {
                    for (std::size_t s = w; s < cfg.samples; s += jobs) per_sample[s] = detail::sample_errors(preset, cfg, s);
                } catch (...) {
                    failures[w] = std::current_exception();
                }
            });
    }
    for (auto& e : failures)
        if (e) std::rethrow_exception(e);

    std::vector<double> hs, means;
    for (std::size_t r = 0; r < rungs; ++r) {
        double sum = 0.0;
        for (const auto& e : per_sample) sum += e[r];
        hs.push_back(std::ldexp(cfg.horizon, -(cfg.coarsest_level + static_cast<int>(r))));
        means.push_back(sum / static_cast<double>(cfg.samples));
    }
    const double order = fitted_order(hs, means);
    std::vector<ConvergenceRow> rows;
    for (std::size_t r = 0; r < rungs; ++r) rows.push_back({hs[r], means[r], order});
    return rows;
}

} // namespace roughpath
