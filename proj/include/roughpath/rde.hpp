#pragma once

#include <roughpath/controlled.hpp>
#include <roughpath/errors.hpp>
#include <roughpath/grid.hpp>
#include <roughpath/integral.hpp>
#include <roughpath/rough_path.hpp>
#include <roughpath/tensor.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace roughpath {

/**
 * @brief dY = f0(t, Y) dt + f(t, Y) dX, Y_0 = xi, on the driver's grid.
 *
 * drift maps R^p -> R^p; diffusion maps R^p -> R^{p x d} (flattened
 * row-major, so out_dim = p*d) and must provide its Jacobian.
 */
struct RDEProblem {
    RoughPath driver;
    FunctionModel drift;
    FunctionModel diffusion;
    Vec xi;

    std::size_t state_dim() const noexcept { return xi.size(); }

    void check() const {
        const std::size_t p = xi.size(), d = driver.dim();
        detail::require_arg(p >= 1, "RDEProblem: empty initial value");
        detail::require_shape(drift.in_dim == p && drift.out_dim == p, "RDEProblem: drift must map R^p -> R^p");
        detail::require_shape(diffusion.in_dim == p && diffusion.out_dim == p * d,
                              "RDEProblem: diffusion must map R^p -> R^{p x d}");
        detail::require_arg(static_cast<bool>(drift.value) && static_cast<bool>(diffusion.value) &&
                                static_cast<bool>(diffusion.jacobian),
                            "RDEProblem: missing evaluator");
        if (!detail::all_finite(xi.span())) throw DataError("RDEProblem: non-finite initial value");
    }

    /// Same coefficients, driver cut to nodes k0..k1, started from y0.
    RDEProblem restricted(std::size_t k0, std::size_t k1, Vec y0) const {
        return RDEProblem{driver.restrict(k0, k1), drift, diffusion, std::move(y0)};
    }
};

struct PicardOptions {
    /// Window length in time units; <= 0 selects horizon / 8.
    double window = 0.0;
    std::size_t max_iter = 200;
    double tol = 1e-10;
    std::size_t max_halvings = 6;
    /// Exponent used for the reported controlled seminorm.
    double alpha = 0.4;
};

struct PicardReport {
    std::vector<std::pair<std::size_t, std::size_t>> windows;  ///< node ranges
    std::vector<std::size_t> iterations;                       ///< per window
    std::size_t halvings = 0;
    bool converged = true;
    double final_seminorm = std::numeric_limits<double>::quiet_NaN();
};

/// Controlled path (Y, Y') with Y'_k = f(t_k, Y_k), plus diagnostics.
struct RDESolution {
    ControlledPath path;
    double residual = std::numeric_limits<double>::quiet_NaN();
    std::optional<PicardReport> picard;

    std::size_t nodes() const noexcept { return path.nodes(); }
    std::span<const double> state(std::size_t k) const { return path.value(k); }
    std::span<const double> terminal() const { return path.value(path.nodes() - 1); }
};

namespace detail {

inline void check_state(std::span<const double> y, std::size_t k, double t) {
    if (!all_finite(y))
        throw NumericalError("RDE solver: non-finite state at node " + std::to_string(k) + " (t=" + std::to_string(t) + ")");
}

// (D_y f . f)(t, y) as a (p*d) x d matrix: the Gubinelli derivative of f(Y) when Y' = f(Y).
inline Mat diffusion_derivative(const FunctionModel& f, double t, std::span<const double> y, std::span<const double> fy,
                                std::size_t d) {
    const std::size_t p = y.size();
    const Mat yp(p, d, std::vector<double>(fy.begin(), fy.end()));
    return f.eval_jacobian(t, y) * yp;
}

// Y_{k+1} = Y_k + f0 dt + f X_{k,k+1} + (Df f) : XX_{k,k+1}; writes into next.
inline void rde_step(const RDEProblem& p, std::size_t k, std::span<const double> y, Vec& fy, double* next) {
    const std::size_t dim = y.size(), d = p.driver.dim();
    const double t = p.driver.grid()[k];
    const double dt = p.driver.grid().dt(k);
    const Vec g = p.drift.eval(t, y);
    fy = p.diffusion.eval(t, y);
    const Mat fp = diffusion_derivative(p.diffusion, t, y, fy.span(), d);
    const Vec x = p.driver.increment(k, k + 1);
    for (std::size_t i = 0; i < dim; ++i) next[i] = y[i] + g[i] * dt;
    add_local_term(next, dim, d, fy.span(), fp.span(), x.data(), p.driver.block_span(k).data());
}

inline ControlledPath solution_path(const RDEProblem& p, std::vector<double> values) {
    const std::size_t dim = p.state_dim(), d = p.driver.dim();
    const auto& g = p.driver.grid();
    std::vector<double> derivs;
    derivs.reserve(g.nodes() * dim * d);
    for (std::size_t k = 0; k < g.nodes(); ++k) {
        const Vec fy = p.diffusion.eval(g[k], std::span<const double>(values.data() + k * dim, dim));
        derivs.insert(derivs.end(), fy.begin(), fy.end());
    }
    return ControlledPath(g, dim, d, std::move(values), std::move(derivs));
}

} // namespace detail

/**
 * One pass of the second-order step
 * Y_{k+1} = Y_k + f0(t_k,Y_k) dt_k + f(t_k,Y_k) X_{k,k+1} + (D_y f f)(t_k,Y_k) : XX_{k,k+1}.
 */
inline RDESolution solve_step_scheme(const RDEProblem& p) {
    p.check();
    const std::size_t dim = p.state_dim();
    const auto& g = p.driver.grid();
    std::vector<double> y(g.nodes() * dim, 0.0);
    std::copy(p.xi.begin(), p.xi.end(), y.begin());
    Vec fy;
    for (std::size_t k = 0; k < g.steps(); ++k) {
        detail::rde_step(p, k, std::span<const double>(y.data() + k * dim, dim), fy, y.data() + (k + 1) * dim);
        detail::check_state(std::span<const double>(y.data() + (k + 1) * dim, dim), k + 1, g[k + 1]);
    }
    return RDESolution{detail::solution_path(p, std::move(y)), std::numeric_limits<double>::quiet_NaN(), std::nullopt};
}

namespace detail {

struct WindowResult {
    std::vector<double> values;  // (m+1) * p
    std::size_t iterations = 0;
    bool converged = false;
};

// Picard iteration of (Y, Y') -> (xi + int f0(Y) ds + int f(Y) dX, f(Y)) on one window.
inline WindowResult picard_window(const RDEProblem& w, const PicardOptions& opts) {
    const std::size_t dim = w.state_dim(), d = w.driver.dim();
    const auto& g = w.driver.grid();
    const std::size_t n = g.nodes();
    WindowResult out;
    std::vector<double> y(n * dim), yp(n * dim * d);
    const Vec f0 = w.diffusion.eval(g[0], w.xi.span());
    for (std::size_t k = 0; k < n; ++k) {
        std::copy(w.xi.begin(), w.xi.end(), y.begin() + static_cast<std::ptrdiff_t>(k * dim));
        std::copy(f0.begin(), f0.end(), yp.begin() + static_cast<std::ptrdiff_t>(k * dim * d));
    }
    std::vector<double> fv(n * dim * d), fd(n * dim * d * d), gv(n * dim), ynew(n * dim);
    for (std::size_t it = 1; it <= opts.max_iter; ++it) {
        for (std::size_t k = 0; k < n; ++k) {
            std::span<const double> yk(y.data() + k * dim, dim);
            const Vec fk = w.diffusion.eval(g[k], yk);
            const Mat ypk(dim, d, std::vector<double>(yp.begin() + static_cast<std::ptrdiff_t>(k * dim * d),
                                                      yp.begin() + static_cast<std::ptrdiff_t>((k + 1) * dim * d)));
            const Mat dk = w.diffusion.eval_jacobian(g[k], yk) * ypk;
            const Vec gk = w.drift.eval(g[k], yk);
            std::copy(fk.begin(), fk.end(), fv.begin() + static_cast<std::ptrdiff_t>(k * dim * d));
            std::copy(dk.span().begin(), dk.span().end(), fd.begin() + static_cast<std::ptrdiff_t>(k * dim * d * d));
            std::copy(gk.begin(), gk.end(), gv.begin() + static_cast<std::ptrdiff_t>(k * dim));
        }
        const ControlledPath integrand(g, dim * d, d, fv, fd);
        const ControlledPath rough = integral_as_controlled(integrand, w.driver);
        const SampledPath drift = drift_integral_path(SampledPath(g, dim, gv));
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t i = 0; i < dim; ++i)
                ynew[k * dim + i] = w.xi[i] + drift.value(k)[i] + rough.value(k)[i];
        for (std::size_t k = 0; k < n; ++k) check_state(std::span<const double>(ynew.data() + k * dim, dim), k, g[k]);
        const double dist = std::max(sup_distance(ynew, y), sup_distance(fv, yp));
        y.swap(ynew);
        yp = fv;
        out.iterations = it;
        if (dist <= opts.tol) {
            out.converged = true;
            break;
        }
    }
    out.values = std::move(y);
    return out;
}

// Largest k1 > k0 with t_{k1} - t_{k0} <= window (at least one cell).
inline std::size_t window_end(const TimeGrid& g, std::size_t k0, double window) {
    std::size_t k1 = k0 + 1;
    const double slack = 1e-12 * std::max(1.0, std::abs(g.back()));
    while (k1 + 1 < g.nodes() && g[k1 + 1] - g[k0] <= window + slack) ++k1;
    return k1;
}

} // namespace detail

/**
 * Windowed Picard iteration of the fixed-point map
 * (Y, Y') -> (xi + int f0(Y) ds + int f(Y) dX, f(Y)), started on each window
 * from the constant path (Y_{t0}, f(t0, Y_{t0})) and concatenated.
 *
 * A window that fails to converge in max_iter sweeps is retried with half
 * the window length, at most max_halvings times in total. If it still fails
 * the last iterate is kept, report.converged is false, and solving continues
 * so the returned path covers the whole grid.
 */
inline RDESolution solve_picard(const RDEProblem& p, const PicardOptions& opts = {}) {
    p.check();
    detail::require_arg(opts.tol > 0.0, "solve_picard: tol must be > 0");
    detail::require_arg(opts.max_iter >= 1, "solve_picard: max_iter must be >= 1");
    const auto& g = p.driver.grid();
    double window = opts.window > 0.0 ? opts.window : g.horizon() / 8.0;
    detail::require_arg(std::isfinite(window), "solve_picard: window must be finite");

    const std::size_t dim = p.state_dim();
    std::vector<double> y(g.nodes() * dim, 0.0);
    std::copy(p.xi.begin(), p.xi.end(), y.begin());
    PicardReport report;
    std::size_t k0 = 0;
    while (k0 < g.steps()) {
        const std::size_t k1 = detail::window_end(g, k0, window);
        const Vec y0(std::span<const double>(y.data() + k0 * dim, dim));
        detail::WindowResult res = detail::picard_window(p.restricted(k0, k1, y0), opts);
        if (!res.converged && report.halvings < opts.max_halvings && k1 > k0 + 1) {
            window *= 0.5;
            ++report.halvings;
            continue;
        }
        if (!res.converged) report.converged = false;
        std::copy(res.values.begin() + static_cast<std::ptrdiff_t>(dim), res.values.end(),
                  y.begin() + static_cast<std::ptrdiff_t>((k0 + 1) * dim));
        report.windows.emplace_back(k0, k1);
        report.iterations.push_back(res.iterations);
        k0 = k1;
    }
    RDESolution sol{detail::solution_path(p, std::move(y)), std::numeric_limits<double>::quiet_NaN(), std::nullopt};
    if (opts.alpha > 1.0 / 3.0 && opts.alpha <= 0.5)
        report.final_seminorm = controlled_seminorm(sol.path, p.driver.path(), opts.alpha).seminorm;
    sol.picard = std::move(report);
    return sol;
}

/**
 * max_k |Y_k - xi - int_0^{t_k} f0(Y) ds - int_0^{t_k} f(Y) dX|, with the
 * integrals evaluated by drift_integral and the rough integral of
 * compose_function(f, (Y, Y')).
 */
inline double residual_check(const RDESolution& s, const RDEProblem& p) {
    p.check();
    const auto& c = s.path;
    detail::require_shape(c.grid() == p.driver.grid() && c.value_dim() == p.state_dim(),
                          "residual_check: solution does not match problem");
    const std::size_t dim = p.state_dim();
    std::vector<double> gv;
    gv.reserve(c.nodes() * dim);
    for (std::size_t k = 0; k < c.nodes(); ++k) {
        const Vec gk = p.drift.eval(c.grid()[k], c.value(k));
        gv.insert(gv.end(), gk.begin(), gk.end());
    }
    const SampledPath drift = drift_integral_path(SampledPath(c.grid(), dim, std::move(gv)));
    const ControlledPath rough = integral_as_controlled(compose_function(p.diffusion, c), p.driver);
    double worst = 0.0;
    for (std::size_t k = 0; k < c.nodes(); ++k)
        for (std::size_t i = 0; i < dim; ++i)
            worst = std::max(worst, std::abs(c.value(k)[i] - p.xi[i] - drift.value(k)[i] - rough.value(k)[i]));
    return worst;
}

/// sup_k |Y_k| <= bound.
inline bool apriori_bound_check(const RDESolution& s, const RDEProblem& p, double bound) {
    detail::require_arg(bound > 0.0, "apriori_bound_check: bound must be > 0");
    detail::require_shape(s.path.value_dim() == p.state_dim(), "apriori_bound_check: solution does not match problem");
    return sup_norm(s.path.value_path()) <= bound;
}

} // namespace roughpath
