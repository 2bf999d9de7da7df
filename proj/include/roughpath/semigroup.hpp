#pragma once

#include <roughpath/controlled.hpp>
#include <roughpath/errors.hpp>
#include <roughpath/grid.hpp>
#include <roughpath/integral.hpp>
#include <roughpath/rde.hpp>
#include <roughpath/rough_path.hpp>
#include <roughpath/tensor.hpp>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace roughpath {

/**
 * @brief Uniformly continuous semigroup S_t = exp(tA) on R^m.
 *
 * Growth constants (M, omega) with |S_t| <= M e^{omega t} are declared by
 * the caller or default to M = 1, omega = |A|_F, which is always valid
 * because the operator norm is dominated by the Frobenius norm.
 */
class MatrixSemigroup {
public:
    explicit MatrixSemigroup(Mat generator)
        : MatrixSemigroup(generator, 1.0, frobenius_norm(generator)) {}

    MatrixSemigroup(Mat generator, double growth_m, double growth_omega)
        : a_(std::move(generator)), m_(growth_m), omega_(growth_omega) {
        detail::require_shape(a_.is_square() && a_.rows() >= 1, "MatrixSemigroup: generator must be square");
        detail::require_arg(growth_m >= 1.0 && std::isfinite(growth_omega), "MatrixSemigroup: need M >= 1 and finite omega");
        if (!detail::all_finite(a_.span())) throw DataError("MatrixSemigroup: non-finite generator");
    }

    const Mat& generator() const noexcept { return a_; }
    std::size_t dim() const noexcept { return a_.rows(); }
    double growth_m() const noexcept { return m_; }
    double growth_omega() const noexcept { return omega_; }
    double growth_bound(double t) const { return m_ * std::exp(omega_ * t); }

    /// exp(tA) by scaling and squaring with a Pade approximant.
    Mat at(double t) const {
        detail::require_arg(t >= 0.0, "MatrixSemigroup: t must be >= 0");
        const std::size_t m = dim();
        Eigen::MatrixXd a(m, m);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = t * a_(i, j);
        const Eigen::MatrixXd e = a.exp();
        Mat out(m, m);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) out(i, j) = e(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        return out;
    }

private:
    Mat a_;
    double m_;
    double omega_;
};

/// S_t y.
inline Vec semigroup_apply(const MatrixSemigroup& g, double t, std::span<const double> y) {
    detail::require_arg(t >= 0.0, "semigroup_apply: t must be >= 0");
    detail::require_shape(y.size() == g.dim(), "semigroup_apply: dimension mismatch");
    return g.at(t) * y;
}

/// |y|_{D(A)} = |y| + |Ay|.
inline double graph_norm_da(const Mat& a, std::span<const double> y) {
    return euclidean_norm(y) + euclidean_norm((a * y).span());
}

/// |y|_{D(A^2)} = |y| + |Ay| + |A^2 y|.
inline double graph_norm_da2(const Mat& a, std::span<const double> y) {
    const Vec ay = a * y;
    return euclidean_norm(y) + euclidean_norm(ay.span()) + euclidean_norm((a * ay).span());
}

/**
 * S_{t_target - t_k} for every k <= target on one grid. Uniform grids use
 * powers of a single S_dt; other grids evaluate each exponential.
 */
class Propagators {
public:
    Propagators(const MatrixSemigroup& g, const TimeGrid& grid, std::size_t target) {
        detail::require_index(target < grid.nodes(), "Propagators: target out of range");
        ops_.resize(target + 1);
        if (grid.is_uniform() && target > 0) {
            const Mat step = g.at(grid.dt(0));
            ops_[target] = Mat::identity(g.dim());
            for (std::size_t k = target; k-- > 0;) ops_[k] = step * ops_[k + 1];
        } else {
            for (std::size_t k = 0; k <= target; ++k) ops_[k] = g.at(grid[target] - grid[k]);
        }
    }

    const Mat& from(std::size_t k) const { return ops_[k]; }

private:
    std::vector<Mat> ops_;
};

namespace detail {

// S (m x m) times a block stored as m x cols, row-major.
inline void apply_left(const Mat& s, std::span<const double> block, std::size_t cols, double* out) {
    const std::size_t m = s.rows();
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t c = 0; c < cols; ++c) {
            double acc = 0.0;
            for (std::size_t j = 0; j < m; ++j) acc += s(i, j) * block[j * cols + c];
            out[i * cols + c] = acc;
        }
}

} // namespace detail

/**
 * Rough convolution int_0^{t} S_{t-s} Y_s dX_s at t = t_index: builds
 * Upsilon_k = S_{t-t_k} Y_k and Upsilon'_k = S_{t-t_k} Y'_k on [0, t] and
 * integrates that controlled path.
 */
inline Vec rough_convolution(const MatrixSemigroup& g, const ControlledPath& c, const RoughPath& r, std::size_t t_index) {
    const std::size_t p = detail::integrand_output_dim(c, r);
    detail::require_shape(p == g.dim(), "rough_convolution: integrand output does not match semigroup dimension");
    detail::require_index(t_index < r.nodes(), "rough_convolution: t_index out of range");
    if (t_index == 0) return Vec(p);
    const std::size_t d = r.dim();
    const Propagators s(g, r.grid(), t_index);
    std::vector<double> ups((t_index + 1) * p * d), upsp((t_index + 1) * p * d * d);
    for (std::size_t k = 0; k <= t_index; ++k) {
        detail::apply_left(s.from(k), c.value(k), d, ups.data() + k * p * d);
        detail::apply_left(s.from(k), c.derivative_span(k), d * d, upsp.data() + k * p * d * d);
    }
    const ControlledPath upsilon(r.grid().subgrid(0, t_index), p * d, d, std::move(ups), std::move(upsp));
    return rough_integral(upsilon, r.restrict(0, t_index), 0, t_index).value;
}

/// Trapezoidal int_0^{t} S_{t-s} P_s ds at t = t_index.
inline Vec drift_convolution(const MatrixSemigroup& g, const SampledPath& path, std::size_t t_index) {
    detail::require_shape(path.dim() == g.dim(), "drift_convolution: dimension mismatch");
    detail::require_index(t_index < path.nodes(), "drift_convolution: t_index out of range");
    const std::size_t m = g.dim();
    Vec out(m);
    if (t_index == 0) return out;
    const Propagators s(g, path.grid(), t_index);
    for (std::size_t k = 0; k < t_index; ++k) {
        const double h = 0.5 * path.grid().dt(k);
        const Vec a = s.from(k) * path.value(k);
        const Vec b = s.from(k + 1) * path.value(k + 1);
        for (std::size_t i = 0; i < m; ++i) out[i] += h * (a[i] + b[i]);
    }
    return out;
}

/// dY = (A Y + f0(t,Y)) dt + f(t,Y) dX in mild form.
struct RPDEProblem {
    MatrixSemigroup semigroup;
    RoughPath driver;
    FunctionModel drift;
    FunctionModel diffusion;
    Vec xi;

    /// Same data without the linear part; used for shape checks and reductions.
    RDEProblem as_rde() const { return RDEProblem{driver, drift, diffusion, xi}; }

    void check() const {
        as_rde().check();
        detail::require_shape(semigroup.dim() == xi.size(), "RPDEProblem: semigroup dimension does not match state");
    }
};

namespace detail {

// One S_{dt_k} per cell; a single exponential on uniform grids.
inline std::vector<Mat> cell_propagators(const MatrixSemigroup& g, const TimeGrid& grid) {
    std::vector<Mat> out;
    out.reserve(grid.steps());
    if (grid.is_uniform()) {
        const Mat s = g.at(grid.dt(0));
        out.assign(grid.steps(), s);
    } else {
        for (std::size_t k = 0; k < grid.steps(); ++k) out.push_back(g.at(grid.dt(k)));
    }
    return out;
}

} // namespace detail

/**
 * Y_{k+1} = S_{dt_k} ( Y_k + f0 dt_k + f X_{k,k+1} + (D_y f f) : XX_{k,k+1} ),
 * all coefficients at (t_k, Y_k).
 */
inline RDESolution solve_mild_step(const RPDEProblem& p) {
    p.check();
    const RDEProblem rde = p.as_rde();
    const std::size_t dim = p.xi.size();
    const auto& g = p.driver.grid();
    const auto props = detail::cell_propagators(p.semigroup, g);
    std::vector<double> y(g.nodes() * dim, 0.0);
    std::copy(p.xi.begin(), p.xi.end(), y.begin());
    Vec fy, pre(dim);
    for (std::size_t k = 0; k < g.steps(); ++k) {
        detail::rde_step(rde, k, std::span<const double>(y.data() + k * dim, dim), fy, pre.data());
        const Vec next = props[k] * pre;
        std::copy(next.begin(), next.end(), y.begin() + static_cast<std::ptrdiff_t>((k + 1) * dim));
        detail::check_state(next.span(), k + 1, g[k + 1]);
    }
    return RDESolution{detail::solution_path(rde, std::move(y)), std::numeric_limits<double>::quiet_NaN(), std::nullopt};
}

namespace detail {

/*
 * Mild Picard sweep on one window. The convolutions over [t0, t_j] for all
 * targets j are accumulated with the semigroup property,
 *   C_{j+1} = S_{dt_j} (C_j + v_j),
 * which equals sum_l S_{t_j - t_l} v_l exactly in exact arithmetic.
 */
inline WindowResult mild_picard_window(const RPDEProblem& w, const PicardOptions& opts) {
    const std::size_t dim = w.xi.size(), d = w.driver.dim();
    const auto& g = w.driver.grid();
    const std::size_t n = g.nodes();
    const auto props = cell_propagators(w.semigroup, g);

    std::vector<double> orbit(n * dim);
    {
        Vec cur = w.xi;
        std::copy(cur.begin(), cur.end(), orbit.begin());
        for (std::size_t k = 0; k + 1 < n; ++k) {
            cur = props[k] * cur;
            std::copy(cur.begin(), cur.end(), orbit.begin() + static_cast<std::ptrdiff_t>((k + 1) * dim));
        }
    }

    WindowResult out;
    std::vector<double> y(n * dim), yp(n * dim * d), fv(n * dim * d), ynew(n * dim);
    const Vec f0 = w.diffusion.eval(g[0], w.xi.span());
    // Start from the orbit (S_{t-t0} xi, f(t0, xi)), the mild analogue of the constant path.
    y = orbit;
    for (std::size_t k = 0; k < n; ++k) std::copy(f0.begin(), f0.end(), yp.begin() + static_cast<std::ptrdiff_t>(k * dim * d));
    std::vector<Vec> gv(n);
    for (std::size_t it = 1; it <= opts.max_iter; ++it) {
        std::vector<Vec> local(n, Vec(dim));
        for (std::size_t k = 0; k < n; ++k) {
            std::span<const double> yk(y.data() + k * dim, dim);
            const Vec fk = w.diffusion.eval(g[k], yk);
            std::copy(fk.begin(), fk.end(), fv.begin() + static_cast<std::ptrdiff_t>(k * dim * d));
            gv[k] = w.drift.eval(g[k], yk);
            if (k + 1 < n) {
                const Mat ypk(dim, d, std::vector<double>(yp.begin() + static_cast<std::ptrdiff_t>(k * dim * d),
                                                          yp.begin() + static_cast<std::ptrdiff_t>((k + 1) * dim * d)));
                const Mat dk = w.diffusion.eval_jacobian(g[k], yk) * ypk;
                const Vec x = w.driver.increment(k, k + 1);
                add_local_term(local[k].data(), dim, d, fk.span(), dk.span(), x.data(), w.driver.block_span(k).data());
            }
        }
        Vec rough(dim), drift(dim);
        std::copy(orbit.begin(), orbit.begin() + static_cast<std::ptrdiff_t>(dim), ynew.begin());
        for (std::size_t k = 0; k + 1 < n; ++k) {
            const double h = 0.5 * g.dt(k);
            rough = props[k] * (rough + local[k]);
            drift = props[k] * (drift + h * gv[k]) + h * gv[k + 1];
            for (std::size_t i = 0; i < dim; ++i)
                ynew[(k + 1) * dim + i] = orbit[(k + 1) * dim + i] + drift[i] + rough[i];
        }
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

} // namespace detail

/**
 * Windowed Picard iteration of the mild map
 * Y_t = S_{t-t0} Y_{t0} + int_{t0}^t S_{t-s} f0(Y_s) ds + int_{t0}^t S_{t-s} f(Y_s) dX_s,
 * started on each window from the orbit of its initial value, with the same
 * window/halving/report rules as solve_picard.
 */
inline RDESolution solve_mild_picard(const RPDEProblem& p, const PicardOptions& opts = {}) {
    p.check();
    detail::require_arg(opts.tol > 0.0, "solve_mild_picard: tol must be > 0");
    detail::require_arg(opts.max_iter >= 1, "solve_mild_picard: max_iter must be >= 1");
    const auto& g = p.driver.grid();
    double window = opts.window > 0.0 ? opts.window : g.horizon() / 8.0;
    const std::size_t dim = p.xi.size();
    std::vector<double> y(g.nodes() * dim, 0.0);
    std::copy(p.xi.begin(), p.xi.end(), y.begin());
    PicardReport report;
    std::size_t k0 = 0;
    while (k0 < g.steps()) {
        const std::size_t k1 = detail::window_end(g, k0, window);
        const RPDEProblem w{p.semigroup, p.driver.restrict(k0, k1), p.drift, p.diffusion,
                            Vec(std::span<const double>(y.data() + k0 * dim, dim))};
        detail::WindowResult res = detail::mild_picard_window(w, opts);
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
    RDESolution sol{detail::solution_path(p.as_rde(), std::move(y)), std::numeric_limits<double>::quiet_NaN(), std::nullopt};
    if (opts.alpha > 1.0 / 3.0 && opts.alpha <= 0.5)
        report.final_seminorm = controlled_seminorm(sol.path, p.driver.path(), opts.alpha).seminorm;
    sol.picard = std::move(report);
    return sol;
}

/**
 * Residual of the mild equation at nodes `stride`, 2 stride, ... (and the
 * last node): |Y_t - S_t xi - drift_convolution - rough_convolution|, with
 * the convolutions evaluated through the public operations. O(n^2 / stride).
 */
inline double mild_residual(const RDESolution& s, const RPDEProblem& p, std::size_t stride = 1) {
    p.check();
    detail::require_arg(stride >= 1, "mild_residual: stride must be >= 1");
    const auto& c = s.path;
    const std::size_t dim = p.xi.size();
    std::vector<double> gv;
    for (std::size_t k = 0; k < c.nodes(); ++k) {
        const Vec gk = p.drift.eval(c.grid()[k], c.value(k));
        gv.insert(gv.end(), gk.begin(), gk.end());
    }
    const SampledPath drift(c.grid(), dim, std::move(gv));
    const ControlledPath integrand = compose_function(p.diffusion, c);
    double worst = 0.0;
    for (std::size_t j = 0; j < c.nodes(); j += stride) {
        const Vec expected = semigroup_apply(p.semigroup, c.grid()[j] - c.grid()[0], p.xi.span()) +
                             drift_convolution(p.semigroup, drift, j) + rough_convolution(p.semigroup, integrand, p.driver, j);
        worst = std::max(worst, sup_distance(c.value(j), expected.span()));
        if (j + stride >= c.nodes() && j != c.nodes() - 1) j = c.nodes() - 1 - stride;
    }
    return worst;
}

} // namespace roughpath
