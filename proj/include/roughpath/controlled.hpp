#pragma once

#include <roughpath/errors.hpp>
#include <roughpath/grid.hpp>
#include <roughpath/tensor.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace roughpath {

/**
 * @brief Controlled rough path (Y, Y') sampled on a grid.
 *
 * Y_k lives in R^q and the Gubinelli derivative Y'_k in R^{q x d}, where d
 * is the driver dimension. Operator-valued integrands Y_k in L(R^d, R^p) are
 * stored flattened with q = p*d (row-major p x d), so Y'_k is then the
 * (p*d) x d matrix holding Y'[i][a][b] at row i*d + a, column b.
 *
 * Remainders are never stored; see remainder().
 */
class ControlledPath {
public:
    ControlledPath() = default;

    ControlledPath(TimeGrid grid, std::size_t value_dim, std::size_t driver_dim, std::vector<double> values,
                   std::vector<double> derivatives)
        : grid_(std::move(grid)), q_(value_dim), d_(driver_dim), y_(std::move(values)), yp_(std::move(derivatives)) {
        detail::require_arg(q_ >= 1 && d_ >= 1, "ControlledPath: dimensions must be >= 1");
        detail::require_shape(y_.size() == grid_.nodes() * q_, "ControlledPath: value count does not match grid");
        detail::require_shape(yp_.size() == grid_.nodes() * q_ * d_, "ControlledPath: derivative count does not match grid");
        if (!detail::all_finite(y_) || !detail::all_finite(yp_)) throw DataError("ControlledPath: non-finite entry");
    }

    /// Builds (Y, Y') from per-node callbacks y(k) -> Vec[q] and yp(k) -> Mat[q][d].
    template <class FY, class FYp>
    static ControlledPath from_nodes(const TimeGrid& grid, std::size_t q, std::size_t d, FY&& y, FYp&& yp) {
        std::vector<double> vy, vyp;
        vy.reserve(grid.nodes() * q);
        vyp.reserve(grid.nodes() * q * d);
        for (std::size_t k = 0; k < grid.nodes(); ++k) {
            const Vec v = y(k);
            const Mat m = yp(k);
            detail::require_shape(v.size() == q && m.rows() == q && m.cols() == d, "ControlledPath::from_nodes: shape mismatch");
            vy.insert(vy.end(), v.begin(), v.end());
            vyp.insert(vyp.end(), m.span().begin(), m.span().end());
        }
        return ControlledPath(grid, q, d, std::move(vy), std::move(vyp));
    }

    /// (Y, 0): a path with vanishing Gubinelli derivative.
    static ControlledPath with_zero_derivative(const SampledPath& y, std::size_t driver_dim) {
        return ControlledPath(y.grid(), y.dim(), driver_dim, y.raw(), std::vector<double>(y.nodes() * y.dim() * driver_dim, 0.0));
    }

    const TimeGrid& grid() const noexcept { return grid_; }
    std::size_t value_dim() const noexcept { return q_; }
    std::size_t driver_dim() const noexcept { return d_; }
    std::size_t nodes() const noexcept { return grid_.nodes(); }
    std::size_t steps() const noexcept { return grid_.steps(); }

    std::span<const double> value(std::size_t k) const { return {y_.data() + k * q_, q_}; }
    std::span<const double> derivative_span(std::size_t k) const { return {yp_.data() + k * q_ * d_, q_ * d_}; }
    Vec value_vec(std::size_t k) const { return Vec(value(k)); }
    Mat derivative(std::size_t k) const {
        auto s = derivative_span(k);
        return Mat(q_, d_, std::vector<double>(s.begin(), s.end()));
    }

    const std::vector<double>& raw_values() const noexcept { return y_; }
    const std::vector<double>& raw_derivatives() const noexcept { return yp_; }

    SampledPath value_path() const { return SampledPath(grid_, q_, y_); }
    SampledPath derivative_path() const { return SampledPath(grid_, q_ * d_, yp_); }

    ControlledPath restrict(std::size_t k0, std::size_t k1) const {
        TimeGrid sub = grid_.subgrid(k0, k1);
        std::vector<double> vy(y_.begin() + static_cast<std::ptrdiff_t>(k0 * q_), y_.begin() + static_cast<std::ptrdiff_t>((k1 + 1) * q_));
        std::vector<double> vyp(yp_.begin() + static_cast<std::ptrdiff_t>(k0 * q_ * d_),
                                yp_.begin() + static_cast<std::ptrdiff_t>((k1 + 1) * q_ * d_));
        return ControlledPath(std::move(sub), q_, d_, std::move(vy), std::move(vyp));
    }

    /// Components offset..offset+len of Y with the matching rows of Y'.
    ControlledPath project(std::size_t offset, std::size_t len) const {
        detail::require_index(len >= 1 && offset + len <= q_, "ControlledPath::project: range out of bounds");
        std::vector<double> vy, vyp;
        for (std::size_t k = 0; k < nodes(); ++k) {
            vy.insert(vy.end(), y_.begin() + static_cast<std::ptrdiff_t>(k * q_ + offset),
                      y_.begin() + static_cast<std::ptrdiff_t>(k * q_ + offset + len));
            vyp.insert(vyp.end(), yp_.begin() + static_cast<std::ptrdiff_t>((k * q_ + offset) * d_),
                       yp_.begin() + static_cast<std::ptrdiff_t>((k * q_ + offset + len) * d_));
        }
        return ControlledPath(grid_, len, d_, std::move(vy), std::move(vyp));
    }

private:
    TimeGrid grid_;
    std::size_t q_ = 0;
    std::size_t d_ = 0;
    std::vector<double> y_;
    std::vector<double> yp_;
};

namespace detail {

inline void check_driver(const ControlledPath& c, const SampledPath& x) {
    require_shape(c.grid() == x.grid(), "controlled path and driver live on different grids");
    require_shape(c.driver_dim() == x.dim(), "controlled path derivative does not match driver dimension");
}

} // namespace detail

/// R^Y_{s,t} = Y_{s,t} - Y'_s X_{s,t} at nodes (i, j).
inline Vec remainder(const ControlledPath& c, const SampledPath& x, std::size_t i, std::size_t j) {
    detail::check_driver(c, x);
    detail::require_index(i < c.nodes() && j < c.nodes(), "remainder: index out of range");
    const std::size_t q = c.value_dim(), d = c.driver_dim();
    const Vec dx = x.increment(i, j);
    auto yi = c.value(i), yj = c.value(j);
    auto ypi = c.derivative_span(i);
    Vec r(q);
    for (std::size_t a = 0; a < q; ++a) {
        double lin = 0.0;
        for (std::size_t b = 0; b < d; ++b) lin += ypi[a * d + b] * dx[b];
        r[a] = yj[a] - yi[a] - lin;
    }
    return r;
}

/// Seminorm pieces of a controlled path; all suprema over grid pairs.
struct ControlledNorms {
    double derivative_holder = 0.0;  ///< ||Y'||_alpha
    double remainder_holder = 0.0;   ///< ||R^Y||_{2 alpha}
    double seminorm = 0.0;           ///< ||Y,Y'||_{X,2alpha}
    double seminorm_with_start = 0.0; ///< |Y,Y'|_{X,2alpha} = |Y'_0| + ||Y,Y'||
    double norm = 0.0;               ///< |||Y,Y'||| = |Y_0| + |Y'_0| + ||Y,Y'||
};

/// ||R^Y||_{beta} over ordered node pairs s != t.
inline double remainder_holder(const ControlledPath& c, const SampledPath& x, double beta) {
    detail::check_driver(c, x);
    const std::size_t q = c.value_dim(), d = c.driver_dim();
    const auto& g = c.grid();
    const double* y = c.raw_values().data();
    const double* yp = c.raw_derivatives().data();
    const double* xv = x.raw().data();
    double best = 0.0;
    for (std::size_t i = 0; i < c.nodes(); ++i)
        for (std::size_t j = 0; j < c.nodes(); ++j) {
            if (i == j) continue;
            double s = 0.0;
            for (std::size_t a = 0; a < q; ++a) {
                double lin = 0.0;
                for (std::size_t b = 0; b < d; ++b) lin += yp[(i * q + a) * d + b] * (xv[j * d + b] - xv[i * d + b]);
                const double r = y[j * q + a] - y[i * q + a] - lin;
                s += r * r;
            }
            best = std::max(best, std::sqrt(s) / std::pow(std::abs(g[j] - g[i]), beta));
        }
    return best;
}

inline ControlledNorms controlled_seminorm(const ControlledPath& c, const SampledPath& x, double alpha,
                                           const SeminormOptions& opts = {}) {
    detail::require_arg(alpha > 1.0 / 3.0 && alpha <= 0.5, "controlled_seminorm: alpha must lie in (1/3, 1/2]");
    detail::check_driver(c, x);
    ControlledNorms n;
    if (c.nodes() > opts.max_nodes) {
        if (!opts.subsample_large) throw std::invalid_argument("controlled_seminorm: grid exceeds max_nodes");
        const std::size_t stride = (c.nodes() + opts.max_nodes - 2) / (opts.max_nodes - 1);
        std::vector<std::size_t> idx;
        for (std::size_t k = 0; k < c.nodes(); k += stride) idx.push_back(k);
        if (idx.back() != c.nodes() - 1) idx.push_back(c.nodes() - 1);
        std::vector<double> t, vy, vyp, vx;
        for (std::size_t k : idx) {
            t.push_back(c.grid()[k]);
            vy.insert(vy.end(), c.value(k).begin(), c.value(k).end());
            vyp.insert(vyp.end(), c.derivative_span(k).begin(), c.derivative_span(k).end());
            vx.insert(vx.end(), x.value(k).begin(), x.value(k).end());
        }
        TimeGrid g(std::move(t));
        const ControlledPath cc(g, c.value_dim(), c.driver_dim(), std::move(vy), std::move(vyp));
        const SampledPath xx(g, x.dim(), std::move(vx));
        n.derivative_holder = holder_seminorm(cc.derivative_path(), alpha);
        n.remainder_holder = remainder_holder(cc, xx, 2.0 * alpha);
    } else {
        n.derivative_holder = holder_seminorm(c.derivative_path(), alpha);
        n.remainder_holder = remainder_holder(c, x, 2.0 * alpha);
    }
    n.seminorm = n.derivative_holder + n.remainder_holder;
    n.seminorm_with_start = euclidean_norm(c.derivative_span(0)) + n.seminorm;
    n.norm = euclidean_norm(c.value(0)) + n.seminorm_with_start;
    return n;
}

/**
 * @brief Coefficient f(t, y) : [0,T] x R^in -> R^out with its spatial Jacobian.
 *
 * The bound constants are declared by the caller; suprema over the whole
 * state space are not computed.
 */
struct FunctionModel {
    std::size_t in_dim = 0;
    std::size_t out_dim = 0;
    std::function<Vec(double, std::span<const double>)> value;
    /// out_dim x in_dim.
    std::function<Mat(double, std::span<const double>)> jacobian;
    /// Optional: out_dim matrices of size in_dim x in_dim.
    std::function<std::vector<Mat>(double, std::span<const double>)> hessian;
    double declared_norm = std::numeric_limits<double>::quiet_NaN();
    double declared_lipschitz = std::numeric_limits<double>::quiet_NaN();

    Vec eval(double t, std::span<const double> y) const {
        detail::require_shape(y.size() == in_dim, "FunctionModel: input dimension mismatch");
        Vec v = value(t, y);
        detail::require_shape(v.size() == out_dim, "FunctionModel: evaluator returned wrong dimension");
        if (!detail::all_finite(v.span())) throw NumericalError("FunctionModel: non-finite value at " + describe(t, y));
        return v;
    }

    Mat eval_jacobian(double t, std::span<const double> y) const {
        detail::require_arg(static_cast<bool>(jacobian), "FunctionModel: no Jacobian evaluator");
        detail::require_shape(y.size() == in_dim, "FunctionModel: input dimension mismatch");
        Mat m = jacobian(t, y);
        detail::require_shape(m.rows() == out_dim && m.cols() == in_dim, "FunctionModel: Jacobian has wrong shape");
        if (!detail::all_finite(m.span())) throw NumericalError("FunctionModel: non-finite Jacobian at " + describe(t, y));
        return m;
    }

    static std::string describe(double t, std::span<const double> y) {
        std::ostringstream os;
        os.precision(17);
        os << "(t=" << t << ", y=[";
        for (std::size_t i = 0; i < y.size(); ++i) os << (i ? "," : "") << y[i];
        os << "])";
        return os.str();
    }

    /// f(t, y) = A y + b.
    static FunctionModel affine(const Mat& a, const Vec& b) {
        detail::require_shape(a.rows() == b.size(), "FunctionModel::affine: shape mismatch");
        FunctionModel f;
        f.in_dim = a.cols();
        f.out_dim = a.rows();
        f.value = [a, b](double, std::span<const double> y) { return (a * y) + b; };
        f.jacobian = [a](double, std::span<const double>) { return a; };
        f.hessian = [a](double, std::span<const double>) {
            return std::vector<Mat>(a.rows(), Mat(a.cols(), a.cols()));
        };
        f.declared_norm = frobenius_norm(a) + euclidean_norm(b.span());
        f.declared_lipschitz = frobenius_norm(a);
        return f;
    }

    static FunctionModel constant(const Vec& c, std::size_t in_dim) {
        return affine(Mat(c.size(), in_dim), c);
    }

    static FunctionModel identity(std::size_t n) { return affine(Mat::identity(n), Vec(n)); }

    /// Componentwise g applied to each coordinate of y.
    static FunctionModel elementwise(std::size_t n, std::function<double(double)> g, std::function<double(double)> dg,
                                     std::function<double(double)> d2g = {}) {
        FunctionModel f;
        f.in_dim = f.out_dim = n;
        f.value = [g](double, std::span<const double> y) {
            Vec v(y.size());
            for (std::size_t i = 0; i < y.size(); ++i) v[i] = g(y[i]);
            return v;
        };
        f.jacobian = [dg](double, std::span<const double> y) {
            Mat m(y.size(), y.size());
            for (std::size_t i = 0; i < y.size(); ++i) m(i, i) = dg(y[i]);
            return m;
        };
        if (d2g)
            f.hessian = [d2g](double, std::span<const double> y) {
                std::vector<Mat> h(y.size(), Mat(y.size(), y.size()));
                for (std::size_t i = 0; i < y.size(); ++i) h[i](i, i) = d2g(y[i]);
                return h;
            };
        return f;
    }
};

struct FiniteDifferenceCheck {
    double max_excess = 0.0;  ///< max of |Df h - (f(y+h) - f(y))| / |h|
    bool ok = true;
};

/// Random probes for validate_function_model.
struct ProbeOptions {
    std::size_t probes = 100;
    double step = 1e-5;
    double tolerance = 1e-3;  ///< relative to |h|
    double box = 1.0;         ///< y drawn uniformly from [-box, box]^in
    double t_min = 0.0;
    double t_max = 1.0;
    std::uint64_t seed = 20240611;
};

/**
 * Checks D_y f against forward differences: |D_y f(t,y) h - (f(t,y+h) - f(t,y))|
 * <= tolerance * |h| with |h| = step. A Hessian, when provided, is checked
 * against differences of the Jacobian in the same way.
 */
inline FiniteDifferenceCheck validate_function_model(const FunctionModel& f, const ProbeOptions& opts = {}) {
    detail::require_arg(static_cast<bool>(f.value) && static_cast<bool>(f.jacobian), "validate_function_model: missing evaluator");
    std::mt19937_64 gen(opts.seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::uniform_real_distribution<double> time(opts.t_min, opts.t_max);
    FiniteDifferenceCheck out;
    for (std::size_t p = 0; p < opts.probes; ++p) {
        const double t = time(gen);
        Vec y(f.in_dim), h(f.in_dim);
        for (std::size_t i = 0; i < f.in_dim; ++i) {
            y[i] = opts.box * unit(gen);
            h[i] = unit(gen);
        }
        h *= opts.step / std::max(euclidean_norm(h.span()), 1e-300);
        const Vec yh = y + h;
        const Vec lin = f.eval_jacobian(t, y.span()) * h;
        const Vec diff = f.eval(t, yh.span()) - f.eval(t, y.span());
        out.max_excess = std::max(out.max_excess, euclidean_norm((lin - diff).span()) / opts.step);
        if (f.hessian) {
            const auto hs = f.hessian(t, y.span());
            detail::require_shape(hs.size() == f.out_dim, "validate_function_model: Hessian has wrong shape");
            const Mat dj = f.eval_jacobian(t, yh.span()) - f.eval_jacobian(t, y.span());
            for (std::size_t r = 0; r < f.out_dim; ++r) {
                const Vec lin2 = hs[r] * h;
                double s = 0.0;
                for (std::size_t c = 0; c < f.in_dim; ++c) s += (lin2[c] - dj(r, c)) * (lin2[c] - dj(r, c));
                out.max_excess = std::max(out.max_excess, std::sqrt(s) / opts.step);
            }
        }
    }
    out.ok = out.max_excess <= opts.tolerance;
    return out;
}

/// (f(Y), f(Y)') with f(Y)_t = f(t, Y_t) and f(Y)'_t = D_y f(t, Y_t) Y'_t.
inline ControlledPath compose_function(const FunctionModel& f, const ControlledPath& c) {
    detail::require_shape(f.in_dim == c.value_dim(), "compose_function: input dimension mismatch");
    const std::size_t r = f.out_dim, d = c.driver_dim();
    std::vector<double> vy, vyp;
    vy.reserve(c.nodes() * r);
    vyp.reserve(c.nodes() * r * d);
    for (std::size_t k = 0; k < c.nodes(); ++k) {
        const double t = c.grid()[k];
        const Vec v = f.eval(t, c.value(k));
        const Mat dv = f.eval_jacobian(t, c.value(k)) * c.derivative(k);
        vy.insert(vy.end(), v.begin(), v.end());
        vyp.insert(vyp.end(), dv.span().begin(), dv.span().end());
    }
    return ControlledPath(c.grid(), r, d, std::move(vy), std::move(vyp));
}

/// (phi Y, phi Y') for a fixed linear map phi : R^q -> R^r.
inline ControlledPath compose_linear(const Mat& phi, const ControlledPath& c) {
    detail::require_shape(phi.cols() == c.value_dim(), "compose_linear: shape mismatch");
    const std::size_t r = phi.rows(), d = c.driver_dim();
    std::vector<double> vy, vyp;
    for (std::size_t k = 0; k < c.nodes(); ++k) {
        const Vec v = phi * c.value(k);
        const Mat dv = phi * c.derivative(k);
        vy.insert(vy.end(), v.begin(), v.end());
        vyp.insert(vyp.end(), dv.span().begin(), dv.span().end());
    }
    return ControlledPath(c.grid(), r, d, std::move(vy), std::move(vyp));
}

/// Bilinear B : R^{q1} x R^{q2} -> R^r.
struct BilinearMap {
    std::size_t left_dim = 0;
    std::size_t right_dim = 0;
    std::size_t out_dim = 0;
    std::function<Vec(std::span<const double>, std::span<const double>)> apply;

    /// Scalar multiplication on R x R.
    static BilinearMap product() {
        return {1, 1, 1, [](std::span<const double> a, std::span<const double> b) { return Vec{a[0] * b[0]}; }};
    }

    /// B(y, z)_c = sum_{ij} coeffs[c](i, j) y_i z_j.
    static BilinearMap from_coefficients(std::vector<Mat> coeffs) {
        detail::require_arg(!coeffs.empty(), "BilinearMap::from_coefficients: empty");
        BilinearMap b;
        b.left_dim = coeffs.front().rows();
        b.right_dim = coeffs.front().cols();
        b.out_dim = coeffs.size();
        b.apply = [coeffs = std::move(coeffs)](std::span<const double> y, std::span<const double> z) {
            Vec out(coeffs.size());
            for (std::size_t c = 0; c < coeffs.size(); ++c) out[c] = dot(y, (coeffs[c] * z).span());
            return out;
        };
        return b;
    }
};

/// (B(Y, Z), B(Y, Z') + B(Y', Z)), Leibniz rule column by column.
inline ControlledPath compose_bilinear(const BilinearMap& b, const ControlledPath& y, const ControlledPath& z) {
    detail::require_shape(y.grid() == z.grid(), "compose_bilinear: grid mismatch");
    detail::require_shape(y.driver_dim() == z.driver_dim(), "compose_bilinear: driver dimension mismatch");
    detail::require_shape(b.left_dim == y.value_dim() && b.right_dim == z.value_dim(), "compose_bilinear: shape mismatch");
    const std::size_t r = b.out_dim, d = y.driver_dim();
    std::vector<double> vy, vyp;
    Vec ycol(y.value_dim()), zcol(z.value_dim());
    for (std::size_t k = 0; k < y.nodes(); ++k) {
        const Vec v = b.apply(y.value(k), z.value(k));
        detail::require_shape(v.size() == r, "compose_bilinear: evaluator returned wrong dimension");
        vy.insert(vy.end(), v.begin(), v.end());
        Mat dv(r, d);
        auto dy = y.derivative_span(k);
        auto dz = z.derivative_span(k);
        for (std::size_t a = 0; a < d; ++a) {
            for (std::size_t i = 0; i < y.value_dim(); ++i) ycol[i] = dy[i * d + a];
            for (std::size_t i = 0; i < z.value_dim(); ++i) zcol[i] = dz[i * d + a];
            const Vec col = b.apply(y.value(k), zcol.span()) + b.apply(ycol.span(), z.value(k));
            for (std::size_t c = 0; c < r; ++c) dv(c, a) = col[c];
        }
        vyp.insert(vyp.end(), dv.span().begin(), dv.span().end());
    }
    return ControlledPath(y.grid(), r, d, std::move(vy), std::move(vyp));
}

/// ((Y, Z), (Y', Z')) on the product space.
inline ControlledPath pair(const ControlledPath& y, const ControlledPath& z) {
    detail::require_shape(y.grid() == z.grid(), "pair: grid mismatch");
    detail::require_shape(y.driver_dim() == z.driver_dim(), "pair: driver dimension mismatch");
    const std::size_t q = y.value_dim() + z.value_dim(), d = y.driver_dim();
    std::vector<double> vy, vyp;
    for (std::size_t k = 0; k < y.nodes(); ++k) {
        vy.insert(vy.end(), y.value(k).begin(), y.value(k).end());
        vy.insert(vy.end(), z.value(k).begin(), z.value(k).end());
        vyp.insert(vyp.end(), y.derivative_span(k).begin(), y.derivative_span(k).end());
        vyp.insert(vyp.end(), z.derivative_span(k).begin(), z.derivative_span(k).end());
    }
    return ControlledPath(y.grid(), q, d, std::move(vy), std::move(vyp));
}

} // namespace roughpath
