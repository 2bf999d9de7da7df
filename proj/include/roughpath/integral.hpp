#pragma once

#include <roughpath/controlled.hpp>
#include <roughpath/errors.hpp>
#include <roughpath/grid.hpp>
#include <roughpath/rough_path.hpp>
#include <roughpath/tensor.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

namespace roughpath {

/// Increasing subsequence of grid node indices covering [t_first, t_last].
class Partition {
public:
    explicit Partition(std::vector<std::size_t> nodes) : nodes_(std::move(nodes)) {
        detail::require_arg(nodes_.size() >= 2, "Partition: need at least two nodes");
        for (std::size_t k = 1; k < nodes_.size(); ++k)
            detail::require_arg(nodes_[k] > nodes_[k - 1], "Partition: nodes must be strictly increasing");
    }

    static Partition finest(std::size_t i, std::size_t j) { return strided(i, j, 1); }

    /// i, i+stride, i+2 stride, ..., always ending at j.
    static Partition strided(std::size_t i, std::size_t j, std::size_t stride) {
        detail::require_arg(i < j && stride >= 1, "Partition::strided: need i < j and stride >= 1");
        std::vector<std::size_t> n;
        for (std::size_t k = i; k < j; k += stride) n.push_back(k);
        n.push_back(j);
        return Partition(std::move(n));
    }

    const std::vector<std::size_t>& nodes() const noexcept { return nodes_; }
    std::size_t first() const noexcept { return nodes_.front(); }
    std::size_t last() const noexcept { return nodes_.back(); }
    std::size_t cells() const noexcept { return nodes_.size() - 1; }

private:
    std::vector<std::size_t> nodes_;
};

namespace detail {

inline std::size_t integrand_output_dim(const ControlledPath& c, const RoughPath& r) {
    require_shape(c.grid() == r.grid(), "integral: integrand and driver live on different grids");
    require_shape(c.driver_dim() == r.dim(), "integral: integrand derivative does not match driver dimension");
    require_shape(c.value_dim() % r.dim() == 0, "integral: integrand values must be p x d operators");
    return c.value_dim() / r.dim();
}

// out += Y_u X_{u,v} + Y'_u XX_{u,v}. Y'[i][a][b] is the derivative in
// direction b of operator entry (i,a); under L(V,L(V,W)) = L(V (x) V, W)
// the direction takes the first tensor slot, so it pairs with XX[b][a].
inline void add_local_term(double* out, std::size_t p, std::size_t d, std::span<const double> y, std::span<const double> yp,
                           const double* x, const double* xx) {
    for (std::size_t i = 0; i < p; ++i) {
        double s = 0.0;
        for (std::size_t a = 0; a < d; ++a) {
            s += y[i * d + a] * x[a];
            for (std::size_t b = 0; b < d; ++b) s += yp[(i * d + a) * d + b] * xx[b * d + a];
        }
        out[i] += s;
    }
}

} // namespace detail

/**
 * @brief Compensated Riemann sum sum_{[u,v] in part} ( Y_u X_{u,v} + Y'_u : XX_{u,v} ).
 *
 * Y_u acts as a p x d operator and Y'_u XX contracts both driver indices,
 * sum_{ab} Y'[i][a][b] XX[b][a].
 */
inline Vec compensated_sum(const ControlledPath& c, const RoughPath& r, const Partition& part) {
    const std::size_t p = detail::integrand_output_dim(c, r);
    const std::size_t d = r.dim();
    detail::require_index(part.last() < r.nodes(), "compensated_sum: partition exceeds grid");
    Vec out(p);
    for (std::size_t k = 0; k < part.cells(); ++k) {
        const std::size_t u = part.nodes()[k], v = part.nodes()[k + 1];
        const Vec x = r.increment(u, v);
        const Mat xx = r.second_level(u, v);
        detail::add_local_term(out.data(), p, d, c.value(u), c.derivative_span(u), x.data(), xx.data());
    }
    return out;
}

/// Local expansion Xi_{s,t} = Y_s X_{s,t} + Y'_s : XX_{s,t}.
inline Vec local_expansion(const ControlledPath& c, const RoughPath& r, std::size_t i, std::size_t j) {
    return compensated_sum(c, r, Partition({i, j}));
}

struct IntegralValue {
    Vec value;
    /// |integral - Xi_{s,t}|, the local expansion defect.
    double local_defect = 0.0;
};

/**
 * Rough integral over [t_i, t_j]: the compensated sum over every grid node
 * in the range, which is the finest partition the samples support.
 */
inline IntegralValue rough_integral(const ControlledPath& c, const RoughPath& r, std::size_t i, std::size_t j) {
    const std::size_t p = detail::integrand_output_dim(c, r);
    detail::require_index(i <= j && j < r.nodes(), "rough_integral: need i <= j within grid");
    IntegralValue out{Vec(p), 0.0};
    if (i == j) return out;
    const std::size_t d = r.dim();
    for (std::size_t k = i; k < j; ++k) {
        const Vec x = r.increment(k, k + 1);
        detail::add_local_term(out.value.data(), p, d, c.value(k), c.derivative_span(k), x.data(), r.block_span(k).data());
    }
    out.local_defect = euclidean_norm((out.value - local_expansion(c, r, i, j)).span());
    return out;
}

/// (Z, Z') = (int_0^. Y dX, Y) on the integrand's grid; Z_0 = 0.
inline ControlledPath integral_as_controlled(const ControlledPath& c, const RoughPath& r) {
    const std::size_t p = detail::integrand_output_dim(c, r);
    const std::size_t d = r.dim();
    std::vector<double> z(r.nodes() * p, 0.0);
    for (std::size_t k = 0; k < r.steps(); ++k) {
        std::copy(z.begin() + static_cast<std::ptrdiff_t>(k * p), z.begin() + static_cast<std::ptrdiff_t>((k + 1) * p),
                  z.begin() + static_cast<std::ptrdiff_t>((k + 1) * p));
        const Vec x = r.increment(k, k + 1);
        detail::add_local_term(z.data() + (k + 1) * p, p, d, c.value(k), c.derivative_span(k), x.data(), r.block_span(k).data());
    }
    return ControlledPath(c.grid(), p, d, std::move(z), c.raw_values());
}

/**
 * (X (x) ., Id): Y_t maps v to X_t (x) v, stored as a (d*d) x d operator,
 * with the constant Gubinelli derivative Y'[(i,j)][a][b] = delta_ja delta_ib.
 * Its integral over [s,t] is X_s (x) X_{s,t} + XX_{s,t} flattened, and its
 * remainder vanishes identically.
 */
inline ControlledPath identity_integrand(const RoughPath& r) {
    const std::size_t d = r.dim();
    return ControlledPath::from_nodes(
        r.grid(), d * d * d, d,
        [&](std::size_t k) {
            Vec y(d * d * d);
            const auto x = r.path().value(k);
            for (std::size_t i = 0; i < d; ++i)
                for (std::size_t j = 0; j < d; ++j) y[(i * d + j) * d + j] = x[i];
            return y;
        },
        [&](std::size_t) {
            Mat yp(d * d * d, d);
            for (std::size_t i = 0; i < d; ++i)
                for (std::size_t j = 0; j < d; ++j) yp((i * d + j) * d + j, i) = 1.0;
            return yp;
        });
}

/// Trapezoidal int_{t_i}^{t_j} P_s ds.
inline Vec drift_integral(const SampledPath& p, std::size_t i, std::size_t j) {
    detail::require_index(i <= j && j < p.nodes(), "drift_integral: need i <= j within grid");
    const std::size_t m = p.dim();
    Vec out(m);
    for (std::size_t k = i; k < j; ++k) {
        const double h = 0.5 * p.grid().dt(k);
        auto a = p.value(k), b = p.value(k + 1);
        for (std::size_t e = 0; e < m; ++e) out[e] += h * (a[e] + b[e]);
    }
    return out;
}

/// Cumulative trapezoid t_k -> int_{t_0}^{t_k} P_s ds.
inline SampledPath drift_integral_path(const SampledPath& p) {
    const std::size_t m = p.dim();
    std::vector<double> z(p.nodes() * m, 0.0);
    for (std::size_t k = 0; k < p.steps(); ++k) {
        const double h = 0.5 * p.grid().dt(k);
        auto a = p.value(k), b = p.value(k + 1);
        for (std::size_t e = 0; e < m; ++e) z[(k + 1) * m + e] = z[k * m + e] + h * (a[e] + b[e]);
    }
    return SampledPath(p.grid(), m, std::move(z));
}

struct SewingRow {
    double h = 0.0;       ///< mean window length
    double defect = 0.0;  ///< mean |integral - Xi| over disjoint windows
    double bound = 0.0;   ///< (||X|| ||R^Y|| + ||XX|| ||Y'||) h^{3 alpha}, constant taken as 1
};

struct SewingDiagnostic {
    bool exact = false;  ///< every defect vanished to rounding; slope is meaningless
    double slope = 0.0;
    std::vector<SewingRow> rows;
};

/**
 * Fits the decay exponent of the local defect |int_s^t Y dX - Xi_{s,t}|
 * against t - s over dyadic window sizes 2, 4, 8, ... cells (each level
 * keeps at least `min_windows` disjoint windows). The theory predicts
 * exponent 3 alpha; only the exponent is checked, the constant is unknown.
 */
inline SewingDiagnostic sewing_rate_diagnostic(const ControlledPath& c, const RoughPath& r, double alpha,
                                               std::size_t min_windows = 4) {
    detail::require_arg(alpha > 0.0 && alpha <= 1.0, "sewing_rate_diagnostic: alpha must lie in (0, 1]");
    const std::size_t p = detail::integrand_output_dim(c, r);
    const ControlledPath z = integral_as_controlled(c, r);
    const std::size_t n = r.steps();

    std::vector<std::size_t> widths;
    for (std::size_t w = 2; n / w >= min_windows; w *= 2) widths.push_back(w);
    if (widths.size() < 4)
        throw std::invalid_argument("sewing_rate_diagnostic: need at least 4 dyadic levels, grid supports " +
                                    std::to_string(widths.size()));

    SewingDiagnostic out;
    double scale = 1.0, worst = 0.0;
    for (std::size_t w : widths) {
        double sum = 0.0, hsum = 0.0;
        std::size_t count = 0;
        for (std::size_t s = 0; s + w <= n; s += w) {
            Vec integral(p);
            for (std::size_t e = 0; e < p; ++e) integral[e] = z.value(s + w)[e] - z.value(s)[e];
            const double e = euclidean_norm((integral - local_expansion(c, r, s, s + w)).span());
            scale = std::max(scale, euclidean_norm(integral.span()));
            worst = std::max(worst, e);
            sum += e;
            hsum += r.grid()[s + w] - r.grid()[s];
            ++count;
        }
        out.rows.push_back({hsum / static_cast<double>(count), sum / static_cast<double>(count), 0.0});
    }
    if (worst <= 1e-13 * scale) {
        out.exact = true;
        return out;
    }

    const double xh = holder_seminorm(r.path(), std::min(alpha, 1.0));
    const double xxh = level2_holder(r, std::min(2.0 * alpha, 2.0));
    const double rh = remainder_holder(c, r.path(), std::min(2.0 * alpha, 2.0));
    const double yph = holder_seminorm(c.derivative_path(), std::min(alpha, 1.0));
    const double amplitude = xh * rh + xxh * yph;

    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t m = 0;
    for (auto& row : out.rows) {
        row.bound = amplitude * std::pow(row.h, 3.0 * alpha);
        if (row.defect <= 0.0) continue;
        const double lx = std::log(row.h), ly = std::log(row.defect);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++m;
    }
    if (m < 2) throw NumericalError("sewing_rate_diagnostic: too few nonzero defects to fit a slope");
    const double mm = static_cast<double>(m);
    out.slope = (mm * sxy - sx * sy) / (mm * sxx - sx * sx);
    return out;
}

} // namespace roughpath
