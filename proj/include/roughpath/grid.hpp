#pragma once

#include <roughpath/errors.hpp>
#include <roughpath/tensor.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace roughpath {

/**
 * @brief Strictly increasing sample times t_0 < t_1 < ... < t_n.
 *
 * Grids built by the library start at 0. Windows cut out of a grid by
 * subgrid() keep their absolute times so time-dependent coefficients see
 * the right t.
 */
class TimeGrid {
public:
    TimeGrid() = default;

    explicit TimeGrid(std::vector<double> times) : times_(std::move(times)) {
        detail::require_arg(times_.size() >= 2, "TimeGrid: need at least two nodes");
        for (std::size_t k = 0; k < times_.size(); ++k) {
            if (!std::isfinite(times_[k])) throw DataError("TimeGrid: non-finite time at node " + std::to_string(k));
            if (k > 0 && !(times_[k] > times_[k - 1]))
                throw DataError("TimeGrid: times not strictly increasing at node " + std::to_string(k));
        }
    }

    static TimeGrid uniform(double horizon, std::size_t steps, double start = 0.0) {
        detail::require_arg(steps >= 1, "TimeGrid::uniform: steps must be >= 1");
        detail::require_arg(horizon > 0.0 && std::isfinite(horizon), "TimeGrid::uniform: horizon must be > 0");
        std::vector<double> t(steps + 1);
        for (std::size_t k = 0; k <= steps; ++k)
            t[k] = start + horizon * static_cast<double>(k) / static_cast<double>(steps);
        t.back() = start + horizon;
        return TimeGrid(std::move(t));
    }

    std::size_t steps() const noexcept { return times_.size() - 1; }
    std::size_t nodes() const noexcept { return times_.size(); }
    double operator[](std::size_t k) const { return times_[k]; }
    double front() const noexcept { return times_.front(); }
    double back() const noexcept { return times_.back(); }
    double horizon() const noexcept { return times_.back() - times_.front(); }
    double dt(std::size_t k) const { return times_[k + 1] - times_[k]; }
    const std::vector<double>& times() const noexcept { return times_; }

    double min_spacing() const {
        double m = times_[1] - times_[0];
        for (std::size_t k = 1; k < steps(); ++k) m = std::min(m, dt(k));
        return m;
    }

    bool is_uniform(double rel_tol = 1e-12) const {
        const double h = horizon() / static_cast<double>(steps());
        for (std::size_t k = 0; k < steps(); ++k)
            if (std::abs(dt(k) - h) > rel_tol * std::max(1.0, std::abs(times_[k + 1]))) return false;
        return true;
    }

    /// Nodes k0..k1 inclusive.
    TimeGrid subgrid(std::size_t k0, std::size_t k1) const {
        detail::require_index(k0 < k1 && k1 < nodes(), "TimeGrid::subgrid: bad node range");
        return TimeGrid(std::vector<double>(times_.begin() + static_cast<std::ptrdiff_t>(k0),
                                            times_.begin() + static_cast<std::ptrdiff_t>(k1) + 1));
    }

    /// Splits every cell into q equal sub-steps.
    TimeGrid refine(std::size_t q) const {
        detail::require_arg(q >= 1, "TimeGrid::refine: factor must be >= 1");
        std::vector<double> t;
        t.reserve(steps() * q + 1);
        for (std::size_t k = 0; k < steps(); ++k)
            for (std::size_t r = 0; r < q; ++r)
                t.push_back(times_[k] + dt(k) * static_cast<double>(r) / static_cast<double>(q));
        t.push_back(back());
        return TimeGrid(std::move(t));
    }

    friend bool operator==(const TimeGrid&, const TimeGrid&) = default;

private:
    std::vector<double> times_;
};

/// Sampled path X : grid -> R^m, one value per node.
class SampledPath {
public:
    SampledPath() = default;

    SampledPath(TimeGrid grid, std::size_t dim, std::vector<double> row_major)
        : grid_(std::move(grid)), dim_(dim), values_(std::move(row_major)) {
        detail::require_arg(dim_ >= 1, "SampledPath: dimension must be >= 1");
        detail::require_shape(values_.size() == grid_.nodes() * dim_, "SampledPath: value count does not match grid");
        if (!detail::all_finite(values_)) throw DataError("SampledPath: non-finite value");
    }

    SampledPath(TimeGrid grid, const std::vector<Vec>& values) : grid_(std::move(grid)) {
        detail::require_shape(values.size() == grid_.nodes(), "SampledPath: value count does not match grid");
        dim_ = values.front().size();
        detail::require_arg(dim_ >= 1, "SampledPath: dimension must be >= 1");
        values_.reserve(values.size() * dim_);
        for (const auto& v : values) {
            detail::require_shape(v.size() == dim_, "SampledPath: ragged values");
            values_.insert(values_.end(), v.begin(), v.end());
        }
        if (!detail::all_finite(values_)) throw DataError("SampledPath: non-finite value");
    }

    template <class F>
    static SampledPath from_function(const TimeGrid& grid, std::size_t dim, F&& f) {
        std::vector<double> vals;
        vals.reserve(grid.nodes() * dim);
        for (std::size_t k = 0; k < grid.nodes(); ++k) {
            Vec v = f(grid[k]);
            detail::require_shape(v.size() == dim, "SampledPath::from_function: wrong output dimension");
            vals.insert(vals.end(), v.begin(), v.end());
        }
        return SampledPath(grid, dim, std::move(vals));
    }

    const TimeGrid& grid() const noexcept { return grid_; }
    std::size_t dim() const noexcept { return dim_; }
    std::size_t steps() const noexcept { return grid_.steps(); }
    std::size_t nodes() const noexcept { return grid_.nodes(); }

    std::span<const double> value(std::size_t k) const { return {values_.data() + k * dim_, dim_}; }
    Vec at(std::size_t k) const { return Vec(value(k)); }
    const std::vector<double>& raw() const noexcept { return values_; }

    /// X_{t_i,t_j} = X_{t_j} - X_{t_i}.
    Vec increment(std::size_t i, std::size_t j) const {
        detail::require_index(i < nodes() && j < nodes(), "increment: index out of range");
        Vec out(dim_);
        for (std::size_t a = 0; a < dim_; ++a) out[a] = values_[j * dim_ + a] - values_[i * dim_ + a];
        return out;
    }

    SampledPath restrict(std::size_t k0, std::size_t k1) const {
        TimeGrid sub = grid_.subgrid(k0, k1);
        std::vector<double> v(values_.begin() + static_cast<std::ptrdiff_t>(k0 * dim_),
                              values_.begin() + static_cast<std::ptrdiff_t>((k1 + 1) * dim_));
        return SampledPath(std::move(sub), dim_, std::move(v));
    }

    /// Every stride-th node plus the last one.
    SampledPath subsample(std::size_t stride) const {
        detail::require_arg(stride >= 1, "subsample: stride must be >= 1");
        std::vector<double> t;
        std::vector<double> v;
        for (std::size_t k = 0; k < nodes(); k += stride) {
            t.push_back(grid_[k]);
            v.insert(v.end(), value(k).begin(), value(k).end());
        }
        if (t.back() != grid_.back()) {
            t.push_back(grid_.back());
            v.insert(v.end(), value(nodes() - 1).begin(), value(nodes() - 1).end());
        }
        return SampledPath(TimeGrid(std::move(t)), dim_, std::move(v));
    }

private:
    TimeGrid grid_;
    std::size_t dim_ = 0;
    std::vector<double> values_;
};

/**
 * @brief Two-parameter field F_{t_i,t_j} over all ordered node pairs.
 *
 * Each entry is a rows x cols matrix (vectors use cols = 1). Storage is
 * O(n^2), so this is meant for testing and external data ingestion.
 */
class TwoParameterField {
public:
    TwoParameterField() = default;
    TwoParameterField(TimeGrid grid, std::size_t rows, std::size_t cols)
        : grid_(std::move(grid)), rows_(rows), cols_(cols),
          data_(grid_.nodes() * grid_.nodes() * rows * cols, 0.0) {}

    template <class F>
    static TwoParameterField from_function(const TimeGrid& grid, std::size_t rows, std::size_t cols, F&& f) {
        TwoParameterField field(grid, rows, cols);
        for (std::size_t i = 0; i < grid.nodes(); ++i)
            for (std::size_t j = 0; j < grid.nodes(); ++j) field.set(i, j, f(i, j));
        return field;
    }

    const TimeGrid& grid() const noexcept { return grid_; }
    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t nodes() const noexcept { return grid_.nodes(); }

    std::span<const double> entry(std::size_t i, std::size_t j) const {
        return {data_.data() + offset(i, j), rows_ * cols_};
    }
    std::span<double> entry(std::size_t i, std::size_t j) { return {data_.data() + offset(i, j), rows_ * cols_}; }

    Mat at(std::size_t i, std::size_t j) const {
        auto e = entry(i, j);
        return Mat(rows_, cols_, std::vector<double>(e.begin(), e.end()));
    }

    void set(std::size_t i, std::size_t j, const Mat& m) {
        detail::require_shape(m.rows() == rows_ && m.cols() == cols_, "TwoParameterField::set: shape mismatch");
        std::copy(m.span().begin(), m.span().end(), entry(i, j).begin());
    }
    void set(std::size_t i, std::size_t j, const Vec& v) {
        detail::require_shape(v.size() == rows_ * cols_, "TwoParameterField::set: shape mismatch");
        std::copy(v.begin(), v.end(), entry(i, j).begin());
    }
    void set(std::size_t i, std::size_t j, double x) {
        detail::require_shape(rows_ * cols_ == 1, "TwoParameterField::set: scalar into non-scalar field");
        data_[offset(i, j)] = x;
    }

private:
    std::size_t offset(std::size_t i, std::size_t j) const {
        detail::require_index(i < nodes() && j < nodes(), "TwoParameterField: index out of range");
        return (i * nodes() + j) * rows_ * cols_;
    }

    TimeGrid grid_;
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Limits for the O(n^2) pairwise scans.
struct SeminormOptions {
    std::size_t max_nodes = 4097;
    /// Beyond max_nodes: scan a strided subsample plus all neighbouring pairs
    /// (still a lower bound). When false, oversize grids are rejected.
    bool subsample_large = true;
};

namespace detail {

inline double holder_ratio(double norm, double dt, double alpha) { return norm / std::pow(dt, alpha); }

// max over pairs i<j with t_j - t_i <= window of |X_j - X_i| / (t_j - t_i)^alpha
inline double pairwise_holder(const SampledPath& p, double alpha, double window) {
    const auto& g = p.grid();
    const std::size_t m = p.dim();
    const double* x = p.raw().data();
    double best = 0.0;
    const double slack = 1e-12 * std::max(1.0, std::abs(g.back()));
    for (std::size_t i = 0; i + 1 < g.nodes(); ++i) {
        for (std::size_t j = i + 1; j < g.nodes(); ++j) {
            const double dt = g[j] - g[i];
            if (dt > window + slack) break;
            double s = 0.0;
            for (std::size_t a = 0; a < m; ++a) {
                const double diff = x[j * m + a] - x[i * m + a];
                s += diff * diff;
            }
            best = std::max(best, holder_ratio(std::sqrt(s), dt, alpha));
        }
    }
    return best;
}

inline double neighbour_holder(const SampledPath& p, double alpha) {
    double best = 0.0;
    for (std::size_t k = 0; k < p.steps(); ++k)
        best = std::max(best, holder_ratio(euclidean_norm(p.increment(k, k + 1).span()), p.grid().dt(k), alpha));
    return best;
}

inline void check_alpha(double alpha) {
    require_arg(alpha > 0.0 && alpha <= 1.0, "Hoelder exponent must lie in (0, 1]");
}

} // namespace detail

/**
 * @brief Discrete alpha-Hoelder seminorm: max over grid pairs of |X_{s,t}| / |t-s|^alpha.
 *
 * Restricting the supremum to grid pairs gives a lower bound for the
 * continuum seminorm.
 */
inline double holder_seminorm(const SampledPath& p, double alpha, const SeminormOptions& opts = {}) {
    detail::check_alpha(alpha);
    detail::require_arg(p.steps() >= 1, "holder_seminorm: degenerate grid");
    if (p.nodes() <= opts.max_nodes) return detail::pairwise_holder(p, alpha, p.grid().horizon());
    if (!opts.subsample_large)
        throw std::invalid_argument("holder_seminorm: grid exceeds max_nodes (" + std::to_string(opts.max_nodes) + ")");
    const std::size_t stride = (p.nodes() + opts.max_nodes - 2) / (opts.max_nodes - 1);
    const SampledPath coarse = p.subsample(stride);
    return std::max(detail::pairwise_holder(coarse, alpha, coarse.grid().horizon()), detail::neighbour_holder(p, alpha));
}

/// Hoelder seminorm restricted to pairs at distance <= window.
inline double localized_seminorm(const SampledPath& p, double alpha, double window) {
    detail::check_alpha(alpha);
    const auto& g = p.grid();
    detail::require_arg(window > 0.0 && window <= g.horizon() * (1.0 + 1e-12), "localized_seminorm: window must lie in (0, T]");
    detail::require_arg(window >= g.min_spacing() * (1.0 - 1e-12), "localized_seminorm: window smaller than grid spacing");
    return detail::pairwise_holder(p, alpha, window);
}

/**
 * Seminorm of a two-parameter field over all ordered pairs i != j, using the
 * Frobenius norm of each entry.
 */
inline double two_param_holder_seminorm(const TwoParameterField& f, double alpha) {
    detail::check_alpha(alpha);
    const auto& g = f.grid();
    detail::require_arg(g.steps() >= 1, "two_param_holder_seminorm: degenerate grid");
    double best = 0.0;
    for (std::size_t i = 0; i < g.nodes(); ++i)
        for (std::size_t j = 0; j < g.nodes(); ++j) {
            if (i == j) continue;
            best = std::max(best, detail::holder_ratio(euclidean_norm(f.entry(i, j)), std::abs(g[j] - g[i]), alpha));
        }
    return best;
}

/// Sup norm max_k |X_k|.
inline double sup_norm(const SampledPath& p) {
    double m = 0.0;
    for (std::size_t k = 0; k < p.nodes(); ++k) m = std::max(m, euclidean_norm(p.value(k)));
    return m;
}

} // namespace roughpath
