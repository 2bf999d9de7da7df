#pragma once

#include <roughpath/errors.hpp>
#include <roughpath/grid.hpp>
#include <roughpath/tensor.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <string>
#include <vector>

namespace roughpath {

/// Unconstrained candidate level-2 field on all node pairs; see promote().
using RawLevel2 = TwoParameterField;

/**
 * @brief Level-2 rough path (X, XX) sampled on a grid.
 *
 * Stores the samples X_{t_k} and one block XX_{t_k,t_{k+1}} per cell. Values
 * over longer node ranges are rebuilt from the blocks with
 *
 *     XX_{t_i,t_j} = sum_{k=i}^{j-1} ( XX_{t_k,t_{k+1}} + X_{t_i,t_k} (x) X_{t_k,t_{k+1}} ),
 *
 * so Chen's relation XX_{s,t} - XX_{s,u} - XX_{u,t} = X_{s,u} (x) X_{u,t}
 * holds for every triple of nodes by construction.
 */
class RoughPath {
public:
    RoughPath() = default;

    RoughPath(SampledPath path, std::vector<double> blocks_row_major)
        : path_(std::move(path)), blocks_(std::move(blocks_row_major)) {
        const std::size_t d = path_.dim();
        detail::require_shape(blocks_.size() == path_.steps() * d * d, "RoughPath: block count does not match grid");
        if (!detail::all_finite(blocks_)) throw DataError("RoughPath: non-finite level-2 block");
    }

    RoughPath(SampledPath path, const std::vector<Mat>& blocks) : path_(std::move(path)) {
        const std::size_t d = path_.dim();
        detail::require_shape(blocks.size() == path_.steps(), "RoughPath: block count does not match grid");
        blocks_.reserve(blocks.size() * d * d);
        for (const auto& b : blocks) {
            detail::require_shape(b.rows() == d && b.cols() == d, "RoughPath: block shape mismatch");
            blocks_.insert(blocks_.end(), b.span().begin(), b.span().end());
        }
        if (!detail::all_finite(blocks_)) throw DataError("RoughPath: non-finite level-2 block");
    }

    /**
     * Rebuilds a rough path from (X_{t_k}, XX_{0,t_k}) using
     * XX_{s,t} = XX_{0,t} - XX_{0,s} - X_{0,s} (x) X_{s,t}.
     */
    static RoughPath from_origin_values(SampledPath path, const std::vector<Mat>& from_origin) {
        detail::require_shape(from_origin.size() == path.nodes(), "from_origin_values: one matrix per node required");
        const std::size_t d = path.dim();
        std::vector<Mat> blocks;
        blocks.reserve(path.steps());
        for (std::size_t k = 0; k < path.steps(); ++k) {
            Mat b = from_origin[k + 1] - from_origin[k];
            b -= outer(path.increment(0, k).span(), path.increment(k, k + 1).span());
            detail::require_shape(b.rows() == d, "from_origin_values: shape mismatch");
            blocks.push_back(std::move(b));
        }
        return RoughPath(std::move(path), blocks);
    }

    const SampledPath& path() const noexcept { return path_; }
    const TimeGrid& grid() const noexcept { return path_.grid(); }
    std::size_t dim() const noexcept { return path_.dim(); }
    std::size_t steps() const noexcept { return path_.steps(); }
    std::size_t nodes() const noexcept { return path_.nodes(); }
    const std::vector<double>& raw_blocks() const noexcept { return blocks_; }

    std::span<const double> block_span(std::size_t k) const {
        const std::size_t dd = dim() * dim();
        return {blocks_.data() + k * dd, dd};
    }
    Mat block(std::size_t k) const {
        detail::require_index(k < steps(), "RoughPath::block: index out of range");
        auto s = block_span(k);
        return Mat(dim(), dim(), std::vector<double>(s.begin(), s.end()));
    }

    Vec increment(std::size_t i, std::size_t j) const { return path_.increment(i, j); }

    /// XX_{t_i,t_j} for any node pair; j < i uses XX_{s,t} = X_{s,t} (x) X_{s,t} - XX_{t,s}.
    Mat second_level(std::size_t i, std::size_t j) const {
        detail::require_index(i < nodes() && j < nodes(), "second_level: index out of range");
        const std::size_t d = dim();
        if (j < i) {
            const Vec x = increment(i, j);
            return outer(x.span(), x.span()) - second_level(j, i);
        }
        Mat out(d, d);
        std::vector<double> x_ik(d, 0.0);
        const double* x = path_.raw().data();
        for (std::size_t k = i; k < j; ++k) {
            auto b = block_span(k);
            for (std::size_t e = 0; e < d * d; ++e) out.data()[e] += b[e];
            const double* xk = x + k * d;
            const double* xk1 = x + (k + 1) * d;
            for (std::size_t a = 0; a < d; ++a) x_ik[a] = xk[a] - x[i * d + a];
            std::vector<double> dx(xk1, xk1 + d);
            for (std::size_t a = 0; a < d; ++a) dx[a] -= xk[a];
            detail::add_outer(out.data(), x_ik.data(), dx.data(), d);
        }
        return out;
    }

    /**
     * XX_{t_i,t_j} for all j >= i in one O((n-i) d^2) sweep; entry (j - i)
     * of the result holds the d*d row-major block.
     */
    std::vector<double> level2_row(std::size_t i) const {
        detail::require_index(i < nodes(), "level2_row: index out of range");
        const std::size_t d = dim();
        const std::size_t dd = d * d;
        const double* x = path_.raw().data();
        std::vector<double> row((nodes() - i) * dd, 0.0);
        std::vector<double> x_ik(d), dx(d);
        for (std::size_t k = i; k + 1 < nodes(); ++k) {
            double* next = row.data() + (k + 1 - i) * dd;
            const double* cur = row.data() + (k - i) * dd;
            auto b = block_span(k);
            for (std::size_t e = 0; e < dd; ++e) next[e] = cur[e] + b[e];
            for (std::size_t a = 0; a < d; ++a) {
                x_ik[a] = x[k * d + a] - x[i * d + a];
                dx[a] = x[(k + 1) * d + a] - x[k * d + a];
            }
            detail::add_outer(next, x_ik.data(), dx.data(), d);
        }
        return row;
    }

    std::vector<Mat> level2_from_origin() const {
        const auto row = level2_row(0);
        const std::size_t dd = dim() * dim();
        std::vector<Mat> out;
        out.reserve(nodes());
        for (std::size_t k = 0; k < nodes(); ++k)
            out.emplace_back(dim(), dim(), std::vector<double>(row.begin() + k * dd, row.begin() + (k + 1) * dd));
        return out;
    }

    /// Nodes k0..k1 with the level-2 blocks of those cells.
    RoughPath restrict(std::size_t k0, std::size_t k1) const {
        SampledPath sub = path_.restrict(k0, k1);
        const std::size_t dd = dim() * dim();
        std::vector<double> b(blocks_.begin() + static_cast<std::ptrdiff_t>(k0 * dd),
                              blocks_.begin() + static_cast<std::ptrdiff_t>(k1 * dd));
        return RoughPath(std::move(sub), std::move(b));
    }

    /// Every stride-th node (plus the last); blocks are the reconstructed XX over each coarse cell.
    RoughPath coarsen(std::size_t stride) const {
        detail::require_arg(stride >= 1, "coarsen: stride must be >= 1");
        std::vector<std::size_t> idx;
        for (std::size_t k = 0; k < nodes(); k += stride) idx.push_back(k);
        if (idx.back() != nodes() - 1) idx.push_back(nodes() - 1);
        std::vector<double> t, v, b;
        for (std::size_t k : idx) {
            t.push_back(grid()[k]);
            v.insert(v.end(), path_.value(k).begin(), path_.value(k).end());
        }
        for (std::size_t c = 0; c + 1 < idx.size(); ++c) {
            const Mat m = second_level(idx[c], idx[c + 1]);
            b.insert(b.end(), m.span().begin(), m.span().end());
        }
        return RoughPath(SampledPath(TimeGrid(std::move(t)), dim(), std::move(v)), std::move(b));
    }

    /// Materializes XX over every ordered node pair.
    RawLevel2 to_raw() const {
        const std::size_t d = dim();
        RawLevel2 raw(grid(), d, d);
        for (std::size_t i = 0; i < nodes(); ++i) {
            const auto row = level2_row(i);
            for (std::size_t j = i; j < nodes(); ++j) {
                auto dst = raw.entry(i, j);
                std::copy(row.begin() + (j - i) * d * d, row.begin() + (j - i + 1) * d * d, dst.begin());
            }
        }
        for (std::size_t i = 0; i < nodes(); ++i)
            for (std::size_t j = 0; j < i; ++j) {
                const Vec x = increment(i, j);
                raw.set(i, j, outer(x.span(), x.span()) - raw.at(j, i));
            }
        return raw;
    }

private:
    SampledPath path_;
    std::vector<double> blocks_;
};

/// XX_{t_i,t_j}; free-function form of RoughPath::second_level.
inline Mat second_level(const RoughPath& r, std::size_t i, std::size_t j) { return r.second_level(i, j); }

/// XX_{i,j} - XX_{i,u} - XX_{u,j} - X_{i,u} (x) X_{u,j}; zero iff Chen's relation holds at (i,u,j).
inline Mat chen_defect(const SampledPath& x, const RawLevel2& level2, std::size_t i, std::size_t u, std::size_t j) {
    detail::require_shape(x.grid() == level2.grid() && level2.rows() == x.dim() && level2.cols() == x.dim(),
                          "chen_defect: path and level-2 field do not match");
    if (!(i <= u && u <= j)) throw std::invalid_argument("chen_defect: indices must satisfy i <= u <= j");
    Mat out = level2.at(i, j) - level2.at(i, u) - level2.at(u, j);
    out -= outer(x.increment(i, u).span(), x.increment(u, j).span());
    return out;
}

/**
 * Largest Chen defect (Frobenius) over node triples i <= u <= j. Exhaustive
 * for grids with at most `exhaustive_nodes` nodes, otherwise `samples`
 * random triples drawn with a fixed seed.
 */
inline double max_chen_defect(const SampledPath& x, const RawLevel2& level2, std::size_t exhaustive_nodes = 257,
                              std::size_t samples = 20000) {
    double worst = 0.0;
    const std::size_t n = x.nodes();
    if (n <= exhaustive_nodes) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t u = i; u < n; ++u)
                for (std::size_t j = u; j < n; ++j)
                    worst = std::max(worst, frobenius_norm(chen_defect(x, level2, i, u, j)));
        return worst;
    }
    std::mt19937_64 gen(0x5eed);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    for (std::size_t s = 0; s < samples; ++s) {
        std::size_t a[3] = {pick(gen), pick(gen), pick(gen)};
        std::sort(a, a + 3);
        worst = std::max(worst, frobenius_norm(chen_defect(x, level2, a[0], a[1], a[2])));
    }
    return worst;
}

/// Chen defect scan of a RoughPath without materializing the O(n^2) table.
inline double max_chen_defect(const RoughPath& r, std::size_t exhaustive_nodes = 257, std::size_t samples = 20000) {
    const std::size_t n = r.nodes();
    auto defect = [&](std::size_t i, std::size_t u, std::size_t j) {
        Mat m = r.second_level(i, j) - r.second_level(i, u) - r.second_level(u, j);
        m -= outer(r.increment(i, u).span(), r.increment(u, j).span());
        return frobenius_norm(m);
    };
    double worst = 0.0;
    if (n <= exhaustive_nodes) {
        const std::size_t dd = r.dim() * r.dim();
        std::vector<std::vector<double>> rows(n);
        for (std::size_t i = 0; i < n; ++i) rows[i] = r.level2_row(i);
        std::vector<double> m(dd);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t u = i; u < n; ++u) {
                const Vec xiu = r.increment(i, u);
                for (std::size_t j = u; j < n; ++j) {
                    const Vec xuj = r.increment(u, j);
                    for (std::size_t e = 0; e < dd; ++e)
                        m[e] = rows[i][(j - i) * dd + e] - rows[i][(u - i) * dd + e] - rows[u][(j - u) * dd + e];
                    std::vector<double> neg(dd, 0.0);
                    detail::add_outer(neg.data(), xiu.data(), xuj.data(), r.dim());
                    for (std::size_t e = 0; e < dd; ++e) m[e] -= neg[e];
                    worst = std::max(worst, euclidean_norm(m));
                }
            }
        return worst;
    }
    std::mt19937_64 gen(0x5eed);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    for (std::size_t s = 0; s < samples; ++s) {
        std::size_t a[3] = {pick(gen), pick(gen), pick(gen)};
        std::sort(a, a + 3);
        worst = std::max(worst, defect(a[0], a[1], a[2]));
    }
    return worst;
}

/**
 * Promotes an external level-2 field to a RoughPath when Chen's relation
 * holds up to `tol`. The check uses XX_{s,t} = XX_{0,t} - XX_{0,s} - X_{0,s} (x) X_{s,t}
 * over all ordered pairs, which is equivalent to Chen's relation; only the
 * consecutive blocks are kept.
 */
inline RoughPath promote(const SampledPath& x, const RawLevel2& level2, double tol = 1e-10) {
    detail::require_shape(x.grid() == level2.grid() && level2.rows() == x.dim() && level2.cols() == x.dim(),
                          "promote: path and level-2 field do not match");
    double worst = 0.0;
    std::size_t wi = 0, wj = 0;
    for (std::size_t i = 0; i < x.nodes(); ++i)
        for (std::size_t j = 0; j < x.nodes(); ++j) {
            Mat m = level2.at(i, j) - level2.at(0, j) + level2.at(0, i);
            m += outer(x.increment(0, i).span(), x.increment(i, j).span());
            const double e = frobenius_norm(m);
            if (e > worst) {
                worst = e;
                wi = i;
                wj = j;
            }
        }
    if (worst > tol)
        throw DataError("promote: Chen defect " + std::to_string(worst) + " at node pair (" + std::to_string(wi) + "," +
                        std::to_string(wj) + ") exceeds tolerance");
    std::vector<Mat> blocks;
    for (std::size_t k = 0; k < x.steps(); ++k) blocks.push_back(level2.at(k, k + 1));
    return RoughPath(x, blocks);
}

/// Canonical lift of the piecewise-linear interpolant: XX over a segment is (1/2) dX (x) dX.
inline RoughPath lift_piecewise_linear(const SampledPath& p) {
    const std::size_t d = p.dim();
    std::vector<double> blocks(p.steps() * d * d, 0.0);
    for (std::size_t k = 0; k < p.steps(); ++k) {
        Vec dx = p.increment(k, k + 1);
        Vec half = 0.5 * dx;
        detail::add_outer(blocks.data() + k * d * d, half.data(), dx.data(), d);
    }
    return RoughPath(p, std::move(blocks));
}

/// [X]_{t_j} = X_{0,t_j} (x) X_{0,t_j} - 2 Sym(XX_{0,t_j}).
inline Mat bracket_one_param(const RoughPath& r, std::size_t j) {
    const Vec x = r.increment(0, j);
    return outer(x.span(), x.span()) - 2.0 * sym(r.second_level(0, j));
}

/// [X]_{t_i,t_j} = X_{i,j} (x) X_{i,j} - 2 Sym(XX_{i,j}).
inline Mat bracket_two_param(const RoughPath& r, std::size_t i, std::size_t j) {
    const Vec x = r.increment(i, j);
    return outer(x.span(), x.span()) - 2.0 * sym(r.second_level(i, j));
}

/// One-parameter bracket at every node, O(n d^2).
inline std::vector<Mat> bracket_path(const RoughPath& r) {
    const auto from0 = r.level2_from_origin();
    std::vector<Mat> out;
    out.reserve(r.nodes());
    for (std::size_t k = 0; k < r.nodes(); ++k) {
        const Vec x = r.increment(0, k);
        out.push_back(outer(x.span(), x.span()) - 2.0 * sym(from0[k]));
    }
    return out;
}

namespace detail {

// Calls f(i, j, x_ij, xx_ij) for node pairs i < j with t_j - t_i <= window.
template <class F>
void for_each_rough_pair(const RoughPath& r, F&& f) {
    const std::size_t d = r.dim();
    const std::size_t dd = d * d;
    const double* x = r.path().raw().data();
    std::vector<double> xij(d);
    for (std::size_t i = 0; i + 1 < r.nodes(); ++i) {
        const auto row = r.level2_row(i);
        for (std::size_t j = i + 1; j < r.nodes(); ++j) {
            for (std::size_t a = 0; a < d; ++a) xij[a] = x[j * d + a] - x[i * d + a];
            f(i, j, std::span<const double>(xij), std::span<const double>(row.data() + (j - i) * dd, dd));
        }
    }
}

inline RoughPath scan_view(const RoughPath& r, const SeminormOptions& opts) {
    if (r.nodes() <= opts.max_nodes) return r;
    if (!opts.subsample_large) throw std::invalid_argument("rough path scan: grid exceeds max_nodes");
    return r.coarsen((r.nodes() + opts.max_nodes - 2) / (opts.max_nodes - 1));
}

} // namespace detail

/// max over node pairs of |Sym(XX_{s,t}) - (1/2) X_{s,t} (x) X_{s,t}|.
inline double max_geometric_defect(const RoughPath& r, const SeminormOptions& opts = {}) {
    const RoughPath view = detail::scan_view(r, opts);
    const std::size_t d = r.dim();
    double worst = 0.0;
    detail::for_each_rough_pair(view, [&](std::size_t, std::size_t, std::span<const double> x, std::span<const double> xx) {
        double s = 0.0;
        for (std::size_t a = 0; a < d; ++a)
            for (std::size_t b = 0; b < d; ++b) {
                const double e = 0.5 * (xx[a * d + b] + xx[b * d + a]) - 0.5 * x[a] * x[b];
                s += e * e;
            }
        worst = std::max(worst, std::sqrt(s));
    });
    if (view.nodes() != r.nodes())
        for (std::size_t k = 0; k < r.steps(); ++k)
            worst = std::max(worst, 0.5 * frobenius_norm(bracket_two_param(r, k, k + 1)));
    return worst;
}

/**
 * True iff Sym(XX_{s,t}) = (1/2) X_{s,t} (x) X_{s,t} up to tol (Frobenius)
 * over every node pair. Since that difference is -(1/2)[X]_{s,t}, this is
 * the same as max |[X]_{s,t}| <= 2 tol.
 */
inline bool is_weakly_geometric(const RoughPath& r, double tol, const SeminormOptions& opts = {}) {
    detail::require_arg(tol >= 0.0, "is_weakly_geometric: tol must be >= 0");
    return max_geometric_defect(r, opts) <= tol;
}

/**
 * Discrete ||XX||_{beta} over ordered pairs s != t (beta = 2 alpha for rough
 * paths). Reversed pairs use XX_{t,s} = X_{s,t} (x) X_{s,t} - XX_{s,t}.
 */
inline double level2_holder(const RoughPath& r, double beta, const SeminormOptions& opts = {}) {
    detail::require_arg(beta > 0.0 && beta <= 2.0, "level2_holder: exponent must lie in (0, 2]");
    const RoughPath view = detail::scan_view(r, opts);
    const std::size_t d = r.dim();
    const auto& g = view.grid();
    double best = 0.0;
    detail::for_each_rough_pair(view, [&](std::size_t i, std::size_t j, std::span<const double> x, std::span<const double> xx) {
        double fwd = 0.0, bwd = 0.0;
        for (std::size_t a = 0; a < d; ++a)
            for (std::size_t b = 0; b < d; ++b) {
                const double e = xx[a * d + b];
                const double rev = x[a] * x[b] - e;
                fwd += e * e;
                bwd += rev * rev;
            }
        best = std::max(best, std::sqrt(std::max(fwd, bwd)) / std::pow(g[j] - g[i], beta));
    });
    return best;
}

/// sup over ordered node pairs of |XX_{s,t}|.
inline double level2_sup(const RoughPath& r, const SeminormOptions& opts = {}) {
    const RoughPath view = detail::scan_view(r, opts);
    const std::size_t d = r.dim();
    double best = 0.0;
    detail::for_each_rough_pair(view, [&](std::size_t, std::size_t, std::span<const double> x, std::span<const double> xx) {
        double fwd = 0.0, bwd = 0.0;
        for (std::size_t a = 0; a < d; ++a)
            for (std::size_t b = 0; b < d; ++b) {
                const double rev = x[a] * x[b] - xx[a * d + b];
                fwd += xx[a * d + b] * xx[a * d + b];
                bwd += rev * rev;
            }
        best = std::max(best, std::sqrt(std::max(fwd, bwd)));
    });
    return best;
}

namespace detail {

inline void check_rough_alpha(double alpha) {
    require_arg(alpha > 1.0 / 3.0 && alpha <= 0.5, "rough path exponent must lie in (1/3, 1/2]");
}

} // namespace detail

/// |||X|||_alpha = ||X||_alpha + ||XX||_{2 alpha}.
inline double rough_seminorm(const RoughPath& r, double alpha, const SeminormOptions& opts = {}) {
    detail::check_rough_alpha(alpha);
    return holder_seminorm(r.path(), alpha, opts) + level2_holder(r, 2.0 * alpha, opts);
}

/// |X|_alpha = |X_0| + |||X|||_alpha.
inline double rough_norm(const RoughPath& r, double alpha, const SeminormOptions& opts = {}) {
    return euclidean_norm(r.path().value(0)) + rough_seminorm(r, alpha, opts);
}

/**
 * d_alpha(X, Y) = |X_0 - Y_0| + ||X - Y||_alpha + ||XX - YY||_{2 alpha}, with
 * the level-2 difference taken pairwise (the difference of two rough paths
 * is generally not a rough path).
 */
inline double rough_metric(const RoughPath& r1, const RoughPath& r2, double alpha, const SeminormOptions& opts = {}) {
    detail::check_rough_alpha(alpha);
    detail::require_shape(r1.grid() == r2.grid() && r1.dim() == r2.dim(), "rough_metric: grid or dimension mismatch");
    const RoughPath a = detail::scan_view(r1, opts);
    const RoughPath b = detail::scan_view(r2, opts);
    const std::size_t d = a.dim();
    const std::size_t dd = d * d;
    const auto& g = a.grid();

    std::vector<double> diff(a.path().raw());
    for (std::size_t k = 0; k < diff.size(); ++k) diff[k] -= b.path().raw()[k];
    const SampledPath dpath(g, d, diff);
    double level2 = 0.0;
    const double* xa = a.path().raw().data();
    const double* xb = b.path().raw().data();
    for (std::size_t i = 0; i + 1 < a.nodes(); ++i) {
        const auto ra = a.level2_row(i);
        const auto rb = b.level2_row(i);
        for (std::size_t j = i + 1; j < a.nodes(); ++j) {
            double fwd = 0.0, bwd = 0.0;
            for (std::size_t p = 0; p < d; ++p)
                for (std::size_t q = 0; q < d; ++q) {
                    const double ea = ra[(j - i) * dd + p * d + q];
                    const double eb = rb[(j - i) * dd + p * d + q];
                    const double xpa = xa[j * d + p] - xa[i * d + p], xqa = xa[j * d + q] - xa[i * d + q];
                    const double xpb = xb[j * d + p] - xb[i * d + p], xqb = xb[j * d + q] - xb[i * d + q];
                    fwd += (ea - eb) * (ea - eb);
                    const double rev = (xpa * xqa - ea) - (xpb * xqb - eb);
                    bwd += rev * rev;
                }
            level2 = std::max(level2, std::sqrt(std::max(fwd, bwd)) / std::pow(g[j] - g[i], 2.0 * alpha));
        }
    }
    return euclidean_norm(dpath.value(0)) + holder_seminorm(dpath, alpha, opts) + level2;
}

} // namespace roughpath
