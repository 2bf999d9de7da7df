#pragma once

#include <roughpath/errors.hpp>
#include <roughpath/grid.hpp>
#include <roughpath/rough_path.hpp>
#include <roughpath/tensor.hpp>

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace roughpath {

/**
 * @brief Philox4x32-10 counter-based generator (Salmon et al., SC'11).
 *
 * Stateless: every output block is a pure function of (counter, key).
 */
struct Philox4x32 {
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter generate(Counter ctr, Key key) noexcept {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += 0x9E3779B9u;
                key[1] += 0xBB67AE85u;
            }
            const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * ctr[0];
            const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * ctr[2];
            const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
            const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        }
        return ctr;
    }
};

/**
 * Standard normal variates addressed by (seed, path, step, coordinate).
 * Two normals come out of one Philox block via Box-Muller, so coordinates
 * 2c and 2c+1 share a counter.
 */
class GaussianStream {
public:
    GaussianStream(std::uint64_t seed, std::uint64_t path) noexcept
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)}, path_(path) {}

    double normal(std::uint64_t step, std::uint32_t coord) const noexcept {
        const Philox4x32::Counter ctr{static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32), coord / 2,
                                      static_cast<std::uint32_t>(path_)};
        const auto r = Philox4x32::generate(ctr, key_);
        const double u1 = to_unit((std::uint64_t{r[0]} << 32) | r[1]);
        const double u2 = to_unit((std::uint64_t{r[2]} << 32) | r[3]);
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        return (coord % 2 == 0) ? radius * std::cos(angle) : radius * std::sin(angle);
    }

private:
    // (0, 1), never 0.
    static double to_unit(std::uint64_t x) noexcept {
        return (static_cast<double>(x >> 11) + 0.5) * 0x1.0p-53;
    }

    Philox4x32::Key key_;
    std::uint64_t path_;
};

/// Brownian sampling setup: coarse grid, q fine steps per coarse cell, keyed stream.
struct NoiseConfig {
    std::size_t dim = 1;
    TimeGrid coarse = TimeGrid::uniform(1.0, 1);
    std::size_t oversample = 32;
    std::uint64_t seed = 0;
    std::uint64_t path_index = 0;
};

/// Brownian motion on the fine grid coarse.refine(oversample); B_0 = 0.
inline SampledPath sample_bm(const NoiseConfig& cfg) {
    detail::require_arg(cfg.dim >= 1, "sample_bm: dimension must be >= 1");
    detail::require_arg(cfg.oversample >= 1, "sample_bm: oversample must be >= 1");
    const TimeGrid fine = cfg.coarse.refine(cfg.oversample);
    const GaussianStream stream(cfg.seed, cfg.path_index);
    const std::size_t d = cfg.dim;
    std::vector<double> b(fine.nodes() * d, 0.0);
    for (std::size_t k = 0; k < fine.steps(); ++k) {
        const double sd = std::sqrt(fine.dt(k));
        for (std::size_t a = 0; a < d; ++a)
            b[(k + 1) * d + a] = b[k * d + a] + sd * stream.normal(k, static_cast<std::uint32_t>(a));
    }
    return SampledPath(fine, d, std::move(b));
}

namespace detail {

// Fine-grid index of every coarse node.
inline std::vector<std::size_t> embed_grid(const TimeGrid& fine, const TimeGrid& coarse) {
    std::vector<std::size_t> idx;
    idx.reserve(coarse.nodes());
    std::size_t f = 0;
    for (std::size_t c = 0; c < coarse.nodes(); ++c) {
        const double t = coarse[c];
        const double tol = 1e-12 * std::max(1.0, std::abs(t));
        while (f < fine.nodes() && fine[f] < t - tol) ++f;
        if (f == fine.nodes() || std::abs(fine[f] - t) > tol)
            throw ShapeError("enhancement: coarse node " + std::to_string(c) + " is not a fine-grid node");
        idx.push_back(f);
    }
    return idx;
}

inline SampledPath restrict_to(const SampledPath& fine, const TimeGrid& coarse, const std::vector<std::size_t>& idx) {
    std::vector<double> v;
    v.reserve(idx.size() * fine.dim());
    for (std::size_t f : idx) v.insert(v.end(), fine.value(f).begin(), fine.value(f).end());
    return SampledPath(coarse, fine.dim(), std::move(v));
}

} // namespace detail

/**
 * Ito enhancement: on each coarse cell [t_k, t_{k+1}] the block is the
 * left-point sum over fine steps of B_{t_k,tau} (x) dB_tau.
 */
inline RoughPath ito_enhance(const SampledPath& fine, const TimeGrid& coarse) {
    const auto idx = detail::embed_grid(fine.grid(), coarse);
    const std::size_t d = fine.dim();
    std::vector<double> blocks(coarse.steps() * d * d, 0.0);
    std::vector<double> from_start(d), db(d);
    for (std::size_t k = 0; k < coarse.steps(); ++k) {
        double* blk = blocks.data() + k * d * d;
        for (std::size_t f = idx[k]; f < idx[k + 1]; ++f) {
            for (std::size_t a = 0; a < d; ++a) {
                from_start[a] = fine.value(f)[a] - fine.value(idx[k])[a];
                db[a] = fine.value(f + 1)[a] - fine.value(f)[a];
            }
            detail::add_outer(blk, from_start.data(), db.data(), d);
        }
    }
    return RoughPath(detail::restrict_to(fine, coarse, idx), std::move(blocks));
}

/// Geometric enhancement: Anti(Ito block) + (1/2) dB (x) dB on every coarse cell.
inline RoughPath strat_enhance(const SampledPath& fine, const TimeGrid& coarse) {
    const RoughPath ito = ito_enhance(fine, coarse);
    std::vector<Mat> blocks;
    blocks.reserve(ito.steps());
    for (std::size_t k = 0; k < ito.steps(); ++k) {
        const Vec db = ito.increment(k, k + 1);
        blocks.push_back(anti(ito.block(k)) + 0.5 * outer(db.span(), db.span()));
    }
    return RoughPath(ito.path(), blocks);
}

/// Ito blocks shifted by F_{s,t} = ((t - s)/2) Id.
inline RoughPath strat_shift(const RoughPath& ito) {
    const std::size_t d = ito.dim();
    std::vector<double> blocks(ito.raw_blocks());
    for (std::size_t k = 0; k < ito.steps(); ++k)
        for (std::size_t a = 0; a < d; ++a) blocks[k * d * d + a * d + a] += 0.5 * ito.grid().dt(k);
    return RoughPath(ito.path(), std::move(blocks));
}

enum class Enhancement { Ito, Strat, StratShift };

inline std::string_view to_string(Enhancement e) {
    switch (e) {
        case Enhancement::Ito: return "ito";
        case Enhancement::Strat: return "strat";
        case Enhancement::StratShift: return "strat-shift";
    }
    return "?";
}

inline std::optional<Enhancement> parse_enhancement(std::string_view s) {
    if (s == "ito") return Enhancement::Ito;
    if (s == "strat") return Enhancement::Strat;
    if (s == "strat-shift") return Enhancement::StratShift;
    return std::nullopt;
}

inline RoughPath enhance(const SampledPath& fine, const TimeGrid& coarse, Enhancement kind) {
    switch (kind) {
        case Enhancement::Ito: return ito_enhance(fine, coarse);
        case Enhancement::Strat: return strat_enhance(fine, coarse);
        case Enhancement::StratShift: return strat_shift(ito_enhance(fine, coarse));
    }
    throw std::invalid_argument("enhance: unknown enhancement");
}

/// Sum over fine steps of dB (x) dB between two coarse times (realized quadratic variation).
inline Mat realized_qv(const SampledPath& fine, std::size_t f0, std::size_t f1) {
    const std::size_t d = fine.dim();
    Mat qv(d, d);
    for (std::size_t f = f0; f < f1; ++f) {
        const Vec db = fine.increment(f, f + 1);
        detail::add_outer(qv.data(), db.data(), db.data(), d);
    }
    return qv;
}

} // namespace roughpath
