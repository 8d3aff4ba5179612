// Labeled datasets with per-point provenance and the two mixing policies of
// the self-consuming loop: fixed real/synthetic ratio and accumulation.
#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "stllab/linalg.hpp"
#include "stllab/rng.hpp"

namespace stllab {

// origin == 0 marks real data, origin == j >= 1 marks synthetic data produced
// at generation j.
inline constexpr int kRealOrigin = 0;

struct LabeledPoint {
    Vec x;
    Vec y;  // scalar labels are stored as a 1-vector
    int origin = kRealOrigin;

    double label() const {
        if (y.size() != 1) throw std::logic_error("label(): label is not scalar");
        return y[0];
    }
};

class Dataset {
public:
    Dataset() = default;
    explicit Dataset(std::size_t dim) : dim_(dim) {}

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return points_.size(); }
    bool empty() const { return points_.empty(); }

    const LabeledPoint& operator[](std::size_t i) const { return points_[i]; }
    LabeledPoint& operator[](std::size_t i) { return points_[i]; }
    auto begin() const { return points_.begin(); }
    auto end() const { return points_.end(); }

    void add(Vec x, Vec y, int origin) {
        if (dim_ == 0 && points_.empty()) dim_ = x.size();
        if (x.size() != dim_) throw std::invalid_argument("Dataset::add: dimension mismatch");
        for (double v : x)
            if (!std::isfinite(v)) throw std::invalid_argument("Dataset::add: non-finite x");
        for (double v : y)
            if (!std::isfinite(v)) throw std::invalid_argument("Dataset::add: non-finite y");
        points_.push_back(LabeledPoint{std::move(x), std::move(y), origin});
    }

    void add_scalar(Vec x, double y, int origin) { add(std::move(x), Vec{y}, origin); }

    std::size_t count_with_origin(int origin) const {
        std::size_t c = 0;
        for (const auto& p : points_)
            if (p.origin == origin) ++c;
        return c;
    }

    std::size_t count_real() const { return count_with_origin(kRealOrigin); }

    std::size_t count_synthetic() const { return size() - count_real(); }

    // Stable content digest (FNV-1a over the raw doubles and origins); used
    // for trace identity and byte-reproducibility checks.
    std::uint64_t digest() const {
        std::uint64_t h = 0xCBF29CE484222325ULL;
        auto eat = [&h](std::uint64_t v) {
            for (int b = 0; b < 8; ++b) {
                h ^= (v >> (8 * b)) & 0xFF;
                h *= 0x100000001B3ULL;
            }
        };
        eat(static_cast<std::uint64_t>(points_.size()));
        eat(static_cast<std::uint64_t>(dim_));
        for (const auto& p : points_) {
            eat(static_cast<std::uint64_t>(static_cast<std::int64_t>(p.origin)));
            for (double v : p.x) {
                std::uint64_t bits;
                static_assert(sizeof(bits) == sizeof(v));
                __builtin_memcpy(&bits, &v, 8);
                eat(bits);
            }
            for (double v : p.y) {
                std::uint64_t bits;
                __builtin_memcpy(&bits, &v, 8);
                eat(bits);
            }
        }
        return h;
    }

private:
    std::vector<LabeledPoint> points_;
    std::size_t dim_ = 0;
};

inline std::size_t round_half_up(double x) {
    return static_cast<std::size_t>(std::floor(x + 0.5));
}

// Mixing policies.
struct FixedRatio {
    double alpha = 0.5;       // proportion of real data
    std::size_t n = 0;        // mixed dataset size
    bool fixed_real_subset = false;
    double oversample_factor = 1.0;
};

struct Accumulate {
    double lambda = 1.0;  // synthetic size per generation, as a fraction of |S0|
    std::size_t n = 0;    // |S0|
};

using MixPolicy = std::variant<FixedRatio, Accumulate>;

inline void validate(const MixPolicy& policy) {
    if (const auto* f = std::get_if<FixedRatio>(&policy)) {
        if (!(f->alpha >= 0.0 && f->alpha <= 1.0))
            throw std::invalid_argument("FixedRatio: alpha out of [0,1]");
        if (f->n < 1) throw std::invalid_argument("FixedRatio: n must be >= 1");
        if (!(f->oversample_factor >= 1.0))
            throw std::invalid_argument("FixedRatio: oversample_factor must be >= 1");
    } else {
        const auto& a = std::get<Accumulate>(policy);
        if (!(a.lambda > 0.0)) throw std::invalid_argument("Accumulate: lambda must be > 0");
        if (a.n < 1) throw std::invalid_argument("Accumulate: n must be >= 1");
    }
}

namespace detail {
inline void append_picks(Dataset& out, const Dataset& src, const std::vector<std::size_t>& idx) {
    for (std::size_t i : idx) {
        const auto& p = src[i];
        out.add(p.x, p.y, p.origin);
    }
}
}  // namespace detail

// round(alpha*n) points without replacement from `real` plus the remainder
// from `synthetic` (half-up rounding, synthetic takes the rest).  Provenance
// tags are preserved.
inline Dataset mix_fixed_ratio(const Dataset& real, const Dataset& synthetic, double alpha,
                               std::size_t n, RngStream& rng) {
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw std::invalid_argument("mix_fixed_ratio: alpha out of [0,1]");
    const std::size_t n_real = round_half_up(alpha * static_cast<double>(n));
    const std::size_t n_syn = n - n_real;
    if (n_real > real.size() || n_syn > synthetic.size())
        throw std::runtime_error("mix_fixed_ratio: insufficient points");
    if (n_real > 0 && n_syn > 0 && real.dim() != synthetic.dim())
        throw std::invalid_argument("mix_fixed_ratio: dimension mismatch");

    Dataset out(n_real > 0 ? real.dim() : synthetic.dim());
    detail::append_picks(out, real, rng.pick_without_replacement(real.size(), n_real));
    detail::append_picks(out, synthetic, rng.pick_without_replacement(synthetic.size(), n_syn));
    return out;
}

// Concatenation S_0 u S_1 u ... u S_i of the accumulation regime.  Each
// synthetic generation must have size round(lambda * |real|).
inline Dataset mix_accumulate(const Dataset& real, const std::vector<Dataset>& synthetic_generations,
                              double lambda) {
    if (!(lambda > 0.0)) throw std::invalid_argument("mix_accumulate: lambda must be > 0");
    const std::size_t expected = round_half_up(lambda * static_cast<double>(real.size()));
    Dataset out(real.dim());
    for (const auto& p : real) out.add(p.x, p.y, p.origin);
    for (const auto& gen : synthetic_generations) {
        if (gen.dim() != real.dim())
            throw std::invalid_argument("mix_accumulate: dimension mismatch");
        if (gen.size() != expected)
            throw std::invalid_argument("mix_accumulate: generation size != round(lambda*n)");
        for (const auto& p : gen) out.add(p.x, p.y, p.origin);
    }
    return out;
}

}  // namespace stllab
