// Deterministic counter-based randomness for reproducible experiment runs.
//
// The generator is SplitMix64 used in counter mode: output k of a stream with
// base seed b is mix64(b + (k+1) * 0x9E3779B97F4A7C15).  Streams are cheap to
// derive, never overlap for distinct (seed, generation, purpose) triples, and
// the whole scheme is portable across platforms (no libstdc++ distribution
// internals are used anywhere).  The algorithm name is exported so result
// metadata can record it.
#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace stllab {

inline constexpr const char* kRngAlgorithm = "splitmix64-counter+box-muller";

// SplitMix64 finalizer (Steele, Lea, Flood 2014).
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Stream purposes.  Values are part of the reproducibility contract: changing
// them changes every derived stream.
enum class Purpose : std::uint64_t {
    DataInit = 1,  // initial dataset draws
    Sample   = 2,  // generator sampling at a given generation
    Mix      = 3,  // mixing subsets (real picks first, then synthetic)
    MixFrozen = 4, // frozen real-subset pick (fixed_real_subset=true)
    Learner  = 5,  // learner-side draws (e.g. classifier subsample)
    Query    = 6,  // ICL query inputs
    Noise    = 7,  // label / generation noise
    Probe    = 8,  // stability probe sets
    Replace  = 9,  // neighbour-dataset replacement draws
    Eval     = 10, // evaluation query draws
    Task     = 11, // task parameter draws (e.g. regression weight)
    Weights  = 12, // model weight initialisation
    Run      = 13, // per-run seed derivation in sweeps
    Train    = 14, // SGD index path
};

// Hash-mix derivation: deterministic and collision-resistant in the sense
// that distinct (generation, purpose) pairs give unrelated streams.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t generation,
                                    Purpose purpose) noexcept {
    std::uint64_t h = mix64(master ^ 0x9E3779B97F4A7C15ULL);
    h = mix64(h ^ (0xBF58476D1CE4E5B9ULL + generation));
    h = mix64(h ^ (0x94D049BB133111EBULL + static_cast<std::uint64_t>(purpose)));
    return h;
}

class RngStream {
public:
    explicit RngStream(std::uint64_t seed) noexcept : base_(seed) {}

    std::uint64_t next_u64() noexcept {
        counter_ += 1;
        return mix64(base_ + counter_ * 0x9E3779B97F4A7C15ULL);
    }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform01() noexcept {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform in (0, 1]; used where log(u) must stay finite.
    double uniform01_open_low() noexcept {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) noexcept {
        return lo + (hi - lo) * uniform01();
    }

    // Unbiased integer in [0, n) by rejection.
    std::uint64_t uniform_below(std::uint64_t n) {
        if (n == 0) throw std::invalid_argument("uniform_below: n must be positive");
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v;
        do {
            v = next_u64();
        } while (v >= limit);
        return v % n;
    }

    // Standard normal via Box-Muller with a cached spare.
    double gaussian() noexcept {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform01_open_low();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    double gaussian(double mean, double stddev) noexcept {
        return mean + stddev * gaussian();
    }

    std::vector<double> gaussian_vec(std::size_t d) {
        std::vector<double> v(d);
        for (auto& x : v) x = gaussian();
        return v;
    }

    // Uniform draw from the unit euclidean ball in R^d.
    std::vector<double> unit_ball(std::size_t d) {
        std::vector<double> v = gaussian_vec(d);
        double nrm = 0.0;
        for (double x : v) nrm += x * x;
        nrm = std::sqrt(nrm);
        const double r = std::pow(uniform01(), 1.0 / static_cast<double>(d));
        const double scale = nrm > 0.0 ? r / nrm : 0.0;
        for (auto& x : v) x *= scale;
        return v;
    }

    // First k indices of a partial Fisher-Yates shuffle of {0,...,n-1}.
    std::vector<std::size_t> pick_without_replacement(std::size_t n, std::size_t k) {
        if (k > n) throw std::invalid_argument("pick_without_replacement: k > n");
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        for (std::size_t i = 0; i < k; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(uniform_below(n - i));
            std::swap(idx[i], idx[j]);
        }
        idx.resize(k);
        return idx;
    }

private:
    std::uint64_t base_;
    std::uint64_t counter_ = 0;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

inline RngStream make_stream(std::uint64_t master, std::uint64_t generation, Purpose p) {
    return RngStream(derive_seed(master, generation, p));
}

}  // namespace stllab
