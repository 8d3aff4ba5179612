// Orchestration of the self-consuming training loop, generic over a
// generative-model interface and an optional learner.
//
// A generator G provides
//   Params fit(const Dataset&)                       and
//   Dataset sample(const Params&, std::size_t m, RngStream&, int origin).
// Generation 0 fits on S_0 alone; generation j >= 1 samples S_j from the
// previous fit, mixes per policy, and refits.  All randomness derives from
// (seed, generation, purpose), so two runs with equal seeds are coupled
// stream-for-stream even when their datasets differ.
#pragma once

#include <concepts>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "stllab/dataset.hpp"
#include "stllab/rng.hpp"

namespace stllab {

template <typename G>
concept GenerativeModel = requires(const G g, const Dataset& d, const typename G::Params& p,
                                   std::size_t m, RngStream& rng, int origin) {
    { g.fit(d) } -> std::same_as<typename G::Params>;
    { g.sample(p, m, rng, origin) } -> std::same_as<Dataset>;
};

template <typename P, typename L>
struct TraceEntry {
    P params;                 // model snapshot after fitting this generation
    Dataset mixed;            // the dataset the model was fitted on
    std::uint64_t mixed_digest = 0;
    std::optional<L> learner_output;
    std::map<std::string, double> metrics;
};

template <typename P, typename L = Vec>
using GenerationTrace = std::vector<TraceEntry<P, L>>;

// Learner: invoked on each generation's mixed dataset with its own stream.
template <typename L>
using LearnerFn = std::function<L(const Dataset&, RngStream&)>;

template <GenerativeModel G, typename L = Vec>
GenerationTrace<typename G::Params, L> run_stl(const Dataset& s0, const G& generator,
                                               const LearnerFn<L>& learner,
                                               const MixPolicy& policy, std::size_t generations,
                                               std::uint64_t seed) {
    validate(policy);
    GenerationTrace<typename G::Params, L> trace;
    trace.reserve(generations + 1);

    auto record = [&](typename G::Params params, Dataset mixed, std::size_t gen) {
        TraceEntry<typename G::Params, L> e;
        e.params = std::move(params);
        e.mixed_digest = mixed.digest();
        if (learner) {
            RngStream lrng = make_stream(seed, gen, Purpose::Learner);
            e.learner_output = learner(mixed, lrng);
        }
        e.mixed = std::move(mixed);
        trace.push_back(std::move(e));
    };

    try {
        record(generator.fit(s0), s0, 0);
    } catch (const std::exception& ex) {
        throw std::runtime_error("generation 0: " + std::string(ex.what()));
    }

    // Frozen real subset for FixedRatio with fixed_real_subset=true.
    std::optional<std::vector<std::size_t>> frozen_real;
    if (const auto* f = std::get_if<FixedRatio>(&policy); f && f->fixed_real_subset) {
        RngStream frng = make_stream(seed, 0, Purpose::MixFrozen);
        frozen_real = frng.pick_without_replacement(
            s0.size(), round_half_up(f->alpha * static_cast<double>(f->n)));
    }

    std::vector<Dataset> history;  // synthetic generations (Accumulate policy)

    for (std::size_t j = 1; j <= generations; ++j) {
        try {
            const auto& prev = trace.back().params;
            Dataset mixed;
            if (const auto* f = std::get_if<FixedRatio>(&policy)) {
                const std::size_t n_real = round_half_up(f->alpha * static_cast<double>(f->n));
                const std::size_t n_syn = f->n - n_real;
                Dataset sj(s0.dim());
                if (n_syn > 0) {
                    RngStream srng = make_stream(seed, j, Purpose::Sample);
                    const auto draw = static_cast<std::size_t>(
                        std::ceil(static_cast<double>(n_syn) * f->oversample_factor));
                    sj = generator.sample(prev, draw, srng, static_cast<int>(j));
                }
                RngStream mrng = make_stream(seed, j, Purpose::Mix);
                if (frozen_real) {
                    mixed = Dataset(s0.dim());
                    for (std::size_t idx : *frozen_real) {
                        const auto& p = s0[idx];
                        mixed.add(p.x, p.y, p.origin);
                    }
                    for (std::size_t idx : mrng.pick_without_replacement(sj.size(), n_syn)) {
                        const auto& p = sj[idx];
                        mixed.add(p.x, p.y, p.origin);
                    }
                } else {
                    mixed = mix_fixed_ratio(s0, sj, f->alpha, f->n, mrng);
                }
            } else {
                const auto& acc = std::get<Accumulate>(policy);
                const std::size_t m = round_half_up(acc.lambda * static_cast<double>(s0.size()));
                RngStream srng = make_stream(seed, j, Purpose::Sample);
                history.push_back(generator.sample(prev, m, srng, static_cast<int>(j)));
                mixed = mix_accumulate(s0, history, acc.lambda);
            }
            auto fitted = generator.fit(mixed);
            record(std::move(fitted), std::move(mixed), j);
        } catch (const std::exception& ex) {
            throw std::runtime_error("generation " + std::to_string(j) + ": " +
                                     std::string(ex.what()));
        }
    }
    return trace;
}

// Convenience overload without a learner.
template <GenerativeModel G>
GenerationTrace<typename G::Params, Vec> run_stl(const Dataset& s0, const G& generator,
                                                 const MixPolicy& policy, std::size_t generations,
                                                 std::uint64_t seed) {
    return run_stl<G, Vec>(s0, generator, LearnerFn<Vec>{}, policy, generations, seed);
}

}  // namespace stllab
