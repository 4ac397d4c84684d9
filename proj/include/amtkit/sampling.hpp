#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "amtkit/codec.hpp"
#include "amtkit/vocab.hpp"

namespace amtkit {

/// Source of next-token scores. scores() fills `out` (one unnormalized,
/// finite score per id in the full text+music vocabulary) for the given
/// context. Implementations must be safe for concurrent read-only queries.
class LogitsProvider {
public:
    virtual ~LogitsProvider() = default;
    virtual void scores(std::span<const uint32_t> context, std::span<float> out) const = 0;
};

/// Sorted, disjoint half-open id ranges; the shape grammar masks come in,
/// since every event class occupies a contiguous id block.
struct IdRangeSet {
    std::vector<std::pair<uint32_t, uint32_t>> ranges;

    void add(uint32_t lo, uint32_t hi);
    bool contains(uint32_t id) const;
    uint64_t count() const;
};

/// Tracks the onset -> duration -> instrument-pitch cycle during generation.
/// Expect::Any disables constraints.
enum class Expect : uint8_t { Onset, Duration, InstrPitch, Any };

struct GrammarState {
    Expect expects = Expect::Onset;
    uint32_t last_onset_bin = 0;
    uint64_t emitted = 0;

    /// Deterministic transition for an accepted token. Text and anticipated
    /// ids do not advance the normal-stream cycle.
    void advance(uint32_t global_id, const VocabConfig& cfg);
};

/// Ids that keep the stream decodable from the given state: normal-flavor
/// onsets never regress, and EOS is offered only at triple boundaries.
IdRangeSet grammar_mask(const GrammarState& state, const VocabConfig& cfg);

/// Softmax the scores, keep the smallest probability-sorted prefix with
/// cumulative mass >= top_p (ties broken toward lower ids), renormalize,
/// sample. The result is always inside the kept prefix.
uint32_t nucleus_sample(std::span<const float> scores, double top_p, std::mt19937_64& rng);

/// nucleus_sample restricted to the allowed set (everything else gets zero
/// probability before the nucleus truncation). Throws DeadEnd on an empty set.
uint32_t nucleus_sample_masked(std::span<const float> scores, const IdRangeSet& allowed,
                               double top_p, std::mt19937_64& rng);

struct GenerateOptions {
    double top_p = 0.98;
    uint32_t max_new = 2048;
    bool constrained = true;
};

/// Autoregressive sampling loop. Stops after appending EOS or at the max_new
/// budget; in constrained mode the music portion of the result (everything
/// after the prompt, minus the final EOS) always validates, so a budget stop
/// trims any incomplete trailing triple.
TokenSequence generate(const LogitsProvider& provider, std::span<const uint32_t> prompt,
                       const GenerateOptions& options, std::mt19937_64& rng,
                       const VocabConfig& cfg);

}  // namespace amtkit
