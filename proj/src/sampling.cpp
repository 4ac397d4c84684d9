#include "amtkit/sampling.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

namespace amtkit {

void IdRangeSet::add(uint32_t lo, uint32_t hi) {
    if (lo >= hi)
        return;
    ranges.emplace_back(lo, hi);
    std::sort(ranges.begin(), ranges.end());
    // merge touching neighbours
    std::vector<std::pair<uint32_t, uint32_t>> merged;
    for (const auto& r : ranges) {
        if (!merged.empty() && r.first <= merged.back().second)
            merged.back().second = std::max(merged.back().second, r.second);
        else
            merged.push_back(r);
    }
    ranges = std::move(merged);
}

bool IdRangeSet::contains(uint32_t id) const {
    for (const auto& [lo, hi] : ranges)
        if (id >= lo && id < hi)
            return true;
    return false;
}

uint64_t IdRangeSet::count() const {
    uint64_t n = 0;
    for (const auto& [lo, hi] : ranges) n += hi - lo;
    return n;
}

void GrammarState::advance(uint32_t global_id, const VocabConfig& cfg) {
    if (!cfg.is_midi(global_id))
        return;
    const Event ev = event_of(global_id - cfg.text_vocab_size);
    if (ev.anticipated)
        return;
    switch (ev.kind) {
    case EventKind::Onset:
        last_onset_bin = uint32_t(ev.bin);
        expects = Expect::Duration;
        break;
    case EventKind::Duration:
        expects = Expect::InstrPitch;
        break;
    case EventKind::InstrPitch:
        expects = Expect::Onset;
        ++emitted;
        break;
    }
}

IdRangeSet grammar_mask(const GrammarState& state, const VocabConfig& cfg) {
    const uint32_t base = cfg.midi_base();
    IdRangeSet set;
    switch (state.expects) {
    case Expect::Onset:
        // onsets never run backwards; EOS only here, at a triple boundary
        set.add(base + state.last_onset_bin, base + VocabConfig::kOnsetBins);
        set.add(cfg.eos_id, cfg.eos_id + 1);
        break;
    case Expect::Duration:
        set.add(base + VocabConfig::kDurationBase,
                base + VocabConfig::kDurationBase + VocabConfig::kDurationBins);
        break;
    case Expect::InstrPitch:
        set.add(base + VocabConfig::kInstrPitchBase, base + VocabConfig::kNormalBlock);
        break;
    case Expect::Any:
        set.add(0, cfg.total_vocab_size());
        break;
    }
    return set;
}

namespace {

struct Candidate {
    uint32_t id;
    float prob;
};

/// Shared nucleus core over an explicit candidate list. `prob` holds raw
/// scores on entry and softmax probabilities after.
uint32_t nucleus_core(std::vector<Candidate>& candidates, double top_p, std::mt19937_64& rng) {
    if (candidates.empty())
        raise(Errc::DeadEnd, "no candidate tokens");

    float max_score = candidates[0].prob;
    for (const Candidate& c : candidates) max_score = std::max(max_score, c.prob);
    double total = 0.0;
    for (Candidate& c : candidates) {
        c.prob = float(std::exp(double(c.prob) - double(max_score)));
        total += c.prob;
    }

    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        if (a.prob != b.prob)
            return a.prob > b.prob;
        return a.id < b.id;
    });

    // smallest prefix whose cumulative mass reaches top_p * total
    const double needed = top_p * total;
    double kept = 0.0;
    size_t kept_count = candidates.size();
    for (size_t i = 0; i < candidates.size(); ++i) {
        kept += candidates[i].prob;
        if (kept >= needed) {
            kept_count = i + 1;
            break;
        }
    }

    double kept_total = 0.0;
    for (size_t i = 0; i < kept_count; ++i) kept_total += candidates[i].prob;
    double u = std::uniform_real_distribution<double>(0.0, kept_total)(rng);
    for (size_t i = 0; i < kept_count; ++i) {
        if (candidates[i].prob <= 0.0f)
            continue;
        u -= candidates[i].prob;
        if (u <= 0.0)
            return candidates[i].id;
    }
    // numerical leftovers land on the last positive-probability candidate
    for (size_t i = kept_count; i-- > 0;)
        if (candidates[i].prob > 0.0f)
            return candidates[i].id;
    return candidates[0].id;
}

}  // namespace

uint32_t nucleus_sample(std::span<const float> scores, double top_p, std::mt19937_64& rng) {
    std::vector<Candidate> candidates(scores.size());
    for (size_t i = 0; i < scores.size(); ++i) candidates[i] = {uint32_t(i), scores[i]};
    return nucleus_core(candidates, top_p, rng);
}

uint32_t nucleus_sample_masked(std::span<const float> scores, const IdRangeSet& allowed,
                               double top_p, std::mt19937_64& rng) {
    std::vector<Candidate> candidates;
    candidates.reserve(size_t(allowed.count()));
    for (const auto& [lo, hi] : allowed.ranges)
        for (uint32_t id = lo; id < hi && id < scores.size(); ++id)
            candidates.push_back({id, scores[id]});
    return nucleus_core(candidates, top_p, rng);
}

TokenSequence generate(const LogitsProvider& provider, std::span<const uint32_t> prompt,
                       const GenerateOptions& options, std::mt19937_64& rng,
                       const VocabConfig& cfg) {
    TokenSequence seq;
    seq.cfg = cfg;
    seq.ids.assign(prompt.begin(), prompt.end());

    GrammarState state;
    for (uint32_t id : prompt) state.advance(id, cfg);
    const size_t body_start = seq.ids.size();

    std::vector<float> scores(cfg.total_vocab_size());
    for (uint32_t step = 0; step < options.max_new; ++step) {
        provider.scores(seq.ids, scores);
        uint32_t id;
        if (options.constrained) {
            const IdRangeSet mask = grammar_mask(state, cfg);
            id = nucleus_sample_masked(scores, mask, options.top_p, rng);
            assert(mask.contains(id));
        } else {
            id = nucleus_sample(scores, options.top_p, rng);
        }
        seq.ids.push_back(id);
        if (id == cfg.eos_id)
            break;
        state.advance(id, cfg);
    }

    // budget stops can land mid-triple; drop the incomplete tail so the
    // music portion stays decodable
    if (options.constrained)
        while (state.expects != Expect::Onset && seq.ids.size() > body_start) {
            state.expects = state.expects == Expect::InstrPitch ? Expect::Duration : Expect::Onset;
            seq.ids.pop_back();
        }
    return seq;
}

}  // namespace amtkit
