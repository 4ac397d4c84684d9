#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "amtkit/sampling.hpp"

namespace amtkit {

/// Back-off n-gram counts over the full text+music vocabulary, usable as a
/// LogitsProvider: the conditional distribution is add-one smoothed, and an
/// unseen context falls back to the next shorter order, down to unigrams.
/// Desk-scale reference model for exercising the generation stack.
class NGramModel : public LogitsProvider {
public:
    NGramModel(int order, VocabConfig cfg);

    int order() const { return order_; }
    const VocabConfig& vocab() const { return cfg_; }

    void observe(std::span<const uint32_t> ids);

    void scores(std::span<const uint32_t> context, std::span<float> out) const override;

    /// Raw count of context -> next (0 when unseen). Context length picks the
    /// table: empty selects unigrams.
    uint64_t count(std::span<const uint32_t> context, uint32_t next) const;

    void save(const std::string& path) const;
    static NGramModel load(const std::string& path, const VocabConfig& defaults = {});

private:
    struct ContextCounts {
        uint64_t total = 0;
        std::unordered_map<uint32_t, uint64_t> next;
    };
    using Table = std::unordered_map<std::string, ContextCounts>;

    static std::string key_of(std::span<const uint32_t> context);

    int order_;
    VocabConfig cfg_;
    std::vector<Table> tables_;  // tables_[k] holds contexts of length k
};

/// Count every n-gram (and all shorter orders) of every sequence.
/// Throws BadManifest for n < 1 or an empty corpus.
NGramModel train_ngram(const std::vector<TokenSequence>& corpus, int n);

}  // namespace amtkit
