#include "amtkit/ngram.hpp"

#include <algorithm>
#include <cstring>

#include "binio.hpp"

namespace amtkit {

NGramModel::NGramModel(int order, VocabConfig cfg) : order_(order), cfg_(cfg) {
    if (order < 1)
        raise(Errc::BadManifest, "n-gram order must be >= 1");
    tables_.resize(size_t(order));
}

std::string NGramModel::key_of(std::span<const uint32_t> context) {
    std::string key(context.size() * 4, '\0');
    for (size_t i = 0; i < context.size(); ++i)
        std::memcpy(key.data() + i * 4, &context[i], 4);
    return key;
}

void NGramModel::observe(std::span<const uint32_t> ids) {
    for (size_t i = 0; i < ids.size(); ++i) {
        const size_t max_ctx = std::min<size_t>(i, size_t(order_) - 1);
        for (size_t ctx = 0; ctx <= max_ctx; ++ctx) {
            ContextCounts& counts = tables_[ctx][key_of(ids.subspan(i - ctx, ctx))];
            ++counts.total;
            ++counts.next[ids[i]];
        }
    }
}

void NGramModel::scores(std::span<const uint32_t> context, std::span<float> out) const {
    const uint32_t vocab = cfg_.total_vocab_size();
    // longest order whose context was seen in training; unigrams always hit
    const ContextCounts* counts = nullptr;
    for (size_t ctx = std::min(context.size(), size_t(order_) - 1);; --ctx) {
        auto it = tables_[ctx].find(key_of(context.subspan(context.size() - ctx, ctx)));
        if (it != tables_[ctx].end()) {
            counts = &it->second;
            break;
        }
        if (ctx == 0)
            break;
    }

    const uint64_t total = counts ? counts->total : 0;
    const double base = 1.0 / (double(total) + double(vocab));
    std::fill(out.begin(), out.end(), float(base));
    if (counts)
        for (const auto& [id, c] : counts->next) out[id] = float((double(c) + 1.0) * base);
}

uint64_t NGramModel::count(std::span<const uint32_t> context, uint32_t next) const {
    if (context.size() >= size_t(order_))
        return 0;
    auto it = tables_[context.size()].find(key_of(context));
    if (it == tables_[context.size()].end())
        return 0;
    auto jt = it->second.next.find(next);
    return jt == it->second.next.end() ? 0 : jt->second;
}

NGramModel train_ngram(const std::vector<TokenSequence>& corpus, int n) {
    if (corpus.empty())
        raise(Errc::BadManifest, "empty training corpus");
    NGramModel model(n, corpus.front().cfg);
    for (const TokenSequence& seq : corpus) model.observe(seq.ids);
    return model;
}

// ---------------------------------------------------------------------------
// NGRM container: header (magic "NGRM", u32 n, u32 text_vocab_size,
// u32 midi_vocab_size), then per order a u64 entry count followed by entries
// (context ids, next id as u32, count as u64) sorted lexicographically.

void NGramModel::save(const std::string& path) const {
    std::vector<uint8_t> bytes;
    bytes.insert(bytes.end(), {'N', 'G', 'R', 'M'});
    binio::put_u32(bytes, uint32_t(order_));
    binio::put_u32(bytes, cfg_.text_vocab_size);
    binio::put_u32(bytes, VocabConfig::kMidiVocabSize);

    for (size_t ctx = 0; ctx < tables_.size(); ++ctx) {
        std::vector<std::pair<std::string, std::pair<uint32_t, uint64_t>>> entries;
        for (const auto& [key, counts] : tables_[ctx])
            for (const auto& [next, c] : counts.next) entries.push_back({key, {next, c}});
        std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first)
                return a.first < b.first;
            return a.second.first < b.second.first;
        });
        binio::put_u64(bytes, entries.size());
        for (const auto& [key, entry] : entries) {
            for (size_t i = 0; i < ctx; ++i) {
                uint32_t id;
                std::memcpy(&id, key.data() + i * 4, 4);
                binio::put_u32(bytes, id);
            }
            binio::put_u32(bytes, entry.first);
            binio::put_u64(bytes, entry.second);
        }
    }
    binio::write_file(path, bytes);
}

NGramModel NGramModel::load(const std::string& path, const VocabConfig& defaults) {
    const auto bytes = binio::read_file(path);
    binio::Reader r(bytes.data(), bytes.size());
    r.magic("NGRM", "NGRM");
    const uint32_t order = r.u32();
    if (order < 1 || order > 16)
        raise(Errc::IoError, path + ": implausible n-gram order");
    VocabConfig cfg = defaults;
    cfg.text_vocab_size = r.u32();
    const uint32_t midi_vocab = r.u32();
    if (midi_vocab != VocabConfig::kMidiVocabSize)
        raise(Errc::IoError, path + ": unexpected music vocab size");

    NGramModel model(int(order), cfg);
    std::vector<uint32_t> context;
    for (uint32_t ctx = 0; ctx < order; ++ctx) {
        const uint64_t entries = r.u64();
        for (uint64_t e = 0; e < entries; ++e) {
            context.resize(ctx);
            for (uint32_t i = 0; i < ctx; ++i) context[i] = r.u32();
            const uint32_t next = r.u32();
            const uint64_t count = r.u64();
            ContextCounts& counts = model.tables_[ctx][key_of(context)];
            counts.total += count;
            counts.next[next] += count;
        }
    }
    return model;
}

}  // namespace amtkit
