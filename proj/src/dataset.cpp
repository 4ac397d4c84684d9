#include "amtkit/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "binio.hpp"

namespace amtkit {

using nlohmann::json;

Manifest parse_manifest(const std::string& text) {
    Manifest manifest;
    std::set<std::string> seen;
    std::istringstream in(text);
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::exception& e) {
            raise(Errc::BadManifest, "line " + std::to_string(lineno) + ": " + e.what());
        }
        ManifestEntry entry;
        if (!obj.contains("midi_path") || !obj["midi_path"].is_string())
            raise(Errc::BadManifest, "line " + std::to_string(lineno) + ": missing midi_path");
        entry.midi_path = obj["midi_path"].get<std::string>();
        if (!seen.insert(entry.midi_path).second)
            raise(Errc::BadManifest,
                  "line " + std::to_string(lineno) + ": duplicate path " + entry.midi_path);
        if (obj.contains("caption")) {
            if (!obj["caption"].is_string())
                raise(Errc::BadManifest, "line " + std::to_string(lineno) + ": caption not a string");
            entry.caption = obj["caption"].get<std::string>();
        }
        const std::string split = obj.value("split", "");
        if (split == "pretrain")
            entry.split = Split::Pretrain;
        else if (split == "finetune")
            entry.split = Split::Finetune;
        else
            raise(Errc::BadManifest, "line " + std::to_string(lineno) + ": bad split '" + split + "'");
        if (entry.split == Split::Finetune && !entry.caption)
            raise(Errc::BadManifest,
                  "line " + std::to_string(lineno) + ": finetune entry without caption");
        manifest.entries.push_back(std::move(entry));
    }
    return manifest;
}

Manifest read_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        raise(Errc::IoError, "cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_manifest(buf.str());
}

std::vector<uint32_t> ByteTokenizer::encode(std::string_view text) const {
    std::vector<uint32_t> ids;
    ids.reserve(text.size());
    for (unsigned char c : text) ids.push_back(c);
    return ids;
}

std::vector<uint32_t> tokenize_text(const std::string& caption, const TextTokenizer& tok,
                                    uint32_t max_len) {
    std::vector<uint32_t> ids = tok.encode(caption);
    if (ids.size() > max_len)
        ids.resize(max_len);  // keep the head of the stream
    return ids;
}

const char* example_kind_name(ExampleKind kind) {
    switch (kind) {
    case ExampleKind::Pretrain: return "pretrain";
    case ExampleKind::Finetune: return "finetune";
    case ExampleKind::Infill: return "infill";
    }
    return "unknown";
}

ExampleKind example_kind_from_name(std::string_view name) {
    if (name == "pretrain")
        return ExampleKind::Pretrain;
    if (name == "finetune")
        return ExampleKind::Finetune;
    if (name == "infill")
        return ExampleKind::Infill;
    raise(Errc::IoError, "unknown example kind '" + std::string(name) + "'");
}

namespace {

constexpr uint32_t kMidiCap = kMidiSeqLen / 3 * 3;  // whole triples only

TrainingExample assemble(const std::optional<std::string>& caption,
                         std::vector<uint32_t> midi_ids, ExampleKind kind,
                         const VocabConfig& cfg, const TextTokenizer& tok) {
    if (midi_ids.size() > kMidiCap)
        midi_ids.resize(kMidiCap);
    TrainingExample ex;
    ex.kind = kind;
    const auto text_ids = caption ? tokenize_text(*caption, tok) : std::vector<uint32_t>{};
    if (!text_ids.empty()) {
        // prefix_len > 0 iff a separator follows the prefix
        ex.prefix_len = uint32_t(text_ids.size());
        ex.ids.reserve(text_ids.size() + midi_ids.size() + 2);
        ex.ids.insert(ex.ids.end(), text_ids.begin(), text_ids.end());
        ex.ids.push_back(cfg.separator_id);
    } else {
        ex.ids.reserve(midi_ids.size() + 1);
    }
    ex.ids.insert(ex.ids.end(), midi_ids.begin(), midi_ids.end());
    ex.ids.push_back(cfg.eos_id);
    return ex;
}

}  // namespace

TrainingExample build_finetune_example(const std::string& caption, const NoteSeq& notes,
                                       const VocabConfig& cfg, const TextTokenizer& tok) {
    if (notes.empty())
        raise(Errc::EmptyMidi, "finetune example needs at least one note");
    return assemble(caption, encode(notes, cfg).ids, ExampleKind::Finetune, cfg, tok);
}

std::array<TrainingExample, 2> build_infill_examples(const std::optional<std::string>& caption,
                                                     const NoteSeq& notes, std::mt19937_64& rng,
                                                     const VocabConfig& cfg,
                                                     const TextTokenizer& tok,
                                                     const InfillParams& params) {
    std::set<double> distinct;
    for (const Note& n : notes) distinct.insert(n.onset);
    if (distinct.size() < 3)
        raise(Errc::TooSparse, "infilling needs >= 3 distinct onsets, got " +
                                   std::to_string(distinct.size()));

    const double t0 = notes.front().onset;
    const double t1 = notes.back().onset;
    const double span = t1 - t0;

    std::array<TrainingExample, 2> out;
    for (TrainingExample& variant : out) {
        const double t_cut = std::uniform_real_distribution<double>(
            t0 + params.cut_lo * span, t0 + params.cut_hi * span)(rng);
        const double gap =
            std::uniform_real_distribution<double>(params.gap_min, params.gap_max)(rng);
        const double split_at = std::min(t_cut + gap, t1);

        NoteSeq past_and_middle, future;
        for (const Note& n : notes)
            (n.onset >= split_at ? future : past_and_middle).push_back(n);

        variant = assemble(caption, interleave_infill(past_and_middle, future, params.delta, cfg).ids,
                           ExampleKind::Infill, cfg, tok);
    }
    return out;
}

std::vector<TrainingExample> pack_pretrain(const std::vector<TokenSequence>& docs,
                                           uint32_t seqlen, const VocabConfig& cfg) {
    size_t total = 0;
    for (const TokenSequence& doc : docs) total += doc.ids.size() + 2;

    std::vector<uint32_t> stream;
    stream.reserve(total);
    for (const TokenSequence& doc : docs) {
        stream.push_back(cfg.separator_id);
        stream.insert(stream.end(), doc.ids.begin(), doc.ids.end());
        stream.push_back(cfg.eos_id);
    }

    std::vector<TrainingExample> out;
    out.reserve(stream.size() / seqlen);
    for (size_t start = 0; start + seqlen <= stream.size(); start += seqlen) {
        TrainingExample ex;
        ex.kind = ExampleKind::Pretrain;
        ex.ids.assign(stream.begin() + start, stream.begin() + start + seqlen);
        out.push_back(std::move(ex));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Corpus runners

namespace {

uint64_t splitmix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

struct EntryResult {
    std::vector<TrainingExample> examples;
    std::vector<TokenSequence> docs;
    std::vector<std::string> warnings;
};

/// Run fn over every manifest entry index with up to jobs workers; results
/// land in a per-entry slot so the fold order is fixed by the manifest.
template <typename Fn>
std::vector<EntryResult> for_each_entry(size_t count, int jobs, Fn&& fn) {
    std::vector<EntryResult> results(count);
    if (count == 0)
        return results;
    const int workers = std::max(1, std::min<int>(jobs, int(count)));
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
                try {
                    fn(i, results[i]);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(failure_mutex);
                    if (!failure)
                        failure = std::current_exception();
                }
            }
        });
    for (std::thread& t : pool) t.join();
    if (failure)
        std::rethrow_exception(failure);
    return results;
}

std::vector<Segment> load_segments(const std::string& path, std::vector<std::string>& warnings) {
    ExtractReport report;
    const NoteSeq notes = extract_notes(parse_smf(binio::read_file(path)), &report);
    for (const std::string& w : report.warnings) warnings.push_back(path + ": " + w);
    return segment(notes);
}

}  // namespace

CorpusResult run_augment(const Manifest& manifest, uint64_t seed, const VocabConfig& cfg,
                         const TextTokenizer& tok, int jobs, const InfillParams& params) {
    std::vector<size_t> picked;
    for (size_t i = 0; i < manifest.entries.size(); ++i)
        if (manifest.entries[i].split == Split::Finetune)
            picked.push_back(i);

    auto results = for_each_entry(picked.size(), jobs, [&](size_t slot, EntryResult& res) {
        const ManifestEntry& entry = manifest.entries[picked[slot]];
        // the per-entry stream makes output independent of the worker count
        std::mt19937_64 rng(splitmix64(seed ^ splitmix64(slot)));
        for (const Segment& seg : load_segments(entry.midi_path, res.warnings)) {
            if (seg.notes.empty())
                continue;
            res.examples.push_back(build_finetune_example(*entry.caption, seg.notes, cfg, tok));
            try {
                auto variants = build_infill_examples(entry.caption, seg.notes, rng, cfg, tok, params);
                res.examples.push_back(std::move(variants[0]));
                res.examples.push_back(std::move(variants[1]));
            } catch (const Error& e) {
                if (e.code() != Errc::TooSparse)
                    throw;
                res.warnings.push_back(entry.midi_path + ": segment skipped for infilling (" +
                                       e.what() + ")");
            }
        }
    });

    CorpusResult out;
    for (EntryResult& res : results) {
        std::move(res.examples.begin(), res.examples.end(), std::back_inserter(out.examples));
        std::move(res.warnings.begin(), res.warnings.end(), std::back_inserter(out.warnings));
    }
    return out;
}

CorpusResult run_pack(const Manifest& manifest, uint32_t seqlen, const VocabConfig& cfg,
                      int jobs) {
    std::vector<size_t> picked;
    for (size_t i = 0; i < manifest.entries.size(); ++i)
        if (manifest.entries[i].split == Split::Pretrain)
            picked.push_back(i);

    auto results = for_each_entry(picked.size(), jobs, [&](size_t slot, EntryResult& res) {
        const ManifestEntry& entry = manifest.entries[picked[slot]];
        for (const Segment& seg : load_segments(entry.midi_path, res.warnings))
            if (!seg.notes.empty())
                res.docs.push_back(encode(seg.notes, cfg));
    });

    CorpusResult out;
    std::vector<TokenSequence> docs;
    for (EntryResult& res : results) {
        std::move(res.docs.begin(), res.docs.end(), std::back_inserter(docs));
        std::move(res.warnings.begin(), res.warnings.end(), std::back_inserter(out.warnings));
    }
    out.examples = pack_pretrain(docs, seqlen, cfg);
    return out;
}

// ---------------------------------------------------------------------------
// Example sets on disk

void write_example_set(const std::string& dir, const std::string& name,
                       const std::vector<TrainingExample>& examples, const VocabConfig& cfg) {
    std::filesystem::create_directories(dir);
    const std::string base = (std::filesystem::path(dir) / name).string();

    TokenSequence all;
    all.cfg = cfg;
    std::string index;
    uint64_t offset = 0;
    for (const TrainingExample& ex : examples) {
        all.ids.insert(all.ids.end(), ex.ids.begin(), ex.ids.end());
        json line = {{"offset", offset},
                     {"length", ex.ids.size()},
                     {"prefix_len", ex.prefix_len},
                     {"kind", example_kind_name(ex.kind)}};
        index += line.dump();
        index += '\n';
        offset += ex.ids.size();
    }
    write_amtk(base + ".amtk", all);
    std::ofstream idx(base + ".idx", std::ios::trunc);
    if (!idx)
        raise(Errc::IoError, "cannot open " + base + ".idx for writing");
    idx << index;
}

std::vector<TrainingExample> read_example_set(const std::string& dir, const std::string& name,
                                              const VocabConfig& defaults) {
    const std::string base = (std::filesystem::path(dir) / name).string();
    const TokenSequence all = read_amtk(base + ".amtk", defaults);
    std::ifstream idx(base + ".idx");
    if (!idx)
        raise(Errc::IoError, "cannot open " + base + ".idx");

    std::vector<TrainingExample> out;
    std::string line;
    size_t lineno = 0;
    while (std::getline(idx, line)) {
        ++lineno;
        if (line.empty())
            continue;
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::exception& e) {
            raise(Errc::IoError, base + ".idx line " + std::to_string(lineno) + ": " + e.what());
        }
        const uint64_t offset = obj.at("offset").get<uint64_t>();
        const uint64_t length = obj.at("length").get<uint64_t>();
        if (offset + length > all.ids.size())
            raise(Errc::IoError, base + ".idx line " + std::to_string(lineno) + ": range past end");
        TrainingExample ex;
        ex.ids.assign(all.ids.begin() + offset, all.ids.begin() + offset + length);
        ex.prefix_len = obj.at("prefix_len").get<uint32_t>();
        ex.kind = example_kind_from_name(obj.at("kind").get<std::string>());
        out.push_back(std::move(ex));
    }
    return out;
}

}  // namespace amtkit
