#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "amtkit/codec.hpp"

namespace amtkit {

// Table-level sequence budgets: text prompts are a <=256-token prefix,
// music bodies are packed/truncated to 2048 tokens.
inline constexpr uint32_t kTextPrefixMax = 256;
inline constexpr uint32_t kMidiSeqLen = 2048;

enum class Split : uint8_t { Pretrain, Finetune };

struct ManifestEntry {
    std::string midi_path;
    std::optional<std::string> caption;
    Split split = Split::Pretrain;
};

/// Corpus listing: one JSON object per line with fields
/// midi_path (string), caption (optional string), split ("pretrain"|"finetune").
/// Paths must be unique and finetune entries must carry captions.
struct Manifest {
    std::vector<ManifestEntry> entries;
};

Manifest parse_manifest(const std::string& text);
Manifest read_manifest(const std::string& path);

/// Deterministic text -> ids mapping; every id stays below text_vocab_size.
class TextTokenizer {
public:
    virtual ~TextTokenizer() = default;
    virtual std::vector<uint32_t> encode(std::string_view text) const = 0;
};

/// Default tokenizer: one id per UTF-8 byte. Self-contained stand-in for a
/// real LLM tokenizer, which can be plugged in through the same interface.
class ByteTokenizer final : public TextTokenizer {
public:
    std::vector<uint32_t> encode(std::string_view text) const override;
};

std::vector<uint32_t> tokenize_text(const std::string& caption, const TextTokenizer& tok,
                                    uint32_t max_len = kTextPrefixMax);

enum class ExampleKind : uint8_t { Pretrain, Finetune, Infill };

const char* example_kind_name(ExampleKind kind);
ExampleKind example_kind_from_name(std::string_view name);

struct TrainingExample {
    std::vector<uint32_t> ids;
    uint32_t prefix_len = 0;  // text tokens before the separator, 0 for pretraining
    ExampleKind kind = ExampleKind::Pretrain;
};

/// text_ids ++ separator ++ music tokens (truncated at a triple boundary to
/// fit kMidiSeqLen) ++ eos. Throws EmptyMidi for an empty note list.
TrainingExample build_finetune_example(const std::string& caption, const NoteSeq& notes,
                                       const VocabConfig& cfg, const TextTokenizer& tok);

struct InfillParams {
    double delta = 5.0;     // anticipation interval fed to interleave_infill
    double gap_min = 5.0;   // infill gap bounds, clipped to the last onset
    double gap_max = 15.0;
    double cut_lo = 0.2;    // cut point drawn from the middle of the onset span
    double cut_hi = 0.8;
};

/// Two infilling variants of one source segment. Each draws a cut time and a
/// gap from rng, moves the notes past (cut + gap) into the anticipated future
/// set, and interleaves. Throws TooSparse below 3 distinct onsets.
std::array<TrainingExample, 2> build_infill_examples(const std::optional<std::string>& caption,
                                                     const NoteSeq& notes, std::mt19937_64& rng,
                                                     const VocabConfig& cfg,
                                                     const TextTokenizer& tok,
                                                     const InfillParams& params = {});

/// Concatenate docs as [separator, doc, eos] and slice the stream into
/// consecutive seqlen-sized examples; the final partial chunk is dropped.
std::vector<TrainingExample> pack_pretrain(const std::vector<TokenSequence>& docs,
                                           uint32_t seqlen, const VocabConfig& cfg);

struct CorpusResult {
    std::vector<TrainingExample> examples;
    std::vector<std::string> warnings;
};

/// Finetune corpus with infilling augmentation: for every 100 s segment of
/// every finetune entry, one finetune example plus two infill variants.
/// Entries are processed in parallel (jobs) but the output order and content
/// depend only on the manifest and seed.
CorpusResult run_augment(const Manifest& manifest, uint64_t seed, const VocabConfig& cfg,
                         const TextTokenizer& tok, int jobs = 1,
                         const InfillParams& params = {});

/// Packed pretraining corpus from the manifest's pretrain entries; one doc
/// per 100 s segment.
CorpusResult run_pack(const Manifest& manifest, uint32_t seqlen, const VocabConfig& cfg,
                      int jobs = 1);

// Example sets on disk: <name>.amtk holds every example's ids back to back,
// <name>.idx lists {"offset","length","prefix_len","kind"} per example, one
// JSON object per line.
void write_example_set(const std::string& dir, const std::string& name,
                       const std::vector<TrainingExample>& examples, const VocabConfig& cfg);
std::vector<TrainingExample> read_example_set(const std::string& dir, const std::string& name,
                                              const VocabConfig& defaults = {});

}  // namespace amtkit
