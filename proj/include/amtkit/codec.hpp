#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "amtkit/midi.hpp"
#include "amtkit/vocab.hpp"

namespace amtkit {

/// A note on the 10 ms grid: three event components plus the flavor flag.
struct QuantNote {
    int onset_bin = 0;     // [0, 10000)
    int duration_bin = 0;  // [0, 1000)
    int instrument = 0;    // [0, 128]
    int pitch = 0;         // [0, 127]
    bool anticipated = false;

    bool operator==(const QuantNote&) const = default;
};

/// Flat list of global token ids under a fixed vocabulary layout.
struct TokenSequence {
    VocabConfig cfg;
    std::vector<uint32_t> ids;
};

/// Snap a note to the grid. Duration is floored to one bin and clipped at
/// bin 999; onsets at or past 100 s throw OnsetOutOfRange (segment first).
QuantNote quantize(const Note& note);

/// One 100 s window of a longer piece, onsets rebased to the window start.
struct Segment {
    double window_start = 0.0;
    NoteSeq notes;
};

/// Partition notes by onset into consecutive [k*max_span, (k+1)*max_span)
/// windows; empty windows produce no segment. Adding window_start back to
/// every onset and concatenating recovers the input.
std::vector<Segment> segment(const NoteSeq& notes, double max_span = 100.0);

/// Three normal-flavor tokens per note, in note order.
TokenSequence encode(const NoteSeq& notes, const VocabConfig& cfg);

/// Inverse of encode; the anticipated flag is dropped. strict mode throws on
/// malformed input, lenient mode skips to the next onset token and records a
/// warning per skip.
NoteSeq decode(const TokenSequence& tokens, bool strict,
               std::vector<std::string>* warnings = nullptr);

/// Encode past_and_middle as normal tokens and future as anticipated tokens,
/// placing each anticipated triple immediately before the first normal triple
/// whose onset is >= (anticipated onset - delta). Anticipated triples beyond
/// the last normal note go at the end, in onset order.
TokenSequence interleave_infill(const NoteSeq& past_and_middle, const NoteSeq& future,
                                double delta, const VocabConfig& cfg);

enum class ViolationKind : uint8_t { CycleBreak, OnsetRegression, RangeError, DanglingTriple };

const char* violation_name(ViolationKind kind);

struct Violation {
    size_t position;
    ViolationKind kind;

    bool operator==(const Violation&) const = default;
};

struct ValidationReport {
    bool ok = true;
    std::vector<Violation> violations;
};

/// Check that a stream is decodable MIDI: music ids only, strict
/// onset/duration/instrument-pitch cycling per flavor, non-decreasing
/// normal onsets, no trailing partial triple. Anticipated placement is not
/// checked (the anticipation interval is unknown here).
ValidationReport validate(const TokenSequence& tokens);

// AMTK container: header (magic "AMTK", u32 version=1, u32 text_vocab_size,
// u32 midi_vocab_size, u64 count, little-endian) followed by count u32 ids.
void write_amtk(const std::string& path, const TokenSequence& tokens);
TokenSequence read_amtk(const std::string& path, const VocabConfig& defaults = {});

}  // namespace amtkit
