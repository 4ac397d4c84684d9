#pragma once

#include <cstdint>
#include <variant>

#include "amtkit/error.hpp"

namespace amtkit {

// Local-id layout of the music vocabulary. Each note is three events;
// ids are grouped by event class so range checks stay cheap:
//
//   [0,     10000)  onset bin         (10 ms grid, 0..100 s)
//   [10000, 11000)  duration bin      (10 ms grid, 0..10 s)
//   [11000, 27512)  instrument-pitch  (129 instruments x 128 pitches)
//   [27512, 55024)  the same three blocks again, anticipated flavor
//
// Instrument 128 is the drum kit; 0-127 are GM programs.

enum class EventKind : uint8_t { Onset, Duration, InstrPitch };

struct Event {
    EventKind kind = EventKind::Onset;
    bool anticipated = false;
    int bin = 0;         // Onset/Duration only
    int instrument = 0;  // InstrPitch only
    int pitch = 0;       // InstrPitch only

    static Event onset(int bin, bool anticipated = false);
    static Event duration(int bin, bool anticipated = false);
    static Event instr_pitch(int instrument, int pitch, bool anticipated = false);

    bool operator==(const Event&) const = default;
};

struct VocabConfig {
    static constexpr uint32_t kOnsetBins = 10000;
    static constexpr uint32_t kDurationBins = 1000;
    static constexpr uint32_t kInstruments = 129;
    static constexpr uint32_t kPitches = 128;

    static constexpr uint32_t kOnsetBase = 0;
    static constexpr uint32_t kDurationBase = kOnsetBins;
    static constexpr uint32_t kInstrPitchBase = kOnsetBins + kDurationBins;
    static constexpr uint32_t kNormalBlock = kOnsetBins + kDurationBins + kInstruments * kPitches;
    static constexpr uint32_t kMidiVocabSize = 2 * kNormalBlock;

    uint32_t text_vocab_size = 128256;  // Llama 3.2 tokenizer size
    uint32_t eos_id = 128001;
    uint32_t separator_id = 128000;

    uint32_t total_vocab_size() const { return text_vocab_size + kMidiVocabSize; }

    /// First global id of the music block.
    uint32_t midi_base() const { return text_vocab_size; }

    bool is_text(uint32_t global_id) const { return global_id < text_vocab_size; }
    bool is_midi(uint32_t global_id) const {
        return global_id >= text_vocab_size && global_id < total_vocab_size();
    }

    /// Throws BadManifest if the special ids collide or fall outside the text block.
    void check() const;

    bool operator==(const VocabConfig&) const = default;
};

static_assert(VocabConfig::kNormalBlock == 27512);
static_assert(VocabConfig::kMidiVocabSize == 55024);

/// Event -> local music id in [0, 55024). Bijective.
uint32_t local_id_of(const Event& event);

/// Inverse of local_id_of. Throws OutOfRange for ids >= 55024.
Event event_of(uint32_t local_id);

/// Local music id -> global id (text block first, music block after).
uint32_t to_global(uint32_t local_id, const VocabConfig& cfg);

struct TextId {
    uint32_t id;
    bool operator==(const TextId&) const = default;
};
struct MidiId {
    uint32_t id;
    bool operator==(const MidiId&) const = default;
};
using LocalId = std::variant<TextId, MidiId>;

/// Global id -> TextId (unchanged) or MidiId (local music id).
LocalId to_local(uint32_t global_id, const VocabConfig& cfg);

}  // namespace amtkit
