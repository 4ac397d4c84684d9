#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "amtkit/error.hpp"

namespace amtkit {

/// One musical note in continuous time.
/// instrument 0-127 = GM program, 128 = drum kit; velocity is kept on the
/// parse side only and never reaches the tokenizer.
struct Note {
    double onset = 0.0;     // seconds, >= 0
    double duration = 0.0;  // seconds, > 0
    int instrument = 0;     // [0, 128]
    int pitch = 0;          // [0, 127]
    int velocity = 96;      // [1, 127]

    bool operator==(const Note&) const = default;
};

/// Notes sorted ascending by (onset, instrument, pitch, duration).
using NoteSeq = std::vector<Note>;

bool note_order(const Note& a, const Note& b);
void sort_notes(NoteSeq& notes);
bool is_sorted_notes(const NoteSeq& notes);

/// One parsed track event with its delta time resolved to absolute ticks.
/// status 0x80-0xEF are channel messages (args in data1/data2),
/// 0xF0/0xF7 sysex and 0xFF meta carry their body in payload.
struct TrackEvent {
    uint32_t tick = 0;
    uint8_t status = 0;
    uint8_t meta = 0;  // meta type when status == 0xFF
    uint8_t data1 = 0;
    uint8_t data2 = 0;
    std::vector<uint8_t> payload;

    uint8_t channel() const { return status & 0x0F; }
};

using Track = std::vector<TrackEvent>;

struct MidiFile {
    int format = 0;    // 0 or 1
    int division = 0;  // ticks per quarter note, > 0
    std::vector<Track> tracks;
};

/// Tick -> seconds conversion through a merged tempo map.
/// 500000 us/quarter applies before the first tempo event.
class TempoMap {
public:
    TempoMap(int division, std::vector<std::pair<uint32_t, uint32_t>> changes);

    double seconds_at(uint32_t tick) const;

    static TempoMap from_midi(const MidiFile& midi);

private:
    int division_;
    // (tick, us per quarter, cumulative seconds at tick)
    struct Span {
        uint32_t tick;
        uint32_t us_per_quarter;
        double seconds;
    };
    std::vector<Span> spans_;
};

/// Parse SMF bytes. Delta times are resolved to absolute ticks, running
/// status and note-on-velocity-0 byte sequences are accepted, and every
/// track is terminated with an End-of-Track meta event.
/// Throws MalformedHeader, UnsupportedFormat (format 2 / SMPTE division),
/// TruncatedTrack.
MidiFile parse_smf(const std::vector<uint8_t>& bytes);

/// Nothing in extraction is fatal; oddities are counted here.
struct ExtractReport {
    std::vector<std::string> warnings;
};

/// Match note-on/note-off pairs (FIFO per channel+pitch) and convert ticks
/// to seconds through the tempo map. Channel 9 notes become instrument 128;
/// other channels take the most recent program change (default 0).
/// Unmatched note-ons are closed at the final event time and reported.
NoteSeq extract_notes(const MidiFile& midi, ExtractReport* report = nullptr);

/// Serialize notes as SMF format 1: one track per distinct instrument,
/// program change at track start, drums on channel 9, melodic instruments
/// round-robin over the remaining channels, fixed 120 BPM.
/// More than 15 melodic instruments is reported, not rejected.
std::vector<uint8_t> write_smf(const NoteSeq& notes, int velocity = 96, int division = 480,
                               ExtractReport* report = nullptr);

/// Line-delimited note records: "onset_sec duration_sec instrument pitch".
std::string notes_to_text(const NoteSeq& notes);
NoteSeq notes_from_text(const std::string& text);

}  // namespace amtkit
