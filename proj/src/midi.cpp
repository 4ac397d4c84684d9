#include "amtkit/midi.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <deque>
#include <map>
#include <sstream>
#include <tuple>

namespace amtkit {

namespace {

constexpr uint32_t kDefaultTempo = 500000;  // us per quarter, also 120 BPM on the write side

uint32_t be32(const uint8_t* p) {
    return uint32_t(p[0]) << 24 | uint32_t(p[1]) << 16 | uint32_t(p[2]) << 8 | uint32_t(p[3]);
}

uint16_t be16(const uint8_t* p) {
    return uint16_t(p[0] << 8 | p[1]);
}

}  // namespace

bool note_order(const Note& a, const Note& b) {
    return std::tie(a.onset, a.instrument, a.pitch, a.duration) <
           std::tie(b.onset, b.instrument, b.pitch, b.duration);
}

void sort_notes(NoteSeq& notes) {
    std::stable_sort(notes.begin(), notes.end(), note_order);
}

bool is_sorted_notes(const NoteSeq& notes) {
    return std::is_sorted(notes.begin(), notes.end(), note_order);
}

// ---------------------------------------------------------------------------
// TempoMap

TempoMap::TempoMap(int division, std::vector<std::pair<uint32_t, uint32_t>> changes)
    : division_(division) {
    if (division <= 0)
        raise(Errc::MalformedHeader, "division must be positive");
    std::stable_sort(changes.begin(), changes.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    spans_.push_back({0, kDefaultTempo, 0.0});
    for (const auto& [tick, us] : changes) {
        if (us == 0)
            continue;
        Span& last = spans_.back();
        if (tick == last.tick) {
            last.us_per_quarter = us;  // same-tick changes: the later one wins
            continue;
        }
        const double secs =
            last.seconds + double(tick - last.tick) * last.us_per_quarter / (1e6 * division_);
        spans_.push_back({tick, us, secs});
    }
}

double TempoMap::seconds_at(uint32_t tick) const {
    auto it = std::upper_bound(spans_.begin(), spans_.end(), tick,
                               [](uint32_t t, const Span& s) { return t < s.tick; });
    const Span& s = *std::prev(it);
    return s.seconds + double(tick - s.tick) * s.us_per_quarter / (1e6 * division_);
}

TempoMap TempoMap::from_midi(const MidiFile& midi) {
    // Tempo events from all tracks share one timeline; merge in (tick, track,
    // index) order so a later track wins ties at the same tick.
    std::vector<std::tuple<uint32_t, size_t, size_t, uint32_t>> found;
    for (size_t t = 0; t < midi.tracks.size(); ++t) {
        const Track& track = midi.tracks[t];
        for (size_t i = 0; i < track.size(); ++i) {
            const TrackEvent& ev = track[i];
            if (ev.status == 0xFF && ev.meta == 0x51 && ev.payload.size() >= 3) {
                const uint32_t us = uint32_t(ev.payload[0]) << 16 | uint32_t(ev.payload[1]) << 8 |
                                    uint32_t(ev.payload[2]);
                found.emplace_back(ev.tick, t, i, us);
            }
        }
    }
    std::sort(found.begin(), found.end());
    std::vector<std::pair<uint32_t, uint32_t>> changes;
    changes.reserve(found.size());
    for (const auto& [tick, t, i, us] : found) changes.emplace_back(tick, us);
    return TempoMap(midi.division, std::move(changes));
}

// ---------------------------------------------------------------------------
// SMF parsing

namespace {

struct TrackCursor {
    const uint8_t* data;
    size_t size;
    size_t pos = 0;

    bool done() const { return pos >= size; }

    uint8_t byte() {
        if (pos >= size)
            raise(Errc::TruncatedTrack, "event runs past end of track chunk");
        return data[pos++];
    }

    uint8_t peek() const {
        if (pos >= size)
            raise(Errc::TruncatedTrack, "event runs past end of track chunk");
        return data[pos];
    }

    uint32_t vlv() {
        uint32_t value = 0;
        for (int i = 0; i < 4; ++i) {
            const uint8_t b = byte();
            value = value << 7 | (b & 0x7F);
            if (!(b & 0x80))
                return value;
        }
        raise(Errc::TruncatedTrack, "variable-length quantity longer than 4 bytes");
    }

    std::vector<uint8_t> take(uint32_t n) {
        if (pos + n > size)
            raise(Errc::TruncatedTrack, "event payload runs past end of track chunk");
        std::vector<uint8_t> out(data + pos, data + pos + n);
        pos += n;
        return out;
    }
};

Track parse_track(const uint8_t* data, size_t size) {
    Track track;
    TrackCursor cur{data, size};
    uint32_t tick = 0;
    uint8_t running = 0;
    while (!cur.done()) {
        tick += cur.vlv();
        TrackEvent ev;
        ev.tick = tick;
        uint8_t status = cur.peek();
        if (status & 0x80) {
            cur.byte();
        } else {
            // running status: reuse the previous channel-message status byte
            if (running == 0)
                raise(Errc::TruncatedTrack, "data byte with no running status");
            status = running;
        }
        ev.status = status;
        if (status == 0xFF) {
            running = 0;
            ev.meta = cur.byte();
            ev.payload = cur.take(cur.vlv());
            track.push_back(std::move(ev));
            if (track.back().meta == 0x2F)
                return track;  // End of Track; ignore any trailing bytes
            continue;
        }
        if (status == 0xF0 || status == 0xF7) {
            running = 0;
            ev.payload = cur.take(cur.vlv());
            track.push_back(std::move(ev));
            continue;
        }
        const uint8_t kind = status >> 4;
        if (kind < 0x8)
            raise(Errc::TruncatedTrack, "invalid status byte in track");
        if (kind == 0xF)
            raise(Errc::TruncatedTrack, "unexpected system event in track");
        running = status;
        ev.data1 = cur.byte();
        if (kind != 0xC && kind != 0xD)
            ev.data2 = cur.byte();
        track.push_back(std::move(ev));
    }
    // missing End-of-Track: append one at the final tick
    TrackEvent eot;
    eot.tick = tick;
    eot.status = 0xFF;
    eot.meta = 0x2F;
    track.push_back(std::move(eot));
    return track;
}

}  // namespace

MidiFile parse_smf(const std::vector<uint8_t>& bytes) {
    if (bytes.size() < 14 || std::memcmp(bytes.data(), "MThd", 4) != 0)
        raise(Errc::MalformedHeader, "missing MThd header");
    const uint32_t header_len = be32(bytes.data() + 4);
    if (header_len < 6 || 8 + size_t(header_len) > bytes.size())
        raise(Errc::MalformedHeader, "bad MThd length");
    const uint16_t format = be16(bytes.data() + 8);
    const uint16_t declared_tracks = be16(bytes.data() + 10);
    const uint16_t division = be16(bytes.data() + 12);
    if (format > 1)
        raise(Errc::UnsupportedFormat, "SMF format " + std::to_string(format));
    if (division & 0x8000)
        raise(Errc::UnsupportedFormat, "SMPTE division");
    if (division == 0)
        raise(Errc::MalformedHeader, "zero division");

    MidiFile midi;
    midi.format = format;
    midi.division = division;

    size_t pos = 8 + header_len;
    uint16_t parsed = 0;
    while (parsed < declared_tracks) {
        if (pos + 8 > bytes.size())
            raise(Errc::TruncatedTrack, "expected " + std::to_string(declared_tracks) +
                                            " tracks, found " + std::to_string(parsed));
        const uint32_t chunk_len = be32(bytes.data() + pos + 4);
        if (pos + 8 + size_t(chunk_len) > bytes.size())
            raise(Errc::TruncatedTrack, "chunk length exceeds file size");
        if (std::memcmp(bytes.data() + pos, "MTrk", 4) == 0) {
            midi.tracks.push_back(parse_track(bytes.data() + pos + 8, chunk_len));
            ++parsed;
        }
        // alien chunks are skipped per the SMF spec
        pos += 8 + size_t(chunk_len);
    }
    return midi;
}

// ---------------------------------------------------------------------------
// Note extraction

NoteSeq extract_notes(const MidiFile& midi, ExtractReport* report) {
    const TempoMap tempo = TempoMap::from_midi(midi);

    // merge tracks into a single stream ordered by (tick, track, index)
    std::vector<std::tuple<uint32_t, size_t, size_t>> order;
    uint32_t end_tick = 0;
    for (size_t t = 0; t < midi.tracks.size(); ++t)
        for (size_t i = 0; i < midi.tracks[t].size(); ++i) {
            order.emplace_back(midi.tracks[t][i].tick, t, i);
            end_tick = std::max(end_tick, midi.tracks[t][i].tick);
        }
    std::sort(order.begin(), order.end());

    struct OpenNote {
        uint32_t tick;
        int instrument;
        int velocity;
    };
    std::map<std::pair<int, int>, std::deque<OpenNote>> open;  // (channel, pitch) -> FIFO
    int program[16] = {};
    NoteSeq notes;
    size_t stray_offs = 0, unmatched_ons = 0, dropped = 0;

    auto close = [&](std::deque<OpenNote>& queue, int pitch, uint32_t off_tick) {
        const OpenNote on = queue.front();
        queue.pop_front();
        const double onset = tempo.seconds_at(on.tick);
        const double duration = tempo.seconds_at(off_tick) - onset;
        if (duration <= 0.0) {
            ++dropped;
            return;
        }
        notes.push_back({onset, duration, on.instrument, pitch, on.velocity});
    };

    for (const auto& [tick, t, i] : order) {
        const TrackEvent& ev = midi.tracks[t][i];
        const uint8_t kind = ev.status >> 4;
        const int ch = ev.channel();
        const int pitch = ev.data1 & 0x7F;
        if (kind == 0xC) {
            program[ch] = ev.data1 & 0x7F;
        } else if (kind == 0x9 && ev.data2 != 0) {
            const int instrument = ch == 9 ? 128 : program[ch];
            open[{ch, pitch}].push_back({ev.tick, instrument, ev.data2 & 0x7F});
        } else if (kind == 0x8 || (kind == 0x9 && ev.data2 == 0)) {
            auto it = open.find({ch, pitch});
            if (it == open.end() || it->second.empty()) {
                ++stray_offs;
                continue;
            }
            close(it->second, pitch, ev.tick);
        }
    }

    for (auto& [key, queue] : open)
        while (!queue.empty()) {
            ++unmatched_ons;
            close(queue, key.second, end_tick);
        }

    if (report) {
        if (unmatched_ons)
            report->warnings.push_back(std::to_string(unmatched_ons) +
                                       " unmatched note-on(s) closed at end of piece");
        if (stray_offs)
            report->warnings.push_back(std::to_string(stray_offs) + " stray note-off(s) ignored");
        if (dropped)
            report->warnings.push_back(std::to_string(dropped) + " zero-length note(s) dropped");
    }

    sort_notes(notes);
    return notes;
}

// ---------------------------------------------------------------------------
// SMF writing

namespace {

void put_vlv(std::vector<uint8_t>& out, uint32_t value) {
    uint8_t stack[5];
    int n = 0;
    do {
        stack[n++] = value & 0x7F;
        value >>= 7;
    } while (value);
    while (n > 1) out.push_back(uint8_t(stack[--n] | 0x80));
    out.push_back(stack[0]);
}

void put_be32(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back(uint8_t(v >> 24));
    out.push_back(uint8_t(v >> 16));
    out.push_back(uint8_t(v >> 8));
    out.push_back(uint8_t(v));
}

void put_be16(std::vector<uint8_t>& out, uint16_t v) {
    out.push_back(uint8_t(v >> 8));
    out.push_back(uint8_t(v));
}

struct WireEvent {
    uint32_t tick;
    int order;  // off before on at the same tick
    uint8_t status, data1, data2;
};

void append_track(std::vector<uint8_t>& out, const std::vector<uint8_t>& body) {
    out.insert(out.end(), {'M', 'T', 'r', 'k'});
    put_be32(out, uint32_t(body.size()));
    out.insert(out.end(), body.begin(), body.end());
}

}  // namespace

std::vector<uint8_t> write_smf(const NoteSeq& notes, int velocity, int division,
                               ExtractReport* report) {
    if (velocity < 1 || velocity > 127)
        raise(Errc::OutOfRange, "velocity " + std::to_string(velocity));
    if (division <= 0 || division > 0x7FFF)
        raise(Errc::OutOfRange, "division " + std::to_string(division));
    if (!is_sorted_notes(notes))
        raise(Errc::UnsortedInput, "notes must be sorted");

    const double ticks_per_second = double(division) * 1e6 / kDefaultTempo;
    auto to_tick = [&](double seconds) { return uint32_t(std::llround(seconds * ticks_per_second)); };

    // distinct instruments, ascending; drums pinned to channel 9
    std::vector<int> instruments;
    for (const Note& n : notes)
        if (std::find(instruments.begin(), instruments.end(), n.instrument) == instruments.end())
            instruments.push_back(n.instrument);
    std::sort(instruments.begin(), instruments.end());

    static const int melodic_channels[15] = {0, 1, 2, 3, 4, 5, 6, 7, 8, 10, 11, 12, 13, 14, 15};
    std::map<int, int> channel_of;
    int next_melodic = 0;
    for (int instrument : instruments) {
        if (instrument == 128) {
            channel_of[instrument] = 9;
        } else {
            channel_of[instrument] = melodic_channels[next_melodic % 15];
            ++next_melodic;
        }
    }
    if (next_melodic > 15 && report)
        report->warnings.push_back(std::to_string(next_melodic) +
                                   " melodic instruments share 15 channels");

    std::vector<uint8_t> out;
    out.insert(out.end(), {'M', 'T', 'h', 'd'});
    put_be32(out, 6);
    put_be16(out, 1);  // format 1
    put_be16(out, uint16_t(1 + instruments.size()));
    put_be16(out, uint16_t(division));

    // conductor track: fixed tempo, nothing else
    std::vector<uint8_t> conductor;
    put_vlv(conductor, 0);
    conductor.insert(conductor.end(), {0xFF, 0x51, 0x03});
    conductor.push_back(uint8_t(kDefaultTempo >> 16));
    conductor.push_back(uint8_t(kDefaultTempo >> 8));
    conductor.push_back(uint8_t(kDefaultTempo));
    put_vlv(conductor, 0);
    conductor.insert(conductor.end(), {0xFF, 0x2F, 0x00});
    append_track(out, conductor);

    for (int instrument : instruments) {
        const uint8_t ch = uint8_t(channel_of[instrument]);
        std::vector<WireEvent> events;
        for (const Note& n : notes) {
            if (n.instrument != instrument)
                continue;
            const uint32_t on = to_tick(n.onset);
            const uint32_t len = std::max<uint32_t>(1, to_tick(n.duration));
            events.push_back({on, 1, uint8_t(0x90 | ch), uint8_t(n.pitch), uint8_t(velocity)});
            events.push_back({on + len, 0, uint8_t(0x80 | ch), uint8_t(n.pitch), 0x40});
        }
        std::stable_sort(events.begin(), events.end(), [](const WireEvent& a, const WireEvent& b) {
            return std::tie(a.tick, a.order, a.data1) < std::tie(b.tick, b.order, b.data1);
        });

        std::vector<uint8_t> body;
        uint32_t prev = 0;
        if (instrument != 128) {
            put_vlv(body, 0);
            body.push_back(uint8_t(0xC0 | ch));
            body.push_back(uint8_t(instrument));
        }
        for (const WireEvent& ev : events) {
            put_vlv(body, ev.tick - prev);
            prev = ev.tick;
            body.push_back(ev.status);
            body.push_back(ev.data1);
            body.push_back(ev.data2);
        }
        put_vlv(body, 0);
        body.insert(body.end(), {0xFF, 0x2F, 0x00});
        append_track(out, body);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Text records

namespace {

std::string format_double(double v) {
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

}  // namespace

std::string notes_to_text(const NoteSeq& notes) {
    std::string out;
    for (const Note& n : notes) {
        out += format_double(n.onset);
        out += ' ';
        out += format_double(n.duration);
        out += ' ';
        out += std::to_string(n.instrument);
        out += ' ';
        out += std::to_string(n.pitch);
        out += '\n';
    }
    return out;
}

NoteSeq notes_from_text(const std::string& text) {
    NoteSeq notes;
    std::istringstream in(text);
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty())
            continue;
        std::istringstream fields(line);
        Note n;
        if (!(fields >> n.onset >> n.duration >> n.instrument >> n.pitch))
            raise(Errc::IoError, "bad note record on line " + std::to_string(lineno));
        notes.push_back(n);
    }
    return notes;
}

}  // namespace amtkit
