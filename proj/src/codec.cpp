#include "amtkit/codec.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "binio.hpp"

namespace amtkit {

QuantNote quantize(const Note& note) {
    if (note.onset < 0.0 || note.onset >= 100.0)
        raise(Errc::OnsetOutOfRange, "onset " + std::to_string(note.onset) + " s");
    QuantNote q;
    // half-up on the 10 ms grid; onsets just under 100 s stay in the last bin
    q.onset_bin = int(std::min<long long>(9999, std::llround(note.onset * 100.0)));
    q.duration_bin =
        int(std::min<long long>(999, std::max<long long>(1, std::llround(note.duration * 100.0))));
    q.instrument = note.instrument;
    q.pitch = note.pitch;
    return q;
}

std::vector<Segment> segment(const NoteSeq& notes, double max_span) {
    std::map<long long, NoteSeq> windows;
    for (const Note& n : notes) {
        const long long k = (long long)std::floor(n.onset / max_span);
        Note rebased = n;
        rebased.onset = n.onset - double(k) * max_span;
        windows[k].push_back(rebased);
    }
    std::vector<Segment> out;
    out.reserve(windows.size());
    for (auto& [k, seg] : windows) {
        sort_notes(seg);
        out.push_back({double(k) * max_span, std::move(seg)});
    }
    return out;
}

namespace {

void push_triple(std::vector<uint32_t>& ids, const QuantNote& q, const VocabConfig& cfg) {
    ids.push_back(to_global(local_id_of(Event::onset(q.onset_bin, q.anticipated)), cfg));
    ids.push_back(to_global(local_id_of(Event::duration(q.duration_bin, q.anticipated)), cfg));
    ids.push_back(
        to_global(local_id_of(Event::instr_pitch(q.instrument, q.pitch, q.anticipated)), cfg));
}

}  // namespace

TokenSequence encode(const NoteSeq& notes, const VocabConfig& cfg) {
    if (!is_sorted_notes(notes))
        raise(Errc::UnsortedInput, "notes must be sorted before encoding");
    TokenSequence seq;
    seq.cfg = cfg;
    seq.ids.reserve(notes.size() * 3);
    for (const Note& n : notes) push_triple(seq.ids, quantize(n), cfg);
    return seq;
}

NoteSeq decode(const TokenSequence& tokens, bool strict, std::vector<std::string>* warnings) {
    const VocabConfig& cfg = tokens.cfg;
    NoteSeq notes;
    notes.reserve(tokens.ids.size() / 3);

    auto complain = [&](size_t pos, Errc code, const std::string& what) {
        if (strict)
            raise(code, what + " at position " + std::to_string(pos));
        if (warnings)
            warnings->push_back(what + " at position " + std::to_string(pos));
    };

    size_t i = 0;
    const size_t n = tokens.ids.size();
    while (i < n) {
        // a triple must start with an onset token of either flavor
        const uint32_t id = tokens.ids[i];
        if (!cfg.is_midi(id)) {
            complain(i, Errc::OutOfRange, "non-music token");
            ++i;
            continue;
        }
        Event onset = event_of(id - cfg.text_vocab_size);
        if (onset.kind != EventKind::Onset) {
            complain(i, Errc::CycleBreak, "expected onset token");
            ++i;
            continue;
        }
        if (i + 2 >= n) {
            complain(i, Errc::DanglingTriple, "trailing partial triple");
            break;
        }
        Event rest[2];
        bool bad = false;
        for (int k = 0; k < 2; ++k) {
            const uint32_t rid = tokens.ids[i + 1 + k];
            if (!cfg.is_midi(rid)) {
                complain(i + 1 + k, Errc::OutOfRange, "non-music token");
                bad = true;
                break;
            }
            rest[k] = event_of(rid - cfg.text_vocab_size);
        }
        if (!bad && rest[0].kind != EventKind::Duration) {
            complain(i + 1, Errc::CycleBreak, "expected duration token");
            bad = true;
        }
        if (!bad && rest[1].kind != EventKind::InstrPitch) {
            complain(i + 2, Errc::CycleBreak, "expected instrument-pitch token");
            bad = true;
        }
        if (bad) {
            ++i;  // resync: scan forward from the next token
            continue;
        }
        Note note;
        note.onset = onset.bin * 0.01;
        note.duration = std::max(1, rest[0].bin) * 0.01;
        note.instrument = rest[1].instrument;
        note.pitch = rest[1].pitch;
        notes.push_back(note);
        i += 3;
    }
    sort_notes(notes);
    return notes;
}

TokenSequence interleave_infill(const NoteSeq& past_and_middle, const NoteSeq& future,
                                double delta, const VocabConfig& cfg) {
    if (!is_sorted_notes(past_and_middle) || !is_sorted_notes(future))
        raise(Errc::UnsortedInput, "notes must be sorted before interleaving");

    std::vector<QuantNote> normal(past_and_middle.size());
    for (size_t i = 0; i < past_and_middle.size(); ++i) normal[i] = quantize(past_and_middle[i]);
    std::vector<QuantNote> anticipated(future.size());
    for (size_t i = 0; i < future.size(); ++i) {
        anticipated[i] = quantize(future[i]);
        anticipated[i].anticipated = true;
    }

    // insertion index for each anticipated note: first normal note whose
    // onset reaches (anticipated onset - delta); ties put anticipated first
    std::vector<size_t> slot(future.size());
    for (size_t j = 0; j < future.size(); ++j) {
        const double threshold = future[j].onset - delta;
        size_t i = 0;
        while (i < past_and_middle.size() && past_and_middle[i].onset < threshold) ++i;
        slot[j] = i;
    }

    TokenSequence seq;
    seq.cfg = cfg;
    seq.ids.reserve(3 * (normal.size() + anticipated.size()));
    size_t j = 0;
    for (size_t i = 0; i <= normal.size(); ++i) {
        while (j < anticipated.size() && slot[j] == i) push_triple(seq.ids, anticipated[j++], cfg);
        if (i < normal.size())
            push_triple(seq.ids, normal[i], cfg);
    }
    return seq;
}

const char* violation_name(ViolationKind kind) {
    switch (kind) {
    case ViolationKind::CycleBreak: return "CycleBreak";
    case ViolationKind::OnsetRegression: return "OnsetRegression";
    case ViolationKind::RangeError: return "RangeError";
    case ViolationKind::DanglingTriple: return "DanglingTriple";
    }
    return "Unknown";
}

ValidationReport validate(const TokenSequence& tokens) {
    const VocabConfig& cfg = tokens.cfg;
    ValidationReport report;
    auto flag = [&](size_t pos, ViolationKind kind) {
        report.violations.push_back({pos, kind});
    };

    struct FlavorState {
        EventKind expect = EventKind::Onset;
        size_t triple_start = 0;
        int last_onset_bin = -1;
    } state[2];

    for (size_t pos = 0; pos < tokens.ids.size(); ++pos) {
        const uint32_t id = tokens.ids[pos];
        if (!cfg.is_midi(id)) {
            flag(pos, ViolationKind::RangeError);
            continue;
        }
        const Event ev = event_of(id - cfg.text_vocab_size);
        FlavorState& st = state[ev.anticipated ? 1 : 0];
        if (ev.kind != st.expect) {
            flag(pos, ViolationKind::CycleBreak);
            st.expect = EventKind::Onset;
            if (ev.kind != EventKind::Onset)
                continue;  // resync at the next onset of this flavor
        }
        switch (ev.kind) {
        case EventKind::Onset:
            st.triple_start = pos;
            if (!ev.anticipated) {
                if (ev.bin < st.last_onset_bin)
                    flag(pos, ViolationKind::OnsetRegression);
                st.last_onset_bin = ev.bin;
            }
            st.expect = EventKind::Duration;
            break;
        case EventKind::Duration:
            st.expect = EventKind::InstrPitch;
            break;
        case EventKind::InstrPitch:
            st.expect = EventKind::Onset;
            break;
        }
    }
    for (const FlavorState& st : state)
        if (st.expect != EventKind::Onset)
            flag(st.triple_start, ViolationKind::DanglingTriple);

    std::sort(report.violations.begin(), report.violations.end(),
              [](const Violation& a, const Violation& b) { return a.position < b.position; });
    report.ok = report.violations.empty();
    return report;
}

void write_amtk(const std::string& path, const TokenSequence& tokens) {
    std::vector<uint8_t> bytes;
    bytes.reserve(24 + tokens.ids.size() * 4);
    bytes.insert(bytes.end(), {'A', 'M', 'T', 'K'});
    binio::put_u32(bytes, 1);
    binio::put_u32(bytes, tokens.cfg.text_vocab_size);
    binio::put_u32(bytes, VocabConfig::kMidiVocabSize);
    binio::put_u64(bytes, tokens.ids.size());
    for (uint32_t id : tokens.ids) binio::put_u32(bytes, id);
    binio::write_file(path, bytes);
}

TokenSequence read_amtk(const std::string& path, const VocabConfig& defaults) {
    const auto bytes = binio::read_file(path);
    binio::Reader r(bytes.data(), bytes.size());
    r.magic("AMTK", "AMTK");
    const uint32_t version = r.u32();
    if (version != 1)
        raise(Errc::IoError, path + ": unsupported AMTK version " + std::to_string(version));
    TokenSequence seq;
    seq.cfg = defaults;
    seq.cfg.text_vocab_size = r.u32();
    const uint32_t midi_vocab = r.u32();
    if (midi_vocab != VocabConfig::kMidiVocabSize)
        raise(Errc::IoError, path + ": unexpected music vocab size " + std::to_string(midi_vocab));
    const uint64_t count = r.u64();
    if (r.remaining() != count * 4)
        raise(Errc::IoError, path + ": payload size does not match header");
    seq.ids.resize(count);
    for (uint64_t i = 0; i < count; ++i) {
        seq.ids[i] = r.u32();
        if (seq.ids[i] >= seq.cfg.total_vocab_size())
            raise(Errc::IoError, path + ": token id out of range");
    }
    return seq;
}

}  // namespace amtkit
