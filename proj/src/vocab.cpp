#include "amtkit/vocab.hpp"

#include <string>

namespace amtkit {

const char* errc_name(Errc code) {
    switch (code) {
    case Errc::MalformedHeader: return "MalformedHeader";
    case Errc::UnsupportedFormat: return "UnsupportedFormat";
    case Errc::TruncatedTrack: return "TruncatedTrack";
    case Errc::OnsetOutOfRange: return "OnsetOutOfRange";
    case Errc::OutOfRange: return "OutOfRange";
    case Errc::UnsortedInput: return "UnsortedInput";
    case Errc::DanglingTriple: return "DanglingTriple";
    case Errc::CycleBreak: return "CycleBreak";
    case Errc::DimMismatch: return "DimMismatch";
    case Errc::EmptyMidi: return "EmptyMidi";
    case Errc::TooSparse: return "TooSparse";
    case Errc::BadManifest: return "BadManifest";
    case Errc::DeadEnd: return "DeadEnd";
    case Errc::IoError: return "IoError";
    }
    return "UnknownError";
}

Event Event::onset(int bin, bool anticipated) {
    Event e;
    e.kind = EventKind::Onset;
    e.bin = bin;
    e.anticipated = anticipated;
    return e;
}

Event Event::duration(int bin, bool anticipated) {
    Event e;
    e.kind = EventKind::Duration;
    e.bin = bin;
    e.anticipated = anticipated;
    return e;
}

Event Event::instr_pitch(int instrument, int pitch, bool anticipated) {
    Event e;
    e.kind = EventKind::InstrPitch;
    e.instrument = instrument;
    e.pitch = pitch;
    e.anticipated = anticipated;
    return e;
}

void VocabConfig::check() const {
    if (eos_id == separator_id)
        raise(Errc::BadManifest, "eos_id and separator_id must differ");
    if (eos_id >= text_vocab_size || separator_id >= text_vocab_size)
        raise(Errc::BadManifest, "special ids must lie in the text block");
}

uint32_t local_id_of(const Event& event) {
    uint32_t id = 0;
    switch (event.kind) {
    case EventKind::Onset:
        if (event.bin < 0 || event.bin >= int(VocabConfig::kOnsetBins))
            raise(Errc::OutOfRange, "onset bin " + std::to_string(event.bin));
        id = VocabConfig::kOnsetBase + uint32_t(event.bin);
        break;
    case EventKind::Duration:
        if (event.bin < 0 || event.bin >= int(VocabConfig::kDurationBins))
            raise(Errc::OutOfRange, "duration bin " + std::to_string(event.bin));
        id = VocabConfig::kDurationBase + uint32_t(event.bin);
        break;
    case EventKind::InstrPitch:
        if (event.instrument < 0 || event.instrument >= int(VocabConfig::kInstruments))
            raise(Errc::OutOfRange, "instrument " + std::to_string(event.instrument));
        if (event.pitch < 0 || event.pitch >= int(VocabConfig::kPitches))
            raise(Errc::OutOfRange, "pitch " + std::to_string(event.pitch));
        id = VocabConfig::kInstrPitchBase +
             uint32_t(event.instrument) * VocabConfig::kPitches + uint32_t(event.pitch);
        break;
    }
    if (event.anticipated)
        id += VocabConfig::kNormalBlock;
    return id;
}

Event event_of(uint32_t local_id) {
    if (local_id >= VocabConfig::kMidiVocabSize)
        raise(Errc::OutOfRange, "local id " + std::to_string(local_id));
    const bool anticipated = local_id >= VocabConfig::kNormalBlock;
    const uint32_t base = anticipated ? local_id - VocabConfig::kNormalBlock : local_id;
    if (base < VocabConfig::kDurationBase)
        return Event::onset(int(base), anticipated);
    if (base < VocabConfig::kInstrPitchBase)
        return Event::duration(int(base - VocabConfig::kDurationBase), anticipated);
    const uint32_t ip = base - VocabConfig::kInstrPitchBase;
    return Event::instr_pitch(int(ip / VocabConfig::kPitches), int(ip % VocabConfig::kPitches),
                              anticipated);
}

uint32_t to_global(uint32_t local_id, const VocabConfig& cfg) {
    if (local_id >= VocabConfig::kMidiVocabSize)
        raise(Errc::OutOfRange, "local id " + std::to_string(local_id));
    return cfg.text_vocab_size + local_id;
}

LocalId to_local(uint32_t global_id, const VocabConfig& cfg) {
    if (global_id >= cfg.total_vocab_size())
        raise(Errc::OutOfRange, "global id " + std::to_string(global_id));
    if (global_id < cfg.text_vocab_size)
        return TextId{global_id};
    return MidiId{global_id - cfg.text_vocab_size};
}

}  // namespace amtkit
