#pragma once

// Shared test machinery: hand-assembled SMF fixtures, random note/distribution
// generators, simple providers, and the independent oracles the tests check
// the library against.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <stdexcept>
#include <string>
#include <unistd.h>
#include <vector>

#include "amtkit/codec.hpp"
#include "amtkit/midi.hpp"
#include "amtkit/sampling.hpp"

namespace testsupport {

using namespace amtkit;

// ---------------------------------------------------------------------------
// SMF byte assembly, written against the format spec rather than write_smf

class SmfBuilder {
public:
    explicit SmfBuilder(int format, int division) : format_(format), division_(division) {}

    SmfBuilder& track() {
        tracks_.emplace_back();
        return *this;
    }

    SmfBuilder& raw(std::initializer_list<int> bytes) {
        for (int b : bytes) tracks_.back().push_back(uint8_t(b));
        return *this;
    }

    SmfBuilder& delta(uint32_t ticks) {
        uint8_t stack[5];
        int n = 0;
        do {
            stack[n++] = ticks & 0x7F;
            ticks >>= 7;
        } while (ticks);
        while (n > 1) tracks_.back().push_back(uint8_t(stack[--n] | 0x80));
        tracks_.back().push_back(stack[0]);
        return *this;
    }

    SmfBuilder& tempo(uint32_t us_per_quarter) {
        return raw({0xFF, 0x51, 0x03, int(us_per_quarter >> 16) & 0xFF,
                    int(us_per_quarter >> 8) & 0xFF, int(us_per_quarter) & 0xFF});
    }

    SmfBuilder& end_of_track() { return raw({0xFF, 0x2F, 0x00}); }

    std::vector<uint8_t> bytes() const {
        std::vector<uint8_t> out = {'M', 'T', 'h', 'd', 0, 0, 0, 6};
        auto be16 = [&](int v) {
            out.push_back(uint8_t(v >> 8));
            out.push_back(uint8_t(v));
        };
        be16(format_);
        be16(int(tracks_.size()));
        be16(division_);
        for (const auto& t : tracks_) {
            out.insert(out.end(), {'M', 'T', 'r', 'k'});
            out.push_back(uint8_t(t.size() >> 24));
            out.push_back(uint8_t(t.size() >> 16));
            out.push_back(uint8_t(t.size() >> 8));
            out.push_back(uint8_t(t.size()));
            out.insert(out.end(), t.begin(), t.end());
        }
        return out;
    }

private:
    int format_;
    int division_;
    std::vector<std::vector<uint8_t>> tracks_;
};

// Two piano notes on one format-0 track, default tempo.
inline std::vector<uint8_t> fixture_smf0_single() {
    SmfBuilder b(0, 480);
    b.track()
        .delta(0).raw({0xC0, 0x00})
        .delta(0).raw({0x90, 0x3C, 0x64})
        .delta(480).raw({0x80, 0x3C, 0x40})
        .delta(0).raw({0x90, 0x40, 0x50})
        .delta(960).raw({0x80, 0x40, 0x40})
        .delta(0).end_of_track();
    return b.bytes();
}

// Format 1, tempo change mid-piece, two melodic tracks on separate channels.
inline std::vector<uint8_t> fixture_smf1_tempo() {
    SmfBuilder b(1, 480);
    b.track()
        .delta(0).tempo(500000)
        .delta(960).tempo(666666)
        .delta(0).end_of_track();
    b.track()
        .delta(0).raw({0xC0, 0x00})
        .delta(0).raw({0x90, 0x3C, 0x64})
        .delta(480).raw({0x80, 0x3C, 0x40})
        .delta(480).raw({0x90, 0x43, 0x64})
        .delta(960).raw({0x80, 0x43, 0x40})
        .delta(0).end_of_track();
    b.track()
        .delta(0).raw({0xC1, 0x30})
        .delta(240).raw({0x91, 0x30, 0x40})
        .delta(1680).raw({0x81, 0x30, 0x40})
        .delta(0).end_of_track();
    return b.bytes();
}

// Drums via channel 9, running status, and velocity-0 note-offs.
inline std::vector<uint8_t> fixture_smf1_drums_running_status() {
    SmfBuilder b(1, 96);
    b.track().delta(0).tempo(500000).delta(0).end_of_track();
    b.track()
        .delta(0).raw({0x99, 0x24, 0x64})
        .delta(48).raw({0x24, 0x00})   // running status, note-off by velocity 0
        .delta(0).raw({0x26, 0x64})
        .delta(48).raw({0x26, 0x00})
        .delta(24).raw({0x28, 0x30})
        .delta(24).raw({0x28, 0x00})
        .delta(0).end_of_track();
    return b.bytes();
}

// Overlapping same-pitch note-ons (FIFO matching) under a non-default tempo.
inline std::vector<uint8_t> fixture_smf0_overlap() {
    SmfBuilder b(0, 480);
    b.track()
        .delta(0).tempo(400000)
        .delta(0).raw({0x90, 0x3C, 0x64})
        .delta(240).raw({0x90, 0x3C, 0x60})
        .delta(240).raw({0x80, 0x3C, 0x40})
        .delta(240).raw({0x80, 0x3C, 0x40})
        .delta(0).end_of_track();
    return b.bytes();
}

// A note left hanging until End-of-Track plus a stray note-off.
inline std::vector<uint8_t> fixture_smf0_unmatched() {
    SmfBuilder b(0, 480);
    b.track()
        .delta(0).raw({0x90, 0x3C, 0x64})
        .delta(480).raw({0x80, 0x40, 0x40})
        .delta(480).end_of_track();
    return b.bytes();
}

// Multi-instrument piece produced by the library's own writer.
inline std::vector<uint8_t> fixture_smf1_multi_instrument() {
    NoteSeq notes;
    const int instruments[4] = {0, 32, 48, 128};
    for (int i = 0; i < 40; ++i) {
        Note n;
        n.onset = 0.25 * i;
        n.duration = 0.5 + 0.125 * (i % 4);
        n.instrument = instruments[i % 4];
        n.pitch = 36 + (i * 7) % 48;
        notes.push_back(n);
    }
    sort_notes(notes);
    return write_smf(notes);
}

inline std::vector<std::pair<std::string, std::vector<uint8_t>>> all_fixtures() {
    return {
        {"smf0_single", fixture_smf0_single()},
        {"smf1_tempo", fixture_smf1_tempo()},
        {"smf1_drums_running_status", fixture_smf1_drums_running_status()},
        {"smf0_overlap", fixture_smf0_overlap()},
        {"smf0_unmatched", fixture_smf0_unmatched()},
        {"smf1_multi_instrument", fixture_smf1_multi_instrument()},
    };
}

// ---------------------------------------------------------------------------
// Random data

inline NoteSeq random_noteseq(std::mt19937_64& rng, size_t max_notes = 500,
                              double max_onset = 100.0) {
    std::uniform_int_distribution<size_t> count_dist(1, max_notes);
    std::uniform_real_distribution<double> onset_dist(0.0, max_onset);
    std::uniform_real_distribution<double> dur_dist(0.005, 11.0);
    std::uniform_int_distribution<int> instr_dist(0, 128);
    std::uniform_int_distribution<int> pitch_dist(0, 127);
    NoteSeq notes(count_dist(rng));
    for (Note& n : notes) {
        n.onset = std::min(onset_dist(rng), std::nextafter(max_onset, 0.0));
        n.duration = dur_dist(rng);
        n.instrument = instr_dist(rng);
        n.pitch = pitch_dist(rng);
    }
    sort_notes(notes);
    return notes;
}

/// Notes whose times sit exactly on the write-side tick grid (120 BPM,
/// division 480 -> 960 ticks per second).
inline NoteSeq random_grid_noteseq(std::mt19937_64& rng, size_t max_notes = 60) {
    std::uniform_int_distribution<size_t> count_dist(1, max_notes);
    std::uniform_int_distribution<int> tick_dist(0, 960 * 50);
    std::uniform_int_distribution<int> len_dist(1, 960 * 4);
    std::uniform_int_distribution<int> instr_dist(0, 128);
    std::uniform_int_distribution<int> pitch_dist(0, 127);
    NoteSeq notes(count_dist(rng));
    for (Note& n : notes) {
        n.onset = tick_dist(rng) / 960.0;
        n.duration = len_dist(rng) / 960.0;
        n.instrument = instr_dist(rng);
        n.pitch = pitch_dist(rng);
    }
    sort_notes(notes);
    return notes;
}

// ---------------------------------------------------------------------------
// Providers

class UniformProvider final : public LogitsProvider {
public:
    void scores(std::span<const uint32_t>, std::span<float> out) const override {
        std::fill(out.begin(), out.end(), 0.0f);
    }
};

class OneHotProvider final : public LogitsProvider {
public:
    explicit OneHotProvider(uint32_t id) : id_(id) {}
    void scores(std::span<const uint32_t>, std::span<float> out) const override {
        std::fill(out.begin(), out.end(), -1000.0f);
        out[id_] = 0.0f;
    }

private:
    uint32_t id_;
};

// ---------------------------------------------------------------------------
// Oracles

/// Brute-force smallest-prefix nucleus support over explicit probabilities,
/// with a relative slack so a boundary sitting within floating-point noise of
/// top_p never flips the verdict.
inline std::vector<uint32_t> nucleus_support_oracle(const std::vector<double>& probs,
                                                    double top_p, double slack = 1e-9) {
    std::vector<uint32_t> order(probs.size());
    for (uint32_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](uint32_t a, uint32_t b) {
        if (probs[a] != probs[b])
            return probs[a] > probs[b];
        return a < b;
    });
    double total = 0.0;
    for (double p : probs) total += p;
    const double needed = top_p * total;
    std::vector<uint32_t> support;
    double cum = 0.0;
    for (uint32_t id : order) {
        if (cum >= needed + slack * total)
            break;
        support.push_back(id);
        cum += probs[id];
    }
    return support;
}

/// Event-by-event tick->seconds integration, independent of TempoMap's
/// precomputed segments.
inline double tempo_oracle_seconds(int division,
                                   const std::vector<std::pair<uint32_t, uint32_t>>& changes,
                                   uint32_t tick) {
    double seconds = 0.0;
    uint32_t at = 0;
    uint32_t tempo = 500000;
    for (const auto& [change_tick, us] : changes) {
        if (change_tick >= tick)
            break;
        if (change_tick > at) {
            seconds += double(change_tick - at) * tempo / (1e6 * division);
            at = change_tick;
        }
        if (us != 0)
            tempo = us;
    }
    seconds += double(tick - at) * tempo / (1e6 * division);
    return seconds;
}

/// Critical chi-squared value via the Wilson-Hilferty transform.
inline double chi2_critical(int dof, double z = 3.0902) {  // z for alpha = 0.001
    const double k = double(dof);
    const double t = 1.0 - 2.0 / (9.0 * k) + z * std::sqrt(2.0 / (9.0 * k));
    return k * t * t * t;
}

// ---------------------------------------------------------------------------
// Scratch files and directories

inline std::vector<uint8_t> slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open " + path);
    return std::vector<uint8_t>((std::istreambuf_iterator<char>(in)),
                                std::istreambuf_iterator<char>());
}

inline void spit(const std::string& path, const std::vector<uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::runtime_error("cannot write " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
}

inline void spit(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw std::runtime_error("cannot write " + path);
    out << text;
}

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<uint64_t> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("amtkit_" + tag + "_" + std::to_string(::getpid()) + "_" +
                 std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }

    std::string file(const std::string& name) const { return (path_ / name).string(); }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

}  // namespace testsupport
