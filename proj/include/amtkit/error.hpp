#pragma once

#include <stdexcept>
#include <string>

namespace amtkit {

enum class Errc {
    // SMF ingestion
    MalformedHeader,
    UnsupportedFormat,
    TruncatedTrack,
    // tokenization
    OnsetOutOfRange,
    OutOfRange,
    UnsortedInput,
    DanglingTriple,
    CycleBreak,
    // embedding tables
    DimMismatch,
    // dataset construction
    EmptyMidi,
    TooSparse,
    BadManifest,
    // generation
    DeadEnd,
    // plumbing
    IoError,
};

const char* errc_name(Errc code);

/// All fatal library errors are thrown as Error; code() tells them apart.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& msg) :
        std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code) {}

    Errc code() const { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& msg) {
    throw Error(code, msg);
}

}  // namespace amtkit
