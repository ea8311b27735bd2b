#pragma once

#include <stdexcept>
#include <string>

namespace lattag {

// Common base: every typed failure below is a usage/input problem, which the
// CLI reports with exit code 2.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct MalformedRecord : Error {
    std::size_t line;
    MalformedRecord(std::size_t line_number, const std::string& what)
        : Error("line " + std::to_string(line_number) + ": " + what), line(line_number) {}
};

struct EncodingError : Error {
    using Error::Error;
};

struct InvalidFraction : Error {
    using Error::Error;
};

struct EmptyCorpus : Error {
    using Error::Error;
};

struct UnknownLemmaChar : Error {
    using Error::Error;
};

struct ShapeMismatch : Error {
    using Error::Error;
};

struct OutOfLexicon : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

struct FormatError : Error {
    using Error::Error;
};

struct LengthMismatch : Error {
    using Error::Error;
};

struct MissingGold : Error {
    using Error::Error;
};

struct PerplexityOutOfRange : Error {
    using Error::Error;
};

} // namespace lattag
