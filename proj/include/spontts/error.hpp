#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace spontts {

enum class ErrorKind {
    Dimension,
    Config,
    State,
    Parse,
    Oov,
    Data,
    Vocabulary,
    Contract,
    Integrity,
    Order,
    Io,
};

constexpr std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Dimension: return "dimension";
        case ErrorKind::Config: return "config";
        case ErrorKind::State: return "state";
        case ErrorKind::Parse: return "parse";
        case ErrorKind::Oov: return "oov";
        case ErrorKind::Data: return "data";
        case ErrorKind::Vocabulary: return "vocabulary";
        case ErrorKind::Contract: return "contract";
        case ErrorKind::Integrity: return "integrity";
        case ErrorKind::Order: return "order";
        case ErrorKind::Io: return "io";
    }
    return "unknown";
}

// All library failures are reported through this type; `kind()` drives the
// machine-readable prefix the CLI prints.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

inline void require(bool condition, ErrorKind kind, const std::string& message) {
    if (!condition) {
        throw Error(kind, message);
    }
}

}  // namespace spontts
