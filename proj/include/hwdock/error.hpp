#pragma once

#include <stdexcept>
#include <string>

namespace hwdock {

enum class ErrorKind {
    Parse,
    Schema,
    Validation,
    NotFound,
    AuthRequired,
    BudgetExhausted,
    Integrity,
    Network,
    Unsupported,
    IncompleteArchive,
    Ambiguous,
    Refused,
    Usage,
    Io,
};

const char* to_string(ErrorKind kind);

/// Every failure surfaced by the library. Callers switch on kind(); what()
/// carries the human-readable detail.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message)
        , mKind(kind)
    {
    }

    ErrorKind kind() const noexcept { return mKind; }

private:
    ErrorKind mKind;
};

} // namespace hwdock
