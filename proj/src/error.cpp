#include "hwdock/error.hpp"

namespace hwdock {

const char* to_string(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::Parse: return "parse error";
    case ErrorKind::Schema: return "schema error";
    case ErrorKind::Validation: return "validation error";
    case ErrorKind::NotFound: return "not found";
    case ErrorKind::AuthRequired: return "auth required";
    case ErrorKind::BudgetExhausted: return "rate budget exhausted";
    case ErrorKind::Integrity: return "integrity error";
    case ErrorKind::Network: return "network error";
    case ErrorKind::Unsupported: return "unsupported";
    case ErrorKind::IncompleteArchive: return "incomplete archive";
    case ErrorKind::Ambiguous: return "ambiguous";
    case ErrorKind::Refused: return "refused";
    case ErrorKind::Usage: return "usage error";
    case ErrorKind::Io: return "i/o error";
    }
    return "error";
}

} // namespace hwdock
