#include "scenedex/error.hpp"

namespace scenedex {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidInput: return "invalid-input";
        case ErrorKind::Transport: return "transport";
        case ErrorKind::Protocol: return "protocol";
        case ErrorKind::NotFound: return "not-found";
        case ErrorKind::Version: return "version";
        case ErrorKind::Consistency: return "consistency";
        case ErrorKind::Prerequisite: return "prerequisite";
        case ErrorKind::Extraction: return "extraction";
        case ErrorKind::EmptyTable: return "empty-table";
    }
    return "unknown";
}

}  // namespace scenedex
