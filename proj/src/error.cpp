#include "reverger/error.hpp"

namespace reverger {

std::string_view code_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::EmptyDocument: return "EMPTY_DOCUMENT";
        case ErrorCode::SpanOutOfBounds: return "SPAN_OUT_OF_BOUNDS";
        case ErrorCode::SpanNotOnCurrentRevision: return "SPAN_NOT_ON_CURRENT_REVISION";
        case ErrorCode::EmptySpan: return "EMPTY_SPAN";
        case ErrorCode::EditOutOfBounds: return "EDIT_OUT_OF_BOUNDS";
        case ErrorCode::NoActiveSpan: return "NO_ACTIVE_SPAN";
        case ErrorCode::EmptyReplacement: return "EMPTY_REPLACEMENT";
        case ErrorCode::InvalidEncoding: return "INVALID_ENCODING";
        case ErrorCode::AlreadyProbed: return "ALREADY_PROBED";
        case ErrorCode::UnknownNode: return "UNKNOWN_NODE";
        case ErrorCode::DepthCapExceeded: return "DEPTH_CAP";
        case ErrorCode::AlreadyExpanded: return "ALREADY_EXPANDED";
        case ErrorCode::InvalidLabel: return "INVALID_LABEL";
        case ErrorCode::DuplicateSibling: return "DUPLICATE_SIBLING";
        case ErrorCode::SelectionCapExceeded: return "SELECTION_CAP";
        case ErrorCode::MalformedDirections: return "MALFORMED_DIRECTIONS";
        case ErrorCode::MissingVariable: return "MISSING_VARIABLE";
        case ErrorCode::WrongKindArguments: return "WRONG_KIND_ARGUMENTS";
        case ErrorCode::InvalidTemplate: return "INVALID_TEMPLATE";
        case ErrorCode::EmptyVariation: return "EMPTY_VARIATION";
        case ErrorCode::ProviderTimeout: return "PROVIDER_TIMEOUT";
        case ErrorCode::ProviderRejected: return "PROVIDER_REJECTED";
        case ErrorCode::ProviderUnavailable: return "PROVIDER_UNAVAILABLE";
        case ErrorCode::MalformedProviderEnvelope: return "MALFORMED_PROVIDER_ENVELOPE";
        case ErrorCode::FixtureMissing: return "FIXTURE_MISSING";
        case ErrorCode::InvalidConfig: return "INVALID_CONFIG";
        case ErrorCode::NoSelection: return "NO_SELECTION";
        case ErrorCode::UnknownVariation: return "UNKNOWN_VARIATION";
        case ErrorCode::NoActiveVariation: return "NO_ACTIVE_VARIATION";
        case ErrorCode::StaleVariation: return "STALE_VARIATION";
        case ErrorCode::UnknownSession: return "UNKNOWN_SESSION";
        case ErrorCode::MalformedCommand: return "MALFORMED_COMMAND";
        case ErrorCode::CorruptLog: return "CORRUPT_LOG";
        case ErrorCode::Unauthorized: return "UNAUTHORIZED";
        case ErrorCode::IoError: return "IO_ERROR";
    }
    return "UNKNOWN";
}

int http_status(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::UnknownSession:
        case ErrorCode::UnknownNode:
        case ErrorCode::UnknownVariation:
            return 404;
        case ErrorCode::Unauthorized:
            return 401;
        case ErrorCode::AlreadyProbed:
        case ErrorCode::DepthCapExceeded:
        case ErrorCode::AlreadyExpanded:
        case ErrorCode::DuplicateSibling:
        case ErrorCode::SelectionCapExceeded:
        case ErrorCode::NoActiveSpan:
        case ErrorCode::SpanNotOnCurrentRevision:
        case ErrorCode::NoSelection:
        case ErrorCode::NoActiveVariation:
        case ErrorCode::StaleVariation:
            return 409;
        case ErrorCode::ProviderTimeout:
            return 504;
        case ErrorCode::ProviderRejected:
        case ErrorCode::ProviderUnavailable:
        case ErrorCode::MalformedProviderEnvelope:
        case ErrorCode::MalformedDirections:
        case ErrorCode::EmptyVariation:
        case ErrorCode::FixtureMissing:
            return 502;
        case ErrorCode::CorruptLog:
        case ErrorCode::IoError:
        case ErrorCode::InvalidTemplate:
        case ErrorCode::InvalidConfig:
            return 500;
        default:
            return 400;
    }
}

}  // namespace reverger
