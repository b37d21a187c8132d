#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace reverger {

// Every failure surfaced by the library maps to exactly one of these codes.
// The string forms are part of the HTTP API and must stay stable.
enum class ErrorCode {
    // document
    EmptyDocument,
    SpanOutOfBounds,
    SpanNotOnCurrentRevision,
    EmptySpan,
    EditOutOfBounds,
    NoActiveSpan,
    EmptyReplacement,
    InvalidEncoding,
    // cart
    AlreadyProbed,
    UnknownNode,
    DepthCapExceeded,
    AlreadyExpanded,
    InvalidLabel,
    DuplicateSibling,
    SelectionCapExceeded,
    MalformedDirections,
    // prompts
    MissingVariable,
    WrongKindArguments,
    InvalidTemplate,
    EmptyVariation,
    // gateway
    ProviderTimeout,
    ProviderRejected,
    ProviderUnavailable,
    MalformedProviderEnvelope,
    FixtureMissing,
    InvalidConfig,
    // mutants
    NoSelection,
    UnknownVariation,
    NoActiveVariation,
    StaleVariation,
    // service
    UnknownSession,
    MalformedCommand,
    CorruptLog,
    Unauthorized,
    IoError,
};

std::string_view code_string(ErrorCode code) noexcept;

// HTTP status the service answers with for a given code.
int http_status(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace reverger
