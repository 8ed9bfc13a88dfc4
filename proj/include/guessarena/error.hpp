#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace guessarena {

enum class ErrorCode {
    InvalidArgument,
    DuplicateCard,
    MalformedInput,
    // ingest
    UnreadableSource,
    EmptyAfterExtraction,
    UnsupportedFormat,
    // deckgen
    TemplateFieldMissing,
    EmptyExtraction,
    DimensionMismatch,
    ZeroVector,
    DegenerateSimilarity,
    TooFewKeywords,
    // agents
    ProviderError,
    TargetNotInDeck,
    MissingBackground,
    MalformedBackground,
    UnparsableJudgeReply,
    // engine
    ProtocolError,
    // metrics
    EmptyResults,
    InvalidParams,
    // analysis
    MissingGold,
    TooFewJudges,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

enum class ProviderErrorKind { Auth, RateLimitedExhausted, Transport, MalformedReply };

std::string_view to_string(ProviderErrorKind kind) noexcept;

class ProviderError : public Error {
public:
    ProviderError(ProviderErrorKind kind, const std::string& message)
        : Error(ErrorCode::ProviderError, std::string(to_string(kind)) + ": " + message), kind_(kind) {}

    ProviderErrorKind kind() const noexcept { return kind_; }

private:
    ProviderErrorKind kind_;
};

}  // namespace guessarena
