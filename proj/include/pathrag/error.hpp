#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace pathrag {

enum class Errc {
    EmptyIdentifier,
    UnknownNode,
    SelfLoop,
    GraphFrozen,
    IoFailure,
    MalformedRecord,
    EmptyDocument,
    InvalidArgument,
    ExtractorFailure,
    DanglingRelation,
    ProviderFailure,
    ContextOverflow,
    AuthFailure,
    DimensionMismatch,
    ZeroVector,
    EmptyIndex,
    StaleIndex,
    EmptyQuery,
    UnsettledNode,
    NoPathsFound,
    GraphTooLarge,
    UnknownElement,
    BudgetTooSmall,
    EmptyCorpus,
    ConfigError,
};

constexpr std::string_view to_string(Errc code) {
    switch (code) {
        case Errc::EmptyIdentifier: return "EmptyIdentifier";
        case Errc::UnknownNode: return "UnknownNode";
        case Errc::SelfLoop: return "SelfLoop";
        case Errc::GraphFrozen: return "GraphFrozen";
        case Errc::IoFailure: return "IoFailure";
        case Errc::MalformedRecord: return "MalformedRecord";
        case Errc::EmptyDocument: return "EmptyDocument";
        case Errc::InvalidArgument: return "InvalidArgument";
        case Errc::ExtractorFailure: return "ExtractorFailure";
        case Errc::DanglingRelation: return "DanglingRelation";
        case Errc::ProviderFailure: return "ProviderFailure";
        case Errc::ContextOverflow: return "ContextOverflow";
        case Errc::AuthFailure: return "AuthFailure";
        case Errc::DimensionMismatch: return "DimensionMismatch";
        case Errc::ZeroVector: return "ZeroVector";
        case Errc::EmptyIndex: return "EmptyIndex";
        case Errc::StaleIndex: return "StaleIndex";
        case Errc::EmptyQuery: return "EmptyQuery";
        case Errc::UnsettledNode: return "UnsettledNode";
        case Errc::NoPathsFound: return "NoPathsFound";
        case Errc::GraphTooLarge: return "GraphTooLarge";
        case Errc::UnknownElement: return "UnknownElement";
        case Errc::BudgetTooSmall: return "BudgetTooSmall";
        case Errc::EmptyCorpus: return "EmptyCorpus";
        case Errc::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

/// Library-wide exception. `stage` is filled in by the query pipeline so that
/// callers can tell which step failed; `line` is set for file-format errors and
/// `attempts` for provider calls.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    Errc code() const noexcept { return code_; }

    const std::string& stage() const noexcept { return stage_; }
    std::size_t line() const noexcept { return line_; }
    int attempts() const noexcept { return attempts_; }

    Error& with_stage(std::string stage) {
        stage_ = std::move(stage);
        return *this;
    }
    Error& with_line(std::size_t line) {
        line_ = line;
        return *this;
    }
    Error& with_attempts(int attempts) {
        attempts_ = attempts;
        return *this;
    }

    std::string describe() const {
        std::string out;
        if (!stage_.empty()) {
            out += stage_;
            out += ": ";
        }
        out += to_string(code_);
        out += ": ";
        out += what();
        return out;
    }

private:
    Errc code_;
    std::string stage_;
    std::size_t line_ = 0;
    int attempts_ = 0;
};

// CLI exit status: 2 usage, 3 provider failure, 4 data/format failure.
constexpr int exit_code_for(Errc code) {
    switch (code) {
        case Errc::ProviderFailure:
        case Errc::ContextOverflow:
        case Errc::AuthFailure:
            return 3;
        case Errc::ConfigError:
        case Errc::InvalidArgument:
        case Errc::EmptyQuery:
            return 2;
        default:
            return 4;
    }
}

}  // namespace pathrag
