#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ensopon {

// Stable error codes. The CLI prints these verbatim in validation reports.
enum class ErrorCode {
    Io,           // E_IO: unreadable or unwritable file
    Path,         // E_PATH: referenced path does not exist
    Header,       // E_HEADER: no recognizable table header
    Schema,       // E_SCHEMA: malformed field, format or magic mismatch
    Size,         // E_SIZE: dimension/payload mismatch
    Empty,        // E_EMPTY: nothing survived filtering
    Coverage,     // E_COVERAGE: series does not cover the requested window
    Gap,          // E_GAP: missing month inside a monthly series
    Region,       // E_REGION: incomplete or inconsistent region map
    Stage,        // E_STAGE: preprocessing stage out of order
    Domain,       // E_DOMAIN: argument outside the operation's domain
    Degenerate,   // E_DEGENERATE: zero variance or similar
    Config,       // E_CONFIG: invalid run configuration
    Dependency,   // E_DEPENDENCY: pipeline stage run before its inputs exist
    Artifact,     // E_ARTIFACT: expected artifact missing
};

std::string_view error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace ensopon
