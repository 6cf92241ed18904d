#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace wavesense {

/// Error with a stable machine-parsable code plus a human detail string.
/// The CLI prints these as `stage=... code=... detail=...` on exit.
class Error : public std::runtime_error {
public:
    Error(std::string code, std::string detail)
        : std::runtime_error(code + ": " + detail),
          code_(std::move(code)),
          detail_(std::move(detail)) {}

    const std::string& code() const { return code_; }
    const std::string& detail() const { return detail_; }

private:
    std::string code_;
    std::string detail_;
};

}  // namespace wavesense
