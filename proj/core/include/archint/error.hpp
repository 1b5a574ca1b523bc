#pragma once

#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

namespace archint {

/// Error raised by every module. `code()` is a stable kebab-case identifier
/// (e.g. `not-found`, `parse-error`) that the CLI and HTTP layers map onto
/// exit codes and status codes; `details()` carries structured context.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message, nlohmann::json details = nullptr)
        : std::runtime_error(message), code_(std::move(code)), details_(std::move(details)) {}

    const std::string& code() const noexcept { return code_; }
    const nlohmann::json& details() const noexcept { return details_; }

    nlohmann::json to_json() const {
        nlohmann::json j{{"code", code_}, {"message", what()}};
        if (!details_.is_null())
            j["details"] = details_;
        return j;
    }

private:
    std::string code_;
    nlohmann::json details_;
};

}  // namespace archint
