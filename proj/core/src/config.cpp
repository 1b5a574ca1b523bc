#include <cstdlib>
#include <fstream>

#include "archint/control.hpp"
#include "archint/error.hpp"

namespace archint {

using nlohmann::json;

int http_status_for(const std::string& code) {
    if (code == "not-found") return 404;
    if (code == "precondition-violation" || code == "wrong-status" || code == "not-approved" ||
        code == "job-conflict" || code == "conflict")
        return 409;
    if (code == "invalid-definition" || code == "validation-failure" || code == "parse-error" ||
        code == "missing-local-id-rule" || code == "pipeline-type-mismatch" || code == "invalid-stage" ||
        code == "stage-failed" || code == "invalid-argument" || code == "bad-request" || code == "xml-parse-error")
        return 422;
    return 500;
}

int exit_code_for(const std::string& code) {
    if (code == "validation-failure" || code == "invalid-definition" || code == "parse-error" ||
        code == "missing-local-id-rule" || code == "pipeline-type-mismatch" || code == "stage-failed")
        return 2;
    return 1;
}

namespace {

void overlay(Config& c, const json& j) {
    if (j.contains("data_dir")) c.data_dir = j["data_dir"].get<std::string>();
    if (j.contains("host")) c.host = j["host"].get<std::string>();
    if (j.contains("port")) c.port = j["port"].is_string() ? std::stoi(j["port"].get<std::string>()) : j["port"].get<int>();
    if (j.contains("snapshot_every")) c.snapshot_every = j["snapshot_every"].get<std::size_t>();
}

}  // namespace

Config load_config(const std::optional<std::filesystem::path>& file, const json& flags) {
    Config c;
    if (file) {
        std::ifstream in(*file);
        if (!in) throw Error("not-found", "config file '" + file->string() + "' not found");
        try {
            overlay(c, json::parse(in));
        } catch (const json::exception& e) {
            throw Error("invalid-config", "config file '" + file->string() + "': " + e.what());
        }
    }
    json env = json::object();
    if (const char* v = std::getenv("ARCHINT_DATA_DIR")) env["data_dir"] = v;
    if (const char* v = std::getenv("ARCHINT_HOST")) env["host"] = v;
    if (const char* v = std::getenv("ARCHINT_PORT")) env["port"] = std::string(v);
    try {
        overlay(c, env);
        overlay(c, flags);
    } catch (const std::exception& e) {
        throw Error("invalid-config", e.what());
    }
    return c;
}

}  // namespace archint
