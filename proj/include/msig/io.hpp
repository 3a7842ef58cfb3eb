#pragma once

#include <stdexcept>
#include <string>

#include <json.hpp>

#include "msig/diffusion.hpp"

namespace msig {

// Malformed or inconsistent input (bad CSV, bad config, unknown keys).
struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Filesystem failures (missing file, unwritable output).
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Long CSV with header "path,t,x"; path ids are contiguous and 1-based, rows of
// one path are consecutive with strictly increasing t, and all paths share t0.
SamplePathSet read_paths_csv(const std::string& filename);
void write_paths_csv(const std::string& filename, const SamplePathSet& sps);

nlohmann::json load_config(const std::string& filename);

// Rejects keys outside `allowed`; `where` names the object in the message.
void reject_unknown_keys(const nlohmann::json& obj, const std::vector<std::string>& allowed,
                         const std::string& where);

// Shortest decimal form that parses back to the identical double.
std::string format_double(double v);

// Serializes with format_double for numbers so estimates survive round-trips.
std::string json_to_text(const nlohmann::json& j, int indent = 2);
void write_json(const std::string& filename, const nlohmann::json& j);
void write_text(const std::string& filename, const std::string& text);

std::string iso8601_utc_now();

}  // namespace msig
