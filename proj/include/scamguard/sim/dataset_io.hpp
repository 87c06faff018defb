#pragma once

// JSON-lines dataset files. Calls are {"event": CallEvent, "profile": NumberProfile};
// ads are AdCapture objects. One record per line, '\n' terminated.

#include <filesystem>
#include <string>
#include <vector>

#include "scamguard/features.hpp"

namespace scamguard::sim {

void write_calls_jsonl(const std::filesystem::path& path, const std::vector<ProfiledCall>& calls);
std::vector<ProfiledCall> read_calls_jsonl(const std::filesystem::path& path);

void write_ads_jsonl(const std::filesystem::path& path, const std::vector<AdCapture>& captures);
std::vector<AdCapture> read_ads_jsonl(const std::filesystem::path& path);

/// "run-<first 8 hex of sha256(config dump)>-s<seed>".
std::string run_dir_name(const Json& config, std::uint64_t seed);

/// Whole-file helpers; throw Error(Io) on failure. write_text replaces the
/// file atomically through a temporary sibling.
std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view text);

}  // namespace scamguard::sim
