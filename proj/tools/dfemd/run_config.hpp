#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "dfemd/pipeline.hpp"

namespace dfemd::cli {

enum class Mode { Stage1, TwoStage, EmdStage1 };

std::string_view to_string(Mode mode);
Mode parse_mode(std::string_view name);

struct RunConfig {
  std::filesystem::path gallery_path;
  std::filesystem::path query_path;
  std::optional<std::filesystem::path> landmarks_path;
  std::filesystem::path output_dir = "dfemd_out";
  PipelineConfig pipeline;
  Mode mode = Mode::TwoStage;
  std::uint64_t seed = 0;
};

// Flat "key = value" text; '#' starts a comment. Relative paths are taken
// relative to the file's directory.
using KeyValues = std::map<std::string, std::string>;
KeyValues parse_key_values(const std::string& text);
KeyValues read_key_values(const std::filesystem::path& path);

// Applies one setting. Throws UsageError on unknown keys or bad values.
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value,
                   const std::filesystem::path& base_dir = {});

RunConfig load_run_config(const std::filesystem::path& path);

// Checks required paths and value ranges.
void validate(const RunConfig& cfg);

// Provenance echo for reports; excludes anything that must not influence
// output bytes (thread count).
nlohmann::ordered_json to_json(const RunConfig& cfg);

}  // namespace dfemd::cli
