#pragma once

#include <filesystem>
#include <istream>
#include <string>
#include <unordered_map>
#include <vector>

#include "dfemd/types.hpp"

namespace dfemd {

using LandmarkTable = std::unordered_map<std::string, LandmarkSet>;

// Throws DataError on an empty keypoint list or coordinates outside [0,1].
void validate_landmarks(const LandmarkSet& set);

// JSON-lines: one {"item_id": str, "keypoints": [[x,y], ...]} per line.
// Blank lines are skipped; duplicate item ids are rejected.
LandmarkTable parse_landmarks(std::istream& in);
LandmarkTable read_landmarks(const std::filesystem::path& path);
std::string format_landmarks(const std::vector<LandmarkSet>& sets);

}  // namespace dfemd
