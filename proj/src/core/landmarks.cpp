#include "dfemd/landmarks.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dfemd/error.hpp"

namespace dfemd {

void validate_landmarks(const LandmarkSet& set) {
  if (set.keypoints.empty()) {
    throw DataError("landmarks for '" + set.item_id + "': no keypoints");
  }
  for (std::size_t i = 0; i < set.keypoints.size(); ++i) {
    const Keypoint& kp = set.keypoints[i];
    const bool inside = std::isfinite(kp.x) && std::isfinite(kp.y) && kp.x >= 0.0 &&
                        kp.x <= 1.0 && kp.y >= 0.0 && kp.y <= 1.0;
    if (!inside) {
      throw DataError("landmarks for '" + set.item_id + "': keypoint " +
                      std::to_string(i) + " outside [0,1]^2");
    }
  }
}

LandmarkTable parse_landmarks(std::istream& in) {
  LandmarkTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    LandmarkSet set;
    try {
      const auto j = nlohmann::json::parse(line);
      set.item_id = j.at("item_id").get<std::string>();
      for (const auto& kp : j.at("keypoints")) {
        if (!kp.is_array() || kp.size() != 2) {
          throw DataError("keypoint is not an [x, y] pair");
        }
        set.keypoints.push_back({kp[0].get<double>(), kp[1].get<double>()});
      }
    } catch (const nlohmann::json::exception& e) {
      throw DataError("landmarks line " + std::to_string(line_no) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError("landmarks line " + std::to_string(line_no) + ": " + e.what());
    }
    validate_landmarks(set);
    std::string id = set.item_id;
    if (!table.emplace(id, std::move(set)).second) {
      throw DataError("landmarks line " + std::to_string(line_no) +
                      ": duplicate item_id '" + id + "'");
    }
  }
  return table;
}

LandmarkTable read_landmarks(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open landmarks '" + path.string() + "'");
  return parse_landmarks(in);
}

std::string format_landmarks(const std::vector<LandmarkSet>& sets) {
  std::ostringstream out;
  for (const LandmarkSet& set : sets) {
    nlohmann::json j;
    j["item_id"] = set.item_id;
    j["keypoints"] = nlohmann::json::array();
    for (const Keypoint& kp : set.keypoints) j["keypoints"].push_back({kp.x, kp.y});
    out << j.dump() << '\n';
  }
  return out.str();
}

}  // namespace dfemd
