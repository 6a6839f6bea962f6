#include "run_config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "dfemd/error.hpp"

namespace dfemd::cli {

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::Stage1: return "stage1";
    case Mode::TwoStage: return "two-stage";
    case Mode::EmdStage1: return "emd-stage1";
  }
  return "unknown";
}

Mode parse_mode(std::string_view name) {
  for (Mode m : {Mode::Stage1, Mode::TwoStage, Mode::EmdStage1}) {
    if (name == to_string(m)) return m;
  }
  throw UsageError("unknown mode '" + std::string(name) +
                   "' (expected stage1|two-stage|emd-stage1)");
}

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* begin = value.data();
  const char* end = begin + value.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  if (ec != std::errc() || ptr != end) {
    throw UsageError("invalid value '" + value + "' for " + key);
  }
  return out;
}

// GCC 11 lacks floating-point from_chars in some configurations.
double parse_double(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != value.size()) {
    throw UsageError("invalid value '" + value + "' for " + key);
  }
  return out;
}

std::filesystem::path resolve(const std::filesystem::path& base,
                              const std::string& value) {
  std::filesystem::path p(value);
  if (p.is_relative() && !base.empty()) p = base / p;
  return p.lexically_normal();
}

}  // namespace

KeyValues parse_key_values(const std::string& text) {
  KeyValues out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw UsageError("config line " + std::to_string(line_no) + ": empty key");
    }
    out[std::move(key)] = std::move(value);
  }
  return out;
}

KeyValues read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_key_values(text.str());
}

void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value,
                   const std::filesystem::path& base_dir) {
  PipelineConfig& p = cfg.pipeline;
  if (key == "gallery") {
    cfg.gallery_path = resolve(base_dir, value);
  } else if (key == "queries") {
    cfg.query_path = resolve(base_dir, value);
  } else if (key == "landmarks") {
    if (value.empty()) {
      cfg.landmarks_path.reset();
    } else {
      cfg.landmarks_path = resolve(base_dir, value);
    }
  } else if (key == "output_dir") {
    cfg.output_dir = resolve(base_dir, value);
  } else if (key == "mode") {
    cfg.mode = parse_mode(value);
  } else if (key == "seed") {
    cfg.seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "k") {
    p.k = parse_number<std::size_t>(key, value);
  } else if (key == "alpha") {
    p.alpha = parse_double(key, value);
  } else if (key == "weighting") {
    p.weighting.kind = parse_scheme(value);
  } else if (key == "pool_factor") {
    p.pool_factor = parse_number<std::uint32_t>(key, value);
  } else if (key == "solver") {
    p.solver = parse_solver(value);
  } else if (key == "sinkhorn.epsilon") {
    p.sinkhorn.epsilon = parse_double(key, value);
  } else if (key == "sinkhorn.max_iters") {
    p.sinkhorn.max_iters = parse_number<int>(key, value);
  } else if (key == "sinkhorn.tolerance") {
    p.sinkhorn.tolerance = parse_double(key, value);
  } else {
    throw UsageError("unknown config key '" + key + "'");
  }
}

RunConfig load_run_config(const std::filesystem::path& path) {
  RunConfig cfg;
  const auto base = path.parent_path();
  for (const auto& [key, value] : read_key_values(path)) {
    apply_setting(cfg, key, value, base);
  }
  return cfg;
}

void validate(const RunConfig& cfg) {
  if (cfg.gallery_path.empty()) throw UsageError("config is missing 'gallery'");
  if (cfg.query_path.empty()) throw UsageError("config is missing 'queries'");
  if (cfg.pipeline.weighting.kind == Scheme::LMK && !cfg.landmarks_path) {
    throw UsageError("weighting = lmk requires 'landmarks'");
  }
  cfg.pipeline.validate();
}

nlohmann::ordered_json to_json(const RunConfig& cfg) {
  const PipelineConfig& p = cfg.pipeline;
  nlohmann::ordered_json j;
  j["gallery"] = cfg.gallery_path.generic_string();
  j["queries"] = cfg.query_path.generic_string();
  j["landmarks"] = cfg.landmarks_path ? nlohmann::ordered_json(cfg.landmarks_path->generic_string())
                                      : nlohmann::ordered_json(nullptr);
  j["mode"] = std::string(to_string(cfg.mode));
  j["seed"] = cfg.seed;
  j["k"] = p.k;
  j["alpha"] = p.alpha;
  j["weighting"] = std::string(dfemd::to_string(p.weighting.kind));
  j["pool_factor"] = p.pool_factor;
  j["solver"] = std::string(dfemd::to_string(p.solver));
  j["sinkhorn"] = {{"epsilon", p.sinkhorn.epsilon},
                   {"max_iters", p.sinkhorn.max_iters},
                   {"tolerance", p.sinkhorn.tolerance}};
  return j;
}

}  // namespace dfemd::cli
