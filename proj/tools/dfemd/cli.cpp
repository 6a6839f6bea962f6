#include "cli.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <sstream>

#include <nlohmann/json.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "dfemd/archive.hpp"
#include "dfemd/emd.hpp"
#include "dfemd/error.hpp"
#include "dfemd/grid.hpp"
#include "dfemd/landmarks.hpp"
#include "dfemd/metrics.hpp"
#include "dfemd/parallel.hpp"
#include "dfemd/pipeline.hpp"
#include "dfemd/synth.hpp"
#include "run_config.hpp"

namespace dfemd::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::shared_ptr<spdlog::logger> make_logger(std::ostream& err) {
  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
  auto logger = std::make_shared<spdlog::logger>("dfemd", sink);
  logger->set_pattern("[%l] %v");
  logger->set_level(spdlog::level::warn);
  if (const char* env = std::getenv("DFEMD_LOG")) {
    logger->set_level(spdlog::level::from_str(env));
  }
  return logger;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

std::string percent(double fraction) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(2) << fraction * 100.0;
  return s.str();
}

// ---------------------------------------------------------------- index

int cmd_index(const std::string& archive, std::ostream& out) {
  const GalleryIndex index = read_archive(archive);
  const Dims& d = index.dims();
  std::map<std::string, std::size_t> histogram;
  for (const EmbeddedItem& item : index.items()) ++histogram[item.identity];

  out << "archive: " << archive << '\n'
      << "format version: " << index.format_version() << '\n'
      << "items: " << index.size() << '\n'
      << "dims: D_img=" << d.image_dim << " H=" << d.height << " W=" << d.width
      << " C=" << d.channels << '\n'
      << "identities: " << histogram.size() << '\n'
      << "identity histogram:\n";
  for (const auto& [identity, count] : histogram) {
    out << "  " << identity << ' ' << count << '\n';
  }
  return kExitOk;
}

// ---------------------------------------------------------------- eval

struct EvalOverrides {
  std::string mode;
  std::string weighting;
  std::string solver;
  std::string gallery;
  std::string queries;
  std::string landmarks;
  std::string output_dir;
  std::optional<double> alpha;
  std::optional<std::size_t> k;
  std::optional<std::uint32_t> pool_factor;
  std::size_t threads = default_thread_count();
};

std::string format_table(Mode mode, const EvalReport& report,
                         const std::optional<double>& max_prec, std::size_t k) {
  std::ostringstream s;
  s << std::left << std::setw(12) << "mode" << std::right << std::setw(8) << "P@1"
    << std::setw(8) << "RP" << std::setw(8) << "M@R" << '\n';
  s << std::left << std::setw(12) << to_string(mode) << std::right << std::setw(8)
    << percent(report.p_at_1) << std::setw(8) << percent(report.r_precision)
    << std::setw(8) << percent(report.map_at_r) << '\n';
  if (max_prec) s << "max prec. at k=" << k << ": " << percent(*max_prec) << '\n';
  return s.str();
}

int cmd_eval(const std::string& config_path, const EvalOverrides& o, std::ostream& out,
             spdlog::logger& log) {
  RunConfig cfg = load_run_config(config_path);
  if (!o.mode.empty()) cfg.mode = parse_mode(o.mode);
  if (!o.weighting.empty()) cfg.pipeline.weighting.kind = parse_scheme(o.weighting);
  if (!o.solver.empty()) cfg.pipeline.solver = parse_solver(o.solver);
  if (!o.gallery.empty()) cfg.gallery_path = o.gallery;
  if (!o.queries.empty()) cfg.query_path = o.queries;
  if (!o.landmarks.empty()) cfg.landmarks_path = o.landmarks;
  if (!o.output_dir.empty()) cfg.output_dir = o.output_dir;
  if (o.alpha) cfg.pipeline.alpha = *o.alpha;
  if (o.k) cfg.pipeline.k = *o.k;
  if (o.pool_factor) cfg.pipeline.pool_factor = *o.pool_factor;
  validate(cfg);

  const GalleryIndex gallery = read_archive(cfg.gallery_path);
  const GalleryIndex queries = read_archive(cfg.query_path);
  if (queries.dims() != gallery.dims()) {
    throw DataError("query archive dims do not match the gallery");
  }
  LandmarkTable landmarks;
  if (cfg.landmarks_path) {
    landmarks = read_landmarks(*cfg.landmarks_path);
    cfg.pipeline.weighting.landmarks = &landmarks;
  }

  const std::size_t nq = queries.size();
  std::vector<RankingResult> results(nq);
  std::vector<double> max_prec(nq, 0.0);
  std::atomic<std::size_t> done{0};
  log.info("evaluating {} queries against {} gallery items ({} threads)", nq,
           gallery.size(), o.threads);
  parallel_for(nq, o.threads, [&](std::size_t i) {
    const EmbeddedItem& query = queries[i];
    switch (cfg.mode) {
      case Mode::Stage1:
        results[i] = stage1_rank(query, gallery);
        break;
      case Mode::TwoStage: {
        RankingResult s1 = stage1_rank(query, gallery);
        max_prec[i] = max_precision_at_k(s1, gallery, cfg.pipeline.k);
        results[i] = rerank(query, s1, gallery, cfg.pipeline);
        break;
      }
      case Mode::EmdStage1:
        results[i] = emd_stage1_rank(query, gallery, cfg.pipeline);
        break;
    }
    log.debug("query {}/{}", ++done, nq);
  });

  const EvalReport report = evaluate(results, gallery);
  std::optional<double> max_prec_mean;
  if (cfg.mode == Mode::TwoStage && nq > 0) {
    double sum = 0.0;
    for (double v : max_prec) sum += v;
    max_prec_mean = sum / static_cast<double>(nq);
  }

  json j;
  j["config"] = to_json(cfg);
  j["gallery_items"] = gallery.size();
  j["queries"] = nq;
  json metrics;
  metrics["p_at_1"] = report.p_at_1;
  metrics["r_precision"] = report.r_precision;
  metrics["map_at_r"] = report.map_at_r;
  if (max_prec_mean) metrics["max_precision_at_k"] = *max_prec_mean;
  j["metrics"] = metrics;
  json per_query = json::array();
  for (const QueryMetrics& q : report.per_query) {
    per_query.push_back({{"query_id", q.query_id},
                         {"rank_of_first_hit", q.rank_of_first_hit},
                         {"r", q.r},
                         {"r_hits", q.r_hits},
                         {"p_at_1", q.p_at_1},
                         {"r_precision", q.r_precision},
                         {"map_at_r", q.map_at_r}});
  }
  j["per_query"] = per_query;

  const std::string table = format_table(cfg.mode, report, max_prec_mean, cfg.pipeline.k);
  write_text(cfg.output_dir / "report.json", j.dump(2) + "\n");
  write_text(cfg.output_dir / "report.txt", table);
  out << table;
  return kExitOk;
}

// ---------------------------------------------------------------- flow

struct FlowOptions {
  std::string gallery;
  std::string queries;
  std::string query_id;
  std::string cand_id;
  std::string weighting = "apc";
  std::string landmarks;
  std::string solver = "sinkhorn";
  std::uint32_t pool_factor = 1;
  SinkhornConfig sinkhorn;
  std::string out_path;
  std::string pgm_dir;
  std::uint32_t pgm_scale = 16;
};

// Plain (ASCII) PGM of min-max normalized values laid out as rows x cols,
// each value drawn as a scale x scale block.
std::string format_pgm(std::span<const double> values, std::size_t rows, std::size_t cols,
                       std::uint32_t scale) {
  double lo = values.empty() ? 0.0 : values[0];
  double hi = lo;
  for (double v : values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  std::ostringstream s;
  s << "P2\n" << cols * scale << ' ' << rows * scale << "\n255\n";
  for (std::size_t r = 0; r < rows * scale; ++r) {
    for (std::size_t c = 0; c < cols * scale; ++c) {
      const double v = values[(r / scale) * cols + c / scale];
      const int level = hi > lo ? static_cast<int>(std::lround(255.0 * (v - lo) / (hi - lo))) : 0;
      s << (c == 0 ? "" : " ") << level;
    }
    s << '\n';
  }
  return s.str();
}

int cmd_flow(const FlowOptions& o, std::ostream& out) {
  if (o.pgm_scale == 0) throw UsageError("--pgm-scale must be at least 1");
  if (parse_scheme(o.weighting) == Scheme::LMK && o.landmarks.empty()) {
    throw UsageError("lmk weighting requires --landmarks");
  }
  const GalleryIndex gallery = read_archive(o.gallery);
  const GalleryIndex queries = read_archive(o.queries);
  const EmbeddedItem* query = queries.find(o.query_id);
  if (query == nullptr) throw DataError("unknown query id '" + o.query_id + "'");
  const EmbeddedItem* cand = gallery.find(o.cand_id);
  if (cand == nullptr) throw DataError("unknown candidate id '" + o.cand_id + "'");

  LandmarkTable landmarks;
  if (!o.landmarks.empty()) landmarks = read_landmarks(o.landmarks);

  PipelineConfig cfg;
  cfg.weighting = {parse_scheme(o.weighting), o.landmarks.empty() ? nullptr : &landmarks};
  cfg.solver = parse_solver(o.solver);
  cfg.pool_factor = o.pool_factor;
  cfg.sinkhorn = o.sinkhorn;
  cfg.validate();

  const EmbeddedItem pq = pool_grid(*query, cfg.pool_factor);
  const EmbeddedItem pc = pool_grid(*cand, cfg.pool_factor);
  auto [wq, wg] = weigh_pair(pq, pc, cfg.weighting);
  const TransportPlan plan =
      cfg.solver == EmdSolver::Exact ? exact_emd(wq, wg) : solve_emd(wq, wg, cfg.sinkhorn);

  const std::size_t n = plan.flow.rows();
  json flow = json::array();
  json normalized = json::array();
  for (std::size_t i = 0; i < n; ++i) {
    auto row = plan.flow.row(i);
    flow.push_back(std::vector<double>(row.begin(), row.end()));
    normalized.push_back(normalize_flow(plan, i));
  }
  json j;
  j["query_id"] = o.query_id;
  j["candidate_id"] = o.cand_id;
  j["weighting"] = std::string(to_string(cfg.weighting.kind));
  j["solver"] = std::string(to_string(cfg.solver));
  j["grid"] = {pq.patch_grid.height(), pq.patch_grid.width()};
  j["cost"] = plan.cost;
  j["converged"] = plan.converged;
  j["iterations"] = plan.iterations;
  j["flow"] = flow;
  j["argmax"] = flow_argmax(plan);
  j["normalized"] = normalized;
  j["weights_q"] = wq.weights;
  j["weights_g"] = wg.weights;
  const std::string text = j.dump(2) + "\n";
  if (o.out_path.empty()) {
    out << text;
  } else {
    write_text(o.out_path, text);
  }

  if (!o.pgm_dir.empty()) {
    const fs::path dir(o.pgm_dir);
    const std::size_t h = pq.patch_grid.height();
    const std::size_t w = pq.patch_grid.width();
    for (Scheme s : {Scheme::Uniform, Scheme::APC, Scheme::CC, Scheme::SC, Scheme::LMK}) {
      if (s == Scheme::CC && pq.image_embedding.size() != pq.patch_grid.channels()) continue;
      if (s == Scheme::LMK && (o.landmarks.empty() || !landmarks.contains(o.query_id) ||
                               !landmarks.contains(o.cand_id))) {
        continue;
      }
      auto [sq, sg] = weigh_pair(pq, pc, {s, &landmarks});
      const std::string name(to_string(s));
      write_text(dir / (name + "_query.pgm"), format_pgm(sq.weights, h, w, o.pgm_scale));
      write_text(dir / (name + "_cand.pgm"), format_pgm(sg.weights, h, w, o.pgm_scale));
    }
    std::vector<double> all;
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = normalize_flow(plan, i);
      all.insert(all.end(), row.begin(), row.end());
    }
    write_text(dir / "flow.pgm", format_pgm(all, n, n, o.pgm_scale));
  }
  return kExitOk;
}

// ---------------------------------------------------------------- synth

struct SynthOptions {
  std::string out_dir;
  synth::OcclusionConfig fixture;
  std::size_t k = 10;
};

int cmd_synth(const SynthOptions& o, std::ostream& out) {
  if (o.fixture.identities == 0 || o.fixture.items_per_identity < 2) {
    throw UsageError("synth needs at least one identity with two or more items");
  }
  if (o.fixture.height == 0 || o.fixture.width == 0 || o.fixture.channels == 0) {
    throw UsageError("synth grid dims must be positive");
  }
  const synth::OcclusionFixture fx = synth::make_occlusion_fixture(o.fixture);
  synth::Rng rng(o.fixture.seed ^ 0x9e3779b97f4a7c15ull);
  const auto landmarks = synth::make_landmarks(fx.gallery, rng);

  const fs::path dir(o.out_dir);
  fs::create_directories(dir);
  write_archive(fx.gallery, dir / "gallery.dfemd");
  write_archive(fx.queries, dir / "queries.dfemd");
  write_text(dir / "landmarks.jsonl", format_landmarks(landmarks));
  std::ostringstream conf;
  conf << "# synthetic occlusion benchmark\n"
       << "gallery = gallery.dfemd\n"
       << "queries = queries.dfemd\n"
       << "landmarks = landmarks.jsonl\n"
       << "output_dir = report\n"
       << "mode = two-stage\n"
       << "seed = " << o.fixture.seed << '\n'
       << "k = " << o.k << '\n'
       << "alpha = 0.7\n"
       << "weighting = apc\n"
       << "pool_factor = 1\n";
  write_text(dir / "eval.conf", conf.str());
  out << "wrote " << fx.gallery.size() << " gallery items and " << fx.queries.size()
      << " queries to " << dir.string() << '\n';
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Two-stage retrieval: cosine ranking + patch-wise EMD re-ranking", "dfemd"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Print help for every subcommand");

  std::string index_path;
  auto* index = app.add_subcommand("index", "Validate and summarize an embedding archive");
  index->add_option("archive", index_path, "Archive path")->required();

  std::string config_path;
  EvalOverrides eo;
  double alpha = 0.0;
  std::size_t k = 0;
  std::uint32_t pool = 0;
  auto* eval = app.add_subcommand("eval", "Rank all queries and write an evaluation report");
  eval->add_option("--config", config_path, "Run config file")->required();
  eval->add_option("--mode", eo.mode, "stage1 | two-stage | emd-stage1");
  auto* alpha_opt = eval->add_option("--alpha", alpha, "Blend weight of the EMD term");
  auto* k_opt = eval->add_option("--k", k, "Re-ranking depth");
  eval->add_option("--weighting", eo.weighting, "uniform | apc | cc | sc | lmk");
  eval->add_option("--solver", eo.solver, "sinkhorn | exact");
  auto* pool_opt = eval->add_option("--pool-factor", pool, "Patch-grid pooling factor");
  eval->add_option("--gallery", eo.gallery, "Gallery archive");
  eval->add_option("--queries", eo.queries, "Query archive");
  eval->add_option("--landmarks", eo.landmarks, "Landmarks JSON-lines");
  eval->add_option("--output-dir", eo.output_dir, "Report directory");
  eval->add_option("--threads", eo.threads, "Worker threads")->check(CLI::PositiveNumber);

  FlowOptions fo;
  auto* flow = app.add_subcommand("flow", "Solve one pair and export its flow");
  flow->add_option("--gallery", fo.gallery, "Gallery archive")->required();
  flow->add_option("--queries", fo.queries, "Query archive")->required();
  flow->add_option("--query", fo.query_id, "Query item id")->required();
  flow->add_option("--cand", fo.cand_id, "Candidate item id")->required();
  flow->add_option("--weighting", fo.weighting, "uniform | apc | cc | sc | lmk");
  flow->add_option("--landmarks", fo.landmarks, "Landmarks JSON-lines");
  flow->add_option("--solver", fo.solver, "sinkhorn | exact");
  flow->add_option("--pool-factor", fo.pool_factor, "Patch-grid pooling factor");
  flow->add_option("--epsilon", fo.sinkhorn.epsilon, "Sinkhorn regularization");
  flow->add_option("--max-iters", fo.sinkhorn.max_iters, "Sinkhorn iteration cap");
  flow->add_option("--tolerance", fo.sinkhorn.tolerance, "Sinkhorn marginal tolerance");
  flow->add_option("--out", fo.out_path, "Write JSON here instead of stdout");
  flow->add_option("--pgm-dir", fo.pgm_dir, "Write weight and flow heatmaps (PGM)");
  flow->add_option("--pgm-scale", fo.pgm_scale, "Pixels per patch in heatmaps");

  SynthOptions so;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic occlusion benchmark");
  synth_cmd->add_option("--out-dir", so.out_dir, "Output directory")->required();
  synth_cmd->add_option("--seed", so.fixture.seed, "Random seed");
  synth_cmd->add_option("--identities", so.fixture.identities, "Number of identities");
  synth_cmd->add_option("--items", so.fixture.items_per_identity, "Items per identity");
  synth_cmd->add_option("--height", so.fixture.height, "Grid height");
  synth_cmd->add_option("--width", so.fixture.width, "Grid width");
  synth_cmd->add_option("--channels", so.fixture.channels, "Patch embedding size");
  synth_cmd->add_option("--noise", so.fixture.noise, "Per-item noise level");
  synth_cmd->add_option("--k", so.k, "Re-ranking depth written to eval.conf");

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  auto log = make_logger(err);
  try {
    if (*index) return cmd_index(index_path, out);
    if (*eval) {
      if (*alpha_opt) eo.alpha = alpha;
      if (*k_opt) eo.k = k;
      if (*pool_opt) eo.pool_factor = pool;
      return cmd_eval(config_path, eo, out, *log);
    }
    if (*flow) return cmd_flow(fo, out);
    if (*synth_cmd) return cmd_synth(so, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace dfemd::cli
