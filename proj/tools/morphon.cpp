// morphon: minimum-compliance topology optimization with online neural
// synthetic gradients.
//
//   morphon run     [--config FILE] [--out DIR] [--seed N] [--mode standard|onsg]
//   morphon compare [--config FILE] [--out DIR] [--seed N]
//
// MORPHON_THREADS caps internal parallelism.

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "json.hpp"
#include "morphon/config.hpp"
#include "morphon/driver.hpp"
#include "morphon/io.hpp"

namespace {

struct Options {
  std::string config;
  std::string out = "results";
  std::optional<std::uint64_t> seed;
  std::string mode;
  bool quiet = false;
};

morphon::RunConfig resolve(const Options& opt) {
  auto cfg = opt.config.empty() ? morphon::parse_config_text("", "<defaults>")
                                 : morphon::parse_config(opt.config);
  if (opt.seed) cfg.seed = *opt.seed;
  if (!opt.mode.empty()) cfg.mode = morphon::parse_mode(opt.mode);
  cfg.validate();
  return cfg;
}

morphon::IterationCallback progress(bool quiet, const char* label) {
  if (quiet) return {};
  return [label](const morphon::EvaluationRecord& r) {
    std::fprintf(stderr, "[%s] it %4d  J %-14.6g vol %.5f  %-9s %.3fs\n", label, r.iteration, r.objective,
                 r.volume_fraction, morphon::to_string(r.gradient_kind), r.wall_time);
  };
}

morphon::RunHistory run_and_write(const morphon::RunConfig& cfg, const std::string& dir, bool quiet) {
  try {
    auto history = morphon::run(cfg, progress(quiet, morphon::to_string(cfg.mode)));
    morphon::write_run_outputs(cfg, history, dir);
    return history;
  } catch (morphon::RunFailure& failure) {
    // Keep what was produced for diagnosis.
    if (!failure.history.records.empty()) {
      std::filesystem::create_directories(dir);
      morphon::export_history(failure.history, (std::filesystem::path(dir) / "history.csv").string());
      morphon::write_metadata(cfg, failure.history, (std::filesystem::path(dir) / "metadata.json").string());
    }
    throw;
  }
}

int cmd_run(const Options& opt) {
  const auto cfg = resolve(opt);
  const auto history = run_and_write(cfg, opt.out, opt.quiet);
  std::printf("mode %s  final objective %.9f  fine solves %d  wall %.3f s  -> %s\n", morphon::to_string(cfg.mode),
              history.final_objective(), history.fine_solves, history.total_wall_time, opt.out.c_str());
  return 0;
}

int cmd_compare(const Options& opt) {
  auto cfg = resolve(opt);
  namespace fs = std::filesystem;
  cfg.mode = morphon::Mode::standard;
  cfg.validate();
  const auto std_hist = run_and_write(cfg, (fs::path(opt.out) / "standard").string(), opt.quiet);
  cfg.mode = morphon::Mode::onsg;
  cfg.validate();
  const auto onsg_hist = run_and_write(cfg, (fs::path(opt.out) / "onsg").string(), opt.quiet);

  const double j_std = std_hist.final_objective();
  const double j_onsg = onsg_hist.final_objective();
  const double diff_pct = 100.0 * (j_onsg - j_std) / j_std;
  const double wall_ratio = std_hist.total_wall_time / onsg_hist.total_wall_time;

  nlohmann::json summary = {
      {"final_objective_standard", j_std},
      {"final_objective_onsg", j_onsg},
      {"objective_difference_pct", diff_pct},
      {"fine_solves_standard", std_hist.fine_solves},
      {"fine_solves_onsg", onsg_hist.fine_solves},
      {"wall_time_standard_s", std_hist.total_wall_time},
      {"wall_time_onsg_s", onsg_hist.total_wall_time},
      {"wall_clock_ratio", wall_ratio},
  };
  std::ofstream(fs::path(opt.out) / "summary.json") << summary.dump(2) << "\n";
  std::printf("standard  J = %.9f  fine solves %d  wall %.3f s\n", j_std, std_hist.fine_solves,
              std_hist.total_wall_time);
  std::printf("onsg      J = %.9f  fine solves %d  wall %.3f s\n", j_onsg, onsg_hist.fine_solves,
              onsg_hist.total_wall_time);
  std::printf("difference %+.4f %%  speedup %.3fx\n", diff_pct, wall_ratio);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Minimum-compliance topology optimization with online neural synthetic gradients"};
  app.require_subcommand(1);
  Options opt;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config, "Flat key = value config file")->check(CLI::ExistingFile);
    sub->add_option("--out", opt.out, "Output directory")->capture_default_str();
    sub->add_option("--seed", opt.seed, "Override the config seed");
    sub->add_flag("-q,--quiet", opt.quiet, "No per-iteration progress on stderr");
  };
  auto* run = app.add_subcommand("run", "Run one optimization and write history, density and metadata");
  add_common(run);
  run->add_option("--mode", opt.mode, "Override the config mode")->check(CLI::IsMember({"standard", "onsg"}));
  auto* compare = app.add_subcommand("compare", "Run standard then onsg on one config and summarize");
  add_common(compare);

  if (argc <= 1) {
    std::cerr << app.help();
    return 2;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }
  try {
    if (run->parsed()) return cmd_run(opt);
    return cmd_compare(opt);
  } catch (const std::exception& e) {
    std::cerr << "morphon: error: " << e.what() << "\n";
    return 1;
  }
}
