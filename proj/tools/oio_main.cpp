#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "oio.h"

namespace {

struct ConfigHandle {
  oio_config_t* ptr = nullptr;
  ~ConfigHandle() { oio_config_free(ptr); }
};

struct ReportHandle {
  oio_report_t* ptr = nullptr;
  ~ReportHandle() { oio_report_free(ptr); }
};

int die(const char* verb) {
  std::fprintf(stderr, "oio %s failed: %s\n", verb, oio_last_error());
  return 1;
}

int load_config(const std::string& path, long long seed, const std::string& output_dir,
                ConfigHandle& cfg) {
  if (oio_config_from_file(path.c_str(), &cfg.ptr) != OIO_OK) return 1;
  std::string patch = "{";
  bool first = true;
  if (seed >= 0) {
    patch += "\"seed\": " + std::to_string(seed);
    first = false;
  }
  if (!output_dir.empty()) {
    if (!first) patch += ", ";
    patch += "\"output_dir\": \"" + output_dir + "\"";
    first = false;
  }
  patch += "}";
  if (!first && oio_config_override(cfg.ptr, patch.c_str()) != OIO_OK) return 1;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"online inventory optimization benchmark"};
  app.require_subcommand(1);

  std::string config_path;
  std::string output_dir;
  long long seed = -1;
  int jobs = 1;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("config", config_path, "experiment config (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", seed, "base seed (replication r uses seed + r)");
    cmd->add_option("--output", output_dir, "override the config's output directory");
  };

  CLI::App* cmd_run = app.add_subcommand("run", "replicated run with regret measurement");
  add_common(cmd_run);

  CLI::App* cmd_sweep = app.add_subcommand("sweep", "regret vs gamma on a log grid");
  add_common(cmd_sweep);
  double gamma_min = 1e-5, gamma_max = 10.0;
  int points = 25;
  cmd_sweep->add_option("--gamma-min", gamma_min, "smallest gamma")
      ->check(CLI::PositiveNumber);
  cmd_sweep->add_option("--gamma-max", gamma_max, "largest gamma")
      ->check(CLI::PositiveNumber);
  cmd_sweep->add_option("--points", points, "grid size")->check(CLI::PositiveNumber);

  CLI::App* cmd_fit = app.add_subcommand("fit", "regret growth exponent across horizons");
  add_common(cmd_fit);
  std::vector<int64_t> horizons;
  cmd_fit->add_option("--horizons", horizons, "horizons for the log-log fit")
      ->required()
      ->delimiter(',');

  CLI11_PARSE(app, argc, argv);

  ConfigHandle cfg;
  if (load_config(config_path, seed, output_dir, cfg) != 0) return die("config");

  ReportHandle report;
  if (cmd_run->parsed()) {
    if (oio_run(cfg.ptr, jobs, 1, &report.ptr) != OIO_OK) return die("run");
  } else if (cmd_sweep->parsed()) {
    if (oio_sweep(cfg.ptr, gamma_min, gamma_max, points, jobs, &report.ptr) != OIO_OK)
      return die("sweep");
  } else {
    if (oio_fit(cfg.ptr, horizons.data(), static_cast<int32_t>(horizons.size()), jobs,
                &report.ptr) != OIO_OK)
      return die("fit");
  }
  std::printf("%s\n", oio_report_json(report.ptr));
  return 0;
}
