#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "pecann/cli.hpp"

#ifdef __GLIBC__
#include <malloc.h>
#endif

namespace {

using pecann::cli::Settings;
using pecann::cli::UsageError;

// "key=value" pairs from repeated flags into `section.key` settings.
void put_pairs(Settings& s, const std::vector<std::string>& pairs, const std::string& section) {
  for (const auto& p : pairs) {
    const auto eq = p.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("expected key=value, got '" + p + "'");
    const std::string key = pecann::cli::trim(p.substr(0, eq));
    s[section.empty() ? key : section + "." + key] = pecann::cli::trim(p.substr(eq + 1));
  }
}

}  // namespace

int main(int argc, char** argv) {
#ifdef __GLIBC__
  // keep the allocator from returning per-epoch buffers to the system
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
  mallopt(M_TOP_PAD, 256 << 20);
#endif
  CLI::App app{"constrained neural-network PDE solver experiments"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "train one problem over seeds and strategies");
  std::string config, problem, strategy, seeds, mode, output, data, hidden, grid;
  std::optional<int> epochs, batch, progress;
  std::vector<std::string> points, sets;
  run->add_option("-c,--config", config, "INI file; flags override its values");
  run->add_option("-p,--problem", problem, "registered problem name");
  run->add_option("-s,--strategy", strategy, "mpu, cpu or apu; comma-separated for a sweep");
  run->add_option("--seeds", seeds, "e.g. 0..9 or 1,3,5");
  run->add_option("-e,--epochs", epochs, "number of epochs");
  run->add_option("--hidden", hidden, "hidden widths, e.g. 30,30,30 or 3x30");
  run->add_option("--points", points, "point count override, e.g. pde=2000 (repeatable)");
  run->add_option("--mode", mode, "expectation or pointwise");
  run->add_option("--batch-size", batch, "constraint mini-batch size (expectation mode)");
  run->add_option("-o,--output", output, "output root (default $PECANN_OUTPUT_ROOT or ./runs)");
  run->add_option("--data", data, "cavity velocity samples, CSV x,y,u,v");
  run->add_option("--grid", grid, "evaluation grid, e.g. 64x64");
  run->add_option("--set", sets, "any setting as section.key=value (repeatable)");
  run->add_option("--progress", progress, "log every N epochs to stderr");

  app.add_subcommand("list", "registered problems and their defaults");

  auto* rep = app.add_subcommand("report", "tabulate summary.json files under a directory");
  std::string report_dir;
  rep->add_option("dir", report_dir, "run output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (app.got_subcommand("list")) {
      pecann::cli::list_problems(std::cout);
      return 0;
    }
    if (app.got_subcommand("report")) return pecann::cli::report(report_dir, std::cout);

    Settings s;
    if (!config.empty()) s = pecann::cli::read_settings(config);
    put_pairs(s, sets, "");
    if (!problem.empty()) s["run.problem"] = problem;
    if (!strategy.empty()) s["run.strategy"] = strategy;
    if (!seeds.empty()) s["run.seeds"] = seeds;
    if (!mode.empty()) s["run.mode"] = mode;
    if (!output.empty()) s["run.output"] = output;
    if (!data.empty()) s["run.data"] = data;
    if (batch) s["run.batch_size"] = std::to_string(*batch);
    if (progress) s["run.progress"] = std::to_string(*progress);
    if (epochs) s["alm.epochs"] = std::to_string(*epochs);
    if (!hidden.empty()) s["network.hidden"] = hidden;
    put_pairs(s, points, "points");
    if (!grid.empty()) {
      const auto x = grid.find('x');
      if (x == std::string::npos) throw UsageError("--grid expects N0xN1, got '" + grid + "'");
      s["grid.n0"] = grid.substr(0, x);
      s["grid.n1"] = grid.substr(x + 1);
    }
    const pecann::cli::RunConfig rc = pecann::cli::resolve(s);
    return pecann::cli::run(rc, std::cerr);
  } catch (const UsageError& e) {
    std::cerr << "pecann: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "pecann: " << e.what() << '\n';
    return 1;
  }
}
