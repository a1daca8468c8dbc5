#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "rfbg/error.hpp"
#include "rfbg/experiment.hpp"
#include "rfbg/sim.hpp"

using nlohmann::json;

namespace {

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw rfbg::Error("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw rfbg::Error(path + ": invalid JSON: " + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online baseline RSS calibration for RF sensor networks"};
  app.require_subcommand(1);

  std::string spec_path, out_dir, grid_path, scenario_path, trace_out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> ensemble;
  std::size_t calibration_frames = 300;

  auto* run = app.add_subcommand("run", "evaluate the configured algorithms and write CSV reports");
  run->add_option("--spec", spec_path, "experiment spec (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "output directory (overrides out_dir)");
  run->add_option("--seed", seed, "first ensemble seed");
  run->add_option("--ensemble", ensemble, "number of ensemble members");

  auto* sw = app.add_subcommand("sweep", "grid search over parameters");
  sw->add_option("--spec", spec_path, "experiment spec (JSON)")->required()->check(CLI::ExistingFile);
  sw->add_option("--grid", grid_path, "parameter grid (JSON)")->required()->check(CLI::ExistingFile);
  sw->add_option("--out", out_dir, "output directory (overrides out_dir)");

  auto* sim = app.add_subcommand("simulate", "write a synthetic measurement trace");
  sim->add_option("--scenario", scenario_path, "scenario (JSON)")->required()->check(CLI::ExistingFile);
  sim->add_option("--out", trace_out, "trace path (JSONL)")->required();
  sim->add_option("--seed", seed, "scenario seed");
  sim->add_option("--calibration-frames", calibration_frames, "frames in the empty-room reference");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sim) {
      json j = read_json(scenario_path);
      if (seed) j["seed"] = *seed;
      const auto config = rfbg::scenario_from_json(j);
      const auto errs = config.validate();
      if (!errs.empty()) {
        std::cerr << "error: invalid scenario:\n";
        for (const auto& e : errs) std::cerr << "  - " << e << '\n';
        return 2;
      }
      rfbg::simulate_to_files(config, trace_out, calibration_frames);
      return 0;
    }

    auto spec = rfbg::load_spec(spec_path);
    if (!out_dir.empty()) spec.out_dir = out_dir;
    if (seed || ensemble) {
      const auto current = spec.member_seeds();
      const std::uint64_t first = seed ? *seed : (current.empty() ? 1 : current.front());
      const std::size_t count = ensemble ? *ensemble : current.size();
      spec.seeds.clear();
      for (std::size_t i = 0; i < count; ++i) spec.seeds.push_back(first + i);
      spec.ensemble = count;
    }
    const auto errs = spec.validate();
    if (!errs.empty()) {
      std::cerr << "error: invalid experiment spec:\n";
      for (const auto& e : errs) std::cerr << "  - " << e << '\n';
      return 2;
    }

    if (*run) {
      const auto result = rfbg::run(spec);
      for (auto alg : spec.algorithms) {
        std::cout << rfbg::to_string(alg) << " median final error "
                  << rfbg::median_final_error(result, alg) << " dBm\n";
      }
      return 0;
    }

    const auto grid = read_json(grid_path);
    const auto result = rfbg::sweep(spec, grid);
    rfbg::write_sweep_report(spec, result);
    for (const auto& [alg, idx] : result.best) {
      std::cout << rfbg::to_string(alg) << " best point " << idx << ':';
      for (const auto& [k, v] : result.points[idx].values) std::cout << ' ' << k << '=' << v.dump();
      std::cout << " (" << result.points[idx].median_error.at(alg) << " dBm)\n";
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
