#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "rfbg/baseline.hpp"
#include "rfbg/bgsub.hpp"
#include "rfbg/frames.hpp"
#include "rfbg/sim.hpp"
#include "rfbg/topology.hpp"
#include "rfbg/tracker.hpp"

namespace rfbg {

struct TrackingSpec {
  bool enabled = false;
  std::size_t realizations = 100;
  std::uint64_t seed = 1;
  TrackerParams params;
};

// Everything `run` needs. Either `scenario` (simulated input) or
// `trace_path` + `topology_path` (recorded input) is set, never both.
struct ExperimentSpec {
  std::optional<nlohmann::json> scenario;
  std::optional<std::string> trace_path;
  std::optional<std::string> topology_path;
  std::optional<std::string> truth_path;
  std::optional<std::string> reference_path;
  std::vector<Algorithm> algorithms;
  std::string preset = "outdoor";
  nlohmann::json overrides = nlohmann::json::object();  // {"*": {...}, "TBM": {...}}
  std::string out_dir = "out";
  std::size_t ensemble = 1;
  std::vector<std::uint64_t> seeds;  // overrides `ensemble` when non-empty
  std::string reference_source = "calibration";  // or "truth" for simulated input
  std::size_t calibration_frames = 300;
  std::optional<PartitionParams> partition;
  TrackingSpec tracking;
  bool benchmark = false;
  std::size_t benchmark_repeats = 3;
  bool dump_labels = false;
  std::size_t sweep_budget = 10000;

  std::vector<std::uint64_t> member_seeds() const;
  // All problems at once, including per-algorithm parameter violations.
  std::vector<std::string> validate() const;
};

// Relative paths inside a spec file resolve against `base_dir`.
ExperimentSpec spec_from_json(const nlohmann::json& j, const std::string& base_dir = "");
nlohmann::json spec_to_json(const ExperimentSpec& spec);

// Every top-level key K may be overridden by environment variable PREFIX+upper(K);
// values parse as JSON, falling back to a plain string.
nlohmann::json apply_env_overrides(nlohmann::json j, const std::string& prefix,
                                   const std::function<const char*(const char*)>& getenv_fn);
inline constexpr const char* kEnvPrefix = "RFBG_";

ExperimentSpec load_spec(const std::string& path, bool use_env = true);

std::map<Algorithm, AlgorithmParams> resolve_params(const ExperimentSpec& spec);

// One evaluation input: frames plus what they are scored against.
struct Dataset {
  NetworkTopology topology;
  std::vector<Frame> frames;
  std::vector<double> reference;                 // R-tilde_B, NaN where unknown
  std::vector<std::optional<Point>> truth;       // walker per frame (may be empty)
  std::optional<std::vector<double>> true_baseline;
};

Dataset make_dataset(const ExperimentSpec& spec, std::uint64_t seed);
Dataset dataset_from_scenario(const ScenarioConfig& config, const std::string& reference_source,
                              std::size_t calibration_frames);

struct AlgorithmRun {
  Algorithm algorithm = Algorithm::MA;
  BaselineEstimate estimate;
  std::vector<double> error_curve;  // RMS error after each frame (NaN if undefined)
  std::vector<double> coverage;     // fraction of links with an estimate
  double final_error = 0.0;
  std::vector<LabelField> labels;   // kept on request
  std::vector<double> frame_ms;     // kept on request
};

AlgorithmRun run_algorithm(Algorithm algorithm, const AlgorithmParams& params,
                           const Dataset& data, std::optional<PartitionParams> partition,
                           bool keep_labels = false, bool time_frames = false);

struct MemberResult {
  std::uint64_t seed = 0;
  std::vector<AlgorithmRun> runs;  // in spec algorithm order
};

struct RuntimeStats {
  Algorithm algorithm = Algorithm::MA;
  std::size_t frames = 0;
  double mean_ms = 0.0;
  double max_ms = 0.0;
};

struct TrackingRow {
  std::string source;  // "reference", "truth", or an algorithm name
  std::vector<TrackResult> results;
  TrackingSummary summary;
};

struct RunResult {
  std::map<Algorithm, AlgorithmParams> params;
  std::vector<MemberResult> members;
  std::vector<RuntimeStats> runtime;
  std::vector<TrackingRow> tracking;
  std::optional<NetworkTopology> topology;  // of the first member
};

// Pure evaluation, no files written.
RunResult evaluate(const ExperimentSpec& spec);

// Median over members of the final error for one algorithm.
double median_final_error(const RunResult& result, Algorithm algorithm);

// Per-frame timing of each algorithm on one dataset; warm-up frames (the first
// N) are excluded. The best (lowest-mean) of `repeats` passes is kept.
std::vector<RuntimeStats> benchmark(const std::vector<Algorithm>& algorithms,
                                    const std::map<Algorithm, AlgorithmParams>& params,
                                    const Dataset& data, std::optional<PartitionParams> partition,
                                    std::size_t repeats);

// Evaluates and writes the report files into spec.out_dir.
RunResult run(const ExperimentSpec& spec);
void write_report(const ExperimentSpec& spec, const RunResult& result);

// Parameter sweep. Grid keys: "<ALG or *>.<param>" for algorithm parameters,
// "scenario.<key>" for scenario fields; values are arrays.
struct SweepPoint {
  std::map<std::string, nlohmann::json> values;
  std::map<Algorithm, double> median_error;
};

struct SweepResult {
  std::vector<std::string> keys;
  std::vector<SweepPoint> points;
  std::map<Algorithm, std::size_t> best;  // point index per algorithm
};

std::size_t grid_size(const nlohmann::json& grid);
SweepResult sweep(const ExperimentSpec& spec, const nlohmann::json& grid);
void write_sweep_report(const ExperimentSpec& spec, const SweepResult& result);

// Simulates a scenario and writes the trace plus sidecars next to it:
// <stem>.truth.csv, <stem>.baseline.csv (true R_B), <stem>.reference.csv
// (calibration mean) and <stem>.topology.json.
void simulate_to_files(const ScenarioConfig& config, const std::string& trace_path,
                       std::size_t calibration_frames = 300);

}  // namespace rfbg
