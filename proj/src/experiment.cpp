#include "rfbg/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "rfbg/parallel.hpp"

namespace rfbg {

using json = nlohmann::json;
namespace fs = std::filesystem;

std::vector<std::uint64_t> ExperimentSpec::member_seeds() const {
  if (!seeds.empty()) return seeds;
  std::uint64_t base = 1;
  if (scenario && scenario->contains("seed")) base = (*scenario)["seed"].get<std::uint64_t>();
  std::vector<std::uint64_t> out;
  for (std::size_t i = 0; i < ensemble; ++i) out.push_back(base + i);
  return out;
}

std::vector<std::string> ExperimentSpec::validate() const {
  std::vector<std::string> errs;
  if (algorithms.empty()) errs.emplace_back("at least one algorithm is required");
  if (scenario.has_value() == trace_path.has_value()) {
    errs.emplace_back("exactly one of 'scenario' and 'trace' must be given");
  }
  if (trace_path && !topology_path) errs.emplace_back("'trace' input requires 'topology'");
  if (trace_path && !reference_path) errs.emplace_back("'trace' input requires 'reference'");
  if (!is_known_preset(preset)) errs.emplace_back("unknown preset '" + preset + "'");
  if (ensemble == 0 && seeds.empty()) errs.emplace_back("ensemble must be >= 1");
  if (reference_source != "calibration" && reference_source != "truth") {
    errs.emplace_back("reference_source must be 'calibration' or 'truth'");
  }
  if (scenario && !reference_path && reference_source == "calibration" && calibration_frames == 0) {
    errs.emplace_back("calibration_frames must be >= 1");
  }
  if (tracking.enabled) {
    if (tracking.realizations == 0) errs.emplace_back("tracking.realizations must be >= 1");
    if (tracking.params.particles == 0) errs.emplace_back("tracking.particles must be >= 1");
    if (!(tracking.params.temperature > 0.0)) errs.emplace_back("tracking.temperature must be > 0");
    if (trace_path && !truth_path) errs.emplace_back("tracking on a recorded trace requires 'truth'");
  }
  if (is_known_preset(preset)) {
    try {
      for (const auto& [alg, p] : resolve_params(*this)) {
        for (const auto& e : p.validate()) errs.push_back(std::string(to_string(alg)) + ": " + e);
      }
    } catch (const Error& e) {
      errs.emplace_back(e.what());
    }
  }
  if (scenario) {
    try {
      for (const auto& e : scenario_from_json(*scenario).validate()) errs.push_back("scenario: " + e);
    } catch (const Error& e) {
      errs.emplace_back(e.what());
    }
  }
  return errs;
}

namespace {

std::string resolve_path(const std::string& p, const std::string& base) {
  if (p.empty() || base.empty() || fs::path(p).is_absolute()) return p;
  return (fs::path(base) / p).string();
}

TrackerParams tracker_params_from_json(const json& j, TrackerParams p) {
  for (const auto& [key, v] : j.items()) {
    if (key == "enabled" || key == "realizations" || key == "seed") continue;
    if (key == "particles") {
      p.particles = v.get<std::size_t>();
    } else if (key == "ellipse_width_m") {
      p.ellipse_width_m = v.get<double>();
    } else if (key == "noise_floor_db") {
      p.noise_floor_db = v.get<double>();
    } else if (key == "temperature") {
      p.temperature = v.get<double>();
    } else if (key == "velocity_noise") {
      p.velocity_noise = v.get<double>();
    } else if (key == "position_noise_m") {
      p.position_noise_m = v.get<double>();
    } else if (key == "max_speed_mps") {
      p.max_speed_mps = v.get<double>();
    } else if (key == "frame_period_s") {
      p.frame_period_s = v.get<double>();
    } else if (key == "lost_threshold_m") {
      p.lost_threshold_m = v.get<double>();
    } else if (key == "lost_fraction") {
      p.lost_fraction = v.get<double>();
    } else if (key == "burn_in_frames") {
      p.burn_in_frames = v.get<std::size_t>();
    } else {
      throw Error("unknown tracking key '" + key + "'");
    }
  }
  return p;
}

json tracker_params_to_json(const TrackingSpec& t) {
  json j{{"enabled", t.enabled},
         {"realizations", t.realizations},
         {"seed", t.seed},
         {"particles", t.params.particles},
         {"ellipse_width_m", t.params.ellipse_width_m},
         {"noise_floor_db", t.params.noise_floor_db},
         {"temperature", t.params.temperature},
         {"velocity_noise", t.params.velocity_noise},
         {"position_noise_m", t.params.position_noise_m},
         {"max_speed_mps", t.params.max_speed_mps},
         {"frame_period_s", t.params.frame_period_s},
         {"lost_fraction", t.params.lost_fraction},
         {"burn_in_frames", t.params.burn_in_frames}};
  if (t.params.lost_threshold_m) j["lost_threshold_m"] = *t.params.lost_threshold_m;
  return j;
}

}  // namespace

ExperimentSpec spec_from_json(const json& j, const std::string& base_dir) {
  if (!j.is_object()) throw Error("experiment spec must be a JSON object");
  ExperimentSpec s;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "scenario") {
        if (v.is_string()) {
          std::ifstream in(resolve_path(v.get<std::string>(), base_dir));
          if (!in) throw Error("cannot open scenario file " + v.get<std::string>());
          s.scenario = json::parse(in);
        } else {
          s.scenario = v;
        }
      } else if (key == "trace") {
        s.trace_path = resolve_path(v.get<std::string>(), base_dir);
      } else if (key == "topology") {
        s.topology_path = resolve_path(v.get<std::string>(), base_dir);
      } else if (key == "truth") {
        s.truth_path = resolve_path(v.get<std::string>(), base_dir);
      } else if (key == "reference") {
        s.reference_path = resolve_path(v.get<std::string>(), base_dir);
      } else if (key == "algorithms") {
        for (const auto& a : v) s.algorithms.push_back(parse_algorithm(a.get<std::string>()));
      } else if (key == "preset") {
        s.preset = v.get<std::string>();
      } else if (key == "overrides") {
        s.overrides = v;
      } else if (key == "out_dir") {
        s.out_dir = v.get<std::string>();
      } else if (key == "ensemble") {
        s.ensemble = v.get<std::size_t>();
      } else if (key == "seeds") {
        s.seeds = v.get<std::vector<std::uint64_t>>();
      } else if (key == "reference_source") {
        s.reference_source = v.get<std::string>();
      } else if (key == "calibration_frames") {
        s.calibration_frames = v.get<std::size_t>();
      } else if (key == "partition") {
        s.partition = PartitionParams{v.at("cell_width").get<double>(),
                                      v.value("cell_height", v.at("cell_width").get<double>())};
      } else if (key == "tracking") {
        s.tracking.enabled = v.value("enabled", true);
        s.tracking.realizations = v.value("realizations", s.tracking.realizations);
        s.tracking.seed = v.value("seed", s.tracking.seed);
        s.tracking.params = tracker_params_from_json(v, s.tracking.params);
      } else if (key == "benchmark") {
        s.benchmark = v.get<bool>();
      } else if (key == "benchmark_repeats") {
        s.benchmark_repeats = v.get<std::size_t>();
      } else if (key == "dump_labels") {
        s.dump_labels = v.get<bool>();
      } else if (key == "sweep_budget") {
        s.sweep_budget = v.get<std::size_t>();
      } else {
        throw Error("unknown spec key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw Error(std::string("bad spec value: ") + e.what());
  }
  return s;
}

json spec_to_json(const ExperimentSpec& s) {
  json j;
  if (s.scenario) j["scenario"] = *s.scenario;
  if (s.trace_path) j["trace"] = *s.trace_path;
  if (s.topology_path) j["topology"] = *s.topology_path;
  if (s.truth_path) j["truth"] = *s.truth_path;
  if (s.reference_path) j["reference"] = *s.reference_path;
  j["algorithms"] = json::array();
  for (auto a : s.algorithms) j["algorithms"].push_back(std::string(to_string(a)));
  j["preset"] = s.preset;
  j["overrides"] = s.overrides;
  j["out_dir"] = s.out_dir;
  j["ensemble"] = s.ensemble;
  j["seeds"] = s.member_seeds();
  j["reference_source"] = s.reference_source;
  j["calibration_frames"] = s.calibration_frames;
  if (s.partition) {
    j["partition"] = {{"cell_width", s.partition->cell_width},
                      {"cell_height", s.partition->cell_height}};
  }
  j["tracking"] = tracker_params_to_json(s.tracking);
  j["benchmark"] = s.benchmark;
  j["benchmark_repeats"] = s.benchmark_repeats;
  j["dump_labels"] = s.dump_labels;
  j["sweep_budget"] = s.sweep_budget;
  return j;
}

json apply_env_overrides(json j, const std::string& prefix,
                         const std::function<const char*(const char*)>& getenv_fn) {
  static const char* kKeys[] = {"scenario",  "trace",          "topology",         "truth",
                                "reference", "algorithms",     "preset",           "overrides",
                                "out_dir",   "ensemble",       "seeds",            "reference_source",
                                "calibration_frames", "partition", "tracking",     "benchmark",
                                "benchmark_repeats",  "dump_labels", "sweep_budget"};
  for (const char* key : kKeys) {
    std::string var = prefix;
    for (const char* c = key; *c; ++c) var += static_cast<char>(std::toupper(static_cast<unsigned char>(*c)));
    const char* value = getenv_fn(var.c_str());
    if (!value) continue;
    try {
      j[key] = json::parse(value);
    } catch (const json::exception&) {
      j[key] = std::string(value);
    }
  }
  return j;
}

ExperimentSpec load_spec(const std::string& path, bool use_env) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open spec file " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error("spec " + path + ": invalid JSON: " + e.what());
  }
  if (use_env) j = apply_env_overrides(std::move(j), kEnvPrefix, [](const char* n) { return std::getenv(n); });
  return spec_from_json(j, fs::path(path).parent_path().string());
}

std::map<Algorithm, AlgorithmParams> resolve_params(const ExperimentSpec& spec) {
  if (!spec.overrides.is_object()) throw Error("'overrides' must be an object");
  for (const auto& [key, v] : spec.overrides.items()) {
    if (key != "*") parse_algorithm(key);
  }
  std::map<Algorithm, AlgorithmParams> out;
  for (auto alg : spec.algorithms) {
    AlgorithmParams p = preset_params(spec.preset, alg);
    if (spec.overrides.contains("*")) p = params_from_json(spec.overrides["*"], p);
    for (const auto& [key, v] : spec.overrides.items()) {
      if (key != "*" && parse_algorithm(key) == alg) p = params_from_json(v, p);
    }
    out[alg] = p;
  }
  return out;
}

Dataset dataset_from_scenario(const ScenarioConfig& config, const std::string& reference_source,
                              std::size_t calibration_frames) {
  auto sim = simulate(config);
  Dataset d{sim.topology, assemble_frames(sim.topology, sim.trace), {}, sim.truth.walker,
            sim.truth.baseline};
  if (reference_source == "truth") {
    d.reference = sim.truth.baseline;
  } else {
    auto cal = simulate_calibration(config, calibration_frames);
    const auto frames = assemble_frames(cal.topology, cal.trace);
    d.reference = reference_from_frames(frames, cal.topology.link_count());
  }
  return d;
}

Dataset make_dataset(const ExperimentSpec& spec, std::uint64_t seed) {
  if (spec.scenario) {
    json sj = *spec.scenario;
    sj["seed"] = seed;
    const ScenarioConfig config = scenario_from_json(sj);
    Dataset d = dataset_from_scenario(config, spec.reference_source, spec.calibration_frames);
    if (spec.reference_path) d.reference = load_baseline_csv(*spec.reference_path, d.topology).values;
    return d;
  }
  const auto tf = load_topology(*spec.topology_path);
  const auto trace = load_trace(*spec.trace_path);
  Dataset d{tf.topology, assemble_frames(tf.topology, trace), {}, {}, std::nullopt};
  d.reference = load_baseline_csv(*spec.reference_path, d.topology).values;
  if (spec.truth_path) d.truth = load_truth_csv(*spec.truth_path);
  return d;
}

AlgorithmRun run_algorithm(Algorithm algorithm, const AlgorithmParams& params, const Dataset& data,
                           std::optional<PartitionParams> partition, bool keep_labels,
                           bool time_frames) {
  BackgroundSubtractor sub(algorithm, params, data.topology, partition);
  AlgorithmRun run;
  run.algorithm = algorithm;
  run.estimate = BaselineEstimate(data.topology.link_count());
  std::vector<LinkIndex> all(data.topology.link_count());
  for (LinkIndex l = 0; l < all.size(); ++l) all[l] = l;
  for (const auto& frame : data.frames) {
    LabelField labels;
    if (time_frames) {
      const auto t0 = std::chrono::steady_clock::now();
      labels = sub.process(frame);
      const auto t1 = std::chrono::steady_clock::now();
      run.frame_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    } else {
      labels = sub.process(frame);
    }
    run.estimate.update(frame, labels);
    const auto values = run.estimate.values();
    bool any = false;
    for (double v : values) any = any || std::isfinite(v);
    if (any) {
      const auto err = estimation_error(values, data.reference, all);
      run.error_curve.push_back(err.rms_dbm);
      run.coverage.push_back(err.coverage());
    } else {
      run.error_curve.push_back(std::nan(""));
      run.coverage.push_back(0.0);
    }
    if (keep_labels) run.labels.push_back(std::move(labels));
  }
  run.final_error = run.error_curve.empty() ? std::nan("") : run.error_curve.back();
  return run;
}

double median_final_error(const RunResult& result, Algorithm algorithm) {
  std::vector<double> v;
  for (const auto& m : result.members) {
    for (const auto& r : m.runs) {
      if (r.algorithm == algorithm && std::isfinite(r.final_error)) v.push_back(r.final_error);
    }
  }
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<RuntimeStats> benchmark(const std::vector<Algorithm>& algorithms,
                                    const std::map<Algorithm, AlgorithmParams>& params,
                                    const Dataset& data, std::optional<PartitionParams> partition,
                                    std::size_t repeats) {
  std::vector<RuntimeStats> out;
  for (auto alg : algorithms) {
    RuntimeStats best{alg, 0, std::numeric_limits<double>::infinity(), 0.0};
    const std::size_t warmup = alg == Algorithm::MA ? 0 : params.at(alg).window;
    for (std::size_t r = 0; r < std::max<std::size_t>(repeats, 1); ++r) {
      const auto run = run_algorithm(alg, params.at(alg), data, partition, false, true);
      RuntimeStats s{alg, 0, 0.0, 0.0};
      for (std::size_t k = warmup; k < run.frame_ms.size(); ++k) {
        s.mean_ms += run.frame_ms[k];
        s.max_ms = std::max(s.max_ms, run.frame_ms[k]);
        ++s.frames;
      }
      if (s.frames > 0) s.mean_ms /= static_cast<double>(s.frames);
      if (s.mean_ms < best.mean_ms) best = s;
    }
    out.push_back(best);
  }
  return out;
}

namespace {

void throw_if_invalid(const ExperimentSpec& spec) {
  const auto errs = spec.validate();
  if (errs.empty()) return;
  std::string msg = "invalid experiment spec:";
  for (const auto& e : errs) msg += "\n  - " + e;
  throw Error(msg);
}

}  // namespace

RunResult evaluate(const ExperimentSpec& spec) {
  throw_if_invalid(spec);
  RunResult result;
  result.params = resolve_params(spec);
  const auto seeds = spec.member_seeds();
  result.members.resize(seeds.size());
  std::vector<std::optional<Dataset>> first(1);

  parallel_for(seeds.size(), [&](std::size_t i) {
    Dataset data = make_dataset(spec, seeds[i]);
    MemberResult& m = result.members[i];
    m.seed = seeds[i];
    for (auto alg : spec.algorithms) {
      m.runs.push_back(run_algorithm(alg, result.params.at(alg), data, spec.partition,
                                     spec.dump_labels, false));
    }
    if (i == 0) first[0] = std::move(data);
  });

  const Dataset& data0 = *first[0];
  result.topology = data0.topology;
  if (spec.benchmark) {
    result.runtime = benchmark(spec.algorithms, result.params, data0, spec.partition,
                               spec.benchmark_repeats);
  }
  if (spec.tracking.enabled) {
    if (data0.truth.empty()) throw Error("tracking requires walker truth");
    auto add_row = [&](const std::string& source, std::span<const double> baseline) {
      TrackingRow row;
      row.source = source;
      row.results = track_ensemble(data0.frames, baseline, data0.topology, spec.tracking.params,
                                   data0.truth, spec.tracking.realizations, spec.tracking.seed);
      row.summary = tracking_error(row.results);
      result.tracking.push_back(std::move(row));
    };
    add_row("reference", data0.reference);
    if (data0.true_baseline) add_row("truth", *data0.true_baseline);
    for (const auto& r : result.members[0].runs) {
      add_row(std::string(to_string(r.algorithm)), r.estimate.values());
    }
  }
  return result;
}

namespace {

std::string fmt(double v) {
  if (!std::isfinite(v)) return "nan";
  std::ostringstream ss;
  ss << std::setprecision(10) << v;
  return ss.str();
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p);
  if (!out) throw Error("cannot write " + p.string());
  return out;
}

}  // namespace

void write_report(const ExperimentSpec& spec, const RunResult& result) {
  const fs::path dir(spec.out_dir);
  fs::create_directories(dir);

  json sidecar = spec_to_json(spec);
  sidecar["resolved_params"] = json::object();
  for (const auto& [alg, p] : result.params) sidecar["resolved_params"][std::string(to_string(alg))] = params_to_json(p);
  open_out(dir / "resolved_params.json") << sidecar.dump(2) << '\n';

  for (std::size_t a = 0; a < spec.algorithms.size(); ++a) {
    const std::string name(to_string(spec.algorithms[a]));
    auto curve = open_out(dir / ("error_curve_" + name + ".csv"));
    curve << "member,seed,frame,error_dbm,coverage\n";
    for (std::size_t i = 0; i < result.members.size(); ++i) {
      const auto& run = result.members[i].runs[a];
      for (std::size_t k = 0; k < run.error_curve.size(); ++k) {
        curve << i << ',' << result.members[i].seed << ',' << k << ',' << fmt(run.error_curve[k])
              << ',' << fmt(run.coverage[k]) << '\n';
      }
    }
    if (result.topology) {
      save_baseline_csv((dir / ("baseline_" + name + ".csv")).string(), *result.topology,
                        result.members[0].runs[a].estimate);
    }
    if (spec.dump_labels && result.topology) {
      auto lab = open_out(dir / ("labels_" + name + ".csv"));
      lab << "member,frame,link_a,link_b\n";
      for (std::size_t i = 0; i < result.members.size(); ++i) {
        for (const auto& field : result.members[i].runs[a].labels) {
          for (const auto& link : result.topology->links()) {
            if (field.foreground(link.index)) {
              lab << i << ',' << field.frame << ',' << link.a << ',' << link.b << '\n';
            }
          }
        }
      }
    }
  }

  auto summary = open_out(dir / "estimation_summary.csv");
  summary << "algorithm,member,seed,final_error_dbm,final_coverage\n";
  for (std::size_t a = 0; a < spec.algorithms.size(); ++a) {
    for (std::size_t i = 0; i < result.members.size(); ++i) {
      const auto& run = result.members[i].runs[a];
      summary << to_string(spec.algorithms[a]) << ',' << i << ',' << result.members[i].seed << ','
              << fmt(run.final_error) << ',' << fmt(run.coverage.empty() ? 0.0 : run.coverage.back())
              << '\n';
    }
  }
  auto ens = open_out(dir / "estimation_ensemble.csv");
  ens << "algorithm,members,median_final_error_dbm\n";
  for (auto alg : spec.algorithms) {
    ens << to_string(alg) << ',' << result.members.size() << ',' << fmt(median_final_error(result, alg))
        << '\n';
  }

  if (!result.tracking.empty()) {
    auto ts = open_out(dir / "tracking_summary.csv");
    ts << "baseline_source,realizations,lost_percent,mean_rms_m,std_rms_m\n";
    for (const auto& row : result.tracking) {
      ts << row.source << ',' << row.summary.realizations << ',' << fmt(row.summary.lost_percent())
         << ',' << (row.summary.mean_m ? fmt(*row.summary.mean_m) : "N/A") << ','
         << (row.summary.std_m ? fmt(*row.summary.std_m) : "N/A") << '\n';
      auto per = open_out(dir / ("tracking_" + row.source + ".csv"));
      per << "realization,rms_m,lost\n";
      for (std::size_t r = 0; r < row.results.size(); ++r) {
        per << r << ',' << (row.results[r].rms_m ? fmt(*row.results[r].rms_m) : "nan") << ','
            << (row.results[r].lost ? 1 : 0) << '\n';
      }
    }
  }

  if (!result.runtime.empty()) {
    auto rt = open_out(dir / "runtime.csv");
    rt << "algorithm,frames,mean_ms,max_ms\n";
    for (const auto& s : result.runtime) {
      rt << to_string(s.algorithm) << ',' << s.frames << ',' << fmt(s.mean_ms) << ',' << fmt(s.max_ms)
         << '\n';
    }
  }
}

RunResult run(const ExperimentSpec& spec) {
  RunResult r = evaluate(spec);
  write_report(spec, r);
  return r;
}

std::size_t grid_size(const json& grid) {
  const json& axes = grid.contains("params") ? grid["params"] : grid;
  if (!axes.is_object() || axes.empty()) throw Error("parameter grid is empty");
  std::size_t n = 1;
  for (const auto& [key, v] : axes.items()) {
    if (key == "budget") continue;
    if (!v.is_array() || v.empty()) throw Error("grid axis '" + key + "' must be a non-empty array");
    if (n > std::numeric_limits<std::size_t>::max() / v.size()) return std::numeric_limits<std::size_t>::max();
    n *= v.size();
  }
  return n;
}

SweepResult sweep(const ExperimentSpec& spec, const json& grid) {
  const json& axes = grid.contains("params") ? grid["params"] : grid;
  const std::size_t total = grid_size(grid);
  const std::size_t budget = grid.is_object() && grid.contains("budget")
                                 ? grid["budget"].get<std::size_t>()
                                 : spec.sweep_budget;
  if (total > budget) {
    throw Error("grid has " + std::to_string(total) + " points, budget is " + std::to_string(budget));
  }
  SweepResult out;
  std::vector<const json*> values;
  for (const auto& [key, v] : axes.items()) {
    if (key == "budget") continue;
    out.keys.push_back(key);
    values.push_back(&axes[key]);
  }

  for (std::size_t idx = 0; idx < total; ++idx) {
    ExperimentSpec s = spec;
    s.benchmark = false;
    s.dump_labels = false;
    s.tracking.enabled = false;
    SweepPoint point;
    std::size_t rem = idx;
    for (std::size_t a = out.keys.size(); a-- > 0;) {
      const json& choice = (*values[a])[rem % values[a]->size()];
      rem /= values[a]->size();
      point.values[out.keys[a]] = choice;
      const auto& key = out.keys[a];
      const auto dot = key.find('.');
      if (dot == std::string::npos) throw Error("grid key '" + key + "' needs a '<scope>.<name>' form");
      const std::string scope = key.substr(0, dot);
      const std::string name = key.substr(dot + 1);
      if (scope == "scenario") {
        if (!s.scenario) throw Error("scenario grid key used with a recorded trace");
        (*s.scenario)[name] = choice;
      } else {
        if (scope != "*") parse_algorithm(scope);
        s.overrides[scope][name] = choice;
      }
    }
    const RunResult r = evaluate(s);
    for (auto alg : s.algorithms) point.median_error[alg] = median_final_error(r, alg);
    out.points.push_back(std::move(point));
  }
  for (auto alg : spec.algorithms) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < out.points.size(); ++i) {
      if (out.points[i].median_error[alg] < out.points[best].median_error[alg]) best = i;
    }
    out.best[alg] = best;
  }
  return out;
}

void write_sweep_report(const ExperimentSpec& spec, const SweepResult& result) {
  const fs::path dir(spec.out_dir);
  fs::create_directories(dir);
  open_out(dir / "sweep_spec.json") << spec_to_json(spec).dump(2) << '\n';
  auto out = open_out(dir / "sweep.csv");
  out << "point";
  for (const auto& k : result.keys) out << ',' << k;
  out << ",algorithm,median_final_error_dbm,best\n";
  for (std::size_t i = 0; i < result.points.size(); ++i) {
    for (auto alg : spec.algorithms) {
      out << i;
      for (const auto& k : result.keys) out << ',' << result.points[i].values.at(k).dump();
      out << ',' << to_string(alg) << ',' << fmt(result.points[i].median_error.at(alg)) << ','
          << (result.best.at(alg) == i ? 1 : 0) << '\n';
    }
  }
}

void simulate_to_files(const ScenarioConfig& config, const std::string& trace_path,
                       std::size_t calibration_frames) {
  const auto sim = simulate(config);
  const fs::path trace(trace_path);
  if (trace.has_parent_path()) fs::create_directories(trace.parent_path());
  save_trace(trace_path, sim.trace);
  fs::path stem = trace;
  stem.replace_extension();
  save_truth_csv(stem.string() + ".truth.csv", sim.truth);
  std::vector<std::size_t> zero(sim.topology.link_count(), 0);
  save_baseline_csv(stem.string() + ".baseline.csv", sim.topology, sim.truth.baseline, zero);
  const auto cal = simulate_calibration(config, calibration_frames);
  const auto cal_frames = assemble_frames(cal.topology, cal.trace);
  BaselineEstimate ref(cal.topology.link_count());
  for (const auto& f : cal_frames) ref.update(f, ma_label(f));
  save_baseline_csv(stem.string() + ".reference.csv", cal.topology, ref);
  open_out(stem.string() + ".topology.json") << topology_to_json(sim.topology) << '\n';
}

}  // namespace rfbg
