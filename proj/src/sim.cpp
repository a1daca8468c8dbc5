#include "rfbg/sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace rfbg {

using json = nlohmann::json;

std::string_view to_string(Environment e) {
  switch (e) {
    case Environment::Outdoor: return "outdoor";
    case Environment::Indoor: return "indoor";
    case Environment::ThroughWall: return "through-wall";
  }
  return "?";
}

Environment parse_environment(std::string_view name) {
  if (name == "outdoor") return Environment::Outdoor;
  if (name == "indoor") return Environment::Indoor;
  if (name == "through-wall" || name == "through_wall") return Environment::ThroughWall;
  throw Error("unknown environment '" + std::string(name) + "'");
}

ChannelConstants channel_constants(Environment e) {
  switch (e) {
    case Environment::Outdoor: return {2.0, 2.0};
    case Environment::Indoor: return {3.0, 4.0};
    case Environment::ThroughWall: return {3.5, 6.0};
  }
  return {2.0, 2.0};
}

double WalkerPath::length() const {
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < waypoints.size(); ++i) {
    total += distance(waypoints[i], waypoints[i + 1]);
  }
  if (loop && waypoints.size() > 1) total += distance(waypoints.back(), waypoints.front());
  return total;
}

Point WalkerPath::position_at(double t_seconds) const {
  if (waypoints.empty()) throw Error("walker path has no waypoints");
  const double total = length();
  if (waypoints.size() == 1 || total == 0.0) return waypoints.front();
  double s = std::max(0.0, t_seconds) * speed_mps;
  if (loop) {
    s = std::fmod(s, total);
  } else if (s >= total) {
    return waypoints.back();
  }
  const std::size_t legs = loop ? waypoints.size() : waypoints.size() - 1;
  for (std::size_t i = 0; i < legs; ++i) {
    const Point a = waypoints[i];
    const Point b = waypoints[(i + 1) % waypoints.size()];
    const double d = distance(a, b);
    if (s <= d || i + 1 == legs) {
      const double f = d == 0.0 ? 0.0 : std::min(1.0, s / d);
      return {a.x + f * (b.x - a.x), a.y + f * (b.y - a.y)};
    }
    s -= d;
  }
  return waypoints.back();
}

WalkerPath rectangle_walk(const Rect& region, double margin, double speed_mps) {
  WalkerPath p;
  p.waypoints = {{region.x0 + margin, region.y0 + margin},
                 {region.x1 - margin, region.y0 + margin},
                 {region.x1 - margin, region.y1 - margin},
                 {region.x0 + margin, region.y1 - margin}};
  p.speed_mps = speed_mps;
  p.loop = true;
  return p;
}

std::vector<std::string> ScenarioConfig::validate() const {
  std::vector<std::string> errs;
  if (nodes.size() < 3) errs.emplace_back("scenario needs at least 3 nodes");
  if (!(probe_interval_ms > 0.0)) errs.emplace_back("probe_interval_ms must be > 0");
  if (!(drop_probability >= 0.0 && drop_probability < 1.0)) {
    errs.emplace_back("drop_probability must lie in [0, 1)");
  }
  if (!(noise_sigma_dbm >= 0.0)) errs.emplace_back("noise_sigma_dbm must be >= 0");
  if (!(obstruction_radius_m > 0.0)) errs.emplace_back("obstruction_radius_m must be > 0");
  if (!(attenuation_sigma_db >= 0.0)) errs.emplace_back("attenuation_sigma_db must be >= 0");
  if (!(attenuation_floor_db >= 0.0)) errs.emplace_back("attenuation_floor_db must be >= 0");
  if (attenuation_sigma_db == 0.0 && attenuation_mean_db < attenuation_floor_db) {
    errs.emplace_back("attenuation_mean_db lies below the floor with zero spread");
  }
  if (!(multipath_fraction >= 0.0 && multipath_fraction <= 1.0)) {
    errs.emplace_back("multipath_fraction must lie in [0, 1]");
  }
  if (!(multipath_offset_min_m >= 0.0 && multipath_offset_max_m >= multipath_offset_min_m)) {
    errs.emplace_back("multipath offsets must satisfy 0 <= min <= max");
  }
  if (walker) {
    if (walker->waypoints.empty()) errs.emplace_back("walker path has no waypoints");
    if (!(walker->speed_mps > 0.0)) errs.emplace_back("walker speed must be > 0");
  }
  if (frames == 0) errs.emplace_back("frames must be >= 1");
  return errs;
}

ScenarioConfig scenario_preset(std::string_view name, std::uint64_t seed) {
  ScenarioConfig c;
  c.seed = seed;
  if (name == "outdoor") {
    c.nodes = perimeter_layout(22, 7.0, 7.0);
    c.region = Rect{0, 0, 7, 7};
    c.walker = rectangle_walk(*c.region, 0.5, 1.2);
    c.mode = Environment::Outdoor;
    c.noise_sigma_dbm = 1.0;
    c.multipath_fraction = 0.0;
    c.frames = 300;
  } else if (name == "indoor") {
    c.nodes = perimeter_layout(24, 3.0, 3.6);
    c.region = Rect{0, 0, 3.0, 3.6};
    c.walker = rectangle_walk(*c.region, 0.6, 0.42);
    c.mode = Environment::Indoor;
    c.noise_sigma_dbm = 1.5;
    c.multipath_fraction = 0.3;
    c.frames = 700;
  } else if (name == "through-wall") {
    c.nodes = perimeter_layout(22, 4.0, 5.0);
    c.region = Rect{0, 0, 4.0, 5.0};
    c.walker = rectangle_walk(*c.region, 0.8, 0.5);
    c.mode = Environment::ThroughWall;
    c.noise_sigma_dbm = 1.0;
    c.multipath_fraction = 0.5;
    c.frames = 400;
  } else {
    throw Error("unknown scenario preset '" + std::string(name) + "'");
  }
  return c;
}

json scenario_to_json(const ScenarioConfig& c) {
  json j;
  j["nodes"] = json::array();
  for (const auto& n : c.nodes) j["nodes"].push_back({{"id", n.id}, {"x", n.pos.x}, {"y", n.pos.y}});
  if (c.region) {
    j["region"] = {{"x0", c.region->x0}, {"y0", c.region->y0}, {"x1", c.region->x1},
                   {"y1", c.region->y1}};
  }
  if (c.walker) {
    json wp = json::array();
    for (const auto& p : c.walker->waypoints) wp.push_back({p.x, p.y});
    j["walker"] = {{"waypoints", wp}, {"speed_mps", c.walker->speed_mps}, {"loop", c.walker->loop}};
  } else {
    j["walker"] = nullptr;
  }
  j["mode"] = std::string(to_string(c.mode));
  j["tx_power_dbm"] = c.tx_power_dbm;
  j["probe_interval_ms"] = c.probe_interval_ms;
  j["drop_probability"] = c.drop_probability;
  j["noise_sigma_dbm"] = c.noise_sigma_dbm;
  j["obstruction_radius_m"] = c.obstruction_radius_m;
  j["attenuation_mean_db"] = c.attenuation_mean_db;
  j["attenuation_sigma_db"] = c.attenuation_sigma_db;
  j["attenuation_floor_db"] = c.attenuation_floor_db;
  j["multipath_fraction"] = c.multipath_fraction;
  j["multipath_offset_min_m"] = c.multipath_offset_min_m;
  j["multipath_offset_max_m"] = c.multipath_offset_max_m;
  j["multipath_gain"] = c.multipath_gain;
  if (c.path_loss_exponent) j["path_loss_exponent"] = *c.path_loss_exponent;
  if (c.shadowing_sigma_db) j["shadowing_sigma_db"] = *c.shadowing_sigma_db;
  j["quantize"] = c.quantize;
  j["seed"] = c.seed;
  j["frames"] = c.frames;
  return j;
}

ScenarioConfig scenario_from_json(const json& j) {
  if (!j.is_object()) throw Error("scenario must be a JSON object");
  ScenarioConfig c;
  try {
    if (j.contains("preset")) {
      c = scenario_preset(j["preset"].get<std::string>(), j.value("seed", std::uint64_t{1}));
    }
    for (const auto& [key, v] : j.items()) {
      if (key == "preset") {
        continue;
      } else if (key == "nodes") {
        c.nodes.clear();
        for (const auto& n : v) {
          c.nodes.push_back({n.at("id").get<int>(), {n.at("x").get<double>(), n.at("y").get<double>()}});
        }
      } else if (key == "topology_file") {
        auto tf = load_topology(v.get<std::string>());
        c.nodes = tf.topology.nodes();
        c.region = tf.topology.region();
      } else if (key == "region") {
        c.region = Rect{v.at("x0").get<double>(), v.at("y0").get<double>(),
                        v.at("x1").get<double>(), v.at("y1").get<double>()};
      } else if (key == "walker") {
        if (v.is_null()) {
          c.walker.reset();
        } else {
          WalkerPath w = c.walker.value_or(WalkerPath{});
          if (v.contains("waypoints")) {
            w.waypoints.clear();
            for (const auto& p : v["waypoints"]) w.waypoints.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
          }
          w.speed_mps = v.value("speed_mps", w.speed_mps);
          w.loop = v.value("loop", w.loop);
          c.walker = w;
        }
      } else if (key == "mode") {
        c.mode = parse_environment(v.get<std::string>());
      } else if (key == "tx_power_dbm") {
        c.tx_power_dbm = v.get<double>();
      } else if (key == "probe_interval_ms") {
        c.probe_interval_ms = v.get<double>();
      } else if (key == "drop_probability") {
        c.drop_probability = v.get<double>();
      } else if (key == "noise_sigma_dbm") {
        c.noise_sigma_dbm = v.get<double>();
      } else if (key == "obstruction_radius_m") {
        c.obstruction_radius_m = v.get<double>();
      } else if (key == "attenuation_mean_db") {
        c.attenuation_mean_db = v.get<double>();
      } else if (key == "attenuation_sigma_db") {
        c.attenuation_sigma_db = v.get<double>();
      } else if (key == "attenuation_floor_db") {
        c.attenuation_floor_db = v.get<double>();
      } else if (key == "multipath_fraction") {
        c.multipath_fraction = v.get<double>();
      } else if (key == "multipath_offset_min_m") {
        c.multipath_offset_min_m = v.get<double>();
      } else if (key == "multipath_offset_max_m") {
        c.multipath_offset_max_m = v.get<double>();
      } else if (key == "multipath_gain") {
        c.multipath_gain = v.get<double>();
      } else if (key == "path_loss_exponent") {
        c.path_loss_exponent = v.get<double>();
      } else if (key == "shadowing_sigma_db") {
        c.shadowing_sigma_db = v.get<double>();
      } else if (key == "quantize") {
        c.quantize = v.get<bool>();
      } else if (key == "seed") {
        c.seed = v.get<std::uint64_t>();
      } else if (key == "frames") {
        c.frames = v.get<std::size_t>();
      } else {
        throw Error("unknown scenario key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw Error(std::string("bad scenario value: ") + e.what());
  }
  return c;
}

namespace {

// Independent, reproducible stream per purpose.
std::mt19937_64 make_stream(std::uint64_t seed, std::uint32_t purpose) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    purpose, 0x5eedu};
  return std::mt19937_64(seq);
}

enum StreamId : std::uint32_t {
  kBaselineStream = 1,
  kChannelStream = 2,
  kNoiseStream = 3,
  kDropStream = 4,
  kCalibrationNoise = 5,
  kCalibrationDrop = 6,
};

double truncated_normal(std::mt19937_64& rng, double mean, double sigma, double floor) {
  if (sigma == 0.0) return std::max(mean, floor);
  std::normal_distribution<double> nd(mean, sigma);
  for (;;) {
    const double x = nd(rng);
    if (x >= floor) return x;
  }
}

}  // namespace

std::vector<double> generate_baseline(const NetworkTopology& topology, Environment mode,
                                      std::uint64_t seed, double tx_power_dbm) {
  ScenarioConfig c;
  c.mode = mode;
  c.seed = seed;
  c.tx_power_dbm = tx_power_dbm;
  return generate_baseline(topology, c);
}

std::vector<double> generate_baseline(const NetworkTopology& topology,
                                      const ScenarioConfig& config) {
  const auto consts = channel_constants(config.mode);
  const double n_pl = config.path_loss_exponent.value_or(consts.path_loss_exponent);
  const double sigma = config.shadowing_sigma_db.value_or(consts.shadowing_sigma_db);
  auto rng = make_stream(config.seed, kBaselineStream);
  std::normal_distribution<double> shadow(0.0, 1.0);
  std::vector<double> rb(topology.link_count());
  for (const auto& link : topology.links()) {
    const double x = sigma * shadow(rng);
    rb[link.index] = config.tx_power_dbm - 10.0 * n_pl * std::log10(link.length / 1.0) + x;
  }
  return rb;
}

ChannelModel::ChannelModel(const NetworkTopology& topology, const ScenarioConfig& config)
    : topology_(&topology),
      radius_(config.obstruction_radius_m),
      baseline_(generate_baseline(topology, config)),
      magnitude_(topology.link_count(), 0.0),
      alias_(topology.link_count()) {
  auto rng = make_stream(config.seed, kChannelStream);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const bool multipath = config.mode != Environment::Outdoor && config.multipath_fraction > 0.0;
  for (const auto& link : topology.links()) {
    magnitude_[link.index] = truncated_normal(rng, config.attenuation_mean_db,
                                              config.attenuation_sigma_db,
                                              config.attenuation_floor_db);
    // Draw every variate regardless of mode so that streams line up across modes.
    const double pick = unit(rng);
    const double offset = config.multipath_offset_min_m +
                          unit(rng) * (config.multipath_offset_max_m - config.multipath_offset_min_m);
    const double side = unit(rng) < 0.5 ? -1.0 : 1.0;
    const int sign = unit(rng) < 0.5 ? -1 : 1;
    const double alias_mag =
        config.multipath_gain * truncated_normal(rng, config.attenuation_mean_db,
                                                 config.attenuation_sigma_db,
                                                 config.attenuation_floor_db);
    if (!multipath || pick >= config.multipath_fraction) continue;
    const Point a = topology.endpoint_a(link.index);
    const Point b = topology.endpoint_b(link.index);
    const double nx = -(b.y - a.y) / link.length;
    const double ny = (b.x - a.x) / link.length;
    const double dx = side * offset * nx;
    const double dy = side * offset * ny;
    alias_[link.index] = Alias{{a.x + dx, a.y + dy}, {b.x + dx, b.y + dy}, sign, alias_mag};
  }
}

double ChannelModel::perturbation(LinkIndex l, std::optional<Point> walker) const {
  if (!walker) return 0.0;
  double a = 0.0;
  if (point_segment_distance(*walker, topology_->endpoint_a(l), topology_->endpoint_b(l)) < radius_) {
    a += magnitude_[l];
  }
  if (const auto& al = alias_[l]; al && point_segment_distance(*walker, al->a, al->b) < radius_) {
    a += al->sign * al->magnitude;
  }
  return a;
}

std::vector<LinkIndex> ChannelModel::affected(Point walker) const {
  std::vector<LinkIndex> out;
  for (LinkIndex l = 0; l < baseline_.size(); ++l) {
    const bool los =
        point_segment_distance(walker, topology_->endpoint_a(l), topology_->endpoint_b(l)) < radius_;
    const auto& al = alias_[l];
    const bool via_alias = al && point_segment_distance(walker, al->a, al->b) < radius_;
    if (los || via_alias) out.push_back(l);
  }
  return out;
}

std::vector<LinkIndex> ChannelModel::los_affected(Point walker) const {
  std::vector<LinkIndex> out;
  for (LinkIndex l = 0; l < baseline_.size(); ++l) {
    if (point_segment_distance(walker, topology_->endpoint_a(l), topology_->endpoint_b(l)) < radius_) {
      out.push_back(l);
    }
  }
  return out;
}

namespace {

SimulationResult run_simulation(const ScenarioConfig& config, bool with_walker,
                                std::uint32_t noise_stream, std::uint32_t drop_stream) {
  if (auto errs = config.validate(); !errs.empty()) {
    std::string msg = "invalid scenario:";
    for (const auto& e : errs) msg += " " + e + ";";
    throw Error(msg);
  }
  SimulationResult out{NetworkTopology::build(config.nodes, config.region), {}, {}, 0};
  const auto& topo = out.topology;
  const Rect& region = topo.region();
  if (config.walker) {
    for (const auto& p : config.walker->waypoints) {
      if (!region.contains(p)) throw Error("walker path exits the region");
    }
  }
  const ChannelModel channel(topo, config);
  const bool walking = with_walker && config.walker.has_value();

  auto noise_rng = make_stream(config.seed, noise_stream);
  auto drop_rng = make_stream(config.seed, drop_stream);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const std::size_t m = topo.node_count();
  const std::size_t target = config.frames * m;
  out.trace.reserve(target);
  std::uint64_t probe = 0;
  while (out.trace.size() < target) {
    const double t_ms = static_cast<double>(probe) * config.probe_interval_ms;
    const auto& tx = topo.nodes()[probe % m];
    const bool dropped = unit(drop_rng) < config.drop_probability;
    std::optional<Point> z;
    if (walking) z = config.walker->position_at(t_ms / 1000.0);
    MeasurementVector mv{probe, tx.id, t_ms, {}};
    for (std::size_t rx = 0; rx < m; ++rx) {
      if (rx == probe % m) continue;
      const double e = noise(noise_rng);
      if (dropped) continue;
      const LinkIndex l = *topo.find_link(tx.id, topo.nodes()[rx].id);
      double r = channel.baseline()[l] - channel.perturbation(l, z) + config.noise_sigma_dbm * e;
      if (config.quantize) r = std::round(r);
      mv.rss.emplace(topo.nodes()[rx].id, r);
    }
    if (!dropped) out.trace.push_back(std::move(mv));
    ++probe;
  }
  out.probes = probe;

  GroundTruth& truth = out.truth;
  truth.baseline = channel.baseline();
  for (std::size_t k = 0; k < config.frames; ++k) {
    const auto first = out.trace[k * m].seq;
    const auto last = out.trace[k * m + m - 1].seq;
    const double t_mid = 0.5 * static_cast<double>(first + last) * config.probe_interval_ms;
    truth.frame_time_ms.push_back(t_mid);
    if (walking) {
      const Point z = config.walker->position_at(t_mid / 1000.0);
      truth.walker.emplace_back(z);
      truth.affected.push_back(channel.affected(z));
    } else {
      truth.walker.emplace_back(std::nullopt);
      truth.affected.emplace_back();
    }
  }
  return out;
}

}  // namespace

SimulationResult simulate(const ScenarioConfig& config) {
  return run_simulation(config, true, kNoiseStream, kDropStream);
}

SimulationResult simulate_calibration(const ScenarioConfig& config, std::size_t frames) {
  ScenarioConfig c = config;
  c.frames = frames;
  return run_simulation(c, false, kCalibrationNoise, kCalibrationDrop);
}

void save_truth_csv(const std::string& path, const GroundTruth& truth) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write truth file " + path);
  out << "frame,z_x,z_y\n";
  out.precision(10);
  for (std::size_t k = 0; k < truth.walker.size(); ++k) {
    out << k << ',';
    if (truth.walker[k]) {
      out << truth.walker[k]->x << ',' << truth.walker[k]->y;
    } else {
      out << ',';
    }
    out << '\n';
  }
}

std::vector<std::optional<Point>> load_truth_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open truth file " + path);
  std::string line;
  std::getline(in, line);
  if (line.rfind("frame,z_x,z_y", 0) != 0) throw Error("truth CSV: unexpected header");
  std::vector<std::optional<Point>> out;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string k, x, y;
    std::getline(ss, k, ',');
    std::getline(ss, x, ',');
    std::getline(ss, y, ',');
    const auto idx = static_cast<std::size_t>(std::stoull(k));
    if (idx != out.size()) throw Error("truth CSV: frames must be consecutive from 0");
    if (x.empty() || y.empty()) {
      out.emplace_back(std::nullopt);
    } else {
      out.emplace_back(Point{std::stod(x), std::stod(y)});
    }
  }
  return out;
}

}  // namespace rfbg
