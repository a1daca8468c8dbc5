#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rfbg/frames.hpp"
#include "rfbg/topology.hpp"

namespace rfbg {

enum class Environment : std::uint8_t { Outdoor, Indoor, ThroughWall };

std::string_view to_string(Environment e);
Environment parse_environment(std::string_view name);

// Log-distance channel constants per environment.
struct ChannelConstants {
  double path_loss_exponent;
  double shadowing_sigma_db;
};
ChannelConstants channel_constants(Environment e);

// Piecewise-linear walk at constant speed. With `loop` the walker returns to
// the first waypoint and repeats; otherwise it stops at the last one.
struct WalkerPath {
  std::vector<Point> waypoints;
  double speed_mps = 1.0;
  bool loop = true;

  double length() const;
  Point position_at(double t_seconds) const;
};

// Axis-aligned rectangular loop inset from the region by `margin`.
WalkerPath rectangle_walk(const Rect& region, double margin, double speed_mps);

struct ScenarioConfig {
  std::vector<Node> nodes;
  std::optional<Rect> region;
  std::optional<WalkerPath> walker;  // none: empty region
  Environment mode = Environment::Outdoor;
  double tx_power_dbm = 0.0;
  double probe_interval_ms = 5.0;
  double drop_probability = 0.0;  // per broadcast
  double noise_sigma_dbm = 1.0;
  double obstruction_radius_m = 0.3;
  double attenuation_mean_db = 5.0;
  double attenuation_sigma_db = 2.0;
  double attenuation_floor_db = 0.5;
  double multipath_fraction = 0.0;     // p_mp, ignored outdoors
  double multipath_offset_min_m = 0.4;  // perpendicular displacement of alias segments
  double multipath_offset_max_m = 1.2;
  double multipath_gain = 1.0;  // alias magnitude relative to a LOS draw
  std::optional<double> path_loss_exponent;  // overrides the mode constant
  std::optional<double> shadowing_sigma_db;
  bool quantize = true;  // round readings to 1 dBm
  std::uint64_t seed = 1;
  std::size_t frames = 300;

  std::vector<std::string> validate() const;
};

// Ready-made scenarios mirroring the three deployments: "outdoor" (22 nodes,
// 7 m square), "indoor" (24 nodes, 3 m x 3.6 m), "through-wall".
ScenarioConfig scenario_preset(std::string_view name, std::uint64_t seed = 1);

nlohmann::json scenario_to_json(const ScenarioConfig& c);
// `preset` (optional) provides defaults, remaining keys override. Unknown keys
// raise Error.
ScenarioConfig scenario_from_json(const nlohmann::json& j);

// R_B[l] = P_tx - 10 n log10(d / 1 m) + X_l with X_l ~ N(0, sigma_sh^2) from `seed`.
std::vector<double> generate_baseline(const NetworkTopology& topology, Environment mode,
                                      std::uint64_t seed, double tx_power_dbm = 0.0);
std::vector<double> generate_baseline(const NetworkTopology& topology,
                                      const ScenarioConfig& config);

// Static per-link channel: baseline, attenuation magnitudes and multipath
// alias segments, all fixed by the scenario seed.
class ChannelModel {
 public:
  ChannelModel(const NetworkTopology& topology, const ScenarioConfig& config);

  const std::vector<double>& baseline() const { return baseline_; }
  double attenuation(LinkIndex l) const { return magnitude_[l]; }
  bool has_alias(LinkIndex l) const { return alias_[l].has_value(); }
  // Alias segment endpoints and the sign of its perturbation (+1 attenuates).
  struct Alias {
    Point a;
    Point b;
    int sign = 1;
    double magnitude = 0.0;
  };
  const std::optional<Alias>& alias(LinkIndex l) const { return alias_[l]; }

  // Signed foreground term A_l for a walker at `walker` (reading = R_B - A).
  double perturbation(LinkIndex l, std::optional<Point> walker) const;
  // Links with a nonzero perturbation for this walker position.
  std::vector<LinkIndex> affected(Point walker) const;
  // Links whose line of sight passes within the obstruction radius.
  std::vector<LinkIndex> los_affected(Point walker) const;

 private:
  const NetworkTopology* topology_;
  double radius_;
  std::vector<double> baseline_;
  std::vector<double> magnitude_;
  std::vector<std::optional<Alias>> alias_;
};

struct GroundTruth {
  std::vector<double> baseline;                  // true R_B per link
  std::vector<std::optional<Point>> walker;      // per frame, at the window midpoint
  std::vector<std::vector<LinkIndex>> affected;  // per frame
  std::vector<double> frame_time_ms;             // window midpoint per frame
};

struct SimulationResult {
  NetworkTopology topology;
  std::vector<MeasurementVector> trace;
  GroundTruth truth;
  std::size_t probes = 0;  // broadcasts attempted, including dropped ones
};

SimulationResult simulate(const ScenarioConfig& config);

// Same channel (baseline and noise level) with nobody in the region and an
// independent noise stream: the offline calibration recording.
SimulationResult simulate_calibration(const ScenarioConfig& config, std::size_t frames);

// Truth CSV: `frame,z_x,z_y` (empty coordinates when nobody is present).
void save_truth_csv(const std::string& path, const GroundTruth& truth);
std::vector<std::optional<Point>> load_truth_csv(const std::string& path);

}  // namespace rfbg
