#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "rfbg/frames.hpp"
#include "rfbg/topology.hpp"

namespace rfbg {

// Ellipse-weighted RTI likelihood with a constant-velocity particle filter.
// Absolute tracking errors from this filter are only meaningful relative to
// each other (e.g. across baseline sources).
struct TrackerParams {
  std::size_t particles = 500;
  double ellipse_width_m = 0.1;   // excess path length that still counts as "on" a link
  double noise_floor_db = 2.0;    // |R_F| below this carries no evidence
  double temperature = 3.0;       // likelihood temperature lambda
  double velocity_noise = 0.6;    // m/s per sqrt(s)
  double position_noise_m = 0.05; // per frame
  double max_speed_mps = 2.0;
  double frame_period_s = 0.11;
  std::optional<double> lost_threshold_m;  // default: half the region diagonal
  double lost_fraction = 0.5;
  std::size_t burn_in_frames = 0;
};

struct ParticleSet {
  std::vector<double> x, y, vx, vy, w;

  std::size_t size() const { return w.size(); }
  double effective_size() const;
  double weight_sum() const;
};

struct TrackResult {
  std::vector<Point> estimates;    // one per frame
  std::vector<bool> informative;   // at least one link above the noise floor
  std::vector<bool> reseeded;      // weights collapsed and particles were redrawn
  std::optional<double> rms_m;     // set once evaluated against truth
  bool lost = false;
};

// log-likelihood (before 1/lambda scaling) of a target at z given R_F:
// sum over links whose excess-path ellipse contains z of (|R_F| - floor)+.
double rti_score(const NetworkTopology& topology, std::span<const double> rf, Point z,
                 const TrackerParams& params);

// R_F = R-hat_B - R per link; zero where either side is undefined.
std::vector<double> foreground_rss(const Frame& frame, std::span<const double> baseline);

// Single realization. `observer`, when given, is called after every update
// with the particle set (used by tests for weight invariants).
TrackResult track(std::span<const Frame> frames, std::span<const double> baseline,
                  const NetworkTopology& topology, const TrackerParams& params,
                  std::uint64_t seed,
                  const std::function<void(std::size_t, const ParticleSet&)>* observer = nullptr);

// Per-realization RMS position error over frames >= burn_in that have truth.
std::optional<double> rms_error(const TrackResult& result,
                                std::span<const std::optional<Point>> truth,
                                std::size_t burn_in = 0);

// Lost when the estimate is farther than threshold_m from the truth on more
// than `fraction` of the evaluated frames after burn-in.
bool is_lost(const TrackResult& result, std::span<const std::optional<Point>> truth,
             double threshold_m, double fraction, std::size_t burn_in = 0);

struct TrackingSummary {
  std::size_t realizations = 0;
  std::size_t lost = 0;
  std::optional<double> mean_m;  // over non-lost realizations
  std::optional<double> std_m;
  double lost_percent() const {
    return realizations == 0 ? 0.0 : 100.0 * static_cast<double>(lost) / static_cast<double>(realizations);
  }
};

// Mean and sample standard deviation of the per-realization RMS over non-lost
// realizations; lost ones are only counted.
TrackingSummary tracking_error(std::span<const TrackResult> results);

// Runs realizations with seeds base_seed, base_seed+1, ..., scores each
// against truth and marks lost tracks. Realizations run on worker threads.
std::vector<TrackResult> track_ensemble(std::span<const Frame> frames,
                                        std::span<const double> baseline,
                                        const NetworkTopology& topology,
                                        const TrackerParams& params,
                                        std::span<const std::optional<Point>> truth,
                                        std::size_t realizations, std::uint64_t base_seed);

}  // namespace rfbg
