#include "rfbg/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "rfbg/parallel.hpp"

namespace rfbg {

double ParticleSet::effective_size() const {
  double s2 = 0.0;
  for (double v : w) s2 += v * v;
  return s2 > 0.0 ? 1.0 / s2 : 0.0;
}

double ParticleSet::weight_sum() const { return std::accumulate(w.begin(), w.end(), 0.0); }

std::vector<double> foreground_rss(const Frame& frame, std::span<const double> baseline) {
  if (baseline.size() != frame.size()) throw Error("baseline does not match the frame");
  std::vector<double> rf(frame.size(), 0.0);
  for (LinkIndex l = 0; l < frame.size(); ++l) {
    if (frame.available[l] && std::isfinite(baseline[l])) rf[l] = baseline[l] - frame.rss[l];
  }
  return rf;
}

namespace {

struct ActiveLink {
  Point a;
  Point b;
  double length;
  double evidence;
};

std::vector<ActiveLink> active_links(const NetworkTopology& topology, std::span<const double> rf,
                                     double floor) {
  std::vector<ActiveLink> out;
  for (const auto& link : topology.links()) {
    const double e = std::abs(rf[link.index]) - floor;
    if (e > 0.0) {
      out.push_back({topology.endpoint_a(link.index), topology.endpoint_b(link.index), link.length, e});
    }
  }
  return out;
}

double score_at(const std::vector<ActiveLink>& links, Point z, double width) {
  double s = 0.0;
  for (const auto& l : links) {
    if (distance(z, l.a) + distance(z, l.b) - l.length < width) s += l.evidence;
  }
  return s;
}

void reflect(double& pos, double& vel, double lo, double hi) {
  for (int guard = 0; guard < 8 && (pos < lo || pos > hi); ++guard) {
    if (pos < lo) {
      pos = 2.0 * lo - pos;
      vel = -vel;
    }
    if (pos > hi) {
      pos = 2.0 * hi - pos;
      vel = -vel;
    }
  }
  pos = std::clamp(pos, lo, hi);
}

void seed_uniform(ParticleSet& ps, const Rect& r, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ux(r.x0, r.x1);
  std::uniform_real_distribution<double> uy(r.y0, r.y1);
  const double w = 1.0 / static_cast<double>(ps.size());
  for (std::size_t i = 0; i < ps.size(); ++i) {
    ps.x[i] = ux(rng);
    ps.y[i] = uy(rng);
    ps.vx[i] = 0.0;
    ps.vy[i] = 0.0;
    ps.w[i] = w;
  }
}

void systematic_resample(ParticleSet& ps, std::mt19937_64& rng) {
  const std::size_t n = ps.size();
  std::uniform_real_distribution<double> u(0.0, 1.0 / static_cast<double>(n));
  const double start = u(rng);
  ParticleSet out;
  out.x.resize(n);
  out.y.resize(n);
  out.vx.resize(n);
  out.vy.resize(n);
  out.w.assign(n, 1.0 / static_cast<double>(n));
  double cumulative = ps.w[0];
  std::size_t j = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double target = start + static_cast<double>(i) / static_cast<double>(n);
    while (target > cumulative && j + 1 < n) cumulative += ps.w[++j];
    out.x[i] = ps.x[j];
    out.y[i] = ps.y[j];
    out.vx[i] = ps.vx[j];
    out.vy[i] = ps.vy[j];
  }
  ps = std::move(out);
}

}  // namespace

double rti_score(const NetworkTopology& topology, std::span<const double> rf, Point z,
                 const TrackerParams& params) {
  return score_at(active_links(topology, rf, params.noise_floor_db), z, params.ellipse_width_m);
}

TrackResult track(std::span<const Frame> frames, std::span<const double> baseline,
                  const NetworkTopology& topology, const TrackerParams& params,
                  std::uint64_t seed,
                  const std::function<void(std::size_t, const ParticleSet&)>* observer) {
  if (frames.empty()) throw Error("track: no frames");
  if (baseline.size() != topology.link_count()) throw Error("track: baseline size mismatch");
  if (params.particles == 0) throw Error("track: particle count must be positive");
  if (!(params.temperature > 0.0)) throw Error("track: temperature must be positive");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const Rect& region = topology.region();
  const std::size_t n = params.particles;
  ParticleSet ps;
  ps.x.resize(n);
  ps.y.resize(n);
  ps.vx.resize(n);
  ps.vy.resize(n);
  ps.w.resize(n);
  seed_uniform(ps, region, rng);

  TrackResult result;
  result.estimates.reserve(frames.size());
  const double dt = params.frame_period_s;
  const double vel_sd = params.velocity_noise * std::sqrt(dt);
  std::vector<double> logw(n);

  for (std::size_t k = 0; k < frames.size(); ++k) {
    // Predict.
    for (std::size_t i = 0; i < n; ++i) {
      ps.vx[i] += vel_sd * gauss(rng);
      ps.vy[i] += vel_sd * gauss(rng);
      const double speed = std::hypot(ps.vx[i], ps.vy[i]);
      if (speed > params.max_speed_mps) {
        ps.vx[i] *= params.max_speed_mps / speed;
        ps.vy[i] *= params.max_speed_mps / speed;
      }
      ps.x[i] += ps.vx[i] * dt + params.position_noise_m * gauss(rng);
      ps.y[i] += ps.vy[i] * dt + params.position_noise_m * gauss(rng);
      reflect(ps.x[i], ps.vx[i], region.x0, region.x1);
      reflect(ps.y[i], ps.vy[i], region.y0, region.y1);
    }

    // Update.
    const auto rf = foreground_rss(frames[k], baseline);
    const auto links = active_links(topology, rf, params.noise_floor_db);
    const bool informative = !links.empty();
    bool reseeded = false;
    if (informative) {
      double max_lw = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < n; ++i) {
        logw[i] = std::log(ps.w[i]) +
                  score_at(links, {ps.x[i], ps.y[i]}, params.ellipse_width_m) / params.temperature;
        max_lw = std::max(max_lw, logw[i]);
      }
      double total = 0.0;
      if (std::isfinite(max_lw)) {
        for (std::size_t i = 0; i < n; ++i) {
          ps.w[i] = std::exp(logw[i] - max_lw);
          total += ps.w[i];
        }
      }
      if (!(total > 0.0) || !std::isfinite(total)) {
        seed_uniform(ps, region, rng);
        reseeded = true;
      } else {
        for (auto& w : ps.w) w /= total;
      }
    }
    if (observer) (*observer)(k, ps);

    Point est{0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i) {
      est.x += ps.w[i] * ps.x[i];
      est.y += ps.w[i] * ps.y[i];
    }
    result.estimates.push_back(est);
    result.informative.push_back(informative);
    result.reseeded.push_back(reseeded);

    if (ps.effective_size() < 0.5 * static_cast<double>(n)) systematic_resample(ps, rng);
  }
  return result;
}

std::optional<double> rms_error(const TrackResult& result,
                                std::span<const std::optional<Point>> truth, std::size_t burn_in) {
  double acc = 0.0;
  std::size_t count = 0;
  const std::size_t n = std::min(result.estimates.size(), truth.size());
  for (std::size_t k = burn_in; k < n; ++k) {
    if (!truth[k]) continue;
    const double d = distance(result.estimates[k], *truth[k]);
    acc += d * d;
    ++count;
  }
  if (count == 0) return std::nullopt;
  return std::sqrt(acc / static_cast<double>(count));
}

bool is_lost(const TrackResult& result, std::span<const std::optional<Point>> truth,
             double threshold_m, double fraction, std::size_t burn_in) {
  std::size_t far = 0;
  std::size_t count = 0;
  const std::size_t n = std::min(result.estimates.size(), truth.size());
  for (std::size_t k = burn_in; k < n; ++k) {
    if (!truth[k]) continue;
    ++count;
    if (distance(result.estimates[k], *truth[k]) > threshold_m) ++far;
  }
  if (count == 0) return false;
  return static_cast<double>(far) > fraction * static_cast<double>(count);
}

TrackingSummary tracking_error(std::span<const TrackResult> results) {
  TrackingSummary s;
  s.realizations = results.size();
  std::vector<double> errs;
  for (const auto& r : results) {
    if (r.lost || !r.rms_m) {
      ++s.lost;
      continue;
    }
    errs.push_back(*r.rms_m);
  }
  if (errs.empty()) return s;
  const double mean = std::accumulate(errs.begin(), errs.end(), 0.0) / static_cast<double>(errs.size());
  double var = 0.0;
  for (double e : errs) var += (e - mean) * (e - mean);
  s.mean_m = mean;
  s.std_m = errs.size() > 1 ? std::sqrt(var / static_cast<double>(errs.size() - 1)) : 0.0;
  return s;
}

std::vector<TrackResult> track_ensemble(std::span<const Frame> frames,
                                        std::span<const double> baseline,
                                        const NetworkTopology& topology,
                                        const TrackerParams& params,
                                        std::span<const std::optional<Point>> truth,
                                        std::size_t realizations, std::uint64_t base_seed) {
  std::vector<TrackResult> out(realizations);
  const double threshold = params.lost_threshold_m.value_or(0.5 * topology.region().diagonal());
  parallel_for(realizations, [&](std::size_t a) {
    TrackResult r = track(frames, baseline, topology, params, base_seed + a);
    r.rms_m = rms_error(r, truth, params.burn_in_frames);
    r.lost = is_lost(r, truth, threshold, params.lost_fraction, params.burn_in_frames);
    out[a] = std::move(r);
  });
  return out;
}

}  // namespace rfbg
