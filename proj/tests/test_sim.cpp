#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "rfbg/sim.hpp"

using namespace rfbg;

namespace {

ScenarioConfig toy(double noise = 0.0) {
  ScenarioConfig c;
  c.nodes = {{1, {0, 0}}, {2, {4, 0}}, {3, {2, 3}}};
  c.region = Rect{0, 0, 4, 3};
  c.noise_sigma_dbm = noise;
  c.attenuation_mean_db = 5.0;
  c.attenuation_sigma_db = 0.0;
  c.frames = 40;
  return c;
}

}  // namespace

TEST_CASE("log-distance baseline") {
  const auto topo = NetworkTopology::build({{1, {0, 0}}, {2, {1, 0}}, {3, {10, 0}}});
  ScenarioConfig c;
  c.nodes = topo.nodes();
  c.shadowing_sigma_db = 0.0;
  c.mode = Environment::Indoor;
  const auto rb = generate_baseline(topo, c);
  CHECK(rb[*topo.find_link(1, 2)] == doctest::Approx(0.0));
  CHECK(rb[*topo.find_link(1, 3)] == doctest::Approx(-30.0));
  CHECK(rb[*topo.find_link(2, 3)] == doctest::Approx(-30.0 * std::log10(9.0)));
  CHECK(channel_constants(Environment::Outdoor).path_loss_exponent == 2.0);
  CHECK(channel_constants(Environment::ThroughWall).shadowing_sigma_db == 6.0);
}

TEST_CASE("empty noiseless scenario reproduces the rounded baseline") {
  auto c = toy();
  c.walker.reset();
  const auto sim = simulate(c);
  const auto frames = assemble_frames(sim.topology, sim.trace);
  REQUIRE(frames.size() == c.frames);
  for (const auto& f : frames) {
    for (LinkIndex l = 0; l < f.size(); ++l) CHECK(f.rss[l] == std::round(sim.truth.baseline[l]));
  }
}

TEST_CASE("walker on one link attenuates exactly that link") {
  auto c = toy();
  c.walker = WalkerPath{{{2.0, 0.0}}, 1.0, false};  // parked on the midpoint of 1-2
  c.quantize = false;
  const auto sim = simulate(c);
  const auto frames = assemble_frames(sim.topology, sim.trace);
  const auto l12 = *sim.topology.find_link(1, 2);
  for (const auto& f : frames) {
    for (LinkIndex l = 0; l < f.size(); ++l) {
      const double want = sim.truth.baseline[l] - (l == l12 ? 5.0 : 0.0);
      CHECK(f.rss[l] == doctest::Approx(want).epsilon(1e-12));
    }
  }
  for (const auto& a : sim.truth.affected) CHECK(a == std::vector<LinkIndex>{l12});
}

TEST_CASE("walker crossing a link attenuates it only while close") {
  auto c = toy();
  c.walker = WalkerPath{{{2.0, 0.1}, {2.0, 2.0}}, 1.0, false};
  c.frames = 200;
  const auto sim = simulate(c);
  const auto frames = assemble_frames(sim.topology, sim.trace);
  const auto l12 = *sim.topology.find_link(1, 2);
  const double rb = std::round(sim.truth.baseline[l12]);
  bool saw_hit = false;
  bool saw_clear = false;
  for (std::size_t k = 0; k < frames.size(); ++k) {
    const double v = frames[k].rss[l12];
    CHECK(v <= rb);
    CHECK(v >= std::round(sim.truth.baseline[l12] - 5.0));
    saw_hit = saw_hit || v != rb;
    saw_clear = saw_clear || v == rb;
  }
  CHECK(saw_hit);
  CHECK(saw_clear);
}

TEST_CASE("decomposition is conserved") {
  auto c = scenario_preset("indoor", 4);
  c.frames = 30;
  const NetworkTopology topo = NetworkTopology::build(c.nodes, c.region);
  const ChannelModel channel(topo, c);
  c.noise_sigma_dbm = 0.0;
  c.quantize = false;
  const auto sim = simulate(c);
  for (const auto& mv : sim.trace) {
    const Point z = c.walker->position_at(mv.t_ms / 1000.0);
    for (const auto& [rx, v] : mv.rss) {
      const auto l = *topo.find_link(mv.tx, rx);
      CHECK(v - channel.baseline()[l] == doctest::Approx(-channel.perturbation(l, z)).epsilon(1e-12));
    }
  }
}

TEST_CASE("same seed, same trace; different seed, different trace") {
  auto c = scenario_preset("outdoor", 9);
  c.frames = 20;
  c.drop_probability = 0.1;
  const auto a = simulate(c);
  const auto b = simulate(c);
  REQUIRE(a.trace.size() == b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    CHECK(a.trace[i].seq == b.trace[i].seq);
    CHECK(a.trace[i].rss == b.trace[i].rss);
  }
  c.seed = 10;
  const auto d = simulate(c);
  bool differs = false;
  for (std::size_t i = 0; i < std::min(a.trace.size(), d.trace.size()) && !differs; ++i) {
    differs = a.trace[i].rss != d.trace[i].rss;
  }
  CHECK(differs);
}

TEST_CASE("calibration uses the same channel and independent noise") {
  auto c = scenario_preset("outdoor", 2);
  c.frames = 10;
  const auto run = simulate(c);
  const auto cal = simulate_calibration(c, 10);
  CHECK(run.truth.baseline == cal.truth.baseline);
  for (const auto& w : cal.truth.walker) CHECK_FALSE(w.has_value());
  bool differs = false;
  for (std::size_t i = 0; i < run.trace.size() && !differs; ++i) differs = run.trace[i].rss != cal.trace[i].rss;
  CHECK(differs);
}

TEST_CASE("drop rate matches the configured probability") {
  auto c = scenario_preset("outdoor", 5);
  c.walker.reset();
  c.frames = 200;
  c.drop_probability = 0.2;
  const auto sim = simulate(c);
  const double n = static_cast<double>(sim.probes);
  const double dropped = n - static_cast<double>(sim.trace.size());
  const double se = std::sqrt(0.2 * 0.8 / n);
  CHECK(std::abs(dropped / n - 0.2) < 3.0 * se);
  CHECK(sim.trace.size() == c.frames * 22);
}

TEST_CASE("outdoor affected set is exactly the line-of-sight set") {
  auto c = scenario_preset("outdoor", 6);
  c.frames = 100;
  const auto sim = simulate(c);
  const ChannelModel channel(sim.topology, c);
  for (std::size_t k = 0; k < c.frames; ++k) {
    const Point z = *sim.truth.walker[k];
    std::vector<LinkIndex> los;
    for (LinkIndex l = 0; l < sim.topology.link_count(); ++l) {
      if (point_segment_distance(z, sim.topology.endpoint_a(l), sim.topology.endpoint_b(l)) < c.obstruction_radius_m) {
        los.push_back(l);
      }
    }
    CHECK(sim.truth.affected[k] == los);
  }
}

TEST_CASE("multipath aliases appear only indoors, on roughly p_mp of links") {
  auto c = scenario_preset("indoor", 8);
  const auto topo = NetworkTopology::build(c.nodes, c.region);
  const ChannelModel indoor(topo, c);
  std::size_t aliased = 0;
  for (LinkIndex l = 0; l < topo.link_count(); ++l) {
    if (!indoor.has_alias(l)) continue;
    ++aliased;
    const auto& al = *indoor.alias(l);
    CHECK(std::abs(al.sign) == 1);
    // Alias runs parallel to the link at the configured offset.
    const double d = point_segment_distance(al.a, topo.endpoint_a(l), topo.endpoint_b(l));
    CHECK(d >= c.multipath_offset_min_m - 1e-9);
    CHECK(d <= c.multipath_offset_max_m + 1e-9);
    CHECK(distance(al.a, al.b) == doctest::Approx(topo.links()[l].length));
  }
  const double n = static_cast<double>(topo.link_count());
  const double p = c.multipath_fraction;
  CHECK(std::abs(static_cast<double>(aliased) / n - p) < 3.0 * std::sqrt(p * (1 - p) / n));

  c.mode = Environment::Outdoor;
  const ChannelModel outdoor(topo, c);
  for (LinkIndex l = 0; l < topo.link_count(); ++l) CHECK_FALSE(outdoor.has_alias(l));
}

TEST_CASE("attenuation draws respect the floor") {
  auto c = scenario_preset("outdoor", 12);
  c.attenuation_mean_db = 1.0;
  c.attenuation_sigma_db = 3.0;
  const auto topo = NetworkTopology::build(c.nodes, c.region);
  const ChannelModel ch(topo, c);
  for (LinkIndex l = 0; l < topo.link_count(); ++l) CHECK(ch.attenuation(l) >= 0.5);
}

TEST_CASE("frame period for 22 nodes at 5 ms probes") {
  auto c = scenario_preset("outdoor", 1);
  c.frames = 5;
  const auto sim = simulate(c);
  const double period = sim.truth.frame_time_ms[1] - sim.truth.frame_time_ms[0];
  CHECK(period == doctest::Approx(110.0));
}

TEST_CASE("walker path geometry") {
  WalkerPath p{{{0, 0}, {2, 0}, {2, 2}}, 1.0, true};
  CHECK(p.length() == doctest::Approx(2.0 + 2.0 + std::sqrt(8.0)));
  CHECK(p.position_at(1.0).x == doctest::Approx(1.0));
  CHECK(p.position_at(3.0).y == doctest::Approx(1.0));
  const Point wrapped = p.position_at(p.length() + 0.5);
  CHECK(wrapped.x == doctest::Approx(0.5));
  WalkerPath once{{{0, 0}, {1, 0}}, 1.0, false};
  CHECK(once.position_at(5.0).x == doctest::Approx(1.0));
  const auto loop = rectangle_walk(Rect{0, 0, 7, 7}, 0.5, 1.2);
  CHECK(loop.length() == doctest::Approx(24.0));
}

TEST_CASE("walker leaving the region is an error") {
  auto c = toy();
  c.walker = WalkerPath{{{1, 1}, {9, 1}}, 1.0, false};
  CHECK_THROWS_AS(simulate(c), Error);
}

TEST_CASE("scenario json round trip and validation") {
  const auto c = scenario_preset("through-wall", 3);
  const auto back = scenario_from_json(scenario_to_json(c));
  CHECK(back.nodes.size() == c.nodes.size());
  CHECK(back.mode == Environment::ThroughWall);
  CHECK(back.multipath_fraction == c.multipath_fraction);
  CHECK(back.seed == 3);
  CHECK(back.walker->waypoints.size() == c.walker->waypoints.size());

  const auto p = scenario_from_json(nlohmann::json{{"preset", "indoor"}, {"seed", 4}, {"noise_sigma_dbm", 2.5}});
  CHECK(p.noise_sigma_dbm == 2.5);
  CHECK(p.nodes.size() == 24);
  CHECK_THROWS_AS(scenario_from_json(nlohmann::json{{"preset", "indoor"}, {"noise", 1}}), Error);

  ScenarioConfig bad = c;
  bad.drop_probability = 1.0;
  bad.frames = 0;
  bad.multipath_fraction = 2.0;
  CHECK(bad.validate().size() == 3);
}
