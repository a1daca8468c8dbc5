#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "rfbg/topology.hpp"

using namespace rfbg;

namespace {

// Cells hit by dense midpoint sampling along the segment.
std::vector<std::size_t> sampled_cells(const Rect& r, double cw, double ch, Point a, Point b,
                                       int samples = 10000) {
  const auto cols = static_cast<std::size_t>(std::ceil(r.width() / cw - 1e-9));
  const auto rows = static_cast<std::size_t>(std::ceil(r.height() / ch - 1e-9));
  std::set<std::size_t> hit;
  for (int i = 0; i < samples; ++i) {
    const double t = (i + 0.5) / samples;
    const double x = a.x + t * (b.x - a.x);
    const double y = a.y + t * (b.y - a.y);
    auto col = static_cast<std::size_t>(std::floor((x - r.x0) / cw));
    auto row = static_cast<std::size_t>(std::floor((y - r.y0) / ch));
    col = std::min(col, cols - 1);
    row = std::min(row, rows - 1);
    hit.insert(row * cols + col);
  }
  return {hit.begin(), hit.end()};
}

// Every piece between grid crossings must be long enough to be sampled twice.
bool generic_segment(Point a, Point b, double cw, double ch, double r_w, double r_h) {
  std::vector<double> ts{0.0, 1.0};
  for (double g = cw; g < r_w - 1e-12; g += cw) {
    if (b.x != a.x) {
      const double t = (g - a.x) / (b.x - a.x);
      if (t > 0 && t < 1) ts.push_back(t);
    }
    if (std::abs(a.x - g) < 1e-3 || std::abs(b.x - g) < 1e-3) return false;
  }
  for (double g = ch; g < r_h - 1e-12; g += ch) {
    if (b.y != a.y) {
      const double t = (g - a.y) / (b.y - a.y);
      if (t > 0 && t < 1) ts.push_back(t);
    }
    if (std::abs(a.y - g) < 1e-3 || std::abs(b.y - g) < 1e-3) return false;
  }
  std::sort(ts.begin(), ts.end());
  for (std::size_t i = 1; i < ts.size(); ++i) {
    if (ts[i] - ts[i - 1] < 3e-4) return false;
  }
  return true;
}

std::vector<Node> six_node_example() {
  return {{1, {0, 0.5}}, {2, {7, 0.5}}, {3, {6.5, 0.2}}, {4, {6.5, 1.8}}, {5, {0, 0.3}}, {6, {7, 1.7}}};
}

}  // namespace

TEST_CASE("build rejects bad node sets") {
  CHECK_THROWS_AS(NetworkTopology::build({{1, {0, 0}}, {2, {1, 0}}}), Error);
  CHECK_THROWS_AS(NetworkTopology::build({{1, {0, 0}}, {1, {1, 0}}, {3, {0, 1}}}), Error);
  CHECK_THROWS_AS(NetworkTopology::build({{1, {0, 0}}, {2, {0, 0}}, {3, {0, 1}}}), Error);
  CHECK_THROWS_AS(NetworkTopology::build({{1, {0, 0}}, {2, {1, 0}}, {3, {0, 5}}}, Rect{0, 0, 2, 2}),
                  Error);
}

TEST_CASE("links enumerate every pair in lexicographic order") {
  const auto topo = NetworkTopology::build({{7, {0, 0}}, {3, {3, 0}}, {5, {0, 4}}, {9, {3, 4}}});
  REQUIRE(topo.link_count() == 6);
  std::vector<std::pair<int, int>> got;
  for (const auto& l : topo.links()) got.emplace_back(l.a, l.b);
  const std::vector<std::pair<int, int>> want{{3, 5}, {3, 7}, {3, 9}, {5, 7}, {5, 9}, {7, 9}};
  CHECK(got == want);
  CHECK(topo.links()[0].length == doctest::Approx(5.0));
  CHECK(*topo.find_link(9, 3) == 2);
  CHECK_FALSE(topo.find_link(3, 4).has_value());
  CHECK(topo.region().x1 == 3.0);
  CHECK(topo.region().y1 == 4.0);
}

TEST_CASE("link count is M(M-1)/2 for perimeter layouts") {
  for (std::size_t m : {3u, 8u, 22u, 24u}) {
    const auto topo = NetworkTopology::build(perimeter_layout(m, 7, 7), Rect{0, 0, 7, 7});
    CHECK(topo.link_count() == m * (m - 1) / 2);
  }
}

TEST_CASE("perimeter layout walks counter-clockwise from the origin") {
  const auto nodes = perimeter_layout(4, 2, 2);
  REQUIRE(nodes.size() == 4);
  CHECK(nodes[0].id == 1);
  CHECK(nodes[0].pos.x == doctest::Approx(0));
  CHECK(nodes[1].pos.x == doctest::Approx(2));
  CHECK(nodes[1].pos.y == doctest::Approx(0));
  CHECK(nodes[2].pos.y == doctest::Approx(2));
  CHECK(nodes[3].pos.x == doctest::Approx(0));
}

TEST_CASE("point to segment distance") {
  CHECK(point_segment_distance({1, 1}, {0, 0}, {2, 0}) == doctest::Approx(1));
  CHECK(point_segment_distance({3, 0}, {0, 0}, {2, 0}) == doctest::Approx(1));
  CHECK(point_segment_distance({-3, 4}, {0, 0}, {0, 0}) == doctest::Approx(5));
}

TEST_CASE("six-node worked example: cell counts and overlap percentages") {
  const auto topo = NetworkTopology::build(six_node_example(), Rect{0, 0, 7, 7});
  const auto part = link_cells(topo, {1.0, 1.0});
  const LinkIndex l1 = *topo.find_link(3, 4);
  const LinkIndex l2 = *topo.find_link(1, 2);
  const LinkIndex l3 = *topo.find_link(5, 6);
  CHECK(part.cells(l1).size() == 2);
  CHECK(part.cells(l2).size() == 7);
  CHECK(part.cells(l3).size() == 8);
  CHECK(chi(part, l1, l2) == 50.0);
  CHECK(chi(part, l2, l3) == doctest::Approx(400.0 / 7.0).epsilon(1e-12));
  CHECK(chi(part, l3, l2) == chi(part, l2, l3));
}

TEST_CASE("corner contact alone does not claim a cell") {
  // Diagonal through grid corners touches the off-diagonal cells only at points.
  const auto cells = segment_cells(Rect{0, 0, 3, 3}, 1, 1, {0, 0}, {3, 3});
  CHECK(cells == std::vector<std::size_t>{0, 4, 8});
}

TEST_CASE("segment on a grid line belongs to both sides") {
  const auto cells = segment_cells(Rect{0, 0, 3, 3}, 1, 1, {0.5, 1.0}, {2.5, 1.0});
  CHECK(cells == std::vector<std::size_t>{0, 1, 2, 3, 4, 5});
  const auto edge = segment_cells(Rect{0, 0, 3, 3}, 1, 1, {0.0, 0.5}, {0.0, 2.5});
  CHECK(edge == std::vector<std::size_t>{0, 3, 6});
}

TEST_CASE("last row and column are truncated") {
  const auto topo = NetworkTopology::build({{1, {0, 0}}, {2, {2.5, 0}}, {3, {2.5, 2.5}}},
                                           Rect{0, 0, 2.5, 2.5});
  const auto part = link_cells(topo, {1.0, 1.0});
  CHECK(part.cols() == 3);
  CHECK(part.rows() == 3);
  const Rect last = part.cell_rect(8);
  CHECK(last.x0 == doctest::Approx(2.0));
  CHECK(last.x1 == doctest::Approx(2.5));
  CHECK(part.cells(*topo.find_link(2, 3)) == std::vector<std::size_t>{2, 5, 8});
}

TEST_CASE("exact traversal agrees with dense sampling") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 4.0);
  int checked = 0;
  while (checked < 300) {
    const Point a{u(rng), u(rng)};
    const Point b{u(rng), u(rng)};
    if (!generic_segment(a, b, 0.8, 0.8, 4.0, 4.0)) continue;
    CHECK(segment_cells(Rect{0, 0, 4, 4}, 0.8, 0.8, a, b) == sampled_cells(Rect{0, 0, 4, 4}, 0.8, 0.8, a, b));
    ++checked;
  }
}

TEST_CASE("partition inverse index is consistent") {
  const auto topo = NetworkTopology::build(perimeter_layout(12, 5, 5), Rect{0, 0, 5, 5});
  const auto part = link_cells(topo, {1.0, 1.0});
  for (LinkIndex l = 0; l < topo.link_count(); ++l) {
    const auto& rho = part.cells(l);
    CHECK(std::is_sorted(rho.begin(), rho.end()));
    CHECK_FALSE(rho.empty());
    for (auto c : rho) {
      const auto& through = part.links_through(c);
      CHECK(std::binary_search(through.begin(), through.end(), l));
    }
  }
}

TEST_CASE("scaling coordinates and cells together preserves cells") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  for (int i = 0; i < 100; ++i) {
    const Point a{u(rng), u(rng)};
    const Point b{u(rng), u(rng)};
    if (!generic_segment(a, b, 1, 1, 5, 5)) continue;
    for (double s : {0.5, 3.0}) {
      CHECK(segment_cells(Rect{0, 0, 5, 5}, 1, 1, a, b) ==
            segment_cells(Rect{0, 0, 5 * s, 5 * s}, s, s, {a.x * s, a.y * s}, {b.x * s, b.y * s}));
    }
  }
}

TEST_CASE("chi properties over random topologies") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 5.0);
    std::vector<Node> nodes;
    for (int i = 0; i < 6; ++i) nodes.push_back({i + 1, {u(rng), u(rng)}});
    const auto topo = NetworkTopology::build(nodes, Rect{0, 0, 5, 5});
    const auto part = link_cells(topo, {1.0, 1.0});
    for (LinkIndex i = 0; i < topo.link_count(); ++i) {
      CHECK(chi(part, i, i) == 100.0);
      for (LinkIndex j = i + 1; j < topo.link_count(); ++j) {
        const double c = chi(part, i, j);
        CHECK(c >= 0.0);
        CHECK(c <= 100.0);
        CHECK(c == chi(part, j, i));
      }
    }
  }
}

TEST_CASE("neighbourhoods are symmetric and exclude self") {
  const auto topo = NetworkTopology::build(perimeter_layout(14, 4, 4), Rect{0, 0, 4, 4});
  const auto part = link_cells(topo, {1.0, 1.0});
  for (double tau : {0.0, 0.3, 1.0}) {
    for (double c : {15.0, 50.0, 100.0}) {
      const auto nb = build_neighbourhoods(topo, part, tau, c);
      for (LinkIndex l = 0; l < topo.link_count(); ++l) {
        CHECK_FALSE(std::binary_search(nb.length[l].begin(), nb.length[l].end(), l));
        CHECK_FALSE(std::binary_search(nb.overlap[l].begin(), nb.overlap[l].end(), l));
        for (auto m : nb.length[l]) {
          CHECK(std::abs(topo.links()[l].length - topo.links()[m].length) <= tau + kLengthTolerance);
          CHECK(std::binary_search(nb.length[m].begin(), nb.length[m].end(), l));
        }
        for (auto m : nb.overlap[l]) {
          CHECK(chi(part, l, m) >= c - 1e-9);
          CHECK(std::binary_search(nb.overlap[m].begin(), nb.overlap[m].end(), l));
        }
      }
    }
  }
}

TEST_CASE("length neighbourhood matches brute force") {
  const auto topo = NetworkTopology::build(perimeter_layout(16, 3, 3.6), Rect{0, 0, 3, 3.6});
  for (double tau : {0.0, 0.25, 0.75}) {
    const auto nb = length_neighbourhoods(topo, tau);
    for (LinkIndex l = 0; l < topo.link_count(); ++l) {
      std::vector<LinkIndex> want;
      for (LinkIndex m = 0; m < topo.link_count(); ++m) {
        if (m != l && std::abs(topo.links()[l].length - topo.links()[m].length) <= tau + kLengthTolerance) {
          want.push_back(m);
        }
      }
      CHECK(nb[l] == want);
    }
  }
}

TEST_CASE("overlap threshold must lie in (0, 100]") {
  const auto topo = NetworkTopology::build(six_node_example(), Rect{0, 0, 7, 7});
  const auto part = link_cells(topo, {1.0, 1.0});
  CHECK_THROWS_AS(build_neighbourhoods(topo, part, 0.0, 0.0), Error);
  CHECK_THROWS_AS(build_neighbourhoods(topo, part, 0.0, 100.5), Error);
  CHECK_NOTHROW(build_neighbourhoods(topo, part, 0.0, 100.0));
}

TEST_CASE("default partition uses the modal node spacing") {
  const auto topo = NetworkTopology::build(perimeter_layout(28, 7, 7), Rect{0, 0, 7, 7});
  CHECK(topo.modal_node_spacing() == doctest::Approx(1.0));
  const auto p = default_partition_params(topo);
  CHECK(p.cell_width == doctest::Approx(1.0));
  CHECK(p.cell_height == doctest::Approx(1.0));
}

TEST_CASE("topology json round trip") {
  const auto topo = NetworkTopology::build(six_node_example(), Rect{0, 0, 7, 7});
  const auto text = topology_to_json(topo, PartitionParams{0.5, 0.25});
  const auto back = parse_topology_json(text);
  REQUIRE(back.topology.link_count() == topo.link_count());
  for (LinkIndex l = 0; l < topo.link_count(); ++l) {
    CHECK(back.topology.links()[l].length == topo.links()[l].length);
  }
  REQUIRE(back.partition.has_value());
  CHECK(back.partition->cell_width == 0.5);
  CHECK(back.partition->cell_height == 0.25);
  CHECK_THROWS_AS(parse_topology_json("{\"nodes\": 3}"), Error);
  CHECK_THROWS_AS(parse_topology_json("not json"), Error);
}
