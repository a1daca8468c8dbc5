#include "rfbg/topology.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include <json.hpp>

namespace rfbg {

using json = nlohmann::json;

double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

double point_segment_distance(Point p, Point a, Point b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  if (len2 == 0.0) return distance(p, a);
  double t = ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2;
  t = std::clamp(t, 0.0, 1.0);
  return distance(p, {a.x + t * dx, a.y + t * dy});
}

double Rect::diagonal() const { return std::hypot(width(), height()); }

bool Rect::contains(Point p, double tol) const {
  return p.x >= x0 - tol && p.x <= x1 + tol && p.y >= y0 - tol && p.y <= y1 + tol;
}

NetworkTopology NetworkTopology::build(std::vector<Node> nodes, std::optional<Rect> region) {
  if (nodes.size() < 3) {
    throw Error("topology needs at least 3 nodes, got " + std::to_string(nodes.size()));
  }
  std::sort(nodes.begin(), nodes.end(), [](const Node& l, const Node& r) { return l.id < r.id; });
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (!std::isfinite(nodes[i].pos.x) || !std::isfinite(nodes[i].pos.y)) {
      throw Error("node " + std::to_string(nodes[i].id) + " has a non-finite position");
    }
    if (i > 0 && nodes[i].id == nodes[i - 1].id) {
      throw Error("duplicate node id " + std::to_string(nodes[i].id));
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (nodes[i].pos.x == nodes[j].pos.x && nodes[i].pos.y == nodes[j].pos.y) {
        throw Error("nodes " + std::to_string(nodes[j].id) + " and " +
                    std::to_string(nodes[i].id) + " share a position");
      }
    }
  }

  NetworkTopology t;
  if (region) {
    if (!(region->x1 > region->x0) || !(region->y1 > region->y0)) {
      throw Error("region must have positive width and height");
    }
    for (const auto& n : nodes) {
      if (!region->contains(n.pos)) {
        throw Error("node " + std::to_string(n.id) + " lies outside the region");
      }
    }
    t.region_ = *region;
  } else {
    Rect box{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
             -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (const auto& n : nodes) {
      box.x0 = std::min(box.x0, n.pos.x);
      box.y0 = std::min(box.y0, n.pos.y);
      box.x1 = std::max(box.x1, n.pos.x);
      box.y1 = std::max(box.y1, n.pos.y);
    }
    t.region_ = box;
  }

  const std::size_t m = nodes.size();
  t.pair_index_.assign(m * m, std::numeric_limits<std::size_t>::max());
  t.links_.reserve(m * (m - 1) / 2);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      Link l;
      l.index = t.links_.size();
      l.a = nodes[i].id;
      l.b = nodes[j].id;
      l.node_a = i;
      l.node_b = j;
      l.length = distance(nodes[i].pos, nodes[j].pos);
      t.pair_index_[i * m + j] = l.index;
      t.pair_index_[j * m + i] = l.index;
      t.links_.push_back(l);
    }
  }
  t.nodes_ = std::move(nodes);
  return t;
}

std::optional<std::size_t> NetworkTopology::node_position(int id) const {
  auto it = std::lower_bound(nodes_.begin(), nodes_.end(), id,
                             [](const Node& n, int v) { return n.id < v; });
  if (it == nodes_.end() || it->id != id) return std::nullopt;
  return static_cast<std::size_t>(it - nodes_.begin());
}

std::optional<LinkIndex> NetworkTopology::find_link(int a, int b) const {
  auto pa = node_position(a);
  auto pb = node_position(b);
  if (!pa || !pb || *pa == *pb) return std::nullopt;
  return pair_index_[*pa * nodes_.size() + *pb];
}

double NetworkTopology::modal_node_spacing() const {
  std::map<long long, int> histogram;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < nodes_.size(); ++j) {
      if (i != j) best = std::min(best, distance(nodes_[i].pos, nodes_[j].pos));
    }
    ++histogram[std::llround(best * 1e6)];
  }
  long long mode = 0;
  int count = -1;
  for (const auto& [key, c] : histogram) {
    if (c > count) {
      mode = key;
      count = c;
    }
  }
  return static_cast<double>(mode) * 1e-6;
}

Rect RectanglePartition::cell_rect(std::size_t cell) const {
  const std::size_t row = cell / cols_;
  const std::size_t col = cell % cols_;
  Rect r;
  r.x0 = region_.x0 + static_cast<double>(col) * cell_w_;
  r.y0 = region_.y0 + static_cast<double>(row) * cell_h_;
  r.x1 = std::min(r.x0 + cell_w_, region_.x1);
  r.y1 = std::min(r.y0 + cell_h_, region_.y1);
  return r;
}

const std::vector<std::size_t>& RectanglePartition::cells(LinkIndex l) const {
  if (l >= link_cells_.size()) throw Error("unknown link index " + std::to_string(l));
  return link_cells_[l];
}

const std::vector<LinkIndex>& RectanglePartition::links_through(std::size_t cell) const {
  if (cell >= cell_links_.size()) throw Error("unknown cell index " + std::to_string(cell));
  return cell_links_[cell];
}

namespace {

std::size_t cells_along(double extent, double cell) {
  // Guard against 7.0 / 1.0000000001 style round-off adding a sliver cell.
  const double q = extent / cell;
  const double r = std::round(q);
  if (std::abs(q - r) < 1e-9 * std::max(1.0, r)) return static_cast<std::size_t>(std::max(1.0, r));
  return static_cast<std::size_t>(std::ceil(q));
}

// Grid-line index if `u` (in cell units) sits on a line, else -1.
long on_grid_line(double u) {
  const double r = std::round(u);
  return std::abs(u - r) < 1e-9 ? static_cast<long>(r) : -1;
}

std::size_t clamp_index(double u, std::size_t n) {
  if (u < 0.0) return 0;
  const auto i = static_cast<std::size_t>(std::floor(u));
  return std::min(i, n - 1);
}

}  // namespace

std::vector<std::size_t> segment_cells(const Rect& region, double cell_w, double cell_h, Point a,
                                       Point b) {
  if (!(cell_w > 0.0) || !(cell_h > 0.0)) throw Error("cell dimensions must be positive");
  const std::size_t cols = cells_along(region.width(), cell_w);
  const std::size_t rows = cells_along(region.height(), cell_h);

  const double ua = (a.x - region.x0) / cell_w;
  const double ub = (b.x - region.x0) / cell_w;
  const double va = (a.y - region.y0) / cell_h;
  const double vb = (b.y - region.y0) / cell_h;

  std::vector<double> ts{0.0, 1.0};
  auto add_crossings = [&ts](double p, double q, std::size_t n) {
    if (p == q) return;
    const double lo = std::min(p, q);
    const double hi = std::max(p, q);
    for (long k = static_cast<long>(std::ceil(lo)); k <= static_cast<long>(std::floor(hi)); ++k) {
      if (k <= 0 || k >= static_cast<long>(n)) continue;
      const double t = (static_cast<double>(k) - p) / (q - p);
      if (t > 0.0 && t < 1.0) ts.push_back(t);
    }
  };
  add_crossings(ua, ub, cols);
  add_crossings(va, vb, rows);
  std::sort(ts.begin(), ts.end());

  // Axis-parallel segments can run along a grid line and then touch two columns/rows.
  const long vertical_line = (ua == ub) ? on_grid_line(ua) : -1;
  const long horizontal_line = (va == vb) ? on_grid_line(va) : -1;

  std::vector<std::size_t> out;
  const double seg_len_cells = std::hypot(ub - ua, vb - va);
  for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
    const double t0 = ts[i];
    const double t1 = ts[i + 1];
    if ((t1 - t0) * seg_len_cells <= 1e-12) continue;
    const double tm = 0.5 * (t0 + t1);
    const double u = ua + tm * (ub - ua);
    const double v = va + tm * (vb - va);

    std::vector<std::size_t> col_choices;
    if (vertical_line >= 0) {
      if (vertical_line - 1 >= 0 && vertical_line - 1 < static_cast<long>(cols))
        col_choices.push_back(static_cast<std::size_t>(vertical_line - 1));
      if (vertical_line < static_cast<long>(cols))
        col_choices.push_back(static_cast<std::size_t>(vertical_line));
    } else {
      col_choices.push_back(clamp_index(u, cols));
    }
    std::vector<std::size_t> row_choices;
    if (horizontal_line >= 0) {
      if (horizontal_line - 1 >= 0 && horizontal_line - 1 < static_cast<long>(rows))
        row_choices.push_back(static_cast<std::size_t>(horizontal_line - 1));
      if (horizontal_line < static_cast<long>(rows))
        row_choices.push_back(static_cast<std::size_t>(horizontal_line));
    } else {
      row_choices.push_back(clamp_index(v, rows));
    }
    for (auto r : row_choices) {
      for (auto c : col_choices) out.push_back(r * cols + c);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

RectanglePartition link_cells(const NetworkTopology& topology, const PartitionParams& params) {
  if (!(params.cell_width > 0.0) || !(params.cell_height > 0.0)) {
    throw Error("cell dimensions must be positive");
  }
  const Rect& region = topology.region();
  if (!(region.width() > 0.0) || !(region.height() > 0.0)) {
    throw Error("region has zero extent; supply an explicit region");
  }
  RectanglePartition p;
  p.region_ = region;
  p.cell_w_ = params.cell_width;
  p.cell_h_ = params.cell_height;
  p.cols_ = cells_along(region.width(), params.cell_width);
  p.rows_ = cells_along(region.height(), params.cell_height);
  p.link_cells_.resize(topology.link_count());
  p.cell_links_.resize(p.cols_ * p.rows_);
  for (const auto& link : topology.links()) {
    auto cells = segment_cells(region, p.cell_w_, p.cell_h_, topology.endpoint_a(link.index),
                               topology.endpoint_b(link.index));
    if (cells.empty()) throw Error("link crosses no cell of the partition");
    for (auto c : cells) p.cell_links_[c].push_back(link.index);
    p.link_cells_[link.index] = std::move(cells);
  }
  return p;
}

PartitionParams default_partition_params(const NetworkTopology& topology) {
  const double s = topology.modal_node_spacing();
  return {s, s};
}

double chi(const RectanglePartition& partition, LinkIndex l1, LinkIndex l2) {
  const auto& r1 = partition.cells(l1);
  const auto& r2 = partition.cells(l2);
  std::size_t shared = 0;
  auto i = r1.begin();
  auto j = r2.begin();
  while (i != r1.end() && j != r2.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++shared;
      ++i;
      ++j;
    }
  }
  return 100.0 * static_cast<double>(shared) / static_cast<double>(std::min(r1.size(), r2.size()));
}

std::vector<std::vector<LinkIndex>> length_neighbourhoods(const NetworkTopology& topology,
                                                          double tau) {
  if (!(tau >= 0.0)) throw Error("tau must be non-negative");
  const auto& links = topology.links();
  std::vector<LinkIndex> by_length(links.size());
  for (std::size_t i = 0; i < links.size(); ++i) by_length[i] = i;
  std::sort(by_length.begin(), by_length.end(), [&](LinkIndex l, LinkIndex r) {
    return links[l].length < links[r].length || (links[l].length == links[r].length && l < r);
  });

  std::vector<std::vector<LinkIndex>> out(links.size());
  const double reach = tau + kLengthTolerance;
  for (std::size_t i = 0; i < by_length.size(); ++i) {
    const LinkIndex li = by_length[i];
    for (std::size_t j = i + 1; j < by_length.size(); ++j) {
      const LinkIndex lj = by_length[j];
      if (links[lj].length - links[li].length > reach) break;
      out[li].push_back(lj);
      out[lj].push_back(li);
    }
  }
  for (auto& v : out) std::sort(v.begin(), v.end());
  return out;
}

NeighbourhoodIndex build_neighbourhoods(const NetworkTopology& topology,
                                        const RectanglePartition& partition, double tau,
                                        double overlap_c) {
  if (!(overlap_c > 0.0 && overlap_c <= 100.0)) {
    throw Error("overlap threshold C must lie in (0, 100]");
  }
  if (partition.link_count() != topology.link_count()) {
    throw Error("partition was built for a different topology");
  }
  NeighbourhoodIndex idx;
  idx.tau = tau;
  idx.overlap_c = overlap_c;
  idx.length = length_neighbourhoods(topology, tau);

  const std::size_t n = topology.link_count();
  idx.overlap.resize(n);
  std::vector<std::size_t> shared(n, 0);
  std::vector<LinkIndex> touched;
  for (LinkIndex l = 0; l < n; ++l) {
    touched.clear();
    for (auto c : partition.cells(l)) {
      for (auto other : partition.links_through(c)) {
        if (other == l) continue;
        if (shared[other]++ == 0) touched.push_back(other);
      }
    }
    const double own = static_cast<double>(partition.cells(l).size());
    for (auto other : touched) {
      const double smaller = std::min(own, static_cast<double>(partition.cells(other).size()));
      const double pct = static_cast<double>(shared[other]) / smaller * 100.0;
      if (pct >= overlap_c - 1e-9) idx.overlap[l].push_back(other);
      shared[other] = 0;
    }
    std::sort(idx.overlap[l].begin(), idx.overlap[l].end());
  }
  return idx;
}

TopologyFile parse_topology_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(std::string("topology: invalid JSON: ") + e.what());
  }
  if (!doc.contains("nodes") || !doc["nodes"].is_array()) {
    throw Error("topology: missing 'nodes' array");
  }
  std::vector<Node> nodes;
  try {
    for (const auto& n : doc["nodes"]) {
      nodes.push_back({n.at("id").get<int>(), {n.at("x").get<double>(), n.at("y").get<double>()}});
    }
  } catch (const json::exception& e) {
    throw Error(std::string("topology: bad node entry: ") + e.what());
  }
  std::optional<Rect> region;
  if (doc.contains("region")) {
    const auto& r = doc["region"];
    region = Rect{r.at("x0").get<double>(), r.at("y0").get<double>(), r.at("x1").get<double>(),
                  r.at("y1").get<double>()};
  }
  TopologyFile out{NetworkTopology::build(std::move(nodes), region), std::nullopt};
  if (doc.contains("cell_width") || doc.contains("cell_height")) {
    const double w = doc.value("cell_width", doc.value("cell_height", 0.0));
    const double h = doc.value("cell_height", w);
    out.partition = PartitionParams{w, h};
  }
  return out;
}

TopologyFile load_topology(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open topology file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_topology_json(ss.str());
}

std::string topology_to_json(const NetworkTopology& topology,
                             const std::optional<PartitionParams>& partition) {
  json doc;
  doc["nodes"] = json::array();
  for (const auto& n : topology.nodes()) {
    doc["nodes"].push_back({{"id", n.id}, {"x", n.pos.x}, {"y", n.pos.y}});
  }
  const Rect& r = topology.region();
  doc["region"] = {{"x0", r.x0}, {"y0", r.y0}, {"x1", r.x1}, {"y1", r.y1}};
  if (partition) {
    doc["cell_width"] = partition->cell_width;
    doc["cell_height"] = partition->cell_height;
  }
  return doc.dump(2);
}

std::vector<Node> perimeter_layout(std::size_t count, double width, double height) {
  const double perimeter = 2.0 * (width + height);
  const double step = perimeter / static_cast<double>(count);
  std::vector<Node> nodes;
  nodes.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    double s = step * static_cast<double>(i);
    Point p;
    if (s < width) {
      p = {s, 0.0};
    } else if ((s -= width) < height) {
      p = {width, s};
    } else if ((s -= height) < width) {
      p = {width - s, height};
    } else {
      s -= width;
      p = {0.0, height - s};
    }
    nodes.push_back({static_cast<int>(i + 1), p});
  }
  return nodes;
}

}  // namespace rfbg
