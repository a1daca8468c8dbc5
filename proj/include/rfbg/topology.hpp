#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rfbg/error.hpp"

namespace rfbg {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

double distance(Point a, Point b);

// Distance from p to the closed segment [a, b].
double point_segment_distance(Point p, Point a, Point b);

struct Rect {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 0.0;
  double y1 = 0.0;

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double diagonal() const;
  bool contains(Point p, double tol = 1e-9) const;
};

struct Node {
  int id = 0;
  Point pos;
};

using LinkIndex = std::size_t;

// Bidirectional link between two nodes. Endpoint ids satisfy a < b.
struct Link {
  LinkIndex index = 0;
  int a = 0;
  int b = 0;
  std::size_t node_a = 0;  // position of `a` in NetworkTopology::nodes()
  std::size_t node_b = 0;
  double length = 0.0;
};

// Fully connected sensor network: every unordered node pair is one link.
// Links are ordered lexicographically by (a, b). Immutable once built.
class NetworkTopology {
 public:
  // Throws Error on fewer than 3 nodes, duplicate ids, duplicate positions, or
  // nodes outside an explicit region. Without a region the node bounding box
  // is used.
  static NetworkTopology build(std::vector<Node> nodes,
                               std::optional<Rect> region = std::nullopt);

  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Link>& links() const { return links_; }
  const Rect& region() const { return region_; }
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t link_count() const { return links_.size(); }

  std::optional<std::size_t> node_position(int id) const;
  std::optional<LinkIndex> find_link(int a, int b) const;
  Point endpoint_a(LinkIndex l) const { return nodes_[links_.at(l).node_a].pos; }
  Point endpoint_b(LinkIndex l) const { return nodes_[links_.at(l).node_b].pos; }

  // Most frequent nearest-neighbour node spacing (rounded to 1 um; ties go to
  // the smaller spacing).
  double modal_node_spacing() const;

 private:
  std::vector<Node> nodes_;
  std::vector<Link> links_;
  std::vector<std::size_t> pair_index_;  // node_count^2 lookup, row-major
  Rect region_;
};

struct PartitionParams {
  double cell_width = 0.0;
  double cell_height = 0.0;
};

// Tiling of the region into axis-aligned rectangles; the last column and row
// are truncated when the cell size does not divide the region. Cell index is
// row * cols + col, row 0 at region.y0.
class RectanglePartition {
 public:
  const Rect& region() const { return region_; }
  double cell_width() const { return cell_w_; }
  double cell_height() const { return cell_h_; }
  std::size_t cols() const { return cols_; }
  std::size_t rows() const { return rows_; }
  std::size_t cell_count() const { return cols_ * rows_; }
  std::size_t link_count() const { return link_cells_.size(); }
  Rect cell_rect(std::size_t cell) const;

  // Sorted cell indices crossed by link l (rho).
  const std::vector<std::size_t>& cells(LinkIndex l) const;
  // Sorted link indices crossing cell c.
  const std::vector<LinkIndex>& links_through(std::size_t cell) const;

 private:
  friend RectanglePartition link_cells(const NetworkTopology&, const PartitionParams&);

  Rect region_;
  double cell_w_ = 0.0;
  double cell_h_ = 0.0;
  std::size_t cols_ = 0;
  std::size_t rows_ = 0;
  std::vector<std::vector<std::size_t>> link_cells_;
  std::vector<std::vector<LinkIndex>> cell_links_;
};

// Cells whose closed rectangle contains a positive-length piece of the
// segment [a, b]. Corner contact alone does not count. A segment lying on a
// shared grid line belongs to the cells on both sides.
std::vector<std::size_t> segment_cells(const Rect& region, double cell_w, double cell_h,
                                       Point a, Point b);

RectanglePartition link_cells(const NetworkTopology& topology, const PartitionParams& params);

// Default partition: square cells sized by the modal nearest-neighbour spacing.
PartitionParams default_partition_params(const NetworkTopology& topology);

// Shared-rectangle percentage |rho1 & rho2| / min(|rho1|, |rho2|) * 100.
double chi(const RectanglePartition& partition, LinkIndex l1, LinkIndex l2);

// Length-similarity (L) and rectangle-overlap (S_R) neighbour sets. A link is
// never its own neighbour; both relations are symmetric. Sets are sorted.
struct NeighbourhoodIndex {
  double tau = 0.0;
  double overlap_c = 100.0;
  std::vector<std::vector<LinkIndex>> length;
  std::vector<std::vector<LinkIndex>> overlap;
};

inline constexpr double kLengthTolerance = 1e-9;

NeighbourhoodIndex build_neighbourhoods(const NetworkTopology& topology,
                                        const RectanglePartition& partition, double tau,
                                        double overlap_c);

// Only the length neighbourhood; no partition required.
std::vector<std::vector<LinkIndex>> length_neighbourhoods(const NetworkTopology& topology,
                                                          double tau);

// Topology file: {"nodes":[{"id":..,"x":..,"y":..}], "region":{x0,y0,x1,y1}?,
// "cell_width":..?, "cell_height":..?}.
struct TopologyFile {
  NetworkTopology topology;
  std::optional<PartitionParams> partition;
};

TopologyFile parse_topology_json(const std::string& text);
TopologyFile load_topology(const std::string& path);
std::string topology_to_json(const NetworkTopology& topology,
                             const std::optional<PartitionParams>& partition = std::nullopt);

// Evenly spaced nodes around the perimeter of [0,w]x[0,h], starting at the
// origin corner and running counter-clockwise. Ids are 1..count.
std::vector<Node> perimeter_layout(std::size_t count, double width, double height);

}  // namespace rfbg
