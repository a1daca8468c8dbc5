#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rfbg/topology.hpp"

namespace rfbg {

// One token-ring broadcast: the RSS every receiver heard from `tx`.
struct MeasurementVector {
  std::uint64_t seq = 0;
  int tx = 0;
  double t_ms = 0.0;
  std::map<int, double> rss;  // receiver id -> dBm
};

// Per-link RSS snapshot. `available` stays false for a link until it is
// observed for the first time; `fresh` is false when the value was carried
// over from the previous frame.
struct Frame {
  std::size_t index = 0;
  std::vector<double> rss;
  std::vector<bool> fresh;
  std::vector<bool> available;
  std::uint64_t first_seq = 0;
  std::uint64_t last_seq = 0;

  std::size_t size() const { return rss.size(); }
};

// Throws Error when the vector references unknown nodes, measures the
// transmitter itself, or holds non-finite values.
void validate_measurement(const NetworkTopology& topology, const MeasurementVector& mv);

// Streaming frame builder. Every node_count() consecutive vectors form one
// frame: duplicate broadcasters are averaged entry-wise first, then the two
// directions of each link are averaged, then unmeasured links copy the
// previous frame's value.
class FrameAssembler {
 public:
  explicit FrameAssembler(const NetworkTopology& topology);

  // Returns a frame when this vector completes a window.
  std::optional<Frame> push(const MeasurementVector& mv);

  std::size_t window_size() const { return window_size_; }
  std::size_t frames_emitted() const { return next_index_; }

 private:
  Frame build();

  const NetworkTopology* topology_;
  std::size_t window_size_;
  std::vector<MeasurementVector> window_;
  std::vector<double> last_rss_;
  std::vector<bool> seen_;
  std::size_t next_index_ = 0;
};

std::vector<Frame> assemble_frames(const NetworkTopology& topology,
                                   std::span<const MeasurementVector> stream);

// Complete windows in a stream; the trailing partial window is discarded.
std::size_t frame_count(std::size_t stream_len, std::size_t window);

// JSON Lines trace format: {"seq":n,"tx":id,"t_ms":t,"rss":{"<rx>":dbm,...}}
std::string measurement_to_jsonl(const MeasurementVector& mv);
MeasurementVector measurement_from_jsonl(const std::string& line);
void write_trace(std::ostream& out, std::span<const MeasurementVector> stream);
std::vector<MeasurementVector> read_trace(std::istream& in);
std::vector<MeasurementVector> load_trace(const std::string& path);
void save_trace(const std::string& path, std::span<const MeasurementVector> stream);

}  // namespace rfbg
