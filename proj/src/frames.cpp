#include "rfbg/frames.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

namespace rfbg {

using json = nlohmann::json;

void validate_measurement(const NetworkTopology& topology, const MeasurementVector& mv) {
  if (!topology.node_position(mv.tx)) {
    throw Error("measurement " + std::to_string(mv.seq) + ": unknown transmitter " +
                std::to_string(mv.tx));
  }
  for (const auto& [rx, value] : mv.rss) {
    if (rx == mv.tx) {
      throw Error("measurement " + std::to_string(mv.seq) + ": transmitter measures itself");
    }
    if (!topology.node_position(rx)) {
      throw Error("measurement " + std::to_string(mv.seq) + ": unknown receiver " +
                  std::to_string(rx));
    }
    if (!std::isfinite(value)) {
      throw Error("measurement " + std::to_string(mv.seq) + ": non-finite RSS");
    }
  }
}

FrameAssembler::FrameAssembler(const NetworkTopology& topology)
    : topology_(&topology),
      window_size_(topology.node_count()),
      last_rss_(topology.link_count(), 0.0),
      seen_(topology.link_count(), false) {
  window_.reserve(window_size_);
}

std::optional<Frame> FrameAssembler::push(const MeasurementVector& mv) {
  validate_measurement(*topology_, mv);
  window_.push_back(mv);
  if (window_.size() < window_size_) return std::nullopt;
  Frame f = build();
  window_.clear();
  return f;
}

Frame FrameAssembler::build() {
  const std::size_t m = topology_->node_count();

  // Stage 1: entry-wise mean over repeated broadcasts of the same node.
  // directed[tx * m + rx] accumulates sum and count.
  std::vector<double> sum(m * m, 0.0);
  std::vector<unsigned> count(m * m, 0);
  for (const auto& mv : window_) {
    const std::size_t tx = *topology_->node_position(mv.tx);
    for (const auto& [rx_id, value] : mv.rss) {
      const std::size_t rx = *topology_->node_position(rx_id);
      sum[tx * m + rx] += value;
      ++count[tx * m + rx];
    }
  }

  // Stage 2: average the two directions; Stage 3: copy forward what is missing.
  Frame f;
  f.index = next_index_++;
  f.first_seq = window_.front().seq;
  f.last_seq = window_.back().seq;
  const std::size_t n_links = topology_->link_count();
  f.rss.assign(n_links, 0.0);
  f.fresh.assign(n_links, false);
  f.available.assign(n_links, false);
  for (const auto& link : topology_->links()) {
    const std::size_t ab = link.node_a * m + link.node_b;
    const std::size_t ba = link.node_b * m + link.node_a;
    double acc = 0.0;
    int dirs = 0;
    if (count[ab] > 0) {
      acc += sum[ab] / count[ab];
      ++dirs;
    }
    if (count[ba] > 0) {
      acc += sum[ba] / count[ba];
      ++dirs;
    }
    const auto l = link.index;
    if (dirs > 0) {
      f.rss[l] = acc / dirs;
      f.fresh[l] = true;
      f.available[l] = true;
      last_rss_[l] = f.rss[l];
      seen_[l] = true;
    } else if (seen_[l]) {
      f.rss[l] = last_rss_[l];
      f.available[l] = true;
    } else {
      f.rss[l] = std::nan("");
    }
  }
  return f;
}

std::vector<Frame> assemble_frames(const NetworkTopology& topology,
                                   std::span<const MeasurementVector> stream) {
  FrameAssembler assembler(topology);
  std::vector<Frame> frames;
  frames.reserve(frame_count(stream.size(), topology.node_count()));
  for (const auto& mv : stream) {
    if (auto f = assembler.push(mv)) frames.push_back(std::move(*f));
  }
  return frames;
}

std::size_t frame_count(std::size_t stream_len, std::size_t window) {
  if (window == 0) throw Error("window must be at least 1");
  return stream_len / window;
}

std::string measurement_to_jsonl(const MeasurementVector& mv) {
  json j;
  j["seq"] = mv.seq;
  j["tx"] = mv.tx;
  j["t_ms"] = mv.t_ms;
  json rss = json::object();
  for (const auto& [rx, v] : mv.rss) {
    if (v == std::round(v) && std::abs(v) < 1e9) {
      rss[std::to_string(rx)] = static_cast<long long>(v);
    } else {
      rss[std::to_string(rx)] = v;
    }
  }
  j["rss"] = std::move(rss);
  return j.dump();
}

MeasurementVector measurement_from_jsonl(const std::string& line) {
  MeasurementVector mv;
  try {
    const json j = json::parse(line);
    mv.seq = j.at("seq").get<std::uint64_t>();
    mv.tx = j.at("tx").get<int>();
    mv.t_ms = j.value("t_ms", 0.0);
    for (const auto& [key, value] : j.at("rss").items()) {
      mv.rss[std::stoi(key)] = value.get<double>();
    }
  } catch (const std::exception& e) {
    throw Error(std::string("trace: malformed line: ") + e.what());
  }
  return mv;
}

void write_trace(std::ostream& out, std::span<const MeasurementVector> stream) {
  for (const auto& mv : stream) out << measurement_to_jsonl(mv) << '\n';
}

std::vector<MeasurementVector> read_trace(std::istream& in) {
  std::vector<MeasurementVector> out;
  std::string line;
  std::uint64_t prev = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto mv = measurement_from_jsonl(line);
    if (!out.empty() && mv.seq <= prev) {
      throw Error("trace: sequence numbers must increase (seq " + std::to_string(mv.seq) + ")");
    }
    prev = mv.seq;
    out.push_back(std::move(mv));
  }
  return out;
}

std::vector<MeasurementVector> load_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open trace file " + path);
  return read_trace(in);
}

void save_trace(const std::string& path, std::span<const MeasurementVector> stream) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write trace file " + path);
  write_trace(out, stream);
}

}  // namespace rfbg
