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

enum class Label : std::uint8_t { Background = 0, Foreground = 1 };

enum class Stage : std::uint8_t { MA, TBM, FABS, MMCL };

enum class Algorithm : std::uint8_t { MA, TBM, FABS, MmclR, MmclO };

std::string_view to_string(Algorithm a);
std::string_view to_string(Stage s);
Algorithm parse_algorithm(std::string_view name);
inline constexpr Algorithm kAllAlgorithms[] = {Algorithm::MA, Algorithm::TBM, Algorithm::FABS,
                                               Algorithm::MmclR, Algorithm::MmclO};

// Tuning knobs shared by all labelers. Fields an algorithm does not use are
// ignored by it.
struct AlgorithmParams {
  std::size_t window = 25;  // N, frames of history
  double sigma_t2 = 4.0;    // temporal kernel variance, dBm^2
  double theta = 0.17;      // TBM density threshold
  double tau = 0.0;         // length tolerance, m
  double sigma_s2 = 4.0;    // spatial kernel variance, dBm^2
  double eta = 1.0;         // likelihood-ratio threshold
  double gamma = 5.0;       // natural temperature
  double overlap_c = 95.0;  // C, percent
  int mmcl_iters = 10;
  int fabs_max_iters = 3;

  // Every violated constraint, one message each; empty when valid.
  std::vector<std::string> validate() const;
};

// Parameter presets keyed by environment: "outdoor", "indoor", "through-wall".
AlgorithmParams preset_params(std::string_view preset, Algorithm algorithm);
bool is_known_preset(std::string_view preset);

nlohmann::json params_to_json(const AlgorithmParams& p);
// Overlays the keys present in `j` onto `base`. Unknown keys raise Error.
AlgorithmParams params_from_json(const nlohmann::json& j, AlgorithmParams base = {});

struct LabelField {
  std::size_t frame = 0;
  Stage stage = Stage::MA;
  std::vector<Label> labels;

  std::size_t size() const { return labels.size(); }
  bool foreground(LinkIndex l) const { return labels[l] == Label::Foreground; }
  std::size_t foreground_count() const;
  std::size_t background_count() const { return labels.size() - foreground_count(); }
  bool same_labels(const LabelField& other) const { return labels == other.labels; }
};

// Last `capacity` raw values per link, most recent first.
class HistoryBuffer {
 public:
  HistoryBuffer(std::size_t links, std::size_t capacity);

  void push(LinkIndex l, double value);
  // Pushes every available link value of the frame.
  void advance(const Frame& frame);

  std::size_t capacity() const { return capacity_; }
  std::size_t links() const { return sizes_.size(); }
  std::size_t size(LinkIndex l) const { return sizes_[l]; }
  // i = 0 is the most recent entry.
  double recent(LinkIndex l, std::size_t i) const;

 private:
  std::size_t capacity_;
  std::vector<double> data_;
  std::vector<std::size_t> heads_;
  std::vector<std::size_t> sizes_;
};

// Zero-mean Gaussian density with variance sigma2 evaluated at x.
double gaussian_kernel(double x, double sigma2);

// Mean kernel density of `current` against the stored history of link l.
// Throws Error when that history is empty.
double background_pdf(LinkIndex l, double current, const HistoryBuffer& history, double sigma2);

// Background densities for one frame. Links without a value or without any
// history are inactive: they stay Background and are never relabeled.
struct BackgroundEvidence {
  std::vector<double> pb;
  std::vector<bool> active;
};

BackgroundEvidence evaluate_background(const Frame& frame, const HistoryBuffer& history,
                                       double sigma_t2);

LabelField ma_label(const Frame& frame);

LabelField tbm_label(const Frame& frame, const BackgroundEvidence& evidence,
                     const AlgorithmParams& params);
LabelField tbm_label(const Frame& frame, const HistoryBuffer& history,
                     const AlgorithmParams& params);

// Mean spatial kernel of link l against its foreground neighbours; nullopt
// when it has none.
std::optional<double> foreground_pdf(LinkIndex l, const Frame& frame, const LabelField& labels,
                                     const std::vector<LinkIndex>& neighbours, double sigma_s2);

LabelField fabs_label(const Frame& frame, const BackgroundEvidence& evidence,
                      const LabelField& tbm_labels,
                      const std::vector<std::vector<LinkIndex>>& length_neighbours,
                      const AlgorithmParams& params);

LabelField mmcl_r_label(const Frame& frame, const BackgroundEvidence& evidence,
                        const LabelField& fabs_labels,
                        const std::vector<std::vector<LinkIndex>>& length_neighbours,
                        const std::vector<std::vector<LinkIndex>>& overlap_neighbours,
                        const AlgorithmParams& params);

// Most-foreground-crossed cell of rho(l), excluding l itself from the counts.
// Ties go to the lowest cell index.
std::size_t busiest_cell(LinkIndex l, const RectanglePartition& partition,
                         const LabelField& labels);

LabelField mmcl_o_label(const Frame& frame, const BackgroundEvidence& evidence,
                        const LabelField& fabs_labels,
                        const std::vector<std::vector<LinkIndex>>& length_neighbours,
                        const RectanglePartition& partition, const AlgorithmParams& params);

// Stateful per-algorithm driver: labels each frame against the history, then
// advances the history with the frame's raw values.
class BackgroundSubtractor {
 public:
  BackgroundSubtractor(Algorithm algorithm, AlgorithmParams params,
                       const NetworkTopology& topology,
                       std::optional<PartitionParams> partition = std::nullopt);

  LabelField process(const Frame& frame);

  Algorithm algorithm() const { return algorithm_; }
  const AlgorithmParams& params() const { return params_; }
  const HistoryBuffer& history() const { return history_; }
  const RectanglePartition* partition() const {
    return partition_ ? &*partition_ : nullptr;
  }

 private:
  Algorithm algorithm_;
  AlgorithmParams params_;
  HistoryBuffer history_;
  std::vector<std::vector<LinkIndex>> length_;
  std::vector<std::vector<LinkIndex>> overlap_;
  std::optional<RectanglePartition> partition_;
};

}  // namespace rfbg
