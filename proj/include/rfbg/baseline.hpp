#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rfbg/bgsub.hpp"
#include "rfbg/frames.hpp"
#include "rfbg/topology.hpp"

namespace rfbg {

// Indicator-weighted running mean per link: only Background-labelled frames
// contribute. Exact sums, no forgetting.
class BaselineEstimate {
 public:
  BaselineEstimate() = default;
  explicit BaselineEstimate(std::size_t links) : sums_(links, 0.0), counts_(links, 0) {}

  // Copied (non-fresh) values count like fresh ones; unavailable links are skipped.
  void update(const Frame& frame, const LabelField& labels);
  // Adds one background sample to link l.
  void add(LinkIndex l, double value);

  std::size_t size() const { return sums_.size(); }
  std::size_t count(LinkIndex l) const { return counts_[l]; }
  double sum(LinkIndex l) const { return sums_[l]; }
  std::optional<double> value(LinkIndex l) const;
  // R-hat per link, NaN where undefined.
  std::vector<double> values() const;

 private:
  std::vector<double> sums_;
  std::vector<std::size_t> counts_;
};

struct EstimationError {
  double rms_dbm = 0.0;
  std::size_t links_used = 0;
  std::vector<LinkIndex> excluded;  // links in the set with no estimate or no reference

  double coverage() const {
    const double total = static_cast<double>(links_used + excluded.size());
    return total == 0.0 ? 0.0 : static_cast<double>(links_used) / total;
  }
};

// RMS difference between reference and estimate over `links`. Links with an
// undefined estimate or a non-finite reference are excluded and reported.
// Throws Error if nothing remains.
EstimationError estimation_error(const BaselineEstimate& estimate,
                                 std::span<const double> reference,
                                 std::span<const LinkIndex> links);
// Same over every link of the estimate.
EstimationError estimation_error(const BaselineEstimate& estimate,
                                 std::span<const double> reference);
// Raw vectors (NaN marks undefined).
EstimationError estimation_error(std::span<const double> estimate,
                                 std::span<const double> reference,
                                 std::span<const LinkIndex> links);

// Mean RSS per link over a whole trace with every frame counted.
std::vector<double> reference_from_frames(std::span<const Frame> frames, std::size_t links);

// CSV `link_a,link_b,rb_hat_dbm,sample_count`, rows in link order. Undefined
// estimates are written as `nan` with count 0.
struct BaselineTable {
  std::vector<double> values;
  std::vector<std::size_t> counts;
};

void write_baseline_csv(std::ostream& out, const NetworkTopology& topology,
                        std::span<const double> values, std::span<const std::size_t> counts);
void save_baseline_csv(const std::string& path, const NetworkTopology& topology,
                       std::span<const double> values, std::span<const std::size_t> counts);
void save_baseline_csv(const std::string& path, const NetworkTopology& topology,
                       const BaselineEstimate& estimate);
BaselineTable read_baseline_csv(std::istream& in, const NetworkTopology& topology);
BaselineTable load_baseline_csv(const std::string& path, const NetworkTopology& topology);

}  // namespace rfbg
