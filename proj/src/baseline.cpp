#include "rfbg/baseline.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

namespace rfbg {

void BaselineEstimate::update(const Frame& frame, const LabelField& labels) {
  if (frame.size() != sums_.size() || labels.size() != sums_.size()) {
    throw Error("baseline update: frame, labels and estimate disagree on link count");
  }
  for (LinkIndex l = 0; l < sums_.size(); ++l) {
    if (frame.available[l] && labels.labels[l] == Label::Background) {
      sums_[l] += frame.rss[l];
      ++counts_[l];
    }
  }
}

void BaselineEstimate::add(LinkIndex l, double value) {
  sums_.at(l) += value;
  ++counts_[l];
}

std::optional<double> BaselineEstimate::value(LinkIndex l) const {
  if (counts_.at(l) == 0) return std::nullopt;
  return sums_[l] / static_cast<double>(counts_[l]);
}

std::vector<double> BaselineEstimate::values() const {
  std::vector<double> out(sums_.size(), std::nan(""));
  for (LinkIndex l = 0; l < sums_.size(); ++l) {
    if (counts_[l] > 0) out[l] = sums_[l] / static_cast<double>(counts_[l]);
  }
  return out;
}

EstimationError estimation_error(std::span<const double> estimate,
                                 std::span<const double> reference,
                                 std::span<const LinkIndex> links) {
  if (links.empty()) throw Error("estimation error over an empty link set");
  EstimationError out;
  double acc = 0.0;
  for (auto l : links) {
    if (l >= estimate.size() || l >= reference.size()) throw Error("link index out of range");
    if (!std::isfinite(estimate[l]) || !std::isfinite(reference[l])) {
      out.excluded.push_back(l);
      continue;
    }
    const double d = reference[l] - estimate[l];
    acc += d * d;
    ++out.links_used;
  }
  if (out.links_used == 0) throw Error("estimation error: no link has an estimate");
  out.rms_dbm = std::sqrt(acc / static_cast<double>(out.links_used));
  return out;
}

EstimationError estimation_error(const BaselineEstimate& estimate,
                                 std::span<const double> reference,
                                 std::span<const LinkIndex> links) {
  const auto values = estimate.values();
  return estimation_error(values, reference, links);
}

EstimationError estimation_error(const BaselineEstimate& estimate,
                                 std::span<const double> reference) {
  std::vector<LinkIndex> all(estimate.size());
  for (LinkIndex l = 0; l < all.size(); ++l) all[l] = l;
  return estimation_error(estimate, reference, all);
}

std::vector<double> reference_from_frames(std::span<const Frame> frames, std::size_t links) {
  BaselineEstimate acc(links);
  for (const auto& f : frames) acc.update(f, ma_label(f));
  return acc.values();
}

void write_baseline_csv(std::ostream& out, const NetworkTopology& topology,
                        std::span<const double> values, std::span<const std::size_t> counts) {
  if (values.size() != topology.link_count() || counts.size() != topology.link_count()) {
    throw Error("baseline table does not match the topology");
  }
  out << "link_a,link_b,rb_hat_dbm,sample_count\n";
  std::ostringstream row;
  for (const auto& link : topology.links()) {
    row.str("");
    row << link.a << ',' << link.b << ',';
    if (std::isfinite(values[link.index])) {
      row << std::setprecision(17) << values[link.index];
    } else {
      row << "nan";
    }
    row << ',' << counts[link.index] << '\n';
    out << row.str();
  }
}

void save_baseline_csv(const std::string& path, const NetworkTopology& topology,
                       std::span<const double> values, std::span<const std::size_t> counts) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write baseline file " + path);
  write_baseline_csv(out, topology, values, counts);
}

void save_baseline_csv(const std::string& path, const NetworkTopology& topology,
                       const BaselineEstimate& estimate) {
  std::vector<std::size_t> counts(estimate.size());
  for (LinkIndex l = 0; l < counts.size(); ++l) counts[l] = estimate.count(l);
  save_baseline_csv(path, topology, estimate.values(), counts);
}

BaselineTable read_baseline_csv(std::istream& in, const NetworkTopology& topology) {
  BaselineTable t;
  t.values.assign(topology.link_count(), std::nan(""));
  t.counts.assign(topology.link_count(), 0);
  std::string line;
  if (!std::getline(in, line)) throw Error("baseline CSV is empty");
  if (line.rfind("link_a,link_b,rb_hat_dbm,sample_count", 0) != 0) {
    throw Error("baseline CSV: unexpected header '" + line + "'");
  }
  std::size_t row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string a, b, v, c;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, v, ',') ||
        !std::getline(ss, c, ',')) {
      throw Error("baseline CSV row " + std::to_string(row_no) + ": expected 4 columns");
    }
    try {
      const auto link = topology.find_link(std::stoi(a), std::stoi(b));
      if (!link) throw Error("unknown link " + a + "-" + b);
      t.values[*link] = (v == "nan" || v == "NaN") ? std::nan("") : std::stod(v);
      t.counts[*link] = static_cast<std::size_t>(std::stoull(c));
    } catch (const std::logic_error& e) {
      throw Error("baseline CSV row " + std::to_string(row_no) + ": " + e.what());
    }
  }
  return t;
}

BaselineTable load_baseline_csv(const std::string& path, const NetworkTopology& topology) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open baseline file " + path);
  return read_baseline_csv(in, topology);
}

}  // namespace rfbg
