#include "rfbg/bgsub.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace rfbg {

using json = nlohmann::json;

std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::MA: return "MA";
    case Algorithm::TBM: return "TBM";
    case Algorithm::FABS: return "FABS";
    case Algorithm::MmclR: return "FABS-MMCL-R";
    case Algorithm::MmclO: return "FABS-MMCL-O";
  }
  return "?";
}

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::MA: return "MA";
    case Stage::TBM: return "TBM";
    case Stage::FABS: return "FABS";
    case Stage::MMCL: return "MMCL";
  }
  return "?";
}

Algorithm parse_algorithm(std::string_view name) {
  std::string up(name);
  for (auto& c : up) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  std::replace(up.begin(), up.end(), '_', '-');
  if (up == "MA") return Algorithm::MA;
  if (up == "TBM") return Algorithm::TBM;
  if (up == "FABS") return Algorithm::FABS;
  if (up == "FABS-MMCL-R" || up == "MMCL-R") return Algorithm::MmclR;
  if (up == "FABS-MMCL-O" || up == "MMCL-O") return Algorithm::MmclO;
  throw Error("unknown algorithm '" + std::string(name) + "'");
}

std::vector<std::string> AlgorithmParams::validate() const {
  std::vector<std::string> errs;
  if (window < 1) errs.emplace_back("window (N) must be >= 1");
  if (!(sigma_t2 > 0.0)) errs.emplace_back("sigma_t2 must be > 0");
  if (!(sigma_s2 > 0.0)) errs.emplace_back("sigma_s2 must be > 0");
  if (!(theta > 0.0)) errs.emplace_back("theta must be > 0");
  if (!(tau >= 0.0)) errs.emplace_back("tau must be >= 0");
  if (!(eta > 0.0)) errs.emplace_back("eta must be > 0");
  if (!(gamma > 0.0)) errs.emplace_back("gamma must be > 0");
  if (!(overlap_c > 0.0 && overlap_c <= 100.0)) errs.emplace_back("C must lie in (0, 100]");
  if (mmcl_iters < 1) errs.emplace_back("mmcl_iters must be >= 1");
  if (fabs_max_iters < 1) errs.emplace_back("fabs_max_iters must be >= 1");
  return errs;
}

namespace {

AlgorithmParams make(std::size_t n, double st2, double theta, double tau, double ss2, double eta,
                     double gamma, double c) {
  AlgorithmParams p;
  p.window = n;
  p.sigma_t2 = st2;
  p.theta = theta;
  p.tau = tau;
  p.sigma_s2 = ss2;
  p.eta = eta;
  p.gamma = gamma;
  p.overlap_c = c;
  return p;
}

}  // namespace

bool is_known_preset(std::string_view preset) {
  return preset == "outdoor" || preset == "indoor" || preset == "through-wall";
}

AlgorithmParams preset_params(std::string_view preset, Algorithm algorithm) {
  // Columns per algorithm; unused entries repeat the neighbouring column.
  if (preset == "outdoor") {
    switch (algorithm) {
      case Algorithm::MA:
      case Algorithm::TBM:
      case Algorithm::FABS: return make(25, 4, 0.17, 0, 4, 1, 5, 95);
      case Algorithm::MmclR:
      case Algorithm::MmclO: return make(25, 4, 0.17, 0, 4, 1, 5, 95);
    }
  }
  if (preset == "indoor") {
    switch (algorithm) {
      case Algorithm::MA:
      case Algorithm::TBM:
      case Algorithm::FABS: return make(35, 17, 0.05, 0.75, 10, 5, 25, 35);
      case Algorithm::MmclR: return make(35, 17, 0.05, 0.75, 10, 5, 25, 35);
      case Algorithm::MmclO: return make(35, 17, 0.05, 0.75, 10, 1, 50, 35);
    }
  }
  if (preset == "through-wall") {
    switch (algorithm) {
      case Algorithm::MA:
      case Algorithm::TBM:
      case Algorithm::FABS: return make(35, 1, 0.05, 1, 1, 5, 50, 15);
      case Algorithm::MmclR: return make(35, 1, 0.05, 1, 5, 15, 50, 15);
      case Algorithm::MmclO: return make(35, 1, 0.05, 0, 10, 4, 10, 15);
    }
  }
  throw Error("unknown parameter preset '" + std::string(preset) + "'");
}

json params_to_json(const AlgorithmParams& p) {
  return json{{"N", p.window},          {"sigma_t2", p.sigma_t2},
              {"theta", p.theta},       {"tau", p.tau},
              {"sigma_s2", p.sigma_s2}, {"eta", p.eta},
              {"gamma", p.gamma},       {"C", p.overlap_c},
              {"mmcl_iters", p.mmcl_iters}, {"fabs_max_iters", p.fabs_max_iters}};
}

AlgorithmParams params_from_json(const json& j, AlgorithmParams p) {
  if (!j.is_object()) throw Error("algorithm parameters must be a JSON object");
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "N" || key == "window") {
        p.window = value.get<std::size_t>();
      } else if (key == "sigma_t2") {
        p.sigma_t2 = value.get<double>();
      } else if (key == "theta") {
        p.theta = value.get<double>();
      } else if (key == "tau") {
        p.tau = value.get<double>();
      } else if (key == "sigma_s2") {
        p.sigma_s2 = value.get<double>();
      } else if (key == "eta") {
        p.eta = value.get<double>();
      } else if (key == "gamma") {
        p.gamma = value.get<double>();
      } else if (key == "C" || key == "overlap_c") {
        p.overlap_c = value.get<double>();
      } else if (key == "mmcl_iters") {
        p.mmcl_iters = value.get<int>();
      } else if (key == "fabs_max_iters") {
        p.fabs_max_iters = value.get<int>();
      } else {
        throw Error("unknown algorithm parameter '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw Error(std::string("bad algorithm parameter value: ") + e.what());
  }
  return p;
}

std::size_t LabelField::foreground_count() const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), Label::Foreground));
}

HistoryBuffer::HistoryBuffer(std::size_t links, std::size_t capacity)
    : capacity_(capacity), data_(links * capacity, 0.0), heads_(links, 0), sizes_(links, 0) {
  if (capacity == 0) throw Error("history capacity must be >= 1");
}

void HistoryBuffer::push(LinkIndex l, double value) {
  heads_[l] = (heads_[l] + 1) % capacity_;
  data_[l * capacity_ + heads_[l]] = value;
  sizes_[l] = std::min(sizes_[l] + 1, capacity_);
}

void HistoryBuffer::advance(const Frame& frame) {
  for (LinkIndex l = 0; l < frame.size(); ++l) {
    if (frame.available[l]) push(l, frame.rss[l]);
  }
}

double HistoryBuffer::recent(LinkIndex l, std::size_t i) const {
  if (i >= sizes_[l]) throw Error("history index out of range");
  const std::size_t slot = (heads_[l] + capacity_ - i) % capacity_;
  return data_[l * capacity_ + slot];
}

double gaussian_kernel(double x, double sigma2) {
  return std::exp(-x * x / (2.0 * sigma2)) / std::sqrt(2.0 * std::numbers::pi * sigma2);
}

double background_pdf(LinkIndex l, double current, const HistoryBuffer& history, double sigma2) {
  const std::size_t n = history.size(l);
  if (n == 0) throw Error("background_pdf: empty history for link " + std::to_string(l));
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += gaussian_kernel(current - history.recent(l, i), sigma2);
  return acc / static_cast<double>(n);
}

BackgroundEvidence evaluate_background(const Frame& frame, const HistoryBuffer& history,
                                       double sigma_t2) {
  BackgroundEvidence ev;
  ev.pb.assign(frame.size(), 0.0);
  ev.active.assign(frame.size(), false);
  for (LinkIndex l = 0; l < frame.size(); ++l) {
    if (!frame.available[l] || history.size(l) == 0) continue;
    ev.pb[l] = background_pdf(l, frame.rss[l], history, sigma_t2);
    ev.active[l] = true;
  }
  return ev;
}

LabelField ma_label(const Frame& frame) {
  return LabelField{frame.index, Stage::MA,
                    std::vector<Label>(frame.size(), Label::Background)};
}

LabelField tbm_label(const Frame& frame, const BackgroundEvidence& ev,
                     const AlgorithmParams& params) {
  LabelField out{frame.index, Stage::TBM, std::vector<Label>(frame.size(), Label::Background)};
  for (LinkIndex l = 0; l < frame.size(); ++l) {
    if (ev.active[l] && ev.pb[l] < params.theta) out.labels[l] = Label::Foreground;
  }
  return out;
}

LabelField tbm_label(const Frame& frame, const HistoryBuffer& history,
                     const AlgorithmParams& params) {
  return tbm_label(frame, evaluate_background(frame, history, params.sigma_t2), params);
}

std::optional<double> foreground_pdf(LinkIndex l, const Frame& frame, const LabelField& labels,
                                     const std::vector<LinkIndex>& neighbours, double sigma_s2) {
  double acc = 0.0;
  std::size_t n = 0;
  for (auto m : neighbours) {
    if (labels.labels[m] != Label::Foreground) continue;
    acc += gaussian_kernel(frame.rss[l] - frame.rss[m], sigma_s2);
    ++n;
  }
  if (n == 0) return std::nullopt;
  return acc / static_cast<double>(n);
}

namespace {

// One synchronous sweep of  P_B / P_F  <  eta * exp(exponent(l) / gamma)  =>  Foreground.
// Links without foreground neighbours keep their label.
template <typename Exponent>
LabelField relabel_sweep(const Frame& frame, const BackgroundEvidence& ev, const LabelField& prev,
                         const std::vector<std::vector<LinkIndex>>& length_neighbours,
                         const AlgorithmParams& params, Stage stage, Exponent&& exponent) {
  LabelField next{frame.index, stage, prev.labels};
  for (LinkIndex l = 0; l < frame.size(); ++l) {
    if (!ev.active[l]) continue;
    const auto pf = foreground_pdf(l, frame, prev, length_neighbours[l], params.sigma_s2);
    if (!pf) continue;
    const double e = exponent(l);
    const double rhs = e == 0.0 ? params.eta : params.eta * std::exp(e / params.gamma);
    next.labels[l] = ev.pb[l] < rhs * *pf ? Label::Foreground : Label::Background;
  }
  return next;
}

}  // namespace

LabelField fabs_label(const Frame& frame, const BackgroundEvidence& ev,
                      const LabelField& tbm_labels,
                      const std::vector<std::vector<LinkIndex>>& length_neighbours,
                      const AlgorithmParams& params) {
  LabelField current{frame.index, Stage::FABS, tbm_labels.labels};
  for (int it = 0; it < params.fabs_max_iters; ++it) {
    LabelField next = relabel_sweep(frame, ev, current, length_neighbours, params, Stage::FABS,
                                    [](LinkIndex) { return 0.0; });
    const bool converged = next.same_labels(current);
    current = std::move(next);
    if (converged) break;
  }
  return current;
}

LabelField mmcl_r_label(const Frame& frame, const BackgroundEvidence& ev,
                        const LabelField& fabs_labels,
                        const std::vector<std::vector<LinkIndex>>& length_neighbours,
                        const std::vector<std::vector<LinkIndex>>& overlap_neighbours,
                        const AlgorithmParams& params) {
  LabelField current{frame.index, Stage::MMCL, fabs_labels.labels};
  for (int it = 0; it < params.mmcl_iters; ++it) {
    auto exponent = [&](LinkIndex l) {
      long fg = 0;
      long bg = 0;
      for (auto m : overlap_neighbours[l]) {
        if (current.labels[m] == Label::Foreground) {
          ++fg;
        } else {
          ++bg;
        }
      }
      return static_cast<double>(fg - bg);
    };
    current = relabel_sweep(frame, ev, current, length_neighbours, params, Stage::MMCL, exponent);
  }
  return current;
}

namespace {

std::vector<std::size_t> foreground_cell_counts(const RectanglePartition& partition,
                                                const LabelField& labels) {
  std::vector<std::size_t> counts(partition.cell_count(), 0);
  for (std::size_t c = 0; c < counts.size(); ++c) {
    for (auto l : partition.links_through(c)) {
      if (labels.labels[l] == Label::Foreground) ++counts[c];
    }
  }
  return counts;
}

std::size_t busiest_cell_from_counts(LinkIndex l, const RectanglePartition& partition,
                                     const LabelField& labels,
                                     const std::vector<std::size_t>& counts) {
  const std::size_t self = labels.labels[l] == Label::Foreground ? 1 : 0;
  const auto& rho = partition.cells(l);
  std::size_t best = rho.front();
  std::size_t best_count = counts[best] - self;
  for (auto c : rho) {  // rho is sorted, so strict > keeps the lowest index on ties
    if (counts[c] - self > best_count) {
      best = c;
      best_count = counts[c] - self;
    }
  }
  return best;
}

}  // namespace

std::size_t busiest_cell(LinkIndex l, const RectanglePartition& partition,
                         const LabelField& labels) {
  return busiest_cell_from_counts(l, partition, labels, foreground_cell_counts(partition, labels));
}

LabelField mmcl_o_label(const Frame& frame, const BackgroundEvidence& ev,
                        const LabelField& fabs_labels,
                        const std::vector<std::vector<LinkIndex>>& length_neighbours,
                        const RectanglePartition& partition, const AlgorithmParams& params) {
  LabelField current{frame.index, Stage::MMCL, fabs_labels.labels};
  for (int it = 0; it < params.mmcl_iters; ++it) {
    const auto fg_total = static_cast<long>(current.foreground_count());
    const long mu = static_cast<long>(current.size()) - 2 * fg_total;  // |B| - |F|
    const auto counts = foreground_cell_counts(partition, current);
    auto exponent = [&](LinkIndex l) {
      const std::size_t r = busiest_cell_from_counts(l, partition, current, counts);
      const std::size_t self = current.labels[l] == Label::Foreground ? 1 : 0;
      const auto through = static_cast<long>(partition.links_through(r).size()) - 1;
      const auto fg = static_cast<long>(counts[r] - self);
      const long bg = through - fg;
      return static_cast<double>(fg - bg + mu);
    };
    current = relabel_sweep(frame, ev, current, length_neighbours, params, Stage::MMCL, exponent);
  }
  return current;
}

BackgroundSubtractor::BackgroundSubtractor(Algorithm algorithm, AlgorithmParams params,
                                           const NetworkTopology& topology,
                                           std::optional<PartitionParams> partition)
    : algorithm_(algorithm),
      params_(params),
      history_(topology.link_count(), std::max<std::size_t>(params.window, 1)) {
  if (auto errs = params_.validate(); !errs.empty()) {
    std::string msg = "invalid parameters for " + std::string(to_string(algorithm)) + ":";
    for (const auto& e : errs) msg += " " + e + ";";
    throw Error(msg);
  }
  if (algorithm_ == Algorithm::FABS || algorithm_ == Algorithm::MmclR ||
      algorithm_ == Algorithm::MmclO) {
    length_ = length_neighbourhoods(topology, params_.tau);
  }
  if (algorithm_ == Algorithm::MmclR || algorithm_ == Algorithm::MmclO) {
    partition_ = link_cells(topology, partition.value_or(default_partition_params(topology)));
  }
  if (algorithm_ == Algorithm::MmclR) {
    overlap_ = build_neighbourhoods(topology, *partition_, params_.tau, params_.overlap_c).overlap;
  }
}

LabelField BackgroundSubtractor::process(const Frame& frame) {
  if (frame.size() != history_.links()) throw Error("frame does not match the topology");
  LabelField out;
  if (algorithm_ == Algorithm::MA) {
    out = ma_label(frame);
  } else {
    const auto ev = evaluate_background(frame, history_, params_.sigma_t2);
    out = tbm_label(frame, ev, params_);
    if (algorithm_ != Algorithm::TBM) {
      out = fabs_label(frame, ev, out, length_, params_);
      if (algorithm_ == Algorithm::MmclR) {
        out = mmcl_r_label(frame, ev, out, length_, overlap_, params_);
      } else if (algorithm_ == Algorithm::MmclO) {
        out = mmcl_o_label(frame, ev, out, length_, *partition_, params_);
      }
    }
  }
  history_.advance(frame);
  return out;
}

}  // namespace rfbg
