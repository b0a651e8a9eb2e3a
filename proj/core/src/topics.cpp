#include "laborscope/topics.hpp"

#include "laborscope/csv.hpp"
#include "laborscope/error.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>

namespace laborscope {

TopicLabels read_topic_labels(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  bool first = true;
  csv::next_line(in, first);  // header: topic_id,label
  TopicLabels labels;
  while (auto line = csv::next_line(in, first)) {
    auto f = csv::split_line(*line);
    if (f.size() < 2) throw DataError(path.string() + ": expected topic_id,label");
    auto id = csv::parse_number(f[0]);
    if (!id) throw DataError(path.string() + ": bad topic id '" + f[0] + "'");
    labels[static_cast<int>(*id)] = f[1];
  }
  return labels;
}

std::vector<TopicSummary> summarize_topics(const TopicModel& model, int n,
                                           const TopicLabels& labels, bool* truncated) {
  if (n < 1) throw ConfigError("summarize_topics: n must be positive");
  const auto occupations = static_cast<std::size_t>(model.h.cols());
  const bool cut = static_cast<std::size_t>(n) > occupations;
  if (truncated) *truncated = cut;
  const std::size_t take = cut ? occupations : static_cast<std::size_t>(n);

  auto code_of = [&](Eigen::Index j) {
    return model.occupation_labels.empty() ? std::to_string(j)
                                           : model.occupation_labels[static_cast<std::size_t>(j)];
  };

  std::vector<TopicSummary> out;
  for (Eigen::Index l = 0; l < model.h.rows(); ++l) {
    std::vector<Eigen::Index> idx(occupations);
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take), idx.end(),
                      [&](Eigen::Index a, Eigen::Index b) {
                        if (model.h(l, a) != model.h(l, b)) return model.h(l, a) > model.h(l, b);
                        return code_of(a) < code_of(b);
                      });
    TopicSummary summary;
    summary.topic_id = static_cast<int>(l) + 1;
    if (auto it = labels.find(summary.topic_id); it != labels.end()) summary.label = it->second;
    for (std::size_t i = 0; i < take; ++i) {
      const double weight = model.h(l, idx[i]);
      if (weight <= 0.0) break;
      summary.top_occupations.push_back({code_of(idx[i]), model.occupation_name(idx[i]), weight});
    }
    out.push_back(std::move(summary));
  }
  return out;
}

std::vector<RegionComposition> compose_regions(const TopicModel& model) {
  std::vector<RegionComposition> out;
  out.reserve(static_cast<std::size_t>(model.w.rows()));
  for (Eigen::Index i = 0; i < model.w.rows(); ++i) {
    RegionComposition c;
    c.region_code = model.region_labels.empty() ? std::to_string(i)
                                                : model.region_labels[static_cast<std::size_t>(i)];
    c.raw_weights.assign(model.w.row(i).begin(), model.w.row(i).end());
    const double total = model.w.row(i).sum();
    c.weights.assign(c.raw_weights.size(), 0.0);
    if (total <= 0.0) {
      c.zero_row = true;
    } else {
      for (std::size_t l = 0; l < c.weights.size(); ++l) c.weights[l] = c.raw_weights[l] / total;
      // First maximum wins, so ties go to the lower topic id.
      const auto best = std::max_element(c.weights.begin(), c.weights.end());
      c.dominant_topic = static_cast<int>(best - c.weights.begin()) + 1;
    }
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<PrevalenceEntry> topic_prevalence(const TopicModel& model, int topic_id) {
  if (topic_id < 1 || topic_id > model.w.cols()) {
    throw ConfigError("topic id " + std::to_string(topic_id) + " out of range [1, " +
                      std::to_string(model.w.cols()) + "]");
  }
  const auto comps = compose_regions(model);
  const auto l = static_cast<std::size_t>(topic_id - 1);
  std::vector<PrevalenceEntry> out;
  out.reserve(comps.size());
  for (const auto& c : comps) out.push_back({c.region_code, c.weights[l], c.raw_weights[l]});
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.weight != b.weight) return a.weight > b.weight;
    return a.region_code < b.region_code;
  });
  return out;
}

Matrix composition_matrix(const std::vector<RegionComposition>& comps) {
  const auto k = comps.empty() ? 0 : comps.front().weights.size();
  Matrix m(static_cast<Eigen::Index>(comps.size()), static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < comps.size(); ++i) {
    for (std::size_t l = 0; l < k; ++l) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(l)) = comps[i].weights[l];
    }
  }
  return m;
}

}  // namespace laborscope
