#pragma once

#include "laborscope/factorization.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace laborscope {

struct TopicOccupation {
  std::string code;
  std::string name;
  double weight = 0.0;
};

struct TopicSummary {
  int topic_id = 0;  // 1-based
  std::vector<TopicOccupation> top_occupations;
  std::optional<std::string> label;
};

struct RegionComposition {
  std::string region_code;
  std::vector<double> weights;      // L1-normalised W row
  std::vector<double> raw_weights;  // W row as fitted
  int dominant_topic = 0;           // 1-based; 0 when flagged
  bool zero_row = false;
};

/// Topic id -> user label, read from a CSV with header topic_id,label.
using TopicLabels = std::map<int, std::string>;
TopicLabels read_topic_labels(const std::filesystem::path& path);

/// Top-n occupations per topic from the H rows, descending, ties by code.
/// Zero-weight entries are not listed. n larger than the occupation count is
/// truncated (the bool out-parameter reports it).
std::vector<TopicSummary> summarize_topics(const TopicModel& model, int n,
                                           const TopicLabels& labels = {},
                                           bool* truncated = nullptr);

std::vector<RegionComposition> compose_regions(const TopicModel& model);

struct PrevalenceEntry {
  std::string region_code;
  double weight = 0.0;      // normalised composition weight
  double raw_weight = 0.0;  // W entry
};

/// One topic's column of the composition matrix, sorted descending (ties by code).
std::vector<PrevalenceEntry> topic_prevalence(const TopicModel& model, int topic_id);

/// Composition matrix (regions x k) with rows L1-normalised.
Matrix composition_matrix(const std::vector<RegionComposition>& comps);

}  // namespace laborscope
