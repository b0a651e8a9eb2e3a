#pragma once

#include "laborscope/ingest.hpp"
#include "laborscope/spatial.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace laborscope {

/// A planted topic event applied from `year_index` onward.
struct SynthEvent {
  enum class Kind { merge, split };
  Kind kind = Kind::merge;
  int year_index = 1;
  int topic_a = 0;  // 0-based; survives a merge, is split for a split
  int topic_b = 1;  // 0-based; absorbed by a merge, ignored by split
};

struct SynthSpec {
  int regions = 60;
  int occupations = 200;
  int topics = 8;
  std::uint64_t seed = 7;
  double noise_level = 0.0;
  std::optional<Matrix> planted_h;  // topics x occupations
  double local_occupation_fraction = 0.0;
  int years = 1;
  int first_year = 2014;
  double drift = 0.0;  // multiplicative per-year jitter on W
  std::vector<SynthEvent> events;

  /// Throws ConfigError on invalid sizes/fractions.
  void validate() const;
};

struct SynthYear {
  int year = 0;
  Matrix planted_w;  // regions x topics_in_year
  Matrix planted_h;  // topics_in_year x occupations
};

struct SynthCorpus {
  EmploymentTable table;
  std::vector<SynthYear> planted;  // one per year
  std::vector<std::string> region_codes;
  std::vector<std::string> occupation_codes;
  std::vector<int> occupation_topic;  // planted topic per occupation, -1 for local
  RegionCoordinates coordinates;
};

/// X = W* H* (+ truncated multiplicative Gaussian noise) with a block-sparse
/// planted H* and a configurable share of "local" occupations that employ
/// people in every region.
SynthCorpus generate(const SynthSpec& spec);

}  // namespace laborscope
