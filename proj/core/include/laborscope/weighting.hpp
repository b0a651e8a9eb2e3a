#pragma once

#include "laborscope/matrix.hpp"

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace laborscope {

enum class LogBase { e, two, ten };

LogBase log_base_from_string(std::string_view text);

/// Number of regions with strictly positive employment, per occupation.
std::vector<int> document_frequency(const RegionOccupationMatrix& raw);

/// tfidf[r][o] = raw[r][o] * log(N / df_o) with N the number of regions.
/// Columns with df_o = 0 are zero in the input and stay zero.
RegionOccupationMatrix tfidf(const RegionOccupationMatrix& raw, LogBase base = LogBase::e);

/// Drops occupations whose column is entirely zero.
RegionOccupationMatrix prune_empty_columns(const RegionOccupationMatrix& m);

struct ScoredOccupation {
  std::string code;
  double score = 0.0;
};

/// Highest-scoring k occupations of a region, descending, ties by code.
std::vector<ScoredOccupation> top_k_by_region(const RegionOccupationMatrix& m,
                                              std::string_view region, int k);

}  // namespace laborscope
