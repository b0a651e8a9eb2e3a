#pragma once

#include "laborscope/ingest.hpp"
#include "laborscope/topics.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace laborscope {

enum class Linkage { average, complete, single };

std::string_view to_string(Linkage l);
Linkage linkage_from_string(std::string_view text);

struct Merge {
  int cluster_a = 0;  // smaller id
  int cluster_b = 0;
  double height = 0.0;
  int new_cluster = 0;
};

/// Agglomerative merge history. Leaves are 0..n-1; merge t creates id n + t.
struct Dendrogram {
  std::vector<Merge> merges;
  std::vector<std::string> leaf_labels;
  Linkage linkage = Linkage::average;

  /// Leaves in left-to-right drawing order.
  std::vector<int> leaf_order() const;
  std::string newick() const;
  /// Flat cluster index per leaf after cutting merges above `height`.
  std::vector<int> cut(double height) const;
};

/// D[i][j] = 1 - cos(w_i, w_j); throws NumericError naming an all-zero region.
Matrix cosine_distance_matrix(const std::vector<RegionComposition>& comps);

/// Throws DataError for non-square, asymmetric, negative or non-finite input.
Dendrogram hierarchical_cluster(const Matrix& distances, Linkage linkage,
                                std::vector<std::string> labels = {});

/// The n regions with the largest total employment in `year`, descending.
std::vector<RegionComposition> select_top_regions(const std::vector<RegionComposition>& comps,
                                                  const EmploymentTable& table, int year,
                                                  int n);

}  // namespace laborscope
