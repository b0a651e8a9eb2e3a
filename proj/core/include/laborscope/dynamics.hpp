#pragma once

#include "laborscope/factorization.hpp"

#include <map>
#include <span>
#include <string>
#include <vector>

namespace laborscope {

/// u.v / (|u| |v|), clamped to [-1, 1]. Throws NumericError for zero vectors
/// and DataError for length mismatch.
double cosine_similarity(std::span<const double> u, std::span<const double> v);
double cosine_similarity(const Vector& u, const Vector& v);

/// k_a x k_b matrix of cosine similarities between H rows.
Matrix topic_similarity(const TopicModel& a, const TopicModel& b);

enum class Matching { greedy, hungarian };

struct TopicEdge {
  int year_a = 0;
  int topic_a = 0;  // 1-based
  int year_b = 0;
  int topic_b = 0;  // 1-based
  double similarity = 0.0;
};

/// Thresholded similarity graph between topic models of consecutive years.
///
/// `edges` holds every pair above alpha (merges and splits are visible there);
/// `order_maps[p]` is the injective topic_a -> topic_b matching used to carry
/// topic ids across year pair p.
struct TopicAlignment {
  double alpha = 0.5;
  std::vector<int> years;
  std::vector<std::pair<int, int>> year_pairs;
  std::vector<TopicEdge> edges;
  std::vector<std::map<int, int>> order_maps;
  /// chains[c] lists (year, topic) along one propagated topic id (id = c + 1).
  std::vector<std::vector<std::pair<int, int>>> chains;
  /// node_ids[y][topic - 1] = propagated id of that topic in year index y.
  std::vector<std::vector<int>> node_ids;
};

/// Aligns one year pair. Edges are pairs with similarity strictly above alpha;
/// the order map is greedy global-max matching unless `matching` says otherwise.
/// Throws DataError listing the symmetric difference on occupation mismatch.
TopicAlignment align(const TopicModel& a, const TopicModel& b, double alpha,
                     int year_a = 0, int year_b = 1, Matching matching = Matching::greedy);

/// Aligns consecutive models and propagates topic ids along the order maps.
TopicAlignment chain(const std::vector<TopicModel>& models, const std::vector<int>& years,
                     double alpha, Matching matching = Matching::greedy);

/// Number of chains spanning every year.
int persistent_chain_count(const TopicAlignment& alignment);

/// Maximum-weight assignment on a square-or-rectangular score matrix. Returns,
/// for each row, the assigned column or -1.
std::vector<int> hungarian_max(const Matrix& scores);

}  // namespace laborscope
