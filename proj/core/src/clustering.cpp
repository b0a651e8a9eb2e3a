#include "laborscope/clustering.hpp"

#include "laborscope/dynamics.hpp"
#include "laborscope/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace laborscope {

std::string_view to_string(Linkage l) {
  switch (l) {
    case Linkage::average: return "average";
    case Linkage::complete: return "complete";
    case Linkage::single: return "single";
  }
  return "average";
}

Linkage linkage_from_string(std::string_view text) {
  if (text == "average") return Linkage::average;
  if (text == "complete") return Linkage::complete;
  if (text == "single") return Linkage::single;
  throw ConfigError("unknown linkage '" + std::string(text) + "'");
}

Matrix cosine_distance_matrix(const std::vector<RegionComposition>& comps) {
  if (comps.size() < 2) throw DataError("cosine_distance_matrix needs at least two regions");
  for (const auto& c : comps) {
    if (std::all_of(c.weights.begin(), c.weights.end(), [](double w) { return w == 0.0; })) {
      throw NumericError("region " + c.region_code + " has an all-zero composition");
    }
  }
  const auto n = static_cast<Eigen::Index>(comps.size());
  Matrix d = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double dist = 1.0 - cosine_similarity(comps[static_cast<std::size_t>(i)].weights,
                                                  comps[static_cast<std::size_t>(j)].weights);
      d(i, j) = dist;
      d(j, i) = dist;
    }
  }
  return d;
}

Dendrogram hierarchical_cluster(const Matrix& distances, Linkage linkage,
                                std::vector<std::string> labels) {
  const Eigen::Index n = distances.rows();
  if (distances.cols() != n) throw DataError("distance matrix must be square");
  if (n < 1) throw DataError("distance matrix is empty");
  if (!distances.allFinite()) throw DataError("distance matrix has non-finite entries");
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (distances(i, j) < 0.0) throw DataError("distance matrix has negative entries");
      if (distances(i, j) != distances(j, i)) throw DataError("distance matrix is not symmetric");
    }
  }
  if (labels.empty()) {
    for (Eigen::Index i = 0; i < n; ++i) labels.push_back(std::to_string(i));
  }
  if (static_cast<Eigen::Index>(labels.size()) != n) {
    throw DataError("leaf label count does not match the distance matrix");
  }

  Dendrogram tree;
  tree.linkage = linkage;
  tree.leaf_labels = std::move(labels);

  const auto total = static_cast<std::size_t>(2 * n - 1);
  // dist[a][b] between cluster ids; only active ids are consulted.
  std::vector<std::vector<double>> dist(total, std::vector<double>(total, 0.0));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      dist[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = distances(i, j);
    }
  }
  std::vector<int> size(total, 1);
  std::vector<int> active(static_cast<std::size_t>(n));
  std::iota(active.begin(), active.end(), 0);

  for (Eigen::Index step = 0; step + 1 < n; ++step) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_x = 0;
    std::size_t best_y = 0;
    // `active` stays sorted, so the first strict minimum has the smallest (a, b) key.
    for (std::size_t x = 0; x < active.size(); ++x) {
      for (std::size_t y = x + 1; y < active.size(); ++y) {
        const double d = dist[static_cast<std::size_t>(active[x])][static_cast<std::size_t>(active[y])];
        if (d < best) {
          best = d;
          best_x = x;
          best_y = y;
        }
      }
    }
    const int a = active[best_x];
    const int b = active[best_y];
    const int c = static_cast<int>(n + step);
    const auto ua = static_cast<std::size_t>(a);
    const auto ub = static_cast<std::size_t>(b);
    const auto uc = static_cast<std::size_t>(c);
    size[uc] = size[ua] + size[ub];
    for (int other : active) {
      if (other == a || other == b) continue;
      const auto uo = static_cast<std::size_t>(other);
      double merged = 0.0;
      switch (linkage) {
        case Linkage::single: merged = std::min(dist[ua][uo], dist[ub][uo]); break;
        case Linkage::complete: merged = std::max(dist[ua][uo], dist[ub][uo]); break;
        case Linkage::average:
          merged = (size[ua] * dist[ua][uo] + size[ub] * dist[ub][uo]) / (size[ua] + size[ub]);
          break;
      }
      dist[uc][uo] = merged;
      dist[uo][uc] = merged;
    }
    tree.merges.push_back({a, b, best, c});
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(best_y));
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(best_x));
    active.push_back(c);  // largest id so far, order preserved
  }
  return tree;
}

std::vector<int> Dendrogram::leaf_order() const {
  const int n = static_cast<int>(leaf_labels.size());
  std::vector<int> order;
  if (n == 0) return order;
  if (merges.empty()) {
    for (int i = 0; i < n; ++i) order.push_back(i);
    return order;
  }
  std::vector<int> stack{merges.back().new_cluster};
  while (!stack.empty()) {
    const int id = stack.back();
    stack.pop_back();
    if (id < n) {
      order.push_back(id);
      continue;
    }
    const auto& m = merges[static_cast<std::size_t>(id - n)];
    stack.push_back(m.cluster_b);
    stack.push_back(m.cluster_a);
  }
  return order;
}

namespace {

std::string newick_label(const std::string& label) {
  if (label.find_first_of("()[]':;, \t") == std::string::npos && !label.empty()) return label;
  std::string out = "'";
  for (char c : label) {
    if (c == '\'') out.push_back('\'');
    out.push_back(c);
  }
  out.push_back('\'');
  return out;
}

std::string short_double(double v) {
  std::ostringstream s;
  s.precision(12);
  s << v;
  return s.str();
}

}  // namespace

std::string Dendrogram::newick() const {
  const int n = static_cast<int>(leaf_labels.size());
  if (n == 0) return ";";
  auto height_of = [&](int id) {
    return id < n ? 0.0 : merges[static_cast<std::size_t>(id - n)].height;
  };
  std::function<std::string(int)> render = [&](int id) -> std::string {
    if (id < n) return newick_label(leaf_labels[static_cast<std::size_t>(id)]);
    const auto& m = merges[static_cast<std::size_t>(id - n)];
    return "(" + render(m.cluster_a) + ":" + short_double(m.height - height_of(m.cluster_a)) +
           "," + render(m.cluster_b) + ":" + short_double(m.height - height_of(m.cluster_b)) + ")";
  };
  if (merges.empty()) return render(0) + ";";
  return render(merges.back().new_cluster) + ";";
}

std::vector<int> Dendrogram::cut(double height) const {
  const int n = static_cast<int>(leaf_labels.size());
  std::vector<int> parent(static_cast<std::size_t>(2 * std::max(n, 1) - 1));
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  };
  for (const auto& m : merges) {
    if (m.height > height) continue;
    parent[static_cast<std::size_t>(find(m.cluster_a))] = m.new_cluster;
    parent[static_cast<std::size_t>(find(m.cluster_b))] = m.new_cluster;
  }
  std::unordered_map<int, int> flat;
  std::vector<int> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int root = find(i);
    auto it = flat.try_emplace(root, static_cast<int>(flat.size())).first;
    out[static_cast<std::size_t>(i)] = it->second;
  }
  return out;
}

std::vector<RegionComposition> select_top_regions(const std::vector<RegionComposition>& comps,
                                                  const EmploymentTable& table, int year, int n) {
  if (n < 1) throw ConfigError("select_top_regions: n must be positive");
  std::unordered_map<std::string, double> totals;
  for (const auto& r : table.records()) {
    if (r.year == year) totals[r.region_code] += r.employment;
  }
  std::vector<RegionComposition> sorted = comps;
  std::stable_sort(sorted.begin(), sorted.end(), [&](const auto& a, const auto& b) {
    const double ta = totals.count(a.region_code) ? totals.at(a.region_code) : 0.0;
    const double tb = totals.count(b.region_code) ? totals.at(b.region_code) : 0.0;
    if (ta != tb) return ta > tb;
    return a.region_code < b.region_code;
  });
  if (static_cast<std::size_t>(n) < sorted.size()) sorted.resize(static_cast<std::size_t>(n));
  return sorted;
}

}  // namespace laborscope
