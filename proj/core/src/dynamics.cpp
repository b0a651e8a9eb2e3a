#include "laborscope/dynamics.hpp"

#include "laborscope/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>
#include <tuple>

namespace laborscope {

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw DataError("cosine_similarity: length mismatch");
  double dot = 0.0;
  double uu = 0.0;
  double vv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    uu += u[i] * u[i];
    vv += v[i] * v[i];
  }
  if (uu == 0.0 || vv == 0.0) throw NumericError("undefined similarity: zero vector");
  // sqrt(uu * vv) is exactly uu when u == v, so identical vectors give exactly 1.
  double denom = std::sqrt(uu * vv);
  if (!std::isfinite(denom) || denom == 0.0) denom = std::sqrt(uu) * std::sqrt(vv);
  return std::clamp(dot / denom, -1.0, 1.0);
}

double cosine_similarity(const Vector& u, const Vector& v) {
  return cosine_similarity(std::span<const double>(u.data(), static_cast<std::size_t>(u.size())),
                           std::span<const double>(v.data(), static_cast<std::size_t>(v.size())));
}

namespace {

void check_occupation_space(const TopicModel& a, const TopicModel& b) {
  if (a.occupation_labels.empty() || b.occupation_labels.empty()) {
    if (a.h.cols() != b.h.cols()) {
      throw DataError("align: models have " + std::to_string(a.h.cols()) + " and " +
                      std::to_string(b.h.cols()) + " occupations");
    }
    return;
  }
  if (a.occupation_labels == b.occupation_labels) return;
  std::set<std::string> sa(a.occupation_labels.begin(), a.occupation_labels.end());
  std::set<std::string> sb(b.occupation_labels.begin(), b.occupation_labels.end());
  std::vector<std::string> diff;
  std::set_symmetric_difference(sa.begin(), sa.end(), sb.begin(), sb.end(),
                                std::back_inserter(diff));
  std::ostringstream msg;
  if (diff.empty()) {
    msg << "align: occupation labels are ordered differently";
  } else {
    msg << "align: occupation label sets differ (" << diff.size() << " codes):";
    for (std::size_t i = 0; i < std::min<std::size_t>(diff.size(), 20); ++i) msg << ' ' << diff[i];
    if (diff.size() > 20) msg << " ...";
  }
  throw DataError(msg.str());
}

}  // namespace

Matrix topic_similarity(const TopicModel& a, const TopicModel& b) {
  check_occupation_space(a, b);
  Matrix s(a.h.rows(), b.h.rows());
  for (Eigen::Index i = 0; i < a.h.rows(); ++i) {
    const Vector u = a.h.row(i).transpose();
    for (Eigen::Index j = 0; j < b.h.rows(); ++j) {
      const Vector v = b.h.row(j).transpose();
      // A dead (all-zero) topic is similar to nothing.
      s(i, j) = (u.squaredNorm() == 0.0 || v.squaredNorm() == 0.0) ? 0.0 : cosine_similarity(u, v);
    }
  }
  return s;
}

std::vector<int> hungarian_max(const Matrix& scores) {
  const auto rows = static_cast<int>(scores.rows());
  const auto cols = static_cast<int>(scores.cols());
  const int n = std::max(rows, cols);
  if (n == 0) return {};
  const double top = scores.size() > 0 ? scores.maxCoeff() : 0.0;
  // Minimisation form on a padded square matrix, 1-based potentials.
  auto cost = [&](int i, int j) {
    if (i >= rows || j >= cols) return top;
    return top - scores(i, j);
  };
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n + 1), 0.0);
  std::vector<double> v(static_cast<std::size_t>(n + 1), 0.0);
  std::vector<int> p(static_cast<std::size_t>(n + 1), 0);
  std::vector<int> way(static_cast<std::size_t>(n + 1), 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n + 1), inf);
    std::vector<bool> used(static_cast<std::size_t>(n + 1), false);
    do {
      used[static_cast<std::size_t>(j0)] = true;
      const int i0 = p[static_cast<std::size_t>(j0)];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] -
                           v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> assignment(static_cast<std::size_t>(rows), -1);
  for (int j = 1; j <= n; ++j) {
    const int i = p[static_cast<std::size_t>(j)] - 1;
    if (i >= 0 && i < rows && j - 1 < cols) assignment[static_cast<std::size_t>(i)] = j - 1;
  }
  return assignment;
}

namespace {

std::map<int, int> greedy_matching(const Matrix& s, double alpha) {
  std::vector<std::tuple<double, int, int>> candidates;
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    for (Eigen::Index j = 0; j < s.cols(); ++j) {
      if (s(i, j) > alpha) candidates.emplace_back(s(i, j), static_cast<int>(i), static_cast<int>(j));
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const auto& x, const auto& y) {
    if (std::get<0>(x) != std::get<0>(y)) return std::get<0>(x) > std::get<0>(y);
    return std::tie(std::get<1>(x), std::get<2>(x)) < std::tie(std::get<1>(y), std::get<2>(y));
  });
  std::set<int> used_a;
  std::set<int> used_b;
  std::map<int, int> order;
  for (const auto& [sim, i, j] : candidates) {
    if (used_a.count(i) || used_b.count(j)) continue;
    used_a.insert(i);
    used_b.insert(j);
    order[i + 1] = j + 1;
  }
  return order;
}

std::map<int, int> hungarian_matching(const Matrix& s, double alpha) {
  Matrix gain = (s.array() > alpha).select(s.array() - alpha, 0.0);
  const auto assignment = hungarian_max(gain);
  std::map<int, int> order;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    const int j = assignment[i];
    if (j >= 0 && s(static_cast<Eigen::Index>(i), j) > alpha) order[static_cast<int>(i) + 1] = j + 1;
  }
  return order;
}

void append_pair(TopicAlignment& out, const TopicModel& a, const TopicModel& b, int year_a,
                 int year_b, Matching matching) {
  const Matrix s = topic_similarity(a, b);
  out.year_pairs.emplace_back(year_a, year_b);
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    for (Eigen::Index j = 0; j < s.cols(); ++j) {
      if (s(i, j) > out.alpha) {
        out.edges.push_back({year_a, static_cast<int>(i) + 1, year_b, static_cast<int>(j) + 1, s(i, j)});
      }
    }
  }
  out.order_maps.push_back(matching == Matching::greedy ? greedy_matching(s, out.alpha)
                                                        : hungarian_matching(s, out.alpha));
}

void propagate_ids(TopicAlignment& out, const std::vector<int>& topic_counts) {
  int next_id = 0;
  out.node_ids.clear();
  out.chains.clear();
  for (std::size_t y = 0; y < topic_counts.size(); ++y) {
    std::vector<int> ids(static_cast<std::size_t>(topic_counts[y]), 0);
    if (y > 0) {
      const auto& prev = out.node_ids[y - 1];
      for (const auto& [src, dst] : out.order_maps[y - 1]) {
        ids[static_cast<std::size_t>(dst - 1)] = prev[static_cast<std::size_t>(src - 1)];
      }
    }
    for (std::size_t t = 0; t < ids.size(); ++t) {
      if (ids[t] == 0) {
        ids[t] = ++next_id;
        out.chains.emplace_back();
      }
      out.chains[static_cast<std::size_t>(ids[t] - 1)].emplace_back(out.years[y],
                                                                    static_cast<int>(t) + 1);
    }
    out.node_ids.push_back(std::move(ids));
  }
}

}  // namespace

TopicAlignment align(const TopicModel& a, const TopicModel& b, double alpha, int year_a,
                     int year_b, Matching matching) {
  if (!(alpha >= -1.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [-1, 1]");
  TopicAlignment out;
  out.alpha = alpha;
  out.years = {year_a, year_b};
  append_pair(out, a, b, year_a, year_b, matching);
  propagate_ids(out, {static_cast<int>(a.h.rows()), static_cast<int>(b.h.rows())});
  return out;
}

TopicAlignment chain(const std::vector<TopicModel>& models, const std::vector<int>& years,
                     double alpha, Matching matching) {
  if (models.size() < 2) throw ConfigError("chain needs at least two models");
  if (years.size() != models.size()) throw ConfigError("chain: one year per model is required");
  if (!(alpha >= -1.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [-1, 1]");
  TopicAlignment out;
  out.alpha = alpha;
  out.years = years;
  std::vector<int> counts;
  for (std::size_t y = 0; y < models.size(); ++y) {
    counts.push_back(static_cast<int>(models[y].h.rows()));
    if (y > 0) append_pair(out, models[y - 1], models[y], years[y - 1], years[y], matching);
  }
  propagate_ids(out, counts);
  return out;
}

int persistent_chain_count(const TopicAlignment& alignment) {
  return static_cast<int>(std::count_if(alignment.chains.begin(), alignment.chains.end(),
                                        [&](const auto& c) { return c.size() == alignment.years.size(); }));
}

}  // namespace laborscope
