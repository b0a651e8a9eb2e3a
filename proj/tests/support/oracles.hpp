#pragma once

// Independent reference computations for tests. Nothing here calls into the
// library code paths it is used to check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace oracle {

using Grid = std::vector<std::vector<double>>;

inline std::vector<int> document_frequency(const Grid& x) {
  if (x.empty()) return {};
  std::vector<int> df(x[0].size(), 0);
  for (const auto& row : x) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (row[j] > 0) df[j] += 1;
    }
  }
  return df;
}

/// Entry-by-entry TF-IDF with natural log, straight from the definition.
inline Grid tfidf(const Grid& x) {
  const auto df = document_frequency(x);
  const double n = static_cast<double>(x.size());
  Grid out = x;
  for (std::size_t r = 0; r < x.size(); ++r) {
    for (std::size_t o = 0; o < x[r].size(); ++o) {
      out[r][o] = df[o] == 0 ? 0.0 : x[r][o] * std::log(n / static_cast<double>(df[o]));
    }
  }
  return out;
}

inline double half_frobenius(const Grid& x, const Grid& w, const Grid& h) {
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = 0; j < x[i].size(); ++j) {
      double wh = 0.0;
      for (std::size_t l = 0; l < h.size(); ++l) wh += w[i][l] * h[l][j];
      total += (x[i][j] - wh) * (x[i][j] - wh);
    }
  }
  return 0.5 * total;
}

inline double cosine(const std::vector<double>& u, const std::vector<double>& v) {
  long double dot = 0, nu = 0, nv = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += static_cast<long double>(u[i]) * v[i];
    nu += static_cast<long double>(u[i]) * u[i];
    nv += static_cast<long double>(v[i]) * v[i];
  }
  return static_cast<double>(dot / std::sqrt(nu * nv));
}

struct Merge {
  int a;
  int b;
  double height;
};

enum class Link { average, complete, single };

/// O(n^3)-per-step agglomeration: every cluster distance is recomputed from
/// the leaf distances, never updated incrementally.
inline std::vector<Merge> agglomerate(const Grid& d, Link link) {
  const int n = static_cast<int>(d.size());
  std::map<int, std::vector<int>> clusters;
  for (int i = 0; i < n; ++i) clusters[i] = {i};
  auto linkage = [&](const std::vector<int>& p, const std::vector<int>& q) {
    double acc = link == Link::single ? std::numeric_limits<double>::infinity()
                 : link == Link::complete ? -std::numeric_limits<double>::infinity() : 0.0;
    for (int i : p) {
      for (int j : q) {
        if (link == Link::single) acc = std::min(acc, d[i][j]);
        else if (link == Link::complete) acc = std::max(acc, d[i][j]);
        else acc += d[i][j];
      }
    }
    if (link == Link::average) acc /= static_cast<double>(p.size() * q.size());
    return acc;
  };
  std::vector<Merge> merges;
  int next = n;
  while (clusters.size() > 1) {
    double best = std::numeric_limits<double>::infinity();
    int ba = -1;
    int bb = -1;
    for (auto it = clusters.begin(); it != clusters.end(); ++it) {
      for (auto jt = std::next(it); jt != clusters.end(); ++jt) {
        const double v = linkage(it->second, jt->second);
        if (v < best) {
          best = v;
          ba = it->first;
          bb = jt->first;
        }
      }
    }
    auto merged = clusters[ba];
    merged.insert(merged.end(), clusters[bb].begin(), clusters[bb].end());
    clusters.erase(ba);
    clusters.erase(bb);
    clusters[next++] = merged;
    merges.push_back({ba, bb, best});
  }
  return merges;
}

inline double morans_i(const std::vector<double>& x, const Grid& w) {
  const double n = static_cast<double>(x.size());
  double mean = 0;
  for (double v : x) mean += v;
  mean /= n;
  double num = 0, den = 0, s0 = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    den += (x[i] - mean) * (x[i] - mean);
    for (std::size_t j = 0; j < x.size(); ++j) {
      num += w[i][j] * (x[i] - mean) * (x[j] - mean);
      s0 += w[i][j];
    }
  }
  return (n / s0) * (num / den);
}

inline Grid random_grid(std::mt19937_64& rng, int rows, int cols, double zero_prob, double scale = 100.0) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Grid g(static_cast<std::size_t>(rows), std::vector<double>(static_cast<std::size_t>(cols)));
  for (auto& row : g) {
    for (auto& v : row) v = u(rng) < zero_prob ? 0.0 : std::floor(1 + scale * u(rng));
  }
  return g;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  const char* base = std::getenv("LABORSCOPE_TMP");
  std::filesystem::path dir = base ? std::filesystem::path(base) : std::filesystem::temp_directory_path() / "laborscope-tests";
  dir /= name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace oracle
