#include "laborscope/weighting.hpp"

#include "laborscope/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace laborscope {

LogBase log_base_from_string(std::string_view text) {
  if (text == "e") return LogBase::e;
  if (text == "2") return LogBase::two;
  if (text == "10") return LogBase::ten;
  throw ConfigError("log base must be one of e, 2, 10 (got '" + std::string(text) + "')");
}

std::vector<int> document_frequency(const RegionOccupationMatrix& raw) {
  if (raw.kind != MatrixKind::raw) throw DataError("document_frequency expects a raw matrix");
  std::vector<int> df(static_cast<std::size_t>(raw.occupations()), 0);
  for (Eigen::Index j = 0; j < raw.occupations(); ++j) {
    df[static_cast<std::size_t>(j)] = static_cast<int>((raw.values.col(j).array() > 0.0).count());
  }
  return df;
}

RegionOccupationMatrix tfidf(const RegionOccupationMatrix& raw, LogBase base) {
  if (raw.kind != MatrixKind::raw) throw DataError("tfidf expects a raw matrix");
  if (raw.regions() < 1) throw DataError("tfidf needs at least one region");
  raw.validate();

  const auto df = document_frequency(raw);
  const double n = static_cast<double>(raw.regions());
  const double scale = base == LogBase::e    ? 1.0
                       : base == LogBase::two ? 1.0 / std::log(2.0)
                                              : 1.0 / std::log(10.0);

  RegionOccupationMatrix out = raw;
  out.kind = MatrixKind::tfidf;
  for (Eigen::Index j = 0; j < raw.occupations(); ++j) {
    const int d = df[static_cast<std::size_t>(j)];
    if (d == 0) {
      out.values.col(j).setZero();
      continue;
    }
    const double idf = base == LogBase::e ? std::log(n / d) : std::log(n / d) * scale;
    for (Eigen::Index i = 0; i < raw.regions(); ++i) out.values(i, j) = raw.values(i, j) * idf;
  }
  return out;
}

RegionOccupationMatrix prune_empty_columns(const RegionOccupationMatrix& m) {
  std::vector<Eigen::Index> keep;
  for (Eigen::Index j = 0; j < m.occupations(); ++j) {
    if ((m.values.col(j).array() != 0.0).any()) keep.push_back(j);
  }
  RegionOccupationMatrix out;
  out.kind = m.kind;
  out.region_labels = m.region_labels;
  out.region_names = m.region_names;
  out.values.resize(m.regions(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c) {
    const auto j = keep[c];
    out.values.col(static_cast<Eigen::Index>(c)) = m.values.col(j);
    out.occupation_labels.push_back(m.occupation_labels[static_cast<std::size_t>(j)]);
    if (!m.occupation_names.empty()) {
      out.occupation_names.push_back(m.occupation_names[static_cast<std::size_t>(j)]);
    }
  }
  return out;
}

std::vector<ScoredOccupation> top_k_by_region(const RegionOccupationMatrix& m,
                                              std::string_view region, int k) {
  if (k < 1) throw ConfigError("top_k_by_region: k must be positive");
  const auto row = m.region_index(region);
  if (row < 0) throw DataError("unknown region '" + std::string(region) + "'");

  std::vector<Eigen::Index> idx(static_cast<std::size_t>(m.occupations()));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  const auto take = std::min<std::size_t>(static_cast<std::size_t>(k), idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take), idx.end(),
                    [&](Eigen::Index a, Eigen::Index b) {
                      const double sa = m.values(row, a);
                      const double sb = m.values(row, b);
                      if (sa != sb) return sa > sb;
                      return m.occupation_labels[static_cast<std::size_t>(a)] <
                             m.occupation_labels[static_cast<std::size_t>(b)];
                    });
  std::vector<ScoredOccupation> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) {
    out.push_back({m.occupation_labels[static_cast<std::size_t>(idx[i])], m.values(row, idx[i])});
  }
  return out;
}

}  // namespace laborscope
