#include "laborscope/spatial.hpp"

#include "laborscope/csv.hpp"
#include "laborscope/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <set>
#include <unordered_map>

namespace laborscope {

namespace {

std::vector<std::vector<std::string>> read_rows(const std::filesystem::path& path,
                                                std::size_t min_fields) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  bool first = true;
  if (!csv::next_line(in, first)) throw DataError(path.string() + ": empty file");
  std::vector<std::vector<std::string>> rows;
  std::size_t line_no = 1;
  while (auto line = csv::next_line(in, first)) {
    ++line_no;
    auto f = csv::split_line(*line);
    if (f.size() < min_fields) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(min_fields) + " fields");
    }
    for (auto& s : f) s = csv::trim(s);
    rows.push_back(std::move(f));
  }
  return rows;
}

}  // namespace

RegionCoordinates read_coordinates(const std::filesystem::path& path) {
  RegionCoordinates coords;
  for (const auto& f : read_rows(path, 3)) {
    auto lat = csv::parse_number(f[1]);
    auto lon = csv::parse_number(f[2]);
    if (!lat || !lon || *lat < -90.0 || *lat > 90.0 || *lon < -180.0 || *lon > 180.0) {
      throw DataError(path.string() + ": invalid coordinates for region " + f[0]);
    }
    coords[f[0]] = {*lat, *lon};
  }
  return coords;
}

double haversine_km(Coordinate a, Coordinate b) {
  constexpr double kEarthRadiusKm = 6371.0088;
  constexpr double deg = std::numbers::pi / 180.0;
  const double dlat = (b.latitude - a.latitude) * deg;
  const double dlon = (b.longitude - a.longitude) * deg;
  const double h = std::sin(dlat / 2) * std::sin(dlat / 2) +
                   std::cos(a.latitude * deg) * std::cos(b.latitude * deg) *
                       std::sin(dlon / 2) * std::sin(dlon / 2);
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

SpatialWeights row_standardize(SpatialWeights weights) {
  for (Eigen::Index i = 0; i < weights.w.rows(); ++i) {
    const double total = weights.w.row(i).sum();
    if (total > 0.0) weights.w.row(i) /= total;
  }
  weights.row_standardized = true;
  return weights;
}

SpatialWeights build_weights(const RegionCoordinates& coords, const WeightSource& source,
                             const std::vector<std::string>& regions) {
  SpatialWeights out;
  out.source = source;
  if (regions.empty()) {
    for (const auto& [code, c] : coords) out.region_labels.push_back(code);
  } else {
    out.region_labels = regions;
  }
  const auto n = static_cast<Eigen::Index>(out.region_labels.size());
  if (n < 2) throw DataError("spatial weights need at least two regions");

  std::vector<Coordinate> points;
  if (source.kind != WeightSource::Kind::adjacency_file) {
    for (const auto& code : out.region_labels) {
      auto it = coords.find(code);
      if (it == coords.end()) throw DataError("no coordinates for region " + code);
      points.push_back(it->second);
    }
  }

  out.w = Matrix::Zero(n, n);
  switch (source.kind) {
    case WeightSource::Kind::knn: {
      if (source.neighbors < 1) throw ConfigError("knn needs at least one neighbour");
      const auto k = std::min<Eigen::Index>(source.neighbors, n - 1);
      // Region labels are not necessarily sorted; ties go to the smaller code.
      for (Eigen::Index i = 0; i < n; ++i) {
        std::vector<std::pair<double, Eigen::Index>> cand;
        for (Eigen::Index j = 0; j < n; ++j) {
          if (j != i) {
            cand.emplace_back(haversine_km(points[static_cast<std::size_t>(i)],
                                           points[static_cast<std::size_t>(j)]),
                              j);
          }
        }
        std::sort(cand.begin(), cand.end(), [&](const auto& a, const auto& b) {
          if (a.first != b.first) return a.first < b.first;
          return out.region_labels[static_cast<std::size_t>(a.second)] <
                 out.region_labels[static_cast<std::size_t>(b.second)];
        });
        for (Eigen::Index r = 0; r < k; ++r) out.w(i, cand[static_cast<std::size_t>(r)].second) = 1.0;
        if (k < static_cast<Eigen::Index>(cand.size()) &&
            cand[static_cast<std::size_t>(k)].first == cand[static_cast<std::size_t>(k - 1)].first) {
          out.warnings.push_back("knn tie at the neighbour cutoff for region " +
                                 out.region_labels[static_cast<std::size_t>(i)] +
                                 "; resolved by region code");
        }
      }
      break;
    }
    case WeightSource::Kind::inverse_distance: {
      if (!(source.power > 0.0)) throw ConfigError("inverse-distance power must be positive");
      for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
          if (i == j) continue;
          const double d = haversine_km(points[static_cast<std::size_t>(i)],
                                        points[static_cast<std::size_t>(j)]);
          if (d == 0.0) {
            throw DataError("regions " + out.region_labels[static_cast<std::size_t>(i)] + " and " +
                            out.region_labels[static_cast<std::size_t>(j)] +
                            " share coordinates; inverse-distance weight is undefined");
          }
          out.w(i, j) = std::pow(d, -source.power);
        }
      }
      break;
    }
    case WeightSource::Kind::adjacency_file: {
      std::unordered_map<std::string, Eigen::Index> index;
      for (Eigen::Index i = 0; i < n; ++i) index[out.region_labels[static_cast<std::size_t>(i)]] = i;
      for (const auto& f : read_rows(source.adjacency, 2)) {
        auto a = index.find(f[0]);
        auto b = index.find(f[1]);
        if (a == index.end() || b == index.end()) {
          out.warnings.push_back("adjacency row " + f[0] + "," + f[1] + " names an unknown region");
          continue;
        }
        if (a->second == b->second) continue;
        double weight = 1.0;
        if (f.size() > 2) {
          auto v = csv::parse_number(f[2]);
          if (!v || *v < 0.0) throw DataError(source.adjacency.string() + ": bad weight '" + f[2] + "'");
          weight = *v;
        }
        out.w(a->second, b->second) = weight;
      }
      break;
    }
  }
  if (source.row_standardize) out = row_standardize(std::move(out));
  return out;
}

SpatialWeights restrict_weights(const SpatialWeights& weights, const std::vector<std::string>& regions) {
  std::unordered_map<std::string, Eigen::Index> index;
  for (std::size_t i = 0; i < weights.region_labels.size(); ++i) {
    index[weights.region_labels[i]] = static_cast<Eigen::Index>(i);
  }
  std::vector<Eigen::Index> pick;
  for (const auto& r : regions) {
    auto it = index.find(r);
    if (it == index.end()) throw DataError("spatial weights have no region " + r);
    pick.push_back(it->second);
  }
  SpatialWeights out = weights;
  out.region_labels = regions;
  const auto n = static_cast<Eigen::Index>(pick.size());
  out.w.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      out.w(i, j) = weights.w(pick[static_cast<std::size_t>(i)], pick[static_cast<std::size_t>(j)]);
    }
  }
  if (weights.row_standardized) out = row_standardize(std::move(out));
  return out;
}

double morans_i(std::span<const double> values, const SpatialWeights& weights) {
  const auto n = values.size();
  if (weights.w.rows() != static_cast<Eigen::Index>(n) || weights.w.cols() != static_cast<Eigen::Index>(n)) {
    throw DataError("morans_i: weights are " + std::to_string(weights.w.rows()) + "x" +
                    std::to_string(weights.w.cols()) + " but there are " + std::to_string(n) +
                    " values");
  }
  if (n < 3) throw DataError("morans_i needs at least three regions");
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
  std::vector<double> z(n);
  double denom = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    z[i] = values[i] - mean;
    denom += z[i] * z[i];
  }
  if (denom == 0.0 || std::all_of(values.begin(), values.end(), [&](double v) { return v == values[0]; })) {
    throw NumericError("zero variance: Moran's I is undefined for constant values");
  }
  double s0 = 0.0;
  double cross = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double wij = weights.w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      s0 += wij;
      row += wij * z[j];
    }
    cross += z[i] * row;
  }
  if (s0 == 0.0) throw NumericError("morans_i: spatial weights sum to zero");
  return (static_cast<double>(n) / s0) * cross / denom;
}

double morans_i(const Vector& values, const SpatialWeights& weights) {
  return morans_i(std::span<const double>(values.data(), static_cast<std::size_t>(values.size())), weights);
}

PermutationResult morans_i_permutation(const Vector& values, const SpatialWeights& weights,
                                       int permutations, std::uint64_t seed) {
  if (permutations < 1) throw ConfigError("permutations must be positive");
  PermutationResult result;
  result.statistic = morans_i(values, weights);
  const double expected = -1.0 / static_cast<double>(values.size() - 1);
  const bool upper = result.statistic >= expected;
  std::vector<double> shuffled(values.data(), values.data() + values.size());
  std::mt19937_64 rng(seed);
  int extreme = 0;
  double total = 0.0;
  for (int p = 0; p < permutations; ++p) {
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const double stat = morans_i(shuffled, weights);
    total += stat;
    if (upper ? stat >= result.statistic : stat <= result.statistic) ++extreme;
  }
  result.mean = total / permutations;
  result.p_value = (extreme + 1.0) / (permutations + 1.0);
  return result;
}

SectorMapping read_sector_mapping(const std::filesystem::path& path) {
  SectorMapping mapping;
  for (const auto& f : read_rows(path, 2)) {
    auto [it, inserted] = mapping.emplace(f[0], f[1]);
    if (!inserted && it->second != f[1]) {
      throw DataError(path.string() + ": occupation " + f[0] + " mapped to two sectors");
    }
  }
  return mapping;
}

LocationQuotients location_quotient(const RegionOccupationMatrix& raw, const SectorMapping& sectors) {
  if (sectors.empty()) throw ConfigError("location_quotient: sector mapping is empty");
  if (raw.kind != MatrixKind::raw) throw DataError("location_quotient expects a raw matrix");

  LocationQuotients out;
  out.region_labels = raw.region_labels;
  std::vector<std::string> sector_of(static_cast<std::size_t>(raw.occupations()));
  std::set<std::string> used;
  for (std::size_t j = 0; j < sector_of.size(); ++j) {
    auto it = sectors.find(raw.occupation_labels[j]);
    if (it == sectors.end()) {
      sector_of[j] = std::string(kUnclassifiedSector);
      out.unmapped_occupations.push_back(raw.occupation_labels[j]);
    } else {
      sector_of[j] = it->second;
    }
    used.insert(sector_of[j]);
  }
  out.sector_labels.assign(used.begin(), used.end());
  std::unordered_map<std::string, Eigen::Index> sector_index;
  for (std::size_t s = 0; s < out.sector_labels.size(); ++s) {
    sector_index[out.sector_labels[s]] = static_cast<Eigen::Index>(s);
  }

  Matrix e = Matrix::Zero(raw.regions(), static_cast<Eigen::Index>(out.sector_labels.size()));
  for (Eigen::Index j = 0; j < raw.occupations(); ++j) {
    e.col(sector_index.at(sector_of[static_cast<std::size_t>(j)])) += raw.values.col(j);
  }
  const double grand = e.sum();
  if (grand <= 0.0) throw DataError("location_quotient: total employment is zero");
  const Vector sector_totals = e.colwise().sum().transpose();

  out.lq = Matrix::Zero(e.rows(), e.cols());
  for (Eigen::Index r = 0; r < e.rows(); ++r) {
    const double region_total = e.row(r).sum();
    if (region_total <= 0.0) {
      out.zero_regions.push_back(raw.region_labels[static_cast<std::size_t>(r)]);
      continue;
    }
    for (Eigen::Index s = 0; s < e.cols(); ++s) {
      if (sector_totals(s) <= 0.0) continue;
      out.lq(r, s) = (e(r, s) / region_total) / (sector_totals(s) / grand);
    }
  }
  return out;
}

}  // namespace laborscope
