#pragma once

#include "laborscope/matrix.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace laborscope {

struct Coordinate {
  double latitude = 0.0;   // degrees
  double longitude = 0.0;  // degrees
};

/// region code -> centroid. Ordered by code.
using RegionCoordinates = std::map<std::string, Coordinate, std::less<>>;

RegionCoordinates read_coordinates(const std::filesystem::path& path);

/// Great-circle distance in kilometres.
double haversine_km(Coordinate a, Coordinate b);

struct WeightSource {
  enum class Kind { knn, inverse_distance, adjacency_file };
  Kind kind = Kind::knn;
  int neighbors = 8;
  double power = 1.0;
  std::filesystem::path adjacency;  // CSV region_a,region_b[,weight]
  bool row_standardize = true;

  static WeightSource knn(int k) { return {Kind::knn, k, 1.0, {}, true}; }
  static WeightSource inverse_distance(double p) {
    return {Kind::inverse_distance, 8, p, {}, true};
  }
};

struct SpatialWeights {
  Matrix w;  // zero diagonal, nonnegative
  std::vector<std::string> region_labels;
  bool row_standardized = false;
  WeightSource source;
  std::vector<std::string> warnings;
};

/// Builds weights for `regions` (defaults to every coordinate, by code).
/// knn ties are broken by region code.
SpatialWeights build_weights(const RegionCoordinates& coords, const WeightSource& source,
                             const std::vector<std::string>& regions = {});

SpatialWeights row_standardize(SpatialWeights weights);

/// Reorders/subsets weights to `regions`; every label must exist.
SpatialWeights restrict_weights(const SpatialWeights& weights,
                                const std::vector<std::string>& regions);

/// I = (n / S0) * sum_ij w_ij z_i z_j / sum_i z_i^2 with z = x - mean(x).
double morans_i(std::span<const double> values, const SpatialWeights& weights);
double morans_i(const Vector& values, const SpatialWeights& weights);

struct PermutationResult {
  double statistic = 0.0;
  double p_value = 0.0;  // pseudo p-value, one-sided in the direction of the statistic
  double mean = 0.0;     // mean of the permutation distribution
};

PermutationResult morans_i_permutation(const Vector& values, const SpatialWeights& weights,
                                       int permutations, std::uint64_t seed);

/// occupation code -> sector code, CSV header occupation_code,sector_code.
using SectorMapping = std::map<std::string, std::string, std::less<>>;
SectorMapping read_sector_mapping(const std::filesystem::path& path);

inline constexpr std::string_view kUnclassifiedSector = "unclassified";

struct LocationQuotients {
  Matrix lq;  // regions x sectors
  std::vector<std::string> region_labels;
  std::vector<std::string> sector_labels;
  std::vector<std::string> zero_regions;          // e_r = 0, row left at zero
  std::vector<std::string> unmapped_occupations;  // assigned to "unclassified"
};

/// LQ[r][s] = (e_rs / e_r) / (E_s / E). Throws ConfigError on an empty mapping.
LocationQuotients location_quotient(const RegionOccupationMatrix& raw, const SectorMapping& sectors);

}  // namespace laborscope
