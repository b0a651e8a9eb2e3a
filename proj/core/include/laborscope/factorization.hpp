#pragma once

#include "laborscope/matrix.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace laborscope {

enum class Solver { multiplicative_update, hals };
enum class InitMethod { nndsvd, random };

std::string_view to_string(Solver s);
std::string_view to_string(InitMethod m);
Solver solver_from_string(std::string_view text);
InitMethod init_from_string(std::string_view text);

struct FitConfig {
  int k = 15;
  int max_iter = 500;
  double tol = 1e-6;
  Solver solver = Solver::multiplicative_update;
  InitMethod init = InitMethod::nndsvd;
  std::uint64_t seed = 0;

  /// Throws ConfigError for tol <= 0, max_iter < 1, or k outside [1, min(R, O)].
  void validate(Eigen::Index rows, Eigen::Index cols) const;
};

/// Fitted factor pair X ~ W H.
///
/// `w` is regions x k (topic weights per region), `h` is k x occupations
/// (occupation loadings per topic). `objective_trace[t]` is 1/2 ||X - WH||_F^2
/// after iteration t + 1.
struct TopicModel {
  Matrix w;
  Matrix h;
  int k = 0;
  std::vector<double> objective_trace;
  FitConfig config;
  int iterations_run = 0;
  bool converged = false;
  bool init_fallback = false;  // NNDSVD failed and random init was used
  std::vector<bool> zero_topics;  // set by normalize() for all-zero H rows

  std::vector<std::string> region_labels;
  std::vector<std::string> occupation_labels;
  std::vector<std::string> occupation_names;

  double final_objective() const {
    return objective_trace.empty() ? 0.0 : objective_trace.back();
  }
  std::string occupation_name(Eigen::Index j) const;
};

/// 1/2 * sum_ij (X_ij - (WH)_ij)^2. Throws DataError on non-conformable shapes.
double objective(const Matrix& x, const Matrix& w, const Matrix& h);

struct FactorPair {
  Matrix w;
  Matrix h;
  bool fallback = false;
};

/// NNDSVD initialisation from the leading k singular triplets. Zero entries
/// are replaced by mean(x) * 1e-4 so multiplicative updates can move them.
/// Falls back to seeded random init if the SVD fails.
FactorPair nndsvd_init(const Matrix& x, int k, std::uint64_t fallback_seed = 0);

/// Uniform [0, sqrt(mean(x)/k)) initialisation from a seeded generator.
FactorPair random_init(const Matrix& x, int k, std::uint64_t seed);

TopicModel fit(const RegionOccupationMatrix& x, const FitConfig& cfg);
TopicModel fit(const Matrix& x, const FitConfig& cfg);

/// Rescales each H row to unit L1 norm and moves the scale into W's column.
/// All-zero topic rows are left alone and flagged in `zero_topics`.
TopicModel normalize(TopicModel model);

/// Model directory: w.csv, h.csv, trace.csv, meta.json and, when names are
/// known, occupations.csv (code,name).
void save_model(const std::filesystem::path& dir, const TopicModel& model);
TopicModel load_model(const std::filesystem::path& dir);

}  // namespace laborscope
