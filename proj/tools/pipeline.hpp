#pragma once

#include "laborscope/clustering.hpp"
#include "laborscope/dynamics.hpp"
#include "laborscope/error.hpp"
#include "laborscope/factorization.hpp"
#include "laborscope/ingest.hpp"
#include "laborscope/spatial.hpp"
#include "laborscope/weighting.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace laborscope {

enum class FitMode { both, pooled, per_year };

/// Everything a full pipeline run depends on. Serialised to and from a single
/// JSON config file; the parsed form is echoed into every run manifest.
struct PipelineConfig {
  std::vector<std::filesystem::path> inputs;
  CsvFormat format;
  std::optional<std::filesystem::path> crosswalk;
  std::vector<int> years;  // empty: every year in the inputs
  std::filesystem::path output_dir = "laborscope-out";

  LogBase log_base = LogBase::e;
  bool prune_empty = false;
  FitConfig fit;
  FitMode mode = FitMode::both;

  int top_n = 10;
  std::optional<std::filesystem::path> topic_labels;

  double alpha = 0.5;
  Matching matching = Matching::greedy;

  Linkage linkage = Linkage::average;
  int top_regions = 50;

  std::optional<std::filesystem::path> coordinates;
  std::optional<std::filesystem::path> sectors;
  WeightSource weights = WeightSource::knn(8);
  int permutations = 0;

  nlohmann::ordered_json to_json() const;
  /// Relative paths are resolved against `base_dir`.
  static PipelineConfig from_json(const nlohmann::json& doc,
                                  const std::filesystem::path& base_dir = {});
  static PipelineConfig load(const std::filesystem::path& path);
};

/// A stage failure: which stage, and the underlying error category.
class StageError : public Error {
 public:
  StageError(std::string stage, const Error& cause)
      : Error(cause.kind(), stage + ": " + cause.what()), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct RunSummary {
  std::filesystem::path output_dir;
  std::vector<std::filesystem::path> outputs;  // relative to output_dir, sorted
  std::vector<std::string> warnings;
  std::size_t dropped_rows = 0;
  int persistent_topics = -1;  // -1 when dynamics did not run
};

/// ingest -> crosswalk -> restrict -> tfidf -> fit (pooled and per year) ->
/// topics/compose -> align -> cluster -> moran/lq. While running, the output
/// directory holds a ".partial" marker; on failure the marker names the stage.
RunSummary run_pipeline(const PipelineConfig& cfg);

std::string sha256_file(const std::filesystem::path& path);

}  // namespace laborscope
