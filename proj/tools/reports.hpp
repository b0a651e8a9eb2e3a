#pragma once

// JSON/CSV renderings of analysis results shared by the CLI subcommands and
// the pipeline.

#include "laborscope/clustering.hpp"
#include "laborscope/dynamics.hpp"
#include "laborscope/spatial.hpp"
#include "laborscope/topics.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace laborscope::report {

using json = nlohmann::ordered_json;

json topics_json(const std::vector<TopicSummary>& topics);
json alignment_json(const TopicAlignment& alignment, const TopicLabels& labels = {});
json dendrogram_json(const Dendrogram& tree);

void write_compositions_csv(std::ostream& out, const std::vector<RegionComposition>& comps);
void write_prevalence_csv(std::ostream& out, const std::vector<PrevalenceEntry>& entries);
void write_heatmap_csv(std::ostream& out, const Matrix& distances, const Dendrogram& tree);

struct MoranRow {
  std::string group;
  std::string variable;
  double statistic = 0.0;
  double p_value = -1.0;  // < 0 when no permutation test was run
};
void write_moran_csv(std::ostream& out, const std::vector<MoranRow>& rows);

void write_lq_csv(std::ostream& out, const LocationQuotients& lq);

/// Writes to `path`, or to stdout when path is "-".
void emit(const std::filesystem::path& path, const std::string& content);
void emit_json(const std::filesystem::path& path, const json& doc);

}  // namespace laborscope::report
