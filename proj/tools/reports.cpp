#include "reports.hpp"

#include "laborscope/csv.hpp"
#include "laborscope/error.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

namespace laborscope::report {

json topics_json(const std::vector<TopicSummary>& topics) {
  json out = json::array();
  for (const auto& t : topics) {
    json entry;
    entry["topic_id"] = t.topic_id;
    entry["label"] = t.label ? json(*t.label) : json(nullptr);
    json top = json::array();
    for (const auto& o : t.top_occupations) {
      top.push_back({{"code", o.code}, {"name", o.name}, {"weight", o.weight}});
    }
    entry["top"] = std::move(top);
    out.push_back(std::move(entry));
  }
  return out;
}

json alignment_json(const TopicAlignment& a, const TopicLabels& labels) {
  json out;
  out["alpha"] = a.alpha;
  out["years"] = a.years;
  json nodes = json::array();
  for (std::size_t y = 0; y < a.node_ids.size(); ++y) {
    for (std::size_t t = 0; t < a.node_ids[y].size(); ++t) {
      const int id = a.node_ids[y][t];
      auto it = labels.find(id);
      nodes.push_back({{"year", a.years[y]},
                       {"topic_id", static_cast<int>(t) + 1},
                       {"chain_id", id},
                       {"label", it != labels.end() ? it->second : "chain_" + std::to_string(id)}});
    }
  }
  out["nodes"] = std::move(nodes);
  json edges = json::array();
  for (const auto& e : a.edges) {
    edges.push_back({{"year_a", e.year_a},
                     {"topic_a", e.topic_a},
                     {"year_b", e.year_b},
                     {"topic_b", e.topic_b},
                     {"similarity", e.similarity}});
  }
  out["edges"] = std::move(edges);
  json maps = json::array();
  for (std::size_t p = 0; p < a.order_maps.size(); ++p) {
    json pairs = json::array();
    for (const auto& [src, dst] : a.order_maps[p]) pairs.push_back({src, dst});
    maps.push_back({{"year_a", a.year_pairs[p].first}, {"year_b", a.year_pairs[p].second}, {"map", pairs}});
  }
  out["order_maps"] = std::move(maps);
  json chains = json::array();
  for (const auto& c : a.chains) {
    json chain = json::array();
    for (const auto& [year, topic] : c) chain.push_back({{"year", year}, {"topic_id", topic}});
    chains.push_back(std::move(chain));
  }
  out["chains"] = std::move(chains);
  out["persistent"] = persistent_chain_count(a);
  return out;
}

json dendrogram_json(const Dendrogram& tree) {
  json out;
  out["linkage"] = to_string(tree.linkage);
  out["leaves"] = tree.leaf_labels;
  out["leaf_order"] = tree.leaf_order();
  json merges = json::array();
  for (const auto& m : tree.merges) {
    merges.push_back({{"cluster_a", m.cluster_a},
                      {"cluster_b", m.cluster_b},
                      {"height", m.height},
                      {"new_cluster", m.new_cluster}});
  }
  out["merges"] = std::move(merges);
  out["newick"] = tree.newick();
  return out;
}

void write_compositions_csv(std::ostream& out, const std::vector<RegionComposition>& comps) {
  const std::size_t k = comps.empty() ? 0 : comps.front().weights.size();
  out << "region";
  for (std::size_t l = 0; l < k; ++l) out << ",topic_" << l + 1;
  for (std::size_t l = 0; l < k; ++l) out << ",raw_topic_" << l + 1;
  out << ",dominant_topic,zero_row\n";
  for (const auto& c : comps) {
    out << csv::escape(c.region_code);
    for (double w : c.weights) out << ',' << csv::format_double(w);
    for (double w : c.raw_weights) out << ',' << csv::format_double(w);
    out << ',' << c.dominant_topic << ',' << (c.zero_row ? 1 : 0) << '\n';
  }
}

void write_prevalence_csv(std::ostream& out, const std::vector<PrevalenceEntry>& entries) {
  out << "region,weight,raw_weight\n";
  for (const auto& e : entries) {
    out << csv::escape(e.region_code) << ',' << csv::format_double(e.weight) << ','
        << csv::format_double(e.raw_weight) << '\n';
  }
}

void write_heatmap_csv(std::ostream& out, const Matrix& d, const Dendrogram& tree) {
  const auto order = tree.leaf_order();
  out << "region";
  for (int i : order) out << ',' << csv::escape(tree.leaf_labels[static_cast<std::size_t>(i)]);
  out << '\n';
  for (int i : order) {
    out << csv::escape(tree.leaf_labels[static_cast<std::size_t>(i)]);
    for (int j : order) out << ',' << csv::format_double(d(i, j));
    out << '\n';
  }
}

void write_moran_csv(std::ostream& out, const std::vector<MoranRow>& rows) {
  const bool with_p = !rows.empty() && rows.front().p_value >= 0.0;
  out << "group,variable,morans_i" << (with_p ? ",p_value" : "") << '\n';
  for (const auto& r : rows) {
    out << csv::escape(r.group) << ',' << csv::escape(r.variable) << ','
        << csv::format_double(r.statistic);
    if (with_p) out << ',' << csv::format_double(r.p_value);
    out << '\n';
  }
}

void write_lq_csv(std::ostream& out, const LocationQuotients& lq) {
  out << "region";
  for (const auto& s : lq.sector_labels) out << ',' << csv::escape(s);
  out << '\n';
  for (Eigen::Index r = 0; r < lq.lq.rows(); ++r) {
    out << csv::escape(lq.region_labels[static_cast<std::size_t>(r)]);
    for (Eigen::Index s = 0; s < lq.lq.cols(); ++s) out << ',' << csv::format_double(lq.lq(r, s));
    out << '\n';
  }
}

void emit(const std::filesystem::path& path, const std::string& content) {
  if (path == "-") {
    std::cout << content;
    std::cout.flush();
    return;
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << content;
}

void emit_json(const std::filesystem::path& path, const json& doc) { emit(path, doc.dump(2) + "\n"); }

}  // namespace laborscope::report
