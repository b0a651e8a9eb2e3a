#include "pipeline.hpp"

#include "reports.hpp"

#include "laborscope/error.hpp"
#include "laborscope/topics.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <fstream>
#include <functional>
#include <iomanip>
#include <memory>
#include <set>
#include <sstream>

namespace laborscope {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::string_view fit_mode_name(FitMode m) {
  switch (m) {
    case FitMode::both: return "both";
    case FitMode::pooled: return "pooled";
    case FitMode::per_year: return "per_year";
  }
  return "both";
}

FitMode fit_mode_from(std::string_view s) {
  if (s == "both") return FitMode::both;
  if (s == "pooled") return FitMode::pooled;
  if (s == "per_year") return FitMode::per_year;
  throw ConfigError("unknown fit mode '" + std::string(s) + "'");
}

std::string_view log_base_name(LogBase b) {
  return b == LogBase::e ? "e" : b == LogBase::two ? "2" : "10";
}

std::string_view weights_name(WeightSource::Kind k) {
  switch (k) {
    case WeightSource::Kind::knn: return "knn";
    case WeightSource::Kind::inverse_distance: return "inverse_distance";
    case WeightSource::Kind::adjacency_file: return "adjacency";
  }
  return "knn";
}

json optional_path(const std::optional<fs::path>& p) {
  return p ? json(p->generic_string()) : json(nullptr);
}

std::optional<fs::path> read_optional_path(const nlohmann::json& doc, const char* key,
                                           const fs::path& base) {
  if (!doc.contains(key) || doc.at(key).is_null()) return std::nullopt;
  fs::path p = doc.at(key).get<std::string>();
  return p.is_relative() && !base.empty() ? base / p : p;
}

}  // namespace

json PipelineConfig::to_json() const {
  json doc;
  json in = json::array();
  for (const auto& p : inputs) in.push_back(p.generic_string());
  doc["inputs"] = std::move(in);
  doc["format"] = {{"area_code", format.area_code},
                   {"area_name", format.area_name},
                   {"occupation_code", format.occupation_code},
                   {"occupation_name", format.occupation_name},
                   {"employment", format.employment},
                   {"year", format.year},
                   {"fixed_year", format.fixed_year ? json(*format.fixed_year) : json(nullptr)},
                   {"suppression_markers", format.suppression_markers},
                   {"group_column", format.group_column ? json(*format.group_column) : json(nullptr)},
                   {"group_values", format.group_values},
                   {"delimiter", std::string(1, format.delimiter)}};
  doc["crosswalk"] = optional_path(crosswalk);
  doc["years"] = years;
  doc["output_dir"] = output_dir.generic_string();
  doc["tfidf"] = {{"log_base", log_base_name(log_base)}, {"prune_empty", prune_empty}};
  doc["fit"] = {{"k", fit.k},
                {"solver", to_string(fit.solver)},
                {"init", to_string(fit.init)},
                {"seed", fit.seed},
                {"max_iter", fit.max_iter},
                {"tol", fit.tol},
                {"mode", fit_mode_name(mode)}};
  doc["topics"] = {{"top_n", top_n}, {"labels", optional_path(topic_labels)}};
  doc["dynamics"] = {{"alpha", alpha},
                     {"matching", matching == Matching::greedy ? "greedy" : "hungarian"}};
  doc["clustering"] = {{"linkage", to_string(linkage)}, {"top_regions", top_regions}};
  doc["spatial"] = {
      {"coordinates", optional_path(coordinates)},
      {"sectors", optional_path(sectors)},
      {"weights",
       {{"method", weights_name(weights.kind)},
        {"neighbors", weights.neighbors},
        {"power", weights.power},
        {"adjacency", weights.adjacency.empty() ? json(nullptr) : json(weights.adjacency.generic_string())},
        {"row_standardize", weights.row_standardize}}},
      {"permutations", permutations}};
  return doc;
}

PipelineConfig PipelineConfig::from_json(const nlohmann::json& doc, const fs::path& base) {
  PipelineConfig cfg;
  try {
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    auto resolve = [&](const std::string& p) {
      fs::path path = p;
      return path.is_relative() && !base.empty() ? base / path : path;
    };
    for (const auto& p : doc.value("inputs", nlohmann::json::array())) {
      cfg.inputs.push_back(resolve(p.get<std::string>()));
    }
    if (doc.contains("format")) {
      const auto& f = doc.at("format");
      auto& fmt = cfg.format;
      fmt.area_code = f.value("area_code", fmt.area_code);
      fmt.area_name = f.value("area_name", fmt.area_name);
      fmt.occupation_code = f.value("occupation_code", fmt.occupation_code);
      fmt.occupation_name = f.value("occupation_name", fmt.occupation_name);
      fmt.employment = f.value("employment", fmt.employment);
      fmt.year = f.value("year", fmt.year);
      if (f.contains("fixed_year") && !f.at("fixed_year").is_null()) fmt.fixed_year = f.at("fixed_year").get<int>();
      if (f.contains("suppression_markers")) {
        fmt.suppression_markers = f.at("suppression_markers").get<std::vector<std::string>>();
      }
      if (f.contains("group_column") && !f.at("group_column").is_null()) {
        fmt.group_column = f.at("group_column").get<std::string>();
      }
      if (f.contains("group_values")) fmt.group_values = f.at("group_values").get<std::vector<std::string>>();
      const auto delim = f.value("delimiter", std::string(","));
      if (delim.size() != 1) throw ConfigError("format.delimiter must be a single character");
      fmt.delimiter = delim[0];
    }
    cfg.crosswalk = read_optional_path(doc, "crosswalk", base);
    cfg.years = doc.value("years", std::vector<int>{});
    if (doc.contains("output_dir")) cfg.output_dir = resolve(doc.at("output_dir").get<std::string>());
    if (doc.contains("tfidf")) {
      const auto& t = doc.at("tfidf");
      cfg.log_base = log_base_from_string(t.value("log_base", std::string("e")));
      cfg.prune_empty = t.value("prune_empty", false);
    }
    if (doc.contains("fit")) {
      const auto& f = doc.at("fit");
      cfg.fit.k = f.value("k", cfg.fit.k);
      cfg.fit.solver = solver_from_string(f.value("solver", std::string("mu")));
      cfg.fit.init = init_from_string(f.value("init", std::string("nndsvd")));
      cfg.fit.seed = f.value("seed", cfg.fit.seed);
      cfg.fit.max_iter = f.value("max_iter", cfg.fit.max_iter);
      cfg.fit.tol = f.value("tol", cfg.fit.tol);
      cfg.mode = fit_mode_from(f.value("mode", std::string("both")));
    }
    if (doc.contains("topics")) {
      const auto& t = doc.at("topics");
      cfg.top_n = t.value("top_n", cfg.top_n);
      cfg.topic_labels = read_optional_path(t, "labels", base);
    }
    if (doc.contains("dynamics")) {
      const auto& d = doc.at("dynamics");
      cfg.alpha = d.value("alpha", cfg.alpha);
      const auto m = d.value("matching", std::string("greedy"));
      if (m != "greedy" && m != "hungarian") throw ConfigError("dynamics.matching must be greedy or hungarian");
      cfg.matching = m == "greedy" ? Matching::greedy : Matching::hungarian;
    }
    if (doc.contains("clustering")) {
      const auto& c = doc.at("clustering");
      cfg.linkage = linkage_from_string(c.value("linkage", std::string("average")));
      cfg.top_regions = c.value("top_regions", cfg.top_regions);
    }
    if (doc.contains("spatial")) {
      const auto& s = doc.at("spatial");
      cfg.coordinates = read_optional_path(s, "coordinates", base);
      cfg.sectors = read_optional_path(s, "sectors", base);
      cfg.permutations = s.value("permutations", 0);
      if (s.contains("weights")) {
        const auto& w = s.at("weights");
        const auto method = w.value("method", std::string("knn"));
        if (method == "knn") {
          cfg.weights.kind = WeightSource::Kind::knn;
        } else if (method == "inverse_distance" || method == "idw") {
          cfg.weights.kind = WeightSource::Kind::inverse_distance;
        } else if (method == "adjacency") {
          cfg.weights.kind = WeightSource::Kind::adjacency_file;
        } else {
          throw ConfigError("unknown weights method '" + method + "'");
        }
        cfg.weights.neighbors = w.value("neighbors", 8);
        cfg.weights.power = w.value("power", 1.0);
        cfg.weights.row_standardize = w.value("row_standardize", true);
        if (auto adj = read_optional_path(w, "adjacency", base)) cfg.weights.adjacency = *adj;
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
  return cfg;
}

PipelineConfig PipelineConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return from_json(doc, path.parent_path());
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot hash " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw NumericError("sha256 initialisation failed");
  }
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return hex.str();
}

namespace {

constexpr const char* kPartialMarker = ".partial";
constexpr const char* kManifest = "run-manifest.json";

void prepare_output_dir(const fs::path& dir) {
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir)) throw ConfigError(dir.string() + " exists and is not a directory");
    const bool ours = fs::exists(dir / kManifest) || fs::exists(dir / kPartialMarker);
    if (!ours && !fs::is_empty(dir)) {
      throw ConfigError("output directory " + dir.string() + " is not empty and holds no previous run");
    }
    for (const auto& entry : fs::directory_iterator(dir)) fs::remove_all(entry.path());
  }
  fs::create_directories(dir);
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

template <class Fn>
std::string render(Fn&& fn) {
  std::ostringstream out;
  fn(out);
  return out.str();
}

}  // namespace

RunSummary run_pipeline(const PipelineConfig& cfg) {
  if (cfg.inputs.empty()) throw ConfigError("pipeline: no input files configured");
  const fs::path out = cfg.output_dir;
  prepare_output_dir(out);
  write_text(out / kPartialMarker, "running\n");

  RunSummary summary;
  summary.output_dir = out;

  auto stage = [&](const std::string& name, const std::function<void()>& body) {
    try {
      body();
    } catch (const Error& e) {
      write_text(out / kPartialMarker, "failed at stage " + name + "\n" + e.what() + "\n");
      throw StageError(name, e);
    } catch (const fs::filesystem_error& e) {
      DataError err(e.what());
      write_text(out / kPartialMarker, "failed at stage " + name + "\n" + e.what() + "\n");
      throw StageError(name, err);
    }
  };

  EmploymentTable table;
  std::set<int> years;
  stage("ingest", [&] {
    std::vector<EmploymentTable> parts;
    for (const auto& input : cfg.inputs) {
      auto parsed = parse_csv(input, cfg.format);
      summary.dropped_rows += parsed.dropped;
      if (parsed.dropped > 0) {
        summary.warnings.push_back(input.string() + ": dropped " + std::to_string(parsed.dropped) +
                                   " suppressed rows");
      }
      for (const auto& issue : parsed.row_errors) {
        summary.warnings.push_back(input.string() + ":" + std::to_string(issue.line) + ": " + issue.message);
      }
      parts.push_back(std::move(parsed.table));
    }
    table = concat(parts);
    if (table.empty()) throw DataError("no employment records in the inputs");
    if (cfg.years.empty()) {
      years.insert(table.years().begin(), table.years().end());
    } else {
      years.insert(cfg.years.begin(), cfg.years.end());
    }
  });

  stage("crosswalk", [&] {
    if (!cfg.crosswalk) {
      if (years.size() > 1) {
        throw ConfigError("multi-year input requires a crosswalk file (an empty one is allowed)");
      }
      return;
    }
    table = apply_crosswalk(table, Crosswalk::read_csv(*cfg.crosswalk));
  });

  stage("restrict", [&] {
    table = restrict_consistent(table, years);
    std::vector<EmploymentRecord> kept;
    for (const auto& r : table.records()) {
      if (years.count(r.year)) kept.push_back(r);
    }
    table = EmploymentTable::from_records(std::move(kept));
    write_table_csv(out / "table.csv", table);
  });

  RegionOccupationMatrix pooled_raw;
  RegionOccupationMatrix pooled_tfidf;
  std::vector<RegionOccupationMatrix> yearly_tfidf;
  const bool run_pooled = cfg.mode != FitMode::per_year;
  const bool run_yearly = cfg.mode != FitMode::pooled && years.size() >= 2;

  stage("tfidf", [&] {
    pooled_raw = pooled_matrix(table, years);
    pooled_tfidf = tfidf(pooled_raw, cfg.log_base);
    if (cfg.prune_empty) pooled_tfidf = prune_empty_columns(pooled_tfidf);
    fs::create_directories(out / "pooled");
    write_matrix(out / "pooled" / "tfidf.csv", pooled_tfidf);
    if (run_yearly) {
      for (int y : years) {
        // Unpruned so every year shares the occupation space needed for alignment.
        yearly_tfidf.push_back(tfidf(to_matrix(table, y), cfg.log_base));
      }
    }
  });

  TopicModel pooled_model;
  std::vector<TopicModel> yearly_models;
  stage("fit", [&] {
    if (run_pooled) {
      pooled_model = normalize(fit(pooled_tfidf, cfg.fit));
      if (pooled_model.init_fallback) summary.warnings.push_back("pooled fit: NNDSVD failed, used random init");
      save_model(out / "pooled" / "model", pooled_model);
    }
    std::size_t idx = 0;
    for (int y : years) {
      if (!run_yearly) break;
      auto model = normalize(fit(yearly_tfidf[idx++], cfg.fit));
      save_model(out / "years" / std::to_string(y) / "model", model);
      yearly_models.push_back(std::move(model));
    }
  });

  TopicLabels labels;
  std::vector<RegionComposition> comps;
  if (run_pooled) {
    stage("topics", [&] {
      if (cfg.topic_labels) labels = read_topic_labels(*cfg.topic_labels);
      bool truncated = false;
      const auto topics = summarize_topics(pooled_model, cfg.top_n, labels, &truncated);
      if (truncated) summary.warnings.push_back("top_n exceeds the occupation count; truncated");
      report::emit_json(out / "pooled" / "topics.json", report::topics_json(topics));
      comps = compose_regions(pooled_model);
      write_text(out / "pooled" / "compositions.csv",
                 render([&](std::ostream& o) { report::write_compositions_csv(o, comps); }));
      for (int t = 1; t <= pooled_model.k; ++t) {
        const auto prevalence = topic_prevalence(pooled_model, t);
        write_text(out / "pooled" / "prevalence" / ("topic_" + std::to_string(t) + ".csv"),
                   render([&](std::ostream& o) { report::write_prevalence_csv(o, prevalence); }));
      }
    });
  }

  if (run_yearly) {
    stage("align", [&] {
      const std::vector<int> year_list(years.begin(), years.end());
      const auto alignment = chain(yearly_models, year_list, cfg.alpha, cfg.matching);
      summary.persistent_topics = persistent_chain_count(alignment);
      report::emit_json(out / "alignment.json", report::alignment_json(alignment, labels));
    });
  }

  if (run_pooled) {
    stage("cluster", [&] {
      std::vector<RegionComposition> usable;
      for (const auto& c : comps) {
        if (c.zero_row) {
          summary.warnings.push_back("region " + c.region_code + " has no topic weight; excluded from clustering");
        } else {
          usable.push_back(c);
        }
      }
      if (usable.size() < 2) {
        summary.warnings.push_back("fewer than two regions with topic weight; clustering skipped");
        return;
      }
      const int reference_year = *years.rbegin();
      const auto top = select_top_regions(usable, table, reference_year, cfg.top_regions);
      const Matrix d = cosine_distance_matrix(top);
      std::vector<std::string> leaf_labels;
      for (const auto& c : top) leaf_labels.push_back(c.region_code);
      const auto tree = hierarchical_cluster(d, cfg.linkage, leaf_labels);
      report::emit_json(out / "dendrogram.json", report::dendrogram_json(tree));
      write_text(out / "heatmap.csv", render([&](std::ostream& o) { report::write_heatmap_csv(o, d, tree); }));
    });

    stage("spatial", [&] {
      std::vector<report::MoranRow> rows;
      std::optional<SpatialWeights> weights;
      if (cfg.coordinates || cfg.weights.kind == WeightSource::Kind::adjacency_file) {
        RegionCoordinates coords;
        if (cfg.coordinates) coords = read_coordinates(*cfg.coordinates);
        weights = build_weights(coords, cfg.weights, pooled_model.region_labels);
        for (const auto& w : weights->warnings) summary.warnings.push_back(w);
      }
      auto moran_row = [&](const std::string& group, const std::string& variable, const Vector& values) {
        try {
          report::MoranRow row{group, variable, morans_i(values, *weights), -1.0};
          if (cfg.permutations > 0) {
            row.p_value = morans_i_permutation(values, *weights, cfg.permutations, cfg.fit.seed).p_value;
          }
          rows.push_back(row);
        } catch (const NumericError& e) {
          summary.warnings.push_back(group + "/" + variable + ": " + e.what());
        }
      };
      if (weights) {
        const Matrix comp = composition_matrix(comps);
        for (Eigen::Index t = 0; t < comp.cols(); ++t) {
          moran_row("topic", "topic_" + std::to_string(t + 1), comp.col(t));
        }
      }
      if (cfg.sectors) {
        const auto lq = location_quotient(pooled_raw, read_sector_mapping(*cfg.sectors));
        if (!lq.unmapped_occupations.empty()) {
          summary.warnings.push_back(std::to_string(lq.unmapped_occupations.size()) +
                                     " occupations have no sector; counted as unclassified");
        }
        write_text(out / "lq.csv", render([&](std::ostream& o) { report::write_lq_csv(o, lq); }));
        if (weights) {
          for (Eigen::Index s = 0; s < lq.lq.cols(); ++s) {
            moran_row("sector", lq.sector_labels[static_cast<std::size_t>(s)], lq.lq.col(s));
          }
        }
      }
      if (!rows.empty()) {
        write_text(out / "moran.csv", render([&](std::ostream& o) { report::write_moran_csv(o, rows); }));
      }
    });
  }

  stage("manifest", [&] {
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(out)) {
      if (!entry.is_regular_file()) continue;
      auto rel = fs::relative(entry.path(), out);
      if (rel == kPartialMarker || rel == kManifest) continue;
      files.push_back(rel);
    }
    std::sort(files.begin(), files.end());
    json manifest;
    manifest["tool"] = "laborscope";
    manifest["config"] = cfg.to_json();
    json inputs = json::array();
    auto add_input = [&](const fs::path& p) {
      inputs.push_back({{"path", p.generic_string()}, {"sha256", sha256_file(p)}});
    };
    for (const auto& p : cfg.inputs) add_input(p);
    for (const auto* opt : {&cfg.crosswalk, &cfg.coordinates, &cfg.sectors, &cfg.topic_labels}) {
      if (*opt) add_input(**opt);
    }
    if (!cfg.weights.adjacency.empty()) add_input(cfg.weights.adjacency);
    manifest["inputs"] = std::move(inputs);
    json outputs = json::array();
    for (const auto& rel : files) {
      outputs.push_back({{"path", rel.generic_string()}, {"sha256", sha256_file(out / rel)}});
    }
    manifest["outputs"] = std::move(outputs);
    manifest["warnings"] = summary.warnings;
    write_text(out / kManifest, manifest.dump(2) + "\n");
    summary.outputs = files;
    summary.outputs.push_back(kManifest);
  });

  fs::remove(out / kPartialMarker);
  return summary;
}

}  // namespace laborscope
