#include "commands.hpp"

#include "pipeline.hpp"
#include "reports.hpp"

#include "laborscope/csv.hpp"
#include "laborscope/error.hpp"
#include "laborscope/synth.hpp"
#include "laborscope/topics.hpp"

#include <CLI11.hpp>
#include <Eigen/Core>

#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

namespace laborscope::cli {

namespace fs = std::filesystem;

std::vector<int> parse_years(const std::string& text) {
  std::set<int> years;
  std::stringstream ss(text);
  std::string part;
  auto to_int = [&](const std::string& s) {
    auto v = csv::parse_number(s);
    if (!v || *v != static_cast<int>(*v)) throw ConfigError("bad year '" + s + "' in '" + text + "'");
    return static_cast<int>(*v);
  };
  while (std::getline(ss, part, ',')) {
    part = csv::trim(part);
    if (part.empty()) continue;
    const auto dash = part.find('-', 1);
    if (dash == std::string::npos) {
      years.insert(to_int(part));
      continue;
    }
    const int lo = to_int(part.substr(0, dash));
    const int hi = to_int(part.substr(dash + 1));
    if (hi < lo) throw ConfigError("empty year range '" + part + "'");
    for (int y = lo; y <= hi; ++y) years.insert(y);
  }
  if (years.empty()) throw ConfigError("no years given");
  return {years.begin(), years.end()};
}

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  int threads = 1;
};

CsvFormat load_format(const std::string& path) {
  if (path.empty()) return {};
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open format file " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return PipelineConfig::from_json(nlohmann::json{{"format", doc}}).format;
}

std::string render_to_string(const std::function<void(std::ostream&)>& fn) {
  std::ostringstream out;
  fn(out);
  return out.str();
}

void warn(const std::string& msg) { std::cerr << "warning: " << msg << '\n'; }

// ---------------------------------------------------------------------------

void add_ingest(CLI::App& app, Globals&) {
  auto* cmd = app.add_subcommand("ingest", "Parse employment CSVs into a canonical table");
  auto opts = std::make_shared<std::tuple<std::vector<std::string>, std::string, std::string, std::string,
                                          std::string, std::string, std::string, std::optional<int>>>();
  auto& [inputs, format, crosswalk, years, out, matrix, matrix_year_text, fixed_year] = *opts;
  cmd->add_option("--in", inputs, "Input CSV files")->required()->expected(1, -1);
  cmd->add_option("--format", format, "JSON column mapping");
  cmd->add_option("--fixed-year", fixed_year, "Year for files without a year column");
  cmd->add_option("--crosswalk", crosswalk, "Area-code crosswalk CSV (year,old_code,canonical_code)");
  cmd->add_option("--years", years, "Keep regions present in every one of these years, e.g. 2014-2018");
  cmd->add_option("--out", out, "Table output (.csv or .bin cache)")->required();
  cmd->add_option("--matrix", matrix, "Also write a raw region x occupation matrix");
  cmd->add_option("--matrix-year", matrix_year_text, "Year for --matrix (default: pooled over all years)");
  cmd->callback([opts] {
    auto& [inputs, format, crosswalk, years, out, matrix, matrix_year_text, fixed_year] = *opts;
    auto fmt = load_format(format);
    if (fixed_year) fmt.fixed_year = *fixed_year;
    std::vector<EmploymentTable> parts;
    for (const auto& path : inputs) {
      auto parsed = parse_csv(path, fmt);
      std::cerr << path << ": " << parsed.table.size() << " records, " << parsed.dropped
                << " suppressed rows dropped, " << parsed.row_errors.size() << " row errors\n";
      for (const auto& e : parsed.row_errors) warn(path + ":" + std::to_string(e.line) + ": " + e.message);
      parts.push_back(std::move(parsed.table));
    }
    auto table = concat(parts);
    if (!crosswalk.empty()) table = apply_crosswalk(table, Crosswalk::read_csv(crosswalk));
    std::set<int> year_set;
    if (!years.empty()) {
      const auto ys = parse_years(years);
      year_set.insert(ys.begin(), ys.end());
      table = restrict_consistent(table, year_set);
    }
    if (out == "-") {
      const auto tmp = fs::temp_directory_path() / "laborscope-table.csv";
      write_table_csv(tmp, table);
      std::ifstream in(tmp);
      std::cout << in.rdbuf();
      fs::remove(tmp);
    } else {
      write_table(out, table);
    }
    if (!matrix.empty()) {
      std::optional<int> matrix_year;
      if (!matrix_year_text.empty()) {
        const auto ys = parse_years(matrix_year_text);
        if (ys.size() != 1) throw ConfigError("--matrix-year takes a single year");
        matrix_year = ys.front();
      }
      const auto m = matrix_year ? to_matrix(table, *matrix_year) : pooled_matrix(table, year_set);
      write_matrix(matrix, m);
    }
  });
}

void add_tfidf(CLI::App& app, Globals&) {
  auto* cmd = app.add_subcommand("tfidf", "TF-IDF weight a raw region x occupation matrix");
  auto o = std::make_shared<std::tuple<std::string, std::string, std::string, bool>>("", "", "e", false);
  cmd->add_option("--in", std::get<0>(*o), "Raw matrix (CSV or .bin)")->required();
  cmd->add_option("--out", std::get<1>(*o), "Output matrix")->required();
  cmd->add_option("--log-base", std::get<2>(*o), "e, 2 or 10")->check(CLI::IsMember({"e", "2", "10"}));
  cmd->add_flag("--prune-empty", std::get<3>(*o), "Drop all-zero occupation columns");
  cmd->callback([o] {
    auto m = tfidf(read_matrix(std::get<0>(*o)), log_base_from_string(std::get<2>(*o)));
    if (std::get<3>(*o)) m = prune_empty_columns(m);
    write_matrix(std::get<1>(*o), m);
  });
}

void add_fit(CLI::App& app, Globals& g) {
  auto* cmd = app.add_subcommand("fit", "Fit X ~ WH by nonnegative matrix factorization");
  struct Opts {
    std::string in, out, solver = "mu", init = "nndsvd";
    FitConfig cfg;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--in", o->in, "TF-IDF matrix")->required();
  cmd->add_option("--k", o->cfg.k, "Number of topics")->capture_default_str();
  cmd->add_option("--solver", o->solver, "mu or hals")->capture_default_str();
  cmd->add_option("--init", o->init, "nndsvd or random")->capture_default_str();
  cmd->add_option("--max-iter", o->cfg.max_iter)->capture_default_str();
  cmd->add_option("--tol", o->cfg.tol, "Relative objective change threshold")->capture_default_str();
  cmd->add_option("--out", o->out, "Model directory")->required();
  cmd->callback([o, &g] {
    auto cfg = o->cfg;
    cfg.solver = solver_from_string(o->solver);
    cfg.init = init_from_string(o->init);
    if (g.seed) cfg.seed = *g.seed;
    const auto x = read_matrix(o->in);
    if (x.kind != MatrixKind::tfidf) warn(o->in + " is a raw matrix; fitting it as given");
    auto model = normalize(fit(x, cfg));
    if (model.init_fallback) warn("NNDSVD failed; fell back to seeded random initialisation");
    save_model(o->out, model);
    std::cerr << "fit: k=" << model.k << " iterations=" << model.iterations_run
              << " converged=" << (model.converged ? "yes" : "no")
              << " objective=" << csv::format_double(model.final_objective()) << '\n';
  });
}

void add_topics(CLI::App& app, Globals&) {
  auto* cmd = app.add_subcommand("topics", "Top occupations per topic");
  auto o = std::make_shared<std::tuple<std::string, int, std::string, std::string>>("", 10, "", "");
  cmd->add_option("--model", std::get<0>(*o))->required();
  cmd->add_option("--top-n", std::get<1>(*o))->capture_default_str();
  cmd->add_option("--labels", std::get<2>(*o), "CSV topic_id,label");
  cmd->add_option("--out", std::get<3>(*o), "topics.json or -")->required();
  cmd->callback([o] {
    const auto model = load_model(std::get<0>(*o));
    TopicLabels labels;
    if (!std::get<2>(*o).empty()) labels = read_topic_labels(std::get<2>(*o));
    bool truncated = false;
    const auto topics = summarize_topics(model, std::get<1>(*o), labels, &truncated);
    if (truncated) warn("--top-n exceeds the occupation count; truncated");
    report::emit_json(std::get<3>(*o), report::topics_json(topics));
  });
}

void add_compose(CLI::App& app, Globals&) {
  auto* cmd = app.add_subcommand("compose", "Per-region topical composition");
  auto o = std::make_shared<std::pair<std::string, std::string>>();
  cmd->add_option("--model", o->first)->required();
  cmd->add_option("--out", o->second, "compositions.csv or -")->required();
  cmd->callback([o] {
    const auto comps = compose_regions(load_model(o->first));
    for (const auto& c : comps) {
      if (c.zero_row) warn("region " + c.region_code + " has an all-zero topic row");
    }
    report::emit(o->second, render_to_string([&](std::ostream& s) { report::write_compositions_csv(s, comps); }));
  });
}

void add_prevalence(CLI::App& app, Globals&) {
  auto* cmd = app.add_subcommand("prevalence", "Regions ranked by one topic's weight");
  auto o = std::make_shared<std::tuple<std::string, int, std::string>>("", 1, "");
  cmd->add_option("--model", std::get<0>(*o))->required();
  cmd->add_option("--topic", std::get<1>(*o), "1-based topic id")->required();
  cmd->add_option("--out", std::get<2>(*o), "prevalence.csv or -")->required();
  cmd->callback([o] {
    const auto entries = topic_prevalence(load_model(std::get<0>(*o)), std::get<1>(*o));
    report::emit(std::get<2>(*o),
                 render_to_string([&](std::ostream& s) { report::write_prevalence_csv(s, entries); }));
  });
}

void add_align(CLI::App& app, Globals&) {
  auto* cmd = app.add_subcommand("align", "Align topic models of consecutive years");
  struct Opts {
    std::vector<std::string> models;
    std::string years, out, matching = "greedy", labels;
    double alpha = 0.5;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--models", o->models, "Model directories in year order")->required()->expected(2, -1);
  cmd->add_option("--years", o->years, "Years of the models (default: trailing digits of each directory name)");
  cmd->add_option("--alpha", o->alpha, "Strict cosine threshold")->capture_default_str();
  cmd->add_option("--matching", o->matching)->check(CLI::IsMember({"greedy", "hungarian"}))->capture_default_str();
  cmd->add_option("--labels", o->labels, "CSV chain_id,label");
  cmd->add_option("--out", o->out, "alignment.json or -")->required();
  cmd->callback([o] {
    std::vector<TopicModel> models;
    std::vector<int> years;
    for (const auto& dir : o->models) models.push_back(load_model(dir));
    if (!o->years.empty()) {
      years = parse_years(o->years);
    } else {
      for (std::size_t i = 0; i < o->models.size(); ++i) {
        // "corpus/2015/model" -> 2015, else position.
        int year = static_cast<int>(i);
        for (fs::path p = fs::path(o->models[i]).lexically_normal(); !p.empty() && p != p.parent_path();
             p = p.parent_path()) {
          if (auto v = csv::parse_number(p.filename().string()); v && *v >= 1000 && *v <= 9999) {
            year = static_cast<int>(*v);
            break;
          }
        }
        years.push_back(year);
      }
    }
    if (years.size() != models.size()) throw ConfigError("--years must list one year per model");
    TopicLabels labels;
    if (!o->labels.empty()) labels = read_topic_labels(o->labels);
    const auto alignment = chain(models, years, o->alpha,
                                 o->matching == "greedy" ? Matching::greedy : Matching::hungarian);
    std::cerr << "align: " << persistent_chain_count(alignment) << " topics persist across all years\n";
    report::emit_json(o->out, report::alignment_json(alignment, labels));
  });
}

void add_cluster(CLI::App& app, Globals&) {
  auto* cmd = app.add_subcommand("cluster", "Hierarchical clustering of regions by composition");
  struct Opts {
    std::string model, table, linkage = "average", out, heatmap;
    int top = 50;
    std::optional<int> year;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--model", o->model)->required();
  cmd->add_option("--top", o->top, "Largest regions to keep (needs --table when below the region count)")
      ->capture_default_str();
  cmd->add_option("--table", o->table, "Employment table used to rank regions by size");
  cmd->add_option("--year", o->year, "Reference year for sizes (default: latest)");
  cmd->add_option("--linkage", o->linkage)->check(CLI::IsMember({"average", "complete", "single"}))
      ->capture_default_str();
  cmd->add_option("--out", o->out, "dendrogram.json or -")->required();
  cmd->add_option("--heatmap", o->heatmap, "Distance matrix in leaf order");
  cmd->callback([o] {
    std::vector<RegionComposition> comps;
    for (auto& c : compose_regions(load_model(o->model))) {
      if (c.zero_row) {
        warn("region " + c.region_code + " has no topic weight; excluded");
      } else {
        comps.push_back(std::move(c));
      }
    }
    if (static_cast<std::size_t>(o->top) < comps.size()) {
      if (o->table.empty()) throw ConfigError("--top below the region count requires --table");
      const auto table = read_table(o->table);
      const int year = o->year ? *o->year : table.years().back();
      comps = select_top_regions(comps, table, year, o->top);
    }
    const Matrix d = cosine_distance_matrix(comps);
    std::vector<std::string> labels;
    for (const auto& c : comps) labels.push_back(c.region_code);
    const auto tree = hierarchical_cluster(d, linkage_from_string(o->linkage), labels);
    report::emit_json(o->out, report::dendrogram_json(tree));
    if (!o->heatmap.empty()) {
      report::emit(o->heatmap, render_to_string([&](std::ostream& s) { report::write_heatmap_csv(s, d, tree); }));
    }
  });
}

void add_moran(CLI::App& app, Globals& g) {
  auto* cmd = app.add_subcommand("moran", "Moran's I for each column of per-region value tables");
  struct Opts {
    std::vector<std::string> values;
    std::string coords, weights = "knn", adjacency, out;
    int neighbors = 8;
    double power = 1.0;
    int permutations = 0;
    bool raw_weights = false;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--values", o->values, "Wide CSVs: region column then one column per variable")
      ->required()->expected(1, -1);
  cmd->add_option("--coords", o->coords, "CSV region_code,lat,lon");
  cmd->add_option("--weights", o->weights)->check(CLI::IsMember({"knn", "idw", "adjacency"}))->capture_default_str();
  cmd->add_option("--neighbors", o->neighbors)->capture_default_str();
  cmd->add_option("--power", o->power, "Inverse-distance power")->capture_default_str();
  cmd->add_option("--adjacency", o->adjacency, "CSV region_a,region_b[,weight]");
  cmd->add_flag("--no-row-standardize", o->raw_weights);
  cmd->add_option("--permutations", o->permutations, "Permutation test draws (0 = off)");
  cmd->add_option("--out", o->out, "CSV or -")->required();
  cmd->callback([o, &g] {
    WeightSource source = WeightSource::knn(o->neighbors);
    if (o->weights == "idw") source = WeightSource::inverse_distance(o->power);
    if (o->weights == "adjacency") {
      if (o->adjacency.empty()) throw ConfigError("--weights adjacency requires --adjacency");
      source.kind = WeightSource::Kind::adjacency_file;
      source.adjacency = o->adjacency;
    } else if (o->coords.empty()) {
      throw ConfigError("--coords is required for knn and idw weights");
    }
    source.row_standardize = !o->raw_weights;
    RegionCoordinates coords;
    if (!o->coords.empty()) coords = read_coordinates(o->coords);

    std::vector<report::MoranRow> rows;
    for (const auto& path : o->values) {
      auto table = read_labelled_csv(path);
      const auto weights = build_weights(coords, source, table.row_labels);
      for (const auto& w : weights.warnings) warn(w);
      const std::string group = fs::path(path).stem().string();
      for (Eigen::Index c = 0; c < table.values.cols(); ++c) {
        const std::string& variable = table.col_labels[static_cast<std::size_t>(c)];
        const Vector values = table.values.col(c);
        try {
          report::MoranRow row{group, variable, morans_i(values, weights), -1.0};
          if (o->permutations > 0) {
            row.p_value = morans_i_permutation(values, weights, o->permutations, g.seed.value_or(0)).p_value;
          }
          rows.push_back(row);
        } catch (const NumericError& e) {
          warn(group + "/" + variable + ": " + e.what());
        }
      }
    }
    report::emit(o->out, render_to_string([&](std::ostream& s) { report::write_moran_csv(s, rows); }));
  });
}

void add_lq(CLI::App& app, Globals&) {
  auto* cmd = app.add_subcommand("lq", "Employment location quotients by sector");
  auto o = std::make_shared<std::tuple<std::string, std::string, std::string>>();
  cmd->add_option("--in", std::get<0>(*o), "Raw matrix")->required();
  cmd->add_option("--sectors", std::get<1>(*o), "CSV occupation_code,sector_code")->required();
  cmd->add_option("--out", std::get<2>(*o), "CSV or -")->required();
  cmd->callback([o] {
    const auto lq = location_quotient(read_matrix(std::get<0>(*o)), read_sector_mapping(std::get<1>(*o)));
    if (!lq.unmapped_occupations.empty()) {
      warn(std::to_string(lq.unmapped_occupations.size()) + " occupations have no sector; counted as unclassified");
    }
    for (const auto& r : lq.zero_regions) warn("region " + r + " has zero employment");
    report::emit(std::get<2>(*o), render_to_string([&](std::ostream& s) { report::write_lq_csv(s, lq); }));
  });
}

void add_synth(CLI::App& app, Globals& g) {
  auto* cmd = app.add_subcommand("synth", "Generate a synthetic corpus with planted topics");
  struct Opts {
    SynthSpec spec;
    std::string out;
  };
  auto o = std::make_shared<Opts>();
  o->spec.years = 1;
  cmd->add_option("--regions", o->spec.regions)->capture_default_str();
  cmd->add_option("--occupations", o->spec.occupations)->capture_default_str();
  cmd->add_option("--topics", o->spec.topics)->capture_default_str();
  cmd->add_option("--noise", o->spec.noise_level)->capture_default_str();
  cmd->add_option("--years", o->spec.years)->capture_default_str();
  cmd->add_option("--first-year", o->spec.first_year)->capture_default_str();
  cmd->add_option("--local-fraction", o->spec.local_occupation_fraction)->capture_default_str();
  cmd->add_option("--drift", o->spec.drift)->capture_default_str();
  cmd->add_option("--out", o->out, "Corpus directory")->required();
  cmd->callback([o, &g] {
    auto spec = o->spec;
    if (g.seed) spec.seed = *g.seed;
    const auto corpus = generate(spec);
    const fs::path dir = o->out;
    fs::create_directories(dir);
    write_table_csv(dir / "table.csv", corpus.table);
    for (const auto& y : corpus.planted) {
      std::vector<std::string> topics;
      for (Eigen::Index t = 0; t < y.planted_h.rows(); ++t) topics.push_back("topic_" + std::to_string(t + 1));
      write_labelled_csv(dir / ("planted_w_" + std::to_string(y.year) + ".csv"), y.planted_w,
                         corpus.region_codes, topics, "region");
      write_labelled_csv(dir / ("planted_h_" + std::to_string(y.year) + ".csv"), y.planted_h, topics,
                         corpus.occupation_codes, "topic");
    }
    {
      std::ofstream out(dir / "coordinates.csv", std::ios::binary);
      out << "region_code,lat,lon\n";
      for (const auto& [code, c] : corpus.coordinates) {
        out << code << ',' << csv::format_double(c.latitude) << ',' << csv::format_double(c.longitude) << '\n';
      }
    }
    {
      std::ofstream out(dir / "sectors.csv", std::ios::binary);
      out << "occupation_code,sector_code\n";
      for (std::size_t j = 0; j < corpus.occupation_codes.size(); ++j) {
        const int t = corpus.occupation_topic[j];
        out << corpus.occupation_codes[j] << ',' << (t < 0 ? std::string("LOCAL") : "S" + std::to_string(t + 1))
            << '\n';
      }
    }
    {
      std::ofstream out(dir / "crosswalk.csv", std::ios::binary);
      out << "year,old_code,canonical_code\n";
    }
    std::cerr << "synth: " << corpus.table.size() << " records written to " << dir.string() << '\n';
  });
}

void add_run(CLI::App& app, Globals& g) {
  auto* cmd = app.add_subcommand("run", "Full pipeline from a JSON config");
  auto out = std::make_shared<std::string>();
  cmd->add_option("--out", *out, "Override the configured output directory");
  cmd->callback([out, &g] {
    if (g.config.empty()) throw ConfigError("run requires --config");
    auto cfg = PipelineConfig::load(g.config);
    if (g.seed) cfg.fit.seed = *g.seed;
    if (!out->empty()) cfg.output_dir = *out;
    const auto summary = run_pipeline(cfg);
    for (const auto& w : summary.warnings) warn(w);
    std::cerr << "run: " << summary.outputs.size() << " files written to " << summary.output_dir.string();
    if (summary.persistent_topics >= 0) std::cerr << ", " << summary.persistent_topics << " persistent topics";
    std::cerr << '\n';
  });
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"laborscope: industrial topics from regional occupation employment"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "Pipeline config (JSON)");
  app.add_option("--seed", g.seed, "Seed for every random choice");
  app.add_option("--threads", g.threads, "Worker threads for linear algebra")->check(CLI::PositiveNumber);
  app.fallthrough();

  add_ingest(app, g);
  add_tfidf(app, g);
  add_fit(app, g);
  add_topics(app, g);
  add_compose(app, g);
  add_prevalence(app, g);
  add_align(app, g);
  add_cluster(app, g);
  add_moran(app, g);
  add_lq(app, g);
  add_synth(app, g);
  add_run(app, g);

  app.parse_complete_callback([&g] { Eigen::setNbThreads(g.threads); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ErrorKind::config);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(ErrorKind::data);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(ErrorKind::numeric);
  }
  return 0;
}

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"laborscope"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace laborscope::cli
