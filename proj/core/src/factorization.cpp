#include "laborscope/factorization.hpp"

#include "laborscope/csv.hpp"
#include "laborscope/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <random>

namespace laborscope {

namespace {

// Denominator guard for multiplicative updates.
constexpr double kEps = 1e-12;

std::string topic_label(Eigen::Index l) { return "topic_" + std::to_string(l + 1); }

}  // namespace

std::string_view to_string(Solver s) {
  return s == Solver::multiplicative_update ? "mu" : "hals";
}

std::string_view to_string(InitMethod m) { return m == InitMethod::nndsvd ? "nndsvd" : "random"; }

Solver solver_from_string(std::string_view text) {
  if (text == "mu" || text == "multiplicative_update") return Solver::multiplicative_update;
  if (text == "hals") return Solver::hals;
  throw ConfigError("unknown solver '" + std::string(text) + "' (expected mu or hals)");
}

InitMethod init_from_string(std::string_view text) {
  if (text == "nndsvd") return InitMethod::nndsvd;
  if (text == "random") return InitMethod::random;
  throw ConfigError("unknown init '" + std::string(text) + "' (expected nndsvd or random)");
}

void FitConfig::validate(Eigen::Index rows, Eigen::Index cols) const {
  if (!(tol > 0.0)) throw ConfigError("tol must be positive");
  if (max_iter < 1) throw ConfigError("max_iter must be at least 1");
  if (k < 1) throw ConfigError("k must be positive");
  if (k > std::min(rows, cols)) {
    throw ConfigError("k = " + std::to_string(k) + " exceeds min(R, O) = " +
                      std::to_string(std::min(rows, cols)));
  }
}

std::string TopicModel::occupation_name(Eigen::Index j) const {
  return occupation_names.empty() ? std::string() : occupation_names[static_cast<std::size_t>(j)];
}

double objective(const Matrix& x, const Matrix& w, const Matrix& h) {
  if (w.rows() != x.rows() || h.cols() != x.cols() || w.cols() != h.rows()) {
    throw DataError("objective: shapes are not conformable");
  }
  return 0.5 * (x - w * h).squaredNorm();
}

FactorPair random_init(const Matrix& x, int k, std::uint64_t seed) {
  const double mean = x.size() > 0 ? x.mean() : 0.0;
  const double upper = 2.0 * std::sqrt(std::max(mean, 0.0) / k);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, upper > 0.0 ? upper : 1.0);
  FactorPair p;
  p.w.resize(x.rows(), k);
  p.h.resize(k, x.cols());
  for (Eigen::Index j = 0; j < p.w.cols(); ++j) {
    for (Eigen::Index i = 0; i < p.w.rows(); ++i) p.w(i, j) = unif(rng);
  }
  for (Eigen::Index j = 0; j < p.h.cols(); ++j) {
    for (Eigen::Index i = 0; i < p.h.rows(); ++i) p.h(i, j) = unif(rng);
  }
  return p;
}

FactorPair nndsvd_init(const Matrix& x, int k, std::uint64_t fallback_seed) {
  if (k < 1 || k > std::min(x.rows(), x.cols())) {
    throw ConfigError("nndsvd_init: k out of range");
  }
  Eigen::BDCSVD<Matrix> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Matrix& u = svd.matrixU();
  const Matrix& v = svd.matrixV();
  const Vector& s = svd.singularValues();
  if (svd.info() != Eigen::Success || !u.allFinite() || !v.allFinite() || !s.allFinite()) {
    auto p = random_init(x, k, fallback_seed);
    p.fallback = true;
    return p;
  }

  FactorPair p;
  p.w = Matrix::Zero(x.rows(), k);
  p.h = Matrix::Zero(k, x.cols());

  // Leading triplet: the Perron vectors of a nonnegative matrix share a sign.
  p.w.col(0) = std::sqrt(s(0)) * u.col(0).cwiseAbs();
  p.h.row(0) = std::sqrt(s(0)) * v.col(0).cwiseAbs().transpose();

  for (int j = 1; j < k; ++j) {
    const Vector xp = u.col(j).cwiseMax(0.0);
    const Vector xn = (-u.col(j)).cwiseMax(0.0);
    const Vector yp = v.col(j).cwiseMax(0.0);
    const Vector yn = (-v.col(j)).cwiseMax(0.0);
    const double xp_n = xp.norm();
    const double yp_n = yp.norm();
    const double xn_n = xn.norm();
    const double yn_n = yn.norm();
    const double mp = xp_n * yp_n;
    const double mn = xn_n * yn_n;
    const bool positive = mp >= mn;
    const double sigma = positive ? mp : mn;
    if (sigma <= 0.0) continue;
    const double lambda = std::sqrt(s(j) * sigma);
    if (positive) {
      p.w.col(j) = lambda * xp / xp_n;
      p.h.row(j) = lambda * (yp / yp_n).transpose();
    } else {
      p.w.col(j) = lambda * xn / xn_n;
      p.h.row(j) = lambda * (yn / yn_n).transpose();
    }
  }

  const double fill = x.mean() * 1e-4;
  p.w = (p.w.array() == 0.0).select(fill, p.w);
  p.h = (p.h.array() == 0.0).select(fill, p.h);
  return p;
}

namespace {

void mu_step(const Matrix& x, Matrix& w, Matrix& h) {
  {
    const Matrix numer = w.transpose() * x;
    const Matrix denom = (w.transpose() * w) * h;
    h.array() *= numer.array() / (denom.array() + kEps);
  }
  {
    const Matrix numer = x * h.transpose();
    const Matrix denom = w * (h * h.transpose());
    w.array() *= numer.array() / (denom.array() + kEps);
  }
}

void hals_step(const Matrix& x, Matrix& w, Matrix& h) {
  const Eigen::Index k = w.cols();
  {
    const Matrix a = w.transpose() * w;
    const Matrix b = w.transpose() * x;
    for (Eigen::Index l = 0; l < k; ++l) {
      if (a(l, l) <= kEps) continue;
      h.row(l) = (h.row(l) + (b.row(l) - a.row(l) * h) / a(l, l)).cwiseMax(0.0);
    }
  }
  {
    const Matrix c = h * h.transpose();
    const Matrix d = x * h.transpose();
    for (Eigen::Index l = 0; l < k; ++l) {
      if (c(l, l) <= kEps) continue;
      w.col(l) = (w.col(l) + (d.col(l) - w * c.col(l)) / c(l, l)).cwiseMax(0.0);
    }
  }
}

}  // namespace

TopicModel fit(const Matrix& x, const FitConfig& cfg) {
  cfg.validate(x.rows(), x.cols());
  if (!x.allFinite() || x.minCoeff() < 0.0) {
    throw DataError("fit: input must be finite and nonnegative");
  }
  if (x.maxCoeff() <= 0.0) throw NumericError("degenerate input: matrix is all zero");

  FactorPair init = cfg.init == InitMethod::nndsvd ? nndsvd_init(x, cfg.k, cfg.seed)
                                                   : random_init(x, cfg.k, cfg.seed);
  TopicModel model;
  model.k = cfg.k;
  model.config = cfg;
  model.init_fallback = init.fallback;
  model.w = std::move(init.w);
  model.h = std::move(init.h);
  model.objective_trace.reserve(static_cast<std::size_t>(cfg.max_iter));

  double previous = objective(x, model.w, model.h);
  for (int it = 0; it < cfg.max_iter; ++it) {
    if (cfg.solver == Solver::multiplicative_update) {
      mu_step(x, model.w, model.h);
    } else {
      hals_step(x, model.w, model.h);
    }
    const double current = objective(x, model.w, model.h);
    if (!std::isfinite(current)) throw NumericError("fit: objective became non-finite");
    model.objective_trace.push_back(current);
    model.iterations_run = it + 1;
    if (current == 0.0 || std::abs(previous - current) < cfg.tol * previous) {
      model.converged = true;
      break;
    }
    previous = current;
  }
  return model;
}

TopicModel fit(const RegionOccupationMatrix& x, const FitConfig& cfg) {
  x.validate();
  TopicModel model = fit(x.values, cfg);
  model.region_labels = x.region_labels;
  model.occupation_labels = x.occupation_labels;
  model.occupation_names = x.occupation_names;
  return model;
}

TopicModel normalize(TopicModel model) {
  model.zero_topics.assign(static_cast<std::size_t>(model.h.rows()), false);
  for (Eigen::Index l = 0; l < model.h.rows(); ++l) {
    const double total = model.h.row(l).sum();
    if (total <= 0.0) {
      model.zero_topics[static_cast<std::size_t>(l)] = true;
      continue;
    }
    model.h.row(l) /= total;
    model.w.col(l) *= total;
  }
  return model;
}

// ---------------------------------------------------------------------------
// Model directory

void save_model(const std::filesystem::path& dir, const TopicModel& model) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> topics;
  for (Eigen::Index l = 0; l < model.h.rows(); ++l) topics.push_back(topic_label(l));

  auto region_labels = model.region_labels;
  if (region_labels.empty()) {
    for (Eigen::Index i = 0; i < model.w.rows(); ++i) region_labels.push_back(std::to_string(i));
  }
  auto occupation_labels = model.occupation_labels;
  if (occupation_labels.empty()) {
    for (Eigen::Index j = 0; j < model.h.cols(); ++j) occupation_labels.push_back(std::to_string(j));
  }
  write_labelled_csv(dir / "w.csv", model.w, region_labels, topics, "region");
  write_labelled_csv(dir / "h.csv", model.h, topics, occupation_labels, "topic");

  {
    std::ofstream out(dir / "trace.csv", std::ios::binary);
    out << "iteration,objective\n";
    for (std::size_t t = 0; t < model.objective_trace.size(); ++t) {
      out << t + 1 << ',' << csv::format_double(model.objective_trace[t]) << '\n';
    }
  }
  if (!model.occupation_names.empty()) {
    std::ofstream out(dir / "occupations.csv", std::ios::binary);
    out << "code,name\n";
    for (std::size_t j = 0; j < model.occupation_names.size(); ++j) {
      out << csv::escape(occupation_labels[j]) << ',' << csv::escape(model.occupation_names[j])
          << '\n';
    }
  } else {
    std::filesystem::remove(dir / "occupations.csv");
  }

  nlohmann::ordered_json meta;
  meta["k"] = model.k;
  meta["solver"] = to_string(model.config.solver);
  meta["init"] = to_string(model.config.init);
  meta["seed"] = model.config.seed;
  meta["max_iter"] = model.config.max_iter;
  meta["tol"] = model.config.tol;
  meta["iterations"] = model.iterations_run;
  meta["converged"] = model.converged;
  meta["init_fallback"] = model.init_fallback;
  meta["final_objective"] = model.final_objective();
  std::ofstream out(dir / "meta.json", std::ios::binary);
  out << meta.dump(2) << '\n';
}

TopicModel load_model(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw DataError("model directory not found: " + dir.string());
  TopicModel model;
  auto w = read_labelled_csv(dir / "w.csv");
  auto h = read_labelled_csv(dir / "h.csv");
  if (w.values.cols() != h.values.rows()) throw DataError(dir.string() + ": W and H disagree on k");
  model.w = std::move(w.values);
  model.h = std::move(h.values);
  model.region_labels = std::move(w.row_labels);
  model.occupation_labels = std::move(h.col_labels);
  model.k = static_cast<int>(model.h.rows());

  std::ifstream meta_in(dir / "meta.json");
  if (meta_in) {
    nlohmann::json meta;
    try {
      meta_in >> meta;
      model.config.k = meta.value("k", model.k);
      model.config.solver = solver_from_string(meta.value("solver", std::string("mu")));
      model.config.init = init_from_string(meta.value("init", std::string("nndsvd")));
      model.config.seed = meta.value("seed", std::uint64_t{0});
      model.config.max_iter = meta.value("max_iter", 500);
      model.config.tol = meta.value("tol", 1e-6);
      model.iterations_run = meta.value("iterations", 0);
      model.converged = meta.value("converged", false);
      model.init_fallback = meta.value("init_fallback", false);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(dir.string() + "/meta.json: " + e.what());
    }
  }

  std::ifstream trace_in(dir / "trace.csv");
  bool first = true;
  if (trace_in && csv::next_line(trace_in, first)) {
    while (auto line = csv::next_line(trace_in, first)) {
      auto f = csv::split_line(*line);
      if (f.size() != 2) throw DataError(dir.string() + "/trace.csv: malformed row");
      auto v = csv::parse_number(f[1]);
      if (!v) throw DataError(dir.string() + "/trace.csv: bad objective");
      model.objective_trace.push_back(*v);
    }
  }

  if (std::filesystem::exists(dir / "occupations.csv")) {
    std::map<std::string, std::string> names;
    std::ifstream in(dir / "occupations.csv", std::ios::binary);
    bool first_line = true;
    csv::next_line(in, first_line);
    while (auto line = csv::next_line(in, first_line)) {
      auto f = csv::split_line(*line);
      if (f.size() >= 2) names[f[0]] = f[1];
    }
    for (const auto& code : model.occupation_labels) model.occupation_names.push_back(names[code]);
  }
  return model;
}

}  // namespace laborscope
