#include "laborscope/synth.hpp"

#include "laborscope/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace laborscope {

namespace {

std::string padded(const char* prefix, int value, int width) {
  std::string digits_str = std::to_string(value);
  if (static_cast<int>(digits_str.size()) < width) {
    digits_str.insert(0, static_cast<std::size_t>(width) - digits_str.size(), '0');
  }
  return prefix + digits_str;
}

int digits(int n) { return n < 10 ? 1 : 1 + digits(n / 10); }

}  // namespace

void SynthSpec::validate() const {
  if (regions < 2 || occupations < 1 || topics < 1) {
    throw ConfigError("synth: need regions >= 2, occupations >= 1, topics >= 1");
  }
  if (topics > std::min(regions, occupations)) throw ConfigError("synth: topics exceed min(regions, occupations)");
  if (!(noise_level >= 0.0)) throw ConfigError("synth: noise level must be nonnegative");
  if (!(local_occupation_fraction >= 0.0 && local_occupation_fraction <= 1.0)) {
    throw ConfigError("synth: local occupation fraction must lie in [0, 1]");
  }
  if (years < 1) throw ConfigError("synth: years must be at least 1");
  if (!(drift >= 0.0)) throw ConfigError("synth: drift must be nonnegative");
  if (planted_h) {
    if (planted_h->rows() != topics || planted_h->cols() != occupations) {
      throw ConfigError("synth: planted H must be topics x occupations");
    }
    if (!planted_h->allFinite() || planted_h->minCoeff() < 0.0) {
      throw ConfigError("synth: planted H must be nonnegative");
    }
  }
  for (const auto& e : events) {
    if (e.year_index < 1 || e.year_index >= years) throw ConfigError("synth: event year out of range");
    if (e.topic_a < 0 || e.topic_a >= topics || e.topic_b < 0 || e.topic_b >= topics) {
      throw ConfigError("synth: event topic out of range");
    }
    if (e.kind == SynthEvent::Kind::merge && e.topic_a == e.topic_b) {
      throw ConfigError("synth: a merge needs two distinct topics");
    }
  }
}

SynthCorpus generate(const SynthSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  const int n_regions = spec.regions;
  const int n_occ = spec.occupations;
  const int k = spec.topics;

  SynthCorpus corpus;
  for (int i = 0; i < n_regions; ++i) corpus.region_codes.push_back(padded("R", i + 1, digits(n_regions)));
  for (int j = 0; j < n_occ; ++j) corpus.occupation_codes.push_back(padded("OCC-", j + 1, digits(n_occ)));

  // Occupation roles: a shuffled prefix is local, the rest is dealt round-robin to topics.
  const int n_local = static_cast<int>(std::lround(spec.local_occupation_fraction * n_occ));
  std::vector<int> perm(static_cast<std::size_t>(n_occ));
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  corpus.occupation_topic.assign(static_cast<std::size_t>(n_occ), -1);

  Matrix h = Matrix::Zero(k, n_occ);
  if (spec.planted_h) {
    h = *spec.planted_h;
    for (int j = 0; j < n_occ; ++j) {
      Eigen::Index best = 0;
      if (h.col(j).maxCoeff(&best) > 0.0) corpus.occupation_topic[static_cast<std::size_t>(j)] = static_cast<int>(best);
    }
  } else {
    for (int p = n_local; p < n_occ; ++p) {
      const int j = perm[static_cast<std::size_t>(p)];
      const int t = (p - n_local) % k;
      corpus.occupation_topic[static_cast<std::size_t>(j)] = t;
      h(t, j) = std::exp(0.5 * normal(rng));
    }
  }
  std::vector<int> locals;
  for (int p = 0; p < n_local; ++p) locals.push_back(perm[static_cast<std::size_t>(p)]);
  std::sort(locals.begin(), locals.end());
  if (spec.planted_h) {
    // Explicit H overrides the role split; locals only add uniform columns.
    for (int j : locals) h.col(j).setZero();
    for (int j : locals) corpus.occupation_topic[static_cast<std::size_t>(j)] = -1;
  }
  for (int t = 0; t < k; ++t) {
    const double total = h.row(t).sum();
    if (total > 0.0) h.row(t) /= total;
  }

  // Region sizes and sparse topic mixtures; region i is anchored on topic i mod k.
  std::vector<double> size(static_cast<std::size_t>(n_regions));
  Matrix w = Matrix::Zero(n_regions, k);
  const double local_share = locals.empty() ? 0.0 : (locals.size() == static_cast<std::size_t>(n_occ) ? 1.0 : 0.3);
  for (int i = 0; i < n_regions; ++i) {
    size[static_cast<std::size_t>(i)] = std::exp(std::log(20000.0) + normal(rng));
    Vector share = Vector::Zero(k);
    share(i % k) = 1.0;
    for (int t = 0; t < k; ++t) {
      if (t != i % k && unif(rng) < 0.3) share(t) = 0.5 * unif(rng);
    }
    share /= share.sum();
    w.row(i) = size[static_cast<std::size_t>(i)] * (1.0 - local_share) * share.transpose();
  }

  // Coordinates cluster by anchor topic so topic prevalence is spatially autocorrelated.
  std::vector<Coordinate> centers;
  for (int t = 0; t < k; ++t) centers.push_back({28.0 + 18.0 * unif(rng), -120.0 + 48.0 * unif(rng)});
  for (int i = 0; i < n_regions; ++i) {
    const auto& c = centers[static_cast<std::size_t>(i % k)];
    corpus.coordinates[corpus.region_codes[static_cast<std::size_t>(i)]] = {
        std::clamp(c.latitude + 1.5 * normal(rng), -90.0, 90.0),
        std::clamp(c.longitude + 1.5 * normal(rng), -180.0, 180.0)};
  }

  std::vector<int> topic_ids(static_cast<std::size_t>(k));
  std::iota(topic_ids.begin(), topic_ids.end(), 0);
  std::vector<EmploymentRecord> records;

  for (int y = 0; y < spec.years; ++y) {
    const int year = spec.first_year + y;
    if (y > 0 && spec.drift > 0.0) {
      for (Eigen::Index i = 0; i < w.rows(); ++i) {
        for (Eigen::Index t = 0; t < w.cols(); ++t) {
          w(i, t) = std::max(0.0, w(i, t) * (1.0 + spec.drift * normal(rng)));
        }
      }
    }
    for (const auto& e : spec.events) {
      if (e.year_index != y) continue;
      auto pos = [&](int id) -> Eigen::Index {
        auto it = std::find(topic_ids.begin(), topic_ids.end(), id);
        if (it == topic_ids.end()) throw ConfigError("synth: event refers to a topic that no longer exists");
        return it - topic_ids.begin();
      };
      if (e.kind == SynthEvent::Kind::merge) {
        const auto a = pos(e.topic_a);
        const auto b = pos(e.topic_b);
        const Matrix merged_h = 0.5 * (h.row(a) + h.row(b));
        const Vector merged_w = w.col(a) + w.col(b);
        h.row(a) = merged_h;
        w.col(a) = merged_w;
        Matrix h2(h.rows() - 1, h.cols());
        Matrix w2(w.rows(), w.cols() - 1);
        for (Eigen::Index t = 0, r = 0; t < h.rows(); ++t) {
          if (t == b) continue;
          h2.row(r) = h.row(t);
          w2.col(r) = w.col(t);
          ++r;
        }
        h = std::move(h2);
        w = std::move(w2);
        topic_ids.erase(topic_ids.begin() + b);
      } else {
        const auto a = pos(e.topic_a);
        std::vector<Eigen::Index> support;
        for (Eigen::Index j = 0; j < h.cols(); ++j) {
          if (h(a, j) > 0.0) support.push_back(j);
        }
        if (support.size() < 2) throw ConfigError("synth: cannot split a topic with fewer than two occupations");
        Vector first = Vector::Zero(h.cols());
        Vector second = Vector::Zero(h.cols());
        for (std::size_t s = 0; s < support.size(); ++s) {
          (s < support.size() / 2 ? first : second)(support[s]) = h(a, support[s]);
        }
        const double m1 = first.sum();
        const double m2 = second.sum();
        Vector w1 = w.col(a) * m1;
        Vector w2 = w.col(a) * m2;
        for (Eigen::Index i = 0; i < w2.size(); ++i) w2(i) *= 0.2 + 1.6 * unif(rng);
        h.row(a) = (first / m1).transpose();
        w.col(a) = w1;
        h.conservativeResize(h.rows() + 1, Eigen::NoChange);
        h.row(h.rows() - 1) = (second / m2).transpose();
        w.conservativeResize(Eigen::NoChange, w.cols() + 1);
        w.col(w.cols() - 1) = w2;
        topic_ids.push_back(*std::max_element(topic_ids.begin(), topic_ids.end()) + 1);
      }
    }

    Matrix x = w * h;
    if (!locals.empty()) {
      for (int i = 0; i < n_regions; ++i) {
        const double per_local = size[static_cast<std::size_t>(i)] * local_share / static_cast<double>(locals.size());
        for (int j : locals) x(i, j) += per_local * (0.9 + 0.2 * unif(rng));
      }
    }
    if (spec.noise_level > 0.0) {
      for (Eigen::Index j = 0; j < x.cols(); ++j) {
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
          x(i, j) = std::max(0.0, x(i, j) + spec.noise_level * x(i, j) * normal(rng));
        }
      }
    }
    corpus.planted.push_back({year, w, h});

    for (int i = 0; i < n_regions; ++i) {
      for (int j = 0; j < n_occ; ++j) {
        const double v = x(i, j);
        if (v <= 0.0) continue;
        const int t = corpus.occupation_topic[static_cast<std::size_t>(j)];
        records.push_back({corpus.region_codes[static_cast<std::size_t>(i)],
                           "Synthetic region " + std::to_string(i + 1),
                           corpus.occupation_codes[static_cast<std::size_t>(j)],
                           t < 0 ? "Local occupation " + std::to_string(j + 1)
                                 : "Topic " + std::to_string(t + 1) + " occupation " + std::to_string(j + 1),
                           year, v});
      }
    }
  }
  corpus.table = EmploymentTable::from_records(std::move(records));
  return corpus;
}

}  // namespace laborscope
