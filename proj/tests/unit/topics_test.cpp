#include "laborscope/error.hpp"
#include "laborscope/topics.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>

using namespace laborscope;

namespace {

TopicModel model_from(const Matrix& w, const Matrix& h) {
  TopicModel m;
  m.w = w;
  m.h = h;
  m.k = static_cast<int>(h.rows());
  for (Eigen::Index i = 0; i < w.rows(); ++i) m.region_labels.push_back("R" + std::to_string(10 + i));
  for (Eigen::Index j = 0; j < h.cols(); ++j) m.occupation_labels.push_back("O" + std::to_string(10 + j));
  return m;
}

}  // namespace

TEST_CASE("summaries skip zero-weight occupations") {
  Matrix h(1, 4);
  h << 0.0, 0.7, 0.0, 0.3;
  const auto s = summarize_topics(model_from(Matrix::Ones(2, 1), h), 3);
  REQUIRE(s.size() == 1);
  REQUIRE(s[0].top_occupations.size() == 2);
  CHECK(s[0].top_occupations[0].code == "O11");
  CHECK(s[0].top_occupations[1].code == "O13");
  CHECK(s[0].topic_id == 1);
}

TEST_CASE("summaries match a full sort") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  Matrix h(4, 30);
  for (Eigen::Index l = 0; l < h.rows(); ++l) {
    for (Eigen::Index j = 0; j < h.cols(); ++j) h(l, j) = u(rng);
  }
  const auto model = model_from(Matrix::Ones(3, 4), h);
  const auto s = summarize_topics(model, 7);
  for (Eigen::Index l = 0; l < h.rows(); ++l) {
    std::vector<std::pair<double, std::string>> all;
    for (Eigen::Index j = 0; j < h.cols(); ++j) all.emplace_back(h(l, j), model.occupation_labels[static_cast<std::size_t>(j)]);
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    const auto& top = s[static_cast<std::size_t>(l)].top_occupations;
    REQUIRE(top.size() == 7);
    for (std::size_t i = 0; i < 7; ++i) {
      CHECK(top[i].code == all[i].second);
      CHECK(top[i].weight == all[i].first);
    }
  }
}

TEST_CASE("summaries truncate and carry labels") {
  Matrix h(2, 3);
  h << 1, 2, 3, 3, 2, 1;
  bool truncated = false;
  const auto s = summarize_topics(model_from(Matrix::Ones(1, 2), h), 10, {{2, "Gaming"}}, &truncated);
  CHECK(truncated);
  CHECK(s[0].top_occupations.size() == 3);
  CHECK_FALSE(s[0].label.has_value());
  CHECK(s[1].label == "Gaming");
  CHECK_THROWS_AS(summarize_topics(model_from(Matrix::Ones(1, 2), h), 0), ConfigError);
}

TEST_CASE("topic labels file") {
  const auto dir = oracle::scratch_dir("labels");
  std::ofstream(dir / "labels.csv") << "topic_id,label\n1,Gaming\n3,\"Textiles, apparel\"\n";
  const auto labels = read_topic_labels(dir / "labels.csv");
  CHECK(labels.size() == 2);
  CHECK(labels.at(3) == "Textiles, apparel");
}

TEST_CASE("compositions") {
  Matrix w(3, 2);
  w << 1, 3, 0, 0, 2, 2;
  const auto comps = compose_regions(model_from(w, Matrix::Ones(2, 2)));
  CHECK(comps[0].weights == std::vector<double>{0.25, 0.75});
  CHECK(comps[0].dominant_topic == 2);
  CHECK(comps[0].raw_weights == std::vector<double>{1, 3});
  CHECK(comps[1].zero_row);
  CHECK(comps[1].dominant_topic == 0);
  CHECK(comps[1].weights == std::vector<double>{0, 0});
  CHECK(comps[2].dominant_topic == 1);
  CHECK(comps[2].region_code == "R12");

  const Matrix m = composition_matrix(comps);
  CHECK(m.rows() == 3);
  CHECK(m(0, 1) == 0.75);
}

TEST_CASE("dominant topic is invariant under row rescaling") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix w(20, 5);
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    for (Eigen::Index l = 0; l < w.cols(); ++l) w(i, l) = u(rng);
  }
  Matrix scaled = w;
  for (Eigen::Index i = 0; i < w.rows(); ++i) scaled.row(i) *= 0.001 + 50.0 * u(rng);
  const auto a = compose_regions(model_from(w, Matrix::Ones(5, 3)));
  const auto b = compose_regions(model_from(scaled, Matrix::Ones(5, 3)));
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].dominant_topic == b[i].dominant_topic);
    for (std::size_t l = 0; l < 5; ++l) CHECK(a[i].weights[l] == doctest::Approx(b[i].weights[l]).epsilon(1e-12));
  }
}

TEST_CASE("prevalence reads one column of the composition") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix w(12, 3);
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    for (Eigen::Index l = 0; l < w.cols(); ++l) w(i, l) = u(rng);
  }
  const auto model = model_from(w, Matrix::Ones(3, 4));
  for (int t = 1; t <= 3; ++t) {
    const auto p = topic_prevalence(model, t);
    REQUIRE(p.size() == 12);
    for (std::size_t r = 1; r < p.size(); ++r) CHECK(p[r - 1].weight >= p[r].weight);
    for (const auto& e : p) {
      const auto it = std::find(model.region_labels.begin(), model.region_labels.end(), e.region_code);
      const auto i = it - model.region_labels.begin();
      CHECK(e.raw_weight == w(i, t - 1));
      CHECK(e.weight == doctest::Approx(w(i, t - 1) / w.row(i).sum()).epsilon(1e-14));
    }
  }
  CHECK_THROWS_AS(topic_prevalence(model, 0), ConfigError);
  CHECK_THROWS_AS(topic_prevalence(model, 4), ConfigError);
}
