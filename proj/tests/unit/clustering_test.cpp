#include "laborscope/clustering.hpp"
#include "laborscope/error.hpp"

#include "convert.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

using namespace laborscope;

namespace {

RegionComposition comp(std::string code, std::vector<double> w) {
  RegionComposition c;
  c.region_code = std::move(code);
  c.weights = std::move(w);
  c.raw_weights = c.weights;
  return c;
}

Matrix random_distances(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix d = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) d(i, j) = d(j, i) = u(rng);
  }
  return d;
}

oracle::Link to_oracle(Linkage l) {
  switch (l) {
    case Linkage::average: return oracle::Link::average;
    case Linkage::complete: return oracle::Link::complete;
    case Linkage::single: return oracle::Link::single;
  }
  return oracle::Link::average;
}

std::set<std::set<int>> clusters_of(const Dendrogram& t) {
  const int n = static_cast<int>(t.leaf_labels.size());
  std::vector<std::set<int>> members(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) members[static_cast<std::size_t>(i)] = {i};
  std::set<std::set<int>> out;
  for (const auto& m : t.merges) {
    auto s = members[static_cast<std::size_t>(m.cluster_a)];
    s.insert(members[static_cast<std::size_t>(m.cluster_b)].begin(), members[static_cast<std::size_t>(m.cluster_b)].end());
    members.push_back(s);
    out.insert(s);
  }
  return out;
}

}  // namespace

TEST_CASE("cosine distance matrix") {
  const auto d = cosine_distance_matrix({comp("A", {0.5, 0.5}), comp("B", {0.5, 0.5}), comp("C", {1, 0}), comp("D", {0, 1})});
  CHECK(d(0, 1) == 0.0);
  CHECK(d(2, 3) == 1.0);
  CHECK(d.diagonal().isZero(0.0));
  CHECK(d == d.transpose());
  CHECK_THROWS_AS(cosine_distance_matrix({comp("A", {1, 0}), comp("Z", {0, 0})}), NumericError);

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<RegionComposition> comps;
  for (int i = 0; i < 6; ++i) {
    std::vector<double> w(4);
    double s = 0;
    for (auto& v : w) s += (v = u(rng));
    for (auto& v : w) v /= s;
    comps.push_back(comp("R" + std::to_string(i), w));
  }
  const auto r = cosine_distance_matrix(comps);
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) {
      if (i == j) continue;
      CHECK(r(i, j) == doctest::Approx(1.0 - oracle::cosine(comps[static_cast<std::size_t>(i)].weights, comps[static_cast<std::size_t>(j)].weights)).epsilon(1e-12));
      CHECK(r(i, j) >= 0.0);
      CHECK(r(i, j) <= 1.0);
    }
  }
}

TEST_CASE("three points merge the closest pair first") {
  Matrix d(3, 3);
  d << 0, 0.1, 0.8,
       0.1, 0, 0.6,
       0.8, 0.6, 0;
  const auto t = hierarchical_cluster(d, Linkage::average, {"A", "B", "C"});
  REQUIRE(t.merges.size() == 2);
  CHECK(t.merges[0].cluster_a == 0);
  CHECK(t.merges[0].cluster_b == 1);
  CHECK(t.merges[0].height == 0.1);
  CHECK(t.merges[0].new_cluster == 3);
  CHECK(t.merges[1].cluster_a == 2);
  CHECK(t.merges[1].cluster_b == 3);
  CHECK(t.merges[1].height == doctest::Approx(0.7).epsilon(1e-15));
  CHECK(t.newick() == "(C:0.7,(A:0.1,B:0.1):0.6);");
  CHECK(t.leaf_order() == std::vector<int>{2, 0, 1});
  CHECK(t.cut(0.5) == std::vector<int>{0, 0, 1});
  CHECK(t.cut(1.0) == std::vector<int>{0, 0, 0});
  CHECK(t.cut(0.01) == std::vector<int>{0, 1, 2});
}

TEST_CASE("two points give one merge") {
  Matrix d(2, 2);
  d << 0, 0.4, 0.4, 0;
  for (auto l : {Linkage::average, Linkage::complete, Linkage::single}) {
    const auto t = hierarchical_cluster(d, l);
    REQUIRE(t.merges.size() == 1);
    CHECK(t.merges[0].height == 0.4);
    CHECK(t.leaf_labels == std::vector<std::string>{"0", "1"});
  }
}

TEST_CASE("merges match the recomputing oracle") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 3 + trial % 8;
    const Matrix d = random_distances(rng, n);
    for (auto l : {Linkage::average, Linkage::complete, Linkage::single}) {
      const auto t = hierarchical_cluster(d, l);
      const auto ref = oracle::agglomerate(testing::to_grid(d), to_oracle(l));
      REQUIRE(t.merges.size() == ref.size());
      for (std::size_t s = 0; s < ref.size(); ++s) {
        CHECK(t.merges[s].cluster_a == ref[s].a);
        CHECK(t.merges[s].cluster_b == ref[s].b);
        CHECK(t.merges[s].height == doctest::Approx(ref[s].height).epsilon(1e-12));
      }
      for (std::size_t s = 1; s < t.merges.size(); ++s) CHECK(t.merges[s].height >= t.merges[s - 1].height - 1e-15);
      for (const auto& m : t.merges) {
        CHECK(m.height >= 0.0);
        CHECK(m.height <= 1.0);
      }
      auto order = t.leaf_order();
      std::sort(order.begin(), order.end());
      std::vector<int> all(static_cast<std::size_t>(n));
      std::iota(all.begin(), all.end(), 0);
      CHECK(order == all);
    }
  }
}

TEST_CASE("relabelling leaves gives an isomorphic tree") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 8;
    const Matrix d = random_distances(rng, n);
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Matrix dp(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) dp(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]) = d(i, j);
    }
    for (auto l : {Linkage::average, Linkage::complete, Linkage::single}) {
      const auto a = hierarchical_cluster(d, l);
      const auto b = hierarchical_cluster(dp, l);
      std::set<std::set<int>> mapped;
      for (const auto& s : clusters_of(a)) {
        std::set<int> m;
        for (int i : s) m.insert(perm[static_cast<std::size_t>(i)]);
        mapped.insert(m);
      }
      CHECK(mapped == clusters_of(b));
      for (std::size_t s = 0; s < a.merges.size(); ++s) {
        CHECK(a.merges[s].height == doctest::Approx(b.merges[s].height).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("invalid distance matrices") {
  Matrix asym(2, 2);
  asym << 0, 0.1, 0.2, 0;
  CHECK_THROWS_AS(hierarchical_cluster(asym, Linkage::average), DataError);
  Matrix neg(2, 2);
  neg << 0, -0.1, -0.1, 0;
  CHECK_THROWS_AS(hierarchical_cluster(neg, Linkage::average), DataError);
  CHECK_THROWS_AS(hierarchical_cluster(Matrix::Zero(2, 3), Linkage::average), DataError);
  CHECK_THROWS_AS(hierarchical_cluster(Matrix::Zero(2, 2), Linkage::average, {"a"}), DataError);
  CHECK_THROWS_AS(linkage_from_string("ward"), ConfigError);
}

TEST_CASE("newick quotes awkward labels") {
  Matrix d(2, 2);
  d << 0, 0.5, 0.5, 0;
  const auto t = hierarchical_cluster(d, Linkage::single, {"Las Vegas, NV", "Reno"});
  CHECK(t.newick() == "('Las Vegas, NV':0.5,Reno:0.5);");
}

TEST_CASE("select_top_regions orders by employment") {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> emp(1, 5000);
  std::vector<EmploymentRecord> recs;
  std::vector<RegionComposition> comps;
  std::map<std::string, double> totals;
  for (int r = 0; r < 12; ++r) {
    const std::string code = "R" + std::to_string(100 + r);
    comps.push_back(comp(code, {1.0}));
    for (int o = 0; o < 3; ++o) {
      const double e = emp(rng);
      recs.push_back({code, "", "O" + std::to_string(o), "", 2016, e});
      totals[code] += e;
      recs.push_back({code, "", "O" + std::to_string(o), "", 2015, 1e6 - r});
    }
  }
  const auto table = EmploymentTable::from_records(recs);

  auto all = select_top_regions(comps, table, 2016, 12);
  REQUIRE(all.size() == 12);
  std::vector<std::pair<double, std::string>> ref;
  for (const auto& [c, t] : totals) ref.emplace_back(-t, c);
  std::sort(ref.begin(), ref.end());
  for (std::size_t i = 0; i < ref.size(); ++i) CHECK(all[i].region_code == ref[i].second);

  CHECK(select_top_regions(comps, table, 2016, 100).size() == 12);
  const auto one = select_top_regions(comps, table, 2016, 1);
  REQUIRE(one.size() == 1);
  CHECK(one[0].region_code == ref[0].second);
  CHECK(select_top_regions(comps, table, 2015, 1)[0].region_code == "R100");
  CHECK_THROWS_AS(select_top_regions(comps, table, 2016, 0), ConfigError);
}
