#include "laborscope/error.hpp"
#include "laborscope/spatial.hpp"

#include "convert.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

using namespace laborscope;

namespace {

SpatialWeights ring(int n, bool standardize = true) {
  SpatialWeights s;
  s.w = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    s.w(i, (i + 1) % n) = 1.0;
    s.w(i, (i + n - 1) % n) = 1.0;
    s.region_labels.push_back("R" + std::to_string(i));
  }
  return standardize ? row_standardize(s) : s;
}

}  // namespace

TEST_CASE("moran's I on rings") {
  SUBCASE("checkerboard is perfectly dispersed") {
    for (int n : {4, 6, 10, 30}) {
      std::vector<double> x(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) x[static_cast<std::size_t>(i)] = i % 2;
      CHECK(std::abs(morans_i(x, ring(n)) + 1.0) < 1e-9);
      CHECK(std::abs(morans_i(x, ring(n, false)) + 1.0) < 1e-9);
    }
  }
  SUBCASE("indicator on a four-ring") {
    const std::vector<double> x{1, 0, 0, 0};
    const auto w = ring(4);
    CHECK(morans_i(x, w) == doctest::Approx(oracle::morans_i(x, testing::to_grid(w.w))).epsilon(1e-14));
    CHECK(morans_i(x, w) == doctest::Approx(-1.0 / 3.0).epsilon(1e-14));
  }
  SUBCASE("random values against the double-sum oracle") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    for (int t = 0; t < 50; ++t) {
      SpatialWeights w;
      const int n = 5 + t % 10;
      w.w = Matrix::Zero(n, n);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) w.w(i, j) = i == j ? 0.0 : u(rng);
      }
      std::vector<double> x(static_cast<std::size_t>(n));
      for (auto& v : x) v = u(rng);
      CHECK(morans_i(x, w) == doctest::Approx(oracle::morans_i(x, testing::to_grid(w.w))).epsilon(1e-12));
    }
  }
}

TEST_CASE("moran's I is invariant under affine maps") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(0.0, 1.0);
  const auto w = ring(12);
  for (int t = 0; t < 50; ++t) {
    Vector x(12);
    for (auto& v : x) v = g(rng);
    const double a = std::exp(g(rng)) * (t % 2 ? 1 : -1);
    const double b = 10 * g(rng);
    const Vector y = (a * x.array() + b).matrix();
    CHECK(std::abs(morans_i(x, w) - morans_i(y, w)) < 1e-12);
  }
}

TEST_CASE("moran's I input errors") {
  const auto w = ring(4);
  CHECK_THROWS_AS(morans_i(std::vector<double>{2, 2, 2, 2}, w), NumericError);
  CHECK_THROWS_AS(morans_i(std::vector<double>{1, 2, 3}, w), DataError);
  SpatialWeights empty;
  empty.w = Matrix::Zero(3, 3);
  CHECK_THROWS_AS(morans_i(std::vector<double>{1, 2, 3}, empty), NumericError);
}

TEST_CASE("permutation test") {
  std::vector<double> cb(20);
  for (std::size_t i = 0; i < cb.size(); ++i) cb[i] = static_cast<double>(i % 2);
  const Vector x = Eigen::Map<const Vector>(cb.data(), 20);
  const auto a = morans_i_permutation(x, ring(20), 999, 5);
  const auto b = morans_i_permutation(x, ring(20), 999, 5);
  CHECK(a.p_value == b.p_value);
  CHECK(a.statistic == doctest::Approx(-1.0));
  CHECK(a.p_value == doctest::Approx(1.0 / 1000.0));
  CHECK(a.mean == doctest::Approx(-1.0 / 19.0).epsilon(0.5));
  CHECK_THROWS_AS(morans_i_permutation(x, ring(20), 0, 5), ConfigError);
}

TEST_CASE("knn weights") {
  SUBCASE("two regions point at each other") {
    const RegionCoordinates c{{"A", {36.1, -115.1}}, {"B", {39.5, -119.8}}};
    const auto w = build_weights(c, WeightSource::knn(8));
    CHECK(w.w(0, 1) == 1.0);
    CHECK(w.w(1, 0) == 1.0);
    CHECK(w.w(0, 0) == 0.0);
  }
  SUBCASE("ties resolve by region code") {
    const RegionCoordinates c{{"C", {0, 1}}, {"A", {0, -1}}, {"B", {0, 0}}};
    const auto w = build_weights(c, WeightSource::knn(1));
    CHECK(w.region_labels == std::vector<std::string>{"A", "B", "C"});
    CHECK(w.w(1, 0) == 1.0);
    CHECK(w.w(1, 2) == 0.0);
    CHECK_FALSE(w.warnings.empty());
  }
  SUBCASE("matches a brute-force distance sort") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> lat(25, 49), lon(-124, -67);
    RegionCoordinates c;
    for (int i = 0; i < 10; ++i) c["R" + std::to_string(i)] = {lat(rng), lon(rng)};
    const auto w = build_weights(c, WeightSource::knn(3));
    std::vector<Coordinate> pts;
    for (const auto& [code, p] : c) pts.push_back(p);
    for (int i = 0; i < 10; ++i) {
      std::vector<std::pair<double, int>> d;
      for (int j = 0; j < 10; ++j) {
        if (i == j) continue;
        // Spherical law of cosines as an independent distance.
        const double r = 3.14159265358979323846 / 180;
        const auto& p = pts[static_cast<std::size_t>(i)];
        const auto& q = pts[static_cast<std::size_t>(j)];
        const double cosang = std::sin(p.latitude * r) * std::sin(q.latitude * r) +
                              std::cos(p.latitude * r) * std::cos(q.latitude * r) * std::cos((p.longitude - q.longitude) * r);
        d.emplace_back(std::acos(std::clamp(cosang, -1.0, 1.0)), j);
      }
      std::sort(d.begin(), d.end());
      for (int r = 0; r < 9; ++r) {
        CHECK(w.w(i, d[static_cast<std::size_t>(r)].second) == doctest::Approx(r < 3 ? 1.0 / 3.0 : 0.0));
      }
      CHECK(w.w.row(i).sum() == doctest::Approx(1.0).epsilon(1e-15));
    }
  }
  SUBCASE("missing coordinates") {
    const RegionCoordinates c{{"A", {0, 0}}, {"B", {1, 1}}};
    CHECK_THROWS_AS(build_weights(c, WeightSource::knn(1), {"A", "Z"}), DataError);
  }
}

TEST_CASE("haversine distance") {
  CHECK(haversine_km({0, 0}, {0, 0}) == 0.0);
  CHECK(haversine_km({0, 0}, {0, 1}) == doctest::Approx(111.195).epsilon(1e-4));
  CHECK(haversine_km({90, 0}, {-90, 0}) == doctest::Approx(3.14159265358979 * 6371.0088).epsilon(1e-12));
}

TEST_CASE("inverse-distance weights") {
  const RegionCoordinates c{{"A", {0, 0}}, {"B", {0, 1}}, {"C", {0, 3}}};
  auto src = WeightSource::inverse_distance(2.0);
  src.row_standardize = false;
  const auto w = build_weights(c, src);
  const double dab = haversine_km({0, 0}, {0, 1});
  CHECK(w.w(0, 1) == doctest::Approx(1.0 / (dab * dab)).epsilon(1e-14));
  CHECK(w.w(1, 0) == w.w(0, 1));
  CHECK(w.w(0, 1) > w.w(0, 2));
  const auto s = build_weights(c, WeightSource::inverse_distance(1.0));
  for (Eigen::Index i = 0; i < 3; ++i) CHECK(s.w.row(i).sum() == doctest::Approx(1.0).epsilon(1e-15));
  const RegionCoordinates dup{{"A", {0, 0}}, {"B", {0, 0}}};
  CHECK_THROWS_AS(build_weights(dup, WeightSource::inverse_distance(1.0)), DataError);
}

TEST_CASE("adjacency file weights and restriction") {
  const auto dir = oracle::scratch_dir("adjacency");
  std::ofstream(dir / "adj.csv") << "region_a,region_b\nA,B\nB,A\nB,C\nC,B\nC,Q\n";
  WeightSource src;
  src.kind = WeightSource::Kind::adjacency_file;
  src.adjacency = dir / "adj.csv";
  const auto w = build_weights({}, src, {"A", "B", "C"});
  CHECK(w.w(1, 0) == 0.5);
  CHECK(w.w(1, 2) == 0.5);
  CHECK(w.w(0, 1) == 1.0);
  CHECK(w.warnings.size() == 1);
  const auto r = restrict_weights(w, {"C", "B"});
  CHECK(r.w(0, 1) == 1.0);
  CHECK(r.w(1, 0) == 1.0);
  CHECK_THROWS_AS(restrict_weights(w, {"A", "Z"}), DataError);
}

TEST_CASE("location quotients") {
  SUBCASE("a single sector is 1 everywhere") {
    auto m = testing::labelled(Matrix::Constant(3, 2, 5.0));
    m.values(1, 0) = 17;
    const auto lq = location_quotient(m, {{"O100", "S"}, {"O101", "S"}});
    CHECK(lq.lq.cols() == 1);
    for (Eigen::Index r = 0; r < 3; ++r) CHECK(lq.lq(r, 0) == doctest::Approx(1.0).epsilon(1e-15));
  }
  SUBCASE("full concentration gives E over e_r") {
    Matrix v(3, 2);
    v << 10, 0, 0, 20, 0, 30;
    const auto lq = location_quotient(testing::labelled(v), {{"O100", "A"}, {"O101", "B"}});
    CHECK(lq.lq(0, 0) == doctest::Approx(60.0 / 10.0).epsilon(1e-15));
    CHECK(lq.lq(0, 1) == 0.0);
  }
  SUBCASE("hand-computed 5x3 with two sectors") {
    std::mt19937_64 rng(4);
    const auto g = oracle::random_grid(rng, 5, 3, 0.2);
    const auto lq = location_quotient(testing::labelled(testing::to_eigen(g)),
                                      {{"O100", "X"}, {"O101", "Y"}, {"O102", "X"}});
    double total = 0, sx = 0, sy = 0;
    for (const auto& row : g) {
      sx += row[0] + row[2];
      sy += row[1];
    }
    total = sx + sy;
    for (std::size_t r = 0; r < 5; ++r) {
      const double er = g[r][0] + g[r][1] + g[r][2];
      if (er == 0) continue;
      CHECK(lq.lq(static_cast<Eigen::Index>(r), 0) == doctest::Approx(((g[r][0] + g[r][2]) / er) / (sx / total)).epsilon(1e-13));
      CHECK(lq.lq(static_cast<Eigen::Index>(r), 1) == doctest::Approx((g[r][1] / er) / (sy / total)).epsilon(1e-13));
      // Employment shares recovered from the quotients sum to one.
      const double share = lq.lq(static_cast<Eigen::Index>(r), 0) * sx / total + lq.lq(static_cast<Eigen::Index>(r), 1) * sy / total;
      CHECK(share == doctest::Approx(1.0).epsilon(1e-13));
    }
  }
  SUBCASE("unmapped occupations and zero regions") {
    Matrix v(2, 2);
    v << 1, 2, 0, 0;
    const auto lq = location_quotient(testing::labelled(v), {{"O100", "A"}});
    CHECK(lq.sector_labels == std::vector<std::string>{"A", "unclassified"});
    CHECK(lq.unmapped_occupations == std::vector<std::string>{"O101"});
    CHECK(lq.zero_regions == std::vector<std::string>{"R101"});
  }
  SUBCASE("empty mapping and tfidf input") {
    CHECK_THROWS_AS(location_quotient(testing::labelled(Matrix::Ones(2, 2)), {}), ConfigError);
    CHECK_THROWS_AS(location_quotient(testing::labelled(Matrix::Ones(2, 2), MatrixKind::tfidf), {{"O100", "A"}}), DataError);
  }
}

TEST_CASE("coordinates and sector files") {
  const auto dir = oracle::scratch_dir("spatial_files");
  std::ofstream(dir / "coords.csv") << "region_code,latitude,longitude\n29820,36.2,-115.0\n39900,39.5,-119.8\n";
  const auto c = read_coordinates(dir / "coords.csv");
  CHECK(c.size() == 2);
  CHECK(c.at("29820").latitude == 36.2);
  std::ofstream(dir / "bad.csv") << "region_code,latitude,longitude\n1,95,0\n";
  CHECK_THROWS_AS(read_coordinates(dir / "bad.csv"), DataError);
  std::ofstream(dir / "sectors.csv") << "occupation_code,sector_code\n39-3011,leisure\n39-3011,mining\n";
  CHECK_THROWS_AS(read_sector_mapping(dir / "sectors.csv"), DataError);
}
