#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "ecgsynth/error.hpp"
#include "ecgsynth/forest.hpp"
#include "support.hpp"

using namespace ecgsynth;

namespace {

struct Data {
  std::vector<std::vector<double>> x;
  std::vector<double> y;
};

// Ten columns of noise; column `rr` holds an RR interval in ms and the
// response is slope * (RR - 800) plus Gaussian noise.
Data linear_lag(std::mt19937_64& rng, std::size_t n, double noise, std::size_t rr = 5,
                double slope = 0.02) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g(0.0, noise > 0.0 ? noise : 1.0);
  Data d;
  for (std::size_t k = 0; k < n; ++k) {
    std::vector<double> row(kFeatureCount);
    for (double& v : row) v = u(rng) * 100.0;
    row[rr] = 600.0 + 400.0 * u(rng);
    d.x.push_back(row);
    d.y.push_back(slope * (row[rr] - 800.0) + (noise > 0.0 ? g(rng) : 0.0));
  }
  return d;
}

std::string serialise(const LagModel& m) {
  std::ostringstream out;
  save_model(m, out);
  return out.str();
}

LagModel wrap(Forest f) {
  LagModel m;
  m.missing = LeadId::III;
  m.current = LeadId::I;
  m.forest = std::move(f);
  return m;
}

}  // namespace

TEST_SUITE("forest") {

TEST_CASE("four-point split") {
  const std::vector<std::vector<double>> x = {{1}, {2}, {3}, {4}};
  const std::vector<double> y = {0, 0, 10, 10};
  ForestConfig c;
  c.trees = 1;
  c.min_leaf = 1;
  c.features_per_split = 1;
  c.bootstrap = false;
  const auto f = train_random_forest(x, y, c, 1);
  REQUIRE(f.trees.size() == 1);
  const auto& root = f.trees[0].nodes[0];
  CHECK(root.feature == 0);
  CHECK(root.threshold > 2.0);
  CHECK(root.threshold < 3.0);
  for (std::size_t k = 0; k < 4; ++k) CHECK(f.predict(x[k]) == y[k]);
}

TEST_CASE("constant response") {
  std::mt19937_64 rng(1);
  auto d = linear_lag(rng, 40, 0.0);
  for (double& v : d.y) v = 7.0;
  const auto f = train_random_forest(d.x, d.y, ForestConfig{});
  for (const auto& row : d.x) CHECK(f.predict(row) == 7.0);
  for (double v : f.importance) CHECK(v == 0.0);
}

TEST_CASE("linear lag: out-of-bag error and prediction") {
  std::mt19937_64 rng(2);
  const auto d = linear_lag(rng, 300, 1.0);
  ForestConfig c;
  c.trees = 100;
  const auto f = train_random_forest(d.x, d.y, c);
  CHECK(f.oob_rmse <= 2.5);
  std::vector<double> probe(kFeatureCount, 50.0);
  probe[5] = 900.0;
  CHECK(std::abs(f.predict(probe) - 2.0) <= 1.0);
}

TEST_CASE("predictions stay inside the training response range") {
  std::mt19937_64 rng(3);
  const auto d = linear_lag(rng, 120, 2.0);
  const auto f = train_random_forest(d.x, d.y, ForestConfig{});
  const double lo = *std::min_element(d.y.begin(), d.y.end());
  const double hi = *std::max_element(d.y.begin(), d.y.end());
  CHECK(f.response_min == lo);
  CHECK(f.response_max == hi);
  std::uniform_real_distribution<double> wild(-1e4, 1e4);
  for (int k = 0; k < 500; ++k) {
    std::vector<double> x(kFeatureCount);
    for (double& v : x) v = wild(rng);
    const double p = f.predict(x);
    CHECK(p >= lo);
    CHECK(p <= hi);
  }
}

TEST_CASE("same seed gives the same model") {
  std::mt19937_64 rng(4);
  const auto d = linear_lag(rng, 80, 1.0);
  ForestConfig c;
  c.seed = 99;
  const auto a = serialise(wrap(train_random_forest(d.x, d.y, c)));
  const auto b = serialise(wrap(train_random_forest(d.x, d.y, c)));
  CHECK(a == b);
  c.seed = 100;
  CHECK(serialise(wrap(train_random_forest(d.x, d.y, c))) != a);
}

TEST_CASE("single full tree reproduces noiseless training responses") {
  std::mt19937_64 rng(5);
  const auto d = linear_lag(rng, 60, 0.0);
  ForestConfig c;
  c.trees = 1;
  c.min_leaf = 1;
  c.features_per_split = kFeatureCount;
  c.bootstrap = false;
  const auto f = train_random_forest(d.x, d.y, c);
  for (std::size_t k = 0; k < d.x.size(); ++k) CHECK(f.predict(d.x[k]) == d.y[k]);
}

TEST_CASE("importance follows the informative column") {
  std::mt19937_64 rng(6);
  const auto d = linear_lag(rng, 1000, 0.2, 0, 0.05);
  const auto f = train_random_forest(d.x, d.y, ForestConfig{});
  CHECK(f.importance[0] > 0.8);

  // Swapping two columns swaps their importances when every split sees all
  // features. Shallow trees keep nodes large, so no two columns induce the
  // same partition and the lowest-index tie-break never fires.
  ForestConfig all;
  all.features_per_split = kFeatureCount;
  all.max_depth = 4;
  auto swapped = d.x;
  for (auto& row : swapped) std::swap(row[0], row[3]);
  const auto a = train_random_forest(d.x, d.y, all);
  const auto b = train_random_forest(swapped, d.y, all);
  CHECK(b.importance[3] == doctest::Approx(a.importance[0]));
  CHECK(b.importance[0] == doctest::Approx(a.importance[3]));
}

TEST_CASE("more trees give steadier predictions across seeds") {
  std::mt19937_64 rng(7);
  const auto d = linear_lag(rng, 100, 3.0);
  std::vector<double> probe(kFeatureCount, 50.0);
  probe[5] = 870.0;
  auto spread = [&](std::size_t trees) {
    std::vector<double> p;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      ForestConfig c;
      c.trees = trees;
      c.seed = seed;
      p.push_back(train_random_forest(d.x, d.y, c).predict(probe));
    }
    double m = 0.0, v = 0.0;
    for (double e : p) m += e;
    m /= 10.0;
    for (double e : p) v += (e - m) * (e - m);
    return std::sqrt(v / 10.0);
  };
  CHECK(spread(200) < spread(10));
}

TEST_CASE("model files round trip") {
  std::mt19937_64 rng(8);
  const auto d = linear_lag(rng, 60, 1.0);
  const auto model = wrap(train_random_forest(d.x, d.y, ForestConfig{}));
  std::istringstream in(serialise(model));
  const auto back = load_model(in);
  CHECK(back.missing == model.missing);
  CHECK(back.current == model.current);
  CHECK(serialise(back) == serialise(model));
  BeatFeatures x;
  for (std::size_t k = 0; k < kFeatureCount; ++k) x.values[k] = d.x[3][k];
  CHECK(predict(back, x) == predict(model, x));

  std::istringstream junk("not a model\n");
  try {
    load_model(junk);
    FAIL("expected ModelFormat");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ModelFormat);
  }
  std::istringstream cut(serialise(model).substr(0, 200));
  CHECK_THROWS_AS(load_model(cut), Error);
}

TEST_CASE("input checks") {
  const std::vector<std::vector<double>> x(5, std::vector<double>(kFeatureCount, 1.0));
  const std::vector<double> y(5, 1.0);
  try {
    train_random_forest(x, y, ForestConfig{});
    FAIL("expected InsufficientData");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InsufficientData);
  }
  ForestConfig bad;
  bad.features_per_split = 11;
  CHECK_THROWS_AS(validate_forest_config(bad, kFeatureCount), Error);
  bad = ForestConfig{};
  bad.trees = 0;
  CHECK_THROWS_AS(validate_forest_config(bad, kFeatureCount), Error);
}

}
