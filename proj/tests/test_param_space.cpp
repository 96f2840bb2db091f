#include <gtest/gtest.h>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <random>

#include "diversifed/neural.hpp"
#include "diversifed/param_space.hpp"

using namespace diversifed;

namespace {

ParamVector random_vector(std::size_t dim, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  ParamVector v(dim);
  for (auto& x : v) x = g(rng);
  return v;
}

// Exact-ish reference: 50 decimal digits of precision, independent of the
// compensated double path.
double high_precision_distance(const ParamVector& a, const ParamVector& b) {
  using big = boost::multiprecision::cpp_bin_float_50;
  big acc = 0;
  for (std::size_t k = 0; k < a.dim(); ++k) {
    big d = big(a[k]) - big(b[k]);
    acc += d * d;
  }
  return static_cast<double>(boost::multiprecision::sqrt(acc));
}

}  // namespace

TEST(Flatten, OrderIsWeightsRowMajorThenBias) {
  StructuredModel model{{2, 2, {1, 2, 3, 4}, {5, 6}}};
  EXPECT_EQ(flatten(model), (ParamVector{1, 2, 3, 4, 5, 6}));
}

TEST(Flatten, EmptyModelIsEmptyVector) {
  EXPECT_EQ(flatten({}).dim(), 0u);
}

TEST(Flatten, MlpParameterCount) {
  MlpSpec spec{{784, 64, 10}};
  EXPECT_EQ(spec.num_params(), 784u * 64 + 64 + 64 * 10 + 10);
  EXPECT_EQ(spec.num_params(), 50890u);
}

TEST(Flatten, RoundTripsBothWays) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    std::uniform_int_distribution<std::size_t> size(1, 6);
    std::vector<LayerShape> shapes;
    StructuredModel model;
    std::size_t width = size(rng);
    for (std::size_t l = 0, n = size(rng); l < n; ++l) {
      const std::size_t out = size(rng);
      shapes.push_back({out, width});
      DenseLayer layer{out, width, {}, {}};
      auto w = random_vector(out * width, rng);
      auto b = random_vector(out, rng);
      layer.weights.assign(w.begin(), w.end());
      layer.bias.assign(b.begin(), b.end());
      model.push_back(layer);
      width = out;
    }
    EXPECT_EQ(unflatten(flatten(model), shapes), model);
    const ParamVector v = flatten(model);
    EXPECT_EQ(flatten(unflatten(v, shapes)), v);
  }
}

TEST(Flatten, UnflattenRejectsWrongDim) {
  std::vector<LayerShape> shapes{{2, 2}};
  EXPECT_THROW((void)unflatten(ParamVector(5), shapes), DimensionError);
}

TEST(EuclideanDistance, IdentityAndPythagoras) {
  ParamVector a{0.25, -3.0, 7.5};
  EXPECT_EQ(euclidean_distance(a, a), 0.0);
  EXPECT_DOUBLE_EQ(euclidean_distance(ParamVector{0, 0}, ParamVector{3, 4}), 5.0);
}

TEST(EuclideanDistance, DimensionMismatchThrows) {
  EXPECT_THROW((void)euclidean_distance(ParamVector(3), ParamVector(4)), DimensionError);
}

TEST(EuclideanDistance, MatchesHighPrecisionOracleAtMlpScale) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 5; ++trial) {
    const auto a = random_vector(50890, rng, 0.1);
    const auto b = random_vector(50890, rng, 0.1);
    const double oracle = high_precision_distance(a, b);
    EXPECT_NEAR(euclidean_distance(a, b), oracle, 1e-12 * oracle);
  }
}

TEST(EuclideanDistance, SymmetricAndTriangleInequality) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t dim = 1 + trial % 40;
    const auto a = random_vector(dim, rng), b = random_vector(dim, rng), c = random_vector(dim, rng);
    EXPECT_EQ(euclidean_distance(a, b), euclidean_distance(b, a));
    EXPECT_LE(euclidean_distance(a, c), euclidean_distance(a, b) + euclidean_distance(b, c) + 1e-9);
  }
}

TEST(DistanceRow, ThreeModelExample) {
  ModelPool pool;
  pool.add(ClientId{0}, {0, 0});
  pool.add(ClientId{1}, {1, 0});
  pool.add(ClientId{2}, {0, 2});
  const auto row = distance_row(pool, ClientId{0}, {1.0});
  ASSERT_EQ(row.entries.size(), 2u);
  EXPECT_EQ(row.entries[0].other, ClientId{1});
  EXPECT_DOUBLE_EQ(row.entries[0].distance, 1.0);
  EXPECT_DOUBLE_EQ(row.entries[1].distance, 2.0);

  const auto halved = distance_row(pool, ClientId{0}, {2.0});
  EXPECT_DOUBLE_EQ(halved.entries[0].distance, 0.5);
  EXPECT_DOUBLE_EQ(halved.entries[1].distance, 1.0);
}

TEST(DistanceRow, MatchesBruteForcePairwise) {
  std::mt19937_64 rng(5);
  ModelPool pool;
  std::vector<ParamVector> models;
  for (std::size_t i = 0; i < 5; ++i) {
    models.push_back(random_vector(10, rng));
    pool.add(ClientId{i}, models.back());
  }
  for (std::size_t c = 0; c < 5; ++c) {
    const auto row = distance_row(pool, ClientId{c}, {1.0});
    ASSERT_EQ(row.entries.size(), 4u);
    for (const auto& e : row.entries) {
      double s = 0.0;
      for (std::size_t k = 0; k < 10; ++k) {
        const double d = models[c][k] - models[e.other.value][k];
        s += d * d;
      }
      EXPECT_NEAR(e.distance, std::sqrt(s), 1e-12);
      // tau = 1 is exactly the unscaled distance
      EXPECT_EQ(e.distance, euclidean_distance(models[c], models[e.other.value]));
    }
  }
}

TEST(DistanceRow, CacheGivesIdenticalRows) {
  std::mt19937_64 rng(9);
  ModelPool pool;
  for (std::size_t i = 0; i < 6; ++i) pool.add(ClientId{i}, random_vector(30, rng));
  const auto before = distance_row(pool, ClientId{3}, {0.7});
  pool.cache_distances();
  const auto after = distance_row(pool, ClientId{3}, {0.7});
  ASSERT_EQ(before.entries.size(), after.entries.size());
  for (std::size_t k = 0; k < before.entries.size(); ++k)
    EXPECT_EQ(before.entries[k].distance, after.entries[k].distance);
}

TEST(DistanceRow, SqrtDimNormalization) {
  ModelPool pool;
  pool.add(ClientId{0}, {0, 0, 0, 0});
  pool.add(ClientId{1}, {2, 2, 2, 2});
  EXPECT_DOUBLE_EQ(distance_row(pool, ClientId{0}, {1.0, true}).entries[0].distance, 2.0);
  EXPECT_DOUBLE_EQ(distance_row(pool, ClientId{0}, {1.0, false}).entries[0].distance, 4.0);
}

TEST(DistanceRow, NeedsTwoClients) {
  ModelPool pool;
  pool.add(ClientId{0}, {1, 2});
  try {
    (void)distance_row(pool, ClientId{0});
    FAIL() << "expected an error";
  } catch (const std::invalid_argument& e) {
    EXPECT_STREQ(e.what(), "distance loss undefined for fewer than two clients");
  }
}

TEST(ModelPool, RejectsDuplicatesAndMixedDims) {
  ModelPool pool;
  pool.add(ClientId{0}, {1, 2});
  EXPECT_THROW(pool.add(ClientId{0}, {3, 4}), std::invalid_argument);
  EXPECT_THROW(pool.add(ClientId{1}, {3, 4, 5}), DimensionError);
  EXPECT_THROW((void)pool.position_of(ClientId{7}), std::out_of_range);
}
