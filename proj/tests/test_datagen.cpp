#include <doctest.h>

#include <random>

#include "ild/datagen.hpp"
#include "support.hpp"

using namespace ild;
using namespace ild::test;

namespace {

GroundTruthSpec small_spec(std::vector<int> intervention, std::uint64_t seed = 0) {
  GroundTruthSpec spec;
  spec.dim = 6;
  spec.num_domains = 3;
  spec.intervention = std::move(intervention);
  spec.n_train = 200;
  spec.n_val = 50;
  spec.n_test = 50;
  spec.seed = seed;
  return spec;
}

ILDModel shift_model(double b2) {
  return ILDModel(LayerChain(1), {AffineSCM(Mat::Zero(1, 1), Vec::Ones(1), Vec::Zero(1)),
                                  AffineSCM(Mat::Zero(1, 1), Vec::Ones(1), Vec::Constant(1, b2))});
}

}  // namespace

TEST_CASE("generated intervention set is exactly the requested one") {
  const std::vector<std::vector<int>> cases{{}, {5, 6}, {1}, {2, 4, 6}, {1, 2, 3, 4, 5, 6}};
  for (const auto& I : cases) {
    for (std::uint64_t seed : {0u, 1u, 2u}) {
      const ILDModel gt = generate_ground_truth(small_spec(I, seed));
      CHECK(intervention_set(gt.scms()).indices == I);
      CHECK(gt.num_domains() == 3);
      CHECK(gt.dim() == 6);
    }
  }
}

TEST_CASE("mechanism structure") {
  const GroundTruthSpec spec = small_spec({5, 6}, 7);
  const ILDModel gt = generate_ground_truth(spec);
  for (int d = 2; d <= spec.num_domains; ++d) {
    const AffineSCM& f = gt.scm(d);
    const AffineSCM& f1 = gt.scm(1);
    for (int row = 0; row < 4; ++row) {
      for (int c = 0; c < 6; ++c) CHECK(f.L()(row, c) == f1.L()(row, c));
    }
    CHECK(f.S() == Vec::Ones(6));
    // Offsets of non-intervened rows vanish in the inverse map.
    const Vec offset = scm_inverse(f, Vec::Zero(6));
    for (int row = 0; row < 4; ++row) CHECK(std::abs(offset[row]) <= 1e-12);
    CHECK(offset[4] == doctest::Approx(offset[5]).epsilon(1e-12));
  }

  const ILDModel none = generate_ground_truth(small_spec({}, 7));
  for (int d = 2; d <= 3; ++d) {
    CHECK(none.scm(d).L() == none.scm(1).L());
    CHECK(none.scm(d).b() == none.scm(1).b());
  }
}

TEST_CASE("shift magnitude stays inside its range") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const ILDModel gt = generate_ground_truth(small_spec({3, 5}, seed));
    const double half_width = 2.0 * std::sqrt(6.0 / 2.0);
    for (int d = 1; d <= 3; ++d) {
      const Vec offset = -scm_inverse(gt.scm(d), Vec::Zero(6));
      CHECK(std::abs(offset[2]) <= half_width);
      CHECK(offset[2] == doctest::Approx(offset[4]).epsilon(1e-12));
    }
  }
}

TEST_CASE("mixing ends in a unit-determinant matrix after standardization") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const ILDModel gt = generate_ground_truth(small_spec({6}, seed));
    const auto& layers = gt.g().layers();
    REQUIRE(layers.size() == 3);
    CHECK(std::get<LeakyRelu>(layers[0]).slope() == 0.5);
    const Mat& G = std::get<AffineDense>(layers[2]).G();
    CHECK(std::abs(G.determinant()) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::get<AffineDense>(layers[2]).b() == Vec::Zero(6));
    const Mat& D = std::get<AffineDense>(layers[1]).G();
    CHECK(max_abs_diff(D, Mat(D.diagonal().asDiagonal())) == 0.0);
  }
}

TEST_CASE("standardization layer whitens the pooled hidden units") {
  const ILDModel gt = generate_ground_truth(small_spec({2, 5}, 3));
  const LayerChain front(6, {gt.g().layers()[0], gt.g().layers()[1]});
  std::mt19937_64 engine(99);
  std::normal_distribution<double> normal;
  const int n = 60000;
  Vec sum = Vec::Zero(6);
  Vec sum_sq = Vec::Zero(6);
  for (int i = 0; i < n; ++i) {
    Vec eps(6);
    for (auto& e : eps) e = normal(engine);
    const Vec h = chain_forward(front, scm_forward(gt.scm(1 + i % 3), eps));
    sum += h;
    sum_sq += h.cwiseProduct(h);
  }
  const Vec mean = sum / n;
  const Vec var = sum_sq / n - mean.cwiseProduct(mean);
  // The layer was fitted on 10k draws, so agreement is only statistical.
  CHECK(mean.cwiseAbs().maxCoeff() < 0.05);
  CHECK((var.array() - 1.0).abs().maxCoeff() < 0.08);
}

TEST_CASE("samples follow the pushforward of the mechanisms") {
  GroundTruthSpec spec = small_spec({4, 6}, 5);
  spec.n_train = 4000;
  const ILDModel gt = generate_ground_truth(spec);
  const MultiDomainDataset data = sample_dataset(gt, spec);

  // Independent draw through the layers written out by hand.
  const auto& layers = gt.g().layers();
  const auto& D = std::get<AffineDense>(layers[1]);
  const auto& G = std::get<AffineDense>(layers[2]);
  std::mt19937_64 engine(1234);
  std::normal_distribution<double> normal;
  for (int d = 1; d <= spec.num_domains; ++d) {
    const AffineSCM& f = gt.scm(d);
    const Mat F = (Mat::Identity(6, 6) - f.L()).inverse() * f.S().asDiagonal();
    const int n_ref = 200000;
    Vec ref_sum = Vec::Zero(6);
    Vec ref_sq = Vec::Zero(6);
    for (int i = 0; i < n_ref; ++i) {
      Vec eps(6);
      for (auto& e : eps) e = normal(engine);
      Vec h = F * eps + f.b();
      for (auto& v : h) v = v < 0 ? 0.5 * v : v;
      const Vec x = G.G() * (D.G() * h + D.b()) + G.b();
      ref_sum += x;
      ref_sq += x.cwiseProduct(x);
    }
    const Vec ref_mean = ref_sum / n_ref;
    const Vec ref_sd = (ref_sq / n_ref - ref_mean.cwiseProduct(ref_mean)).cwiseSqrt();

    Vec mean = Vec::Zero(6);
    int count = 0;
    for (const auto& s : data.train) {
      if (s.d != d) continue;
      mean += s.x;
      ++count;
    }
    REQUIRE(count == spec.n_train);
    mean /= count;
    for (int c = 0; c < 6; ++c) {
      const double se = ref_sd[c] * std::sqrt(1.0 / count + 1.0 / n_ref);
      CHECK(std::abs(mean[c] - ref_mean[c]) < 4.0 * se);
    }
  }
}

TEST_CASE("dataset shape and determinism") {
  GroundTruthSpec spec = small_spec({6}, 11);
  spec.n_train = 0;
  const ILDModel gt = generate_ground_truth(spec);
  const MultiDomainDataset a = sample_dataset(gt, spec);
  CHECK(a.train.empty());
  CHECK(a.val.size() == 150);
  CHECK(a.test.size() == 150);
  for (std::size_t i = 0; i < a.val.size(); ++i) CHECK(a.val[i].d == 1 + static_cast<int>(i / 50));

  const MultiDomainDataset b = sample_dataset(generate_ground_truth(spec), spec);
  REQUIRE(a.val.size() == b.val.size());
  bool same = true;
  for (std::size_t i = 0; i < a.val.size(); ++i) same = same && a.val[i].x == b.val[i].x;
  CHECK(same);

  GroundTruthSpec other = spec;
  other.seed = 12;
  const MultiDomainDataset c = sample_dataset(generate_ground_truth(other), other);
  CHECK(c.val[0].x != a.val[0].x);
  CHECK(a.val[0].x != a.test[0].x);
}

TEST_CASE("spec validation") {
  auto bad = [](auto edit) {
    GroundTruthSpec s = small_spec({2});
    edit(s);
    return code_of([&] { generate_ground_truth(s); });
  };
  CHECK(bad([](GroundTruthSpec& s) { s.dim = 0; }) == ErrorCode::InvalidArgument);
  CHECK(bad([](GroundTruthSpec& s) { s.num_domains = 1; }) == ErrorCode::InvalidArgument);
  CHECK(bad([](GroundTruthSpec& s) { s.intervention = {7}; }) == ErrorCode::InvalidArgument);
  CHECK(bad([](GroundTruthSpec& s) { s.intervention = {0}; }) == ErrorCode::InvalidArgument);
  CHECK(bad([](GroundTruthSpec& s) { s.intervention = {3, 2}; }) == ErrorCode::InvalidArgument);
  CHECK(bad([](GroundTruthSpec& s) { s.intervention = {2, 2}; }) == ErrorCode::InvalidArgument);
  CHECK(bad([](GroundTruthSpec& s) { s.n_val = -1; }) == ErrorCode::InvalidArgument);
  GroundTruthSpec s = small_spec({2});
  const ILDModel gt = generate_ground_truth(s);
  s.dim = 5;
  CHECK(code_of([&] { sample_dataset(gt, s); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("oracle counterfactual error") {
  const GroundTruthSpec spec = small_spec({5, 6}, 2);
  const ILDModel gt = generate_ground_truth(spec);
  const MultiDomainDataset data = sample_dataset(gt, spec);
  CHECK(oracle_counterfactual_error(gt, gt, data.test) == 0.0);

  SUBCASE("closed form for shifted one-dimensional models") {
    Samples pts;
    Rng rng(8);
    for (int i = 0; i < 30; ++i) pts.push_back({Vec::Constant(1, rng.normal()), 1 + i % 2});
    // cf errors are 0.5 in both directions, squared 0.25.
    CHECK(oracle_counterfactual_error(shift_model(1.5), shift_model(1.0), pts) ==
          doctest::Approx(0.5).epsilon(1e-12));
  }

  SUBCASE("matches a literal double loop") {
    Rng rng(9);
    const ILDModel est = random_model(rng, 6, 3);
    double total = 0.0;
    for (int d = 1; d <= 3; ++d) {
      double acc = 0.0;
      int n = 0;
      for (const auto& s : data.test) {
        if (s.d != d) continue;
        ++n;
        for (int dp = 1; dp <= 3; ++dp) {
          if (dp == d) continue;
          acc += (counterfactual(est, s.x, d, dp) - counterfactual(gt, s.x, d, dp)).squaredNorm();
        }
      }
      total += acc / n;
    }
    CHECK(oracle_counterfactual_error(est, gt, data.test) ==
          doctest::Approx(total / 3.0).epsilon(1e-12));
  }

  CHECK(code_of([&] { oracle_counterfactual_error(gt, gt, Samples{}); }) == ErrorCode::EmptyInput);
  CHECK(code_of([&] { oracle_counterfactual_error(shift_model(1.0), gt, data.test); }) ==
        ErrorCode::DimensionMismatch);
}
