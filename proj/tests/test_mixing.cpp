#include <doctest.h>

#include <cmath>

#include "ild/mixing.hpp"
#include "support.hpp"

using namespace ild;
using namespace ild::test;

namespace {

Vec vec(std::initializer_list<double> v) { return rows({v}).row(0).transpose(); }

Mat numerical_jacobian(const LayerChain& g, const Vec& x, double h) {
  const int m = static_cast<int>(x.size());
  Mat J(m, m);
  for (int c = 0; c < m; ++c) {
    Vec xp = x, xm = x;
    xp[c] += h;
    xm[c] -= h;
    J.col(c) = (chain_forward(g, xp) - chain_forward(g, xm)) / (2 * h);
  }
  return J;
}

// Matrix of a chain that is linear (no bias terms, no LeakyRelu).
Mat effective_matrix(const LayerChain& g) {
  const int m = g.dim();
  Mat A(m, m);
  for (int c = 0; c < m; ++c) A.col(c) = chain_forward(g, Vec::Unit(m, c));
  return A;
}

// Smallest |pre-activation| seen by any LeakyRelu on the forward pass.
double kink_distance(const LayerChain& g, const Vec& x) {
  double nearest = INFINITY;
  Vec v = x;
  for (const auto& layer : g.layers()) {
    if (std::holds_alternative<LeakyRelu>(layer)) nearest = std::min(nearest, v.cwiseAbs().minCoeff());
    v = chain_forward(LayerChain(g.dim(), {layer}), v);
  }
  return nearest;
}

}  // namespace

TEST_CASE("empty chain is the identity") {
  const LayerChain g(2);
  const Vec x = vec({1, 2});
  CHECK(chain_forward(g, x) == x);
  CHECK(chain_inverse(g, x) == x);
  CHECK(chain_log_abs_det(g, x) == 0.0);
  CHECK(lipschitz_upper_bound(g) == 1.0);
}

TEST_CASE("leaky relu forward, inverse and log-det") {
  const LayerChain g(2, {LeakyRelu(0.5)});
  CHECK(chain_forward(g, vec({-2, 4})) == vec({-1, 4}));
  CHECK(chain_inverse(g, vec({-1, 4})) == vec({-2, 4}));
  const LayerChain g3(3, {LeakyRelu(0.5)});
  CHECK(chain_log_abs_det(g3, vec({-1, -2, 3})) == doctest::Approx(2 * std::log(0.5)));
}

TEST_CASE("leaky relu followed by a dense layer matches the direct formula") {
  Rng rng(1);
  const Mat G = well_conditioned(rng, 4);
  const Vec b = rng.normal_vector(4);
  const LayerChain g(4, {LeakyRelu(0.5), AffineDense(G, b)});
  for (int t = 0; t < 20; ++t) {
    const Vec x = rng.normal_vector(4);
    Vec h = x;
    for (int i = 0; i < 4; ++i) h[i] = x[i] >= 0 ? x[i] : 0.5 * x[i];
    CHECK(max_abs_diff(chain_forward(g, x), G * h + b) <= 1e-14);
  }
}

TEST_CASE("random chains round trip") {
  Rng rng(2);
  for (int t = 0; t < 100; ++t) {
    const int m = 2 + static_cast<int>(rng.index(6));
    const LayerChain g = random_chain(rng, m);
    const Vec x = rng.normal_vector(m);
    CHECK(max_abs_diff(chain_inverse(g, chain_forward(g, x)), x) <= 1e-10);
    const Vec y = rng.normal_vector(m);
    CHECK(max_abs_diff(chain_forward(g, chain_inverse(g, y)), y) <= 1e-10);
  }
}

TEST_CASE("log-det matches a finite-difference Jacobian away from kinks") {
  Rng rng(3);
  int checked = 0;
  while (checked < 50) {
    const int m = 2 + static_cast<int>(rng.index(5));
    const LayerChain g = random_chain(rng, m);
    const Vec x = rng.normal_vector(m);
    if (kink_distance(g, x) <= 1e-3) continue;
    const double fd = std::log(std::abs(numerical_jacobian(g, x, 1e-6).determinant()));
    CHECK(std::abs(chain_log_abs_det(g, x) - fd) <= 1e-5);
    ++checked;
  }
}

TEST_CASE("inverse pass log-det cancels the forward log-det") {
  Rng rng(4);
  for (int t = 0; t < 50; ++t) {
    const LayerChain g = random_chain(rng, 5);
    const Vec x = rng.normal_vector(5);
    const InversePass pass = chain_inverse_pass(g, chain_forward(g, x));
    CHECK(max_abs_diff(pass.x, x) <= 1e-10);
    CHECK(std::abs(chain_log_abs_det(g, x) + pass.log_abs_det) <= 1e-9);
  }
}

TEST_CASE("appending on the input side composes before g") {
  Rng rng(5);
  const LayerChain g = random_chain(rng, 4);
  const AffineSCM f1 = scm_from_matrix(example_f1(), Vec::Zero(4));
  const LayerChain g0 = chain_append_right(g, Triangular{f1});
  const LayerChain out = chain_append(g, LeakyRelu(0.3));
  for (int t = 0; t < 10; ++t) {
    const Vec eps = rng.normal_vector(4);
    CHECK(max_abs_diff(chain_forward(g0, eps), chain_forward(g, scm_forward(f1, eps))) <= 1e-12);
    const Vec y = chain_forward(g, eps);
    CHECK(max_abs_diff(chain_forward(out, eps),
                       chain_forward(LayerChain(4, {LeakyRelu(0.3)}), y)) <= 1e-15);
  }
}

TEST_CASE("a right-composed swap reorders the columns of a dense g") {
  const Mat G = rows({{2, 1, 0, 0.5}, {0, 1, -1, 0}, {1, 0, 3, 0}, {0.5, 0, 0, 1}});
  const LayerChain g(4, {AffineDense(G, Vec::Zero(4))});
  const LayerChain g1 = chain_append_right(g, Permute::swap(4, 3, 4));
  Mat swapped = G;
  swapped.col(2).swap(swapped.col(3));
  CHECK(max_abs_diff(effective_matrix(g1), swapped) == 0.0);

  // g o f1 o h34: the all-ones factor with its last two columns exchanged.
  const LayerChain step = chain_append_right(
      chain_append_right(g, Triangular{scm_from_matrix(example_f1(), Vec::Zero(4))}),
      Permute::swap(4, 3, 4));
  const Mat f1_cols = rows({{1, 0, 0, 0}, {1, 1, 0, 0}, {1, 1, 0, 1}, {1, 1, 1, 1}});
  CHECK(max_abs_diff(effective_matrix(step), G * f1_cols) <= 1e-12);
}

TEST_CASE("a layer followed by its inverse cancels") {
  Rng rng(6);
  for (int t = 0; t < 20; ++t) {
    const LayerChain g = random_chain(rng, 4);
    const AffineSCM f = random_scm(rng, 4, 0.3);
    const LayerChain h =
        chain_append_right(chain_append_right(g, Triangular{scm_invert(f)}), Triangular{f});
    const Mat A = well_conditioned(rng, 4);
    const Vec b = rng.normal_vector(4);
    const Mat A_inv = A.inverse();
    const LayerChain k = chain_append(chain_append(g, AffineDense(A, b)), AffineDense(A_inv, -A_inv * b));
    const std::vector<int> p = random_perm(rng, 4);
    std::vector<int> p_inv(4);
    for (int i = 0; i < 4; ++i) p_inv[p[i]] = i;
    const LayerChain q = chain_append(chain_append(g, Permute(p)), Permute(p_inv));
    const Vec x = rng.normal_vector(4);
    const Vec y = chain_forward(g, x);
    CHECK(max_abs_diff(chain_forward(h, x), y) <= 1e-12 * (1 + y.cwiseAbs().maxCoeff()));
    CHECK(max_abs_diff(chain_forward(k, x), y) <= 1e-12 * (1 + y.cwiseAbs().maxCoeff()));
    CHECK(chain_forward(q, x) == y);
  }
}

TEST_CASE("permutations commute with leaky relu exactly") {
  Rng rng(7);
  for (int t = 0; t < 50; ++t) {
    const std::vector<int> p = random_perm(rng, 6);
    const LayerChain a(6, {LeakyRelu(0.5), Permute(p)});
    const LayerChain b(6, {Permute(p), LeakyRelu(0.5)});
    const Vec x = rng.normal_vector(6);
    CHECK(chain_forward(a, x) == chain_forward(b, x));
  }
}

TEST_CASE("permute moves entries as documented") {
  const LayerChain g(3, {Permute({2, 0, 1})});
  CHECK(chain_forward(g, vec({10, 20, 30})) == vec({30, 10, 20}));
  const LayerChain s(4, {Permute::swap(4, 2, 3)});
  CHECK(chain_forward(s, vec({1, 2, 3, 4})) == vec({1, 3, 2, 4}));
}

TEST_CASE("Lipschitz bound of a scalar map and of random chains") {
  CHECK(lipschitz_upper_bound(LayerChain(3, {AffineDense(2 * Mat::Identity(3, 3), Vec::Zero(3))})) ==
        doctest::Approx(2.0).epsilon(1e-12));
  Rng rng(8);
  for (int t = 0; t < 20; ++t) {
    const int m = 2 + static_cast<int>(rng.index(5));
    const LayerChain g = random_chain(rng, m);
    const double bound = lipschitz_upper_bound(g);
    double worst = 0.0;
    for (int p = 0; p < 10000; ++p) {
      const Vec x = rng.normal_vector(m);
      const Vec x2 = rng.uniform() < 0.5 ? Vec(x + 1e-3 * rng.normal_vector(m)) : rng.normal_vector(m);
      worst = std::max(worst, (chain_forward(g, x) - chain_forward(g, x2)).norm() / (x - x2).norm());
    }
    CHECK(bound >= worst);
  }
}

TEST_CASE("power iteration agrees with the SVD") {
  Rng rng(9);
  for (int t = 0; t < 30; ++t) {
    const int m = 1 + static_cast<int>(rng.index(7));
    const Mat A = random_matrix(rng, m, m);
    const double svd = Eigen::JacobiSVD<Mat>(A).singularValues()[0];
    CHECK(power_iteration_norm(A) == doctest::Approx(svd).epsilon(1e-6));
  }
}

TEST_CASE("invalid layers are rejected") {
  CHECK(code_of([] { LeakyRelu(0.0); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { LeakyRelu(1.5); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { Permute({0, 0, 1}); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { Permute::swap(3, 1, 4); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { AffineDense(Mat::Zero(2, 2), Vec::Zero(2)); }) == ErrorCode::SingularMatrix);
  CHECK(code_of([] { AffineDense(Mat::Identity(2, 2), Vec::Zero(3)); }) ==
        ErrorCode::DimensionMismatch);
  CHECK(code_of([] { LayerChain(3, {Permute({0, 1})}); }) == ErrorCode::DimensionMismatch);
  CHECK(code_of([] { chain_forward(LayerChain(3), Vec::Zero(2)); }) == ErrorCode::DimensionMismatch);
}
