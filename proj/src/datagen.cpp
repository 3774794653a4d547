#include "ild/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ild/error.hpp"
#include "ild/rng.hpp"

namespace ild {

namespace {

constexpr std::uint64_t kScmStream = 0x5c3;
constexpr std::uint64_t kMixingStream = 0x919;
constexpr std::uint64_t kCalibrationStream = 0xca1;
constexpr std::uint64_t kSampleStream = 0x5a3;
constexpr double kGroundTruthSlope = 0.5;

std::vector<AffineSCM> draw_mechanisms(const GroundTruthSpec& spec, Rng& rng) {
  const int m = spec.dim;
  Mat base = Mat::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < i; ++j) base(i, j) = rng.normal();
  }
  const int k = static_cast<int>(spec.intervention.size());
  const double half_width = k > 0 ? 2.0 * std::sqrt(static_cast<double>(m) / k) : 0.0;

  std::vector<AffineSCM> scms;
  for (int d = 0; d < spec.num_domains; ++d) {
    Mat L = base;
    for (int row : spec.intervention) {
      for (int j = 0; j < row - 1; ++j) L(row - 1, j) = rng.normal();
    }
    Vec shift = Vec::Zero(m);
    if (k > 0) {
      const double b = rng.uniform(-half_width, half_width);
      for (int row : spec.intervention) shift[row - 1] = b;
    }
    // The shift enters the intervened mechanisms' exogenous inputs:
    // f(eps) = F (eps + b 1_I), so the forward bias is F (b 1_I).
    AffineSCM unbiased(L, Vec::Ones(m), Vec::Zero(m));
    scms.emplace_back(std::move(L), Vec::Ones(m), scm_forward(unbiased, shift));
  }
  return scms;
}

Mat draw_unit_det_matrix(const GroundTruthSpec& spec) {
  const int m = spec.dim;
  for (int attempt = 0; attempt < kMaxGenerationAttempts; ++attempt) {
    Rng rng(derive_seed(spec.seed, {kMixingStream, static_cast<std::uint64_t>(attempt)}));
    Mat G(m, m);
    for (int r = 0; r < m; ++r) {
      for (int c = 0; c < m; ++c) G(r, c) = rng.normal();
    }
    const double det = G.partialPivLu().determinant();
    if (!(std::abs(det) >= 1e-12)) continue;
    G /= std::pow(std::abs(det), 1.0 / m);
    if (det < 0) G.row(0) *= -1.0;
    return G;
  }
  fail(ErrorCode::SingularMatrix, "generate_ground_truth: could not draw a nonsingular G*");
}

}  // namespace

void GroundTruthSpec::validate() const {
  require(dim > 0, ErrorCode::InvalidArgument, "GroundTruthSpec: dim must be positive");
  require(num_domains >= 2, ErrorCode::InvalidArgument,
          "GroundTruthSpec: num_domains must be at least 2");
  require(n_train >= 0 && n_val >= 0 && n_test >= 0, ErrorCode::InvalidArgument,
          "GroundTruthSpec: sample counts must be non-negative");
  for (std::size_t i = 0; i < intervention.size(); ++i) {
    require(intervention[i] >= 1 && intervention[i] <= dim, ErrorCode::InvalidArgument,
            "GroundTruthSpec: intervention index outside [1, dim]");
    require(i == 0 || intervention[i] > intervention[i - 1], ErrorCode::InvalidArgument,
            "GroundTruthSpec: intervention indices must be strictly increasing");
  }
}

ILDModel generate_ground_truth(const GroundTruthSpec& spec) {
  spec.validate();
  const int m = spec.dim;

  std::vector<AffineSCM> scms;
  bool matched = false;
  for (int attempt = 0; attempt < kMaxGenerationAttempts && !matched; ++attempt) {
    Rng rng(derive_seed(spec.seed, {kScmStream, static_cast<std::uint64_t>(attempt)}));
    scms = draw_mechanisms(spec, rng);
    matched = intervention_set(scms).indices == spec.intervention;
  }
  require(matched, ErrorCode::PreconditionViolated,
          "generate_ground_truth: intervention set never matched I*");

  const Mat G = draw_unit_det_matrix(spec);

  // Standardize the LeakyReLU output with statistics from a pooled draw.
  Rng rng(derive_seed(spec.seed, {kCalibrationStream}));
  Vec sum = Vec::Zero(m);
  Vec sum_sq = Vec::Zero(m);
  for (int i = 0; i < kCalibrationSamples; ++i) {
    const AffineSCM& f = scms[i % spec.num_domains];
    Vec h = scm_forward(f, rng.normal_vector(m));
    for (int c = 0; c < m; ++c) {
      if (h[c] < 0) h[c] *= kGroundTruthSlope;
    }
    sum += h;
    sum_sq += h.cwiseProduct(h);
  }
  const double n = kCalibrationSamples;
  const Vec mean = sum / n;
  const Vec std_dev = ((sum_sq - n * mean.cwiseProduct(mean)) / (n - 1.0)).cwiseMax(0.0).cwiseSqrt();
  require((std_dev.array() > 0.0).all(), ErrorCode::SingularMatrix,
          "generate_ground_truth: degenerate calibration statistics");
  const Vec inv_std = std_dev.cwiseInverse();
  Mat standardize = inv_std.asDiagonal();

  std::vector<Layer> layers{LeakyRelu(kGroundTruthSlope),
                            AffineDense(standardize, -mean.cwiseProduct(inv_std)),
                            AffineDense(G, Vec::Zero(m))};
  return ILDModel(LayerChain(m, std::move(layers)), std::move(scms));
}

MultiDomainDataset sample_dataset(const ILDModel& gt, const GroundTruthSpec& spec) {
  spec.validate();
  require(gt.dim() == spec.dim && gt.num_domains() == spec.num_domains,
          ErrorCode::DimensionMismatch, "sample_dataset: model does not match spec");
  MultiDomainDataset out;
  out.spec = spec;
  out.generator = gt;
  Samples* splits[] = {&out.train, &out.val, &out.test};
  const int counts[] = {spec.n_train, spec.n_val, spec.n_test};
  for (std::uint64_t s = 0; s < 3; ++s) {
    splits[s]->reserve(static_cast<std::size_t>(counts[s]) * spec.num_domains);
    for (int d = 1; d <= spec.num_domains; ++d) {
      const auto seed =
          derive_seed(spec.seed, {kSampleStream, s, static_cast<std::uint64_t>(d)});
      for (auto& x : ild_sample(gt, d, counts[s], seed)) splits[s]->push_back({std::move(x), d});
    }
  }
  return out;
}

double oracle_counterfactual_error(const ILDModel& estimated, const ILDModel& gt,
                                   std::span<const DomainSample> test) {
  require(estimated.dim() == gt.dim() && estimated.num_domains() == gt.num_domains(),
          ErrorCode::DimensionMismatch, "oracle_counterfactual_error: model shapes differ");
  require(!test.empty(), ErrorCode::EmptyInput, "oracle_counterfactual_error: empty test set");
  const int n_domains = gt.num_domains();
  std::vector<double> per_domain(n_domains, 0.0);
  std::vector<int> counts(n_domains, 0);
  for (const auto& s : test) {
    gt.check_domain(s.d);
    require(s.x.size() == gt.dim(), ErrorCode::DimensionMismatch,
            "oracle_counterfactual_error: sample dimension mismatch");
    ++counts[s.d - 1];
    for (int d_prime = 1; d_prime <= n_domains; ++d_prime) {
      if (d_prime == s.d) continue;
      per_domain[s.d - 1] += (counterfactual(estimated, s.x, s.d, d_prime) -
                              counterfactual(gt, s.x, s.d, d_prime))
                                 .squaredNorm();
    }
  }
  double total = 0.0;
  for (int d = 0; d < n_domains; ++d) {
    if (counts[d] > 0) total += per_domain[d] / counts[d];
  }
  return 2.0 / (n_domains * (n_domains - 1.0)) * total;
}

}  // namespace ild
