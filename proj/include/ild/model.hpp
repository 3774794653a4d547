#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ild/mixing.hpp"
#include "ild/scm.hpp"
#include "ild/types.hpp"

namespace ild {

/// Invertible latent domain causal model: a shared mixing chain g and one
/// affine autoregressive SCM per domain, with N(0, I) exogenous noise.
class ILDModel {
 public:
  ILDModel(LayerChain g, std::vector<AffineSCM> scms);

  const LayerChain& g() const { return g_; }
  const std::vector<AffineSCM>& scms() const { return scms_; }
  int dim() const { return g_.dim(); }
  int num_domains() const { return static_cast<int>(scms_.size()); }

  /// SCM of the 1-based domain d; throws DomainOutOfRange.
  const AffineSCM& scm(int d) const;
  void check_domain(int d) const;

 private:
  LayerChain g_;
  std::vector<AffineSCM> scms_;
};

std::vector<Vec> ild_sample(const ILDModel& model, int d, int n, std::uint64_t seed);

/// log p(x | d) by change of variables through g^{-1} and f_d^{-1}.
double ild_log_likelihood(const ILDModel& model, const Vec& x, int d);

/// Mean negative log-likelihood over a sample list.
double mean_nll(const ILDModel& model, std::span<const DomainSample> samples);

/// x_{d -> d'} = g o f_{d'} o f_d^{-1} o g^{-1} (x).
Vec counterfactual(const ILDModel& model, const Vec& x, int d, int d_prime);

/// Monte-Carlo counterfactual pseudo-metric: RMSE between the two models'
/// counterfactuals, target domains drawn from the empirical label marginal.
double dc_distance(const ILDModel& a, const ILDModel& b,
                   std::span<const DomainSample> data, std::uint64_t seed);

struct EquivalenceResult {
  bool equivalent;
  double max_deviation;
};

EquivalenceResult check_counterfactual_equiv(const ILDModel& a, const ILDModel& b,
                                             std::span<const DomainSample> points,
                                             double tol);

/// Per-sample log-density comparison; a proxy for equality of the induced
/// domain distributions on the given probe points.
EquivalenceResult check_distribution_equiv(const ILDModel& a, const ILDModel& b,
                                           std::span<const DomainSample> points,
                                           double tol);

/// (g o h1^{-1}, {h1 o f_d o h2}).
ILDModel construct_equivalent(const ILDModel& model, const AffineSCM& h1,
                              const AffineSCM& h2);

struct ShiftMoments {
  /// Per-coordinate Monte-Carlo mean of [f_d(eps) - f_d'(eps)]_i^2.
  Vec mean;
  /// Standard error of each mean.
  Vec std_error;
};

/// Draws eps ~ N(0, I) and an ordered pair of distinct domains uniformly.
ShiftMoments mechanism_shift_moments(std::span<const AffineSCM> scms, int n_mc,
                                     std::uint64_t seed);

/// k * L_g^2 * max_i E[(f_d(eps) - f_d'(eps))_i^2].
double ground_truth_bound_term(const ILDModel& model, int n_mc, std::uint64_t seed);

}  // namespace ild
