#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ild/model.hpp"

namespace ild {

struct GroundTruthSpec {
  int dim = 6;
  int num_domains = 3;
  /// 1-based intervened indices I*.
  std::vector<int> intervention;
  int n_train = 100000;
  int n_val = 1000;
  int n_test = 1000;
  std::uint64_t seed = 0;

  void validate() const;
};

struct MultiDomainDataset {
  Samples train;
  Samples val;
  Samples test;
  GroundTruthSpec spec;
  std::optional<ILDModel> generator;
};

inline constexpr int kCalibrationSamples = 10000;
inline constexpr int kMaxGenerationAttempts = 100;

/// Random ground-truth ILD whose intervention set is exactly I*.
///
/// Shared strictly-lower L with N(0,1) entries; rows in I* redrawn per domain;
/// S = 1; each domain shifts the exogenous input of the intervened mechanisms
/// by a scalar b_d ~ U(-2 sqrt(m/|I*|), 2 sqrt(m/|I*|)). The mixing chain is
/// [LeakyReLU(0.5), standardization, G*] with |det G*| = 1.
ILDModel generate_ground_truth(const GroundTruthSpec& spec);

MultiDomainDataset sample_dataset(const ILDModel& gt, const GroundTruthSpec& spec);

/// 2 / (N_d (N_d - 1)) * sum over ordered pairs d != d' of the per-domain mean
/// squared distance between estimated and ground-truth counterfactuals.
double oracle_counterfactual_error(const ILDModel& estimated, const ILDModel& gt,
                                   std::span<const DomainSample> test);

}  // namespace ild
