#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ild/model.hpp"

namespace ild {

/// Can{k}: only the last k mechanisms may differ across domains.
/// Dense: every mechanism is domain-specific (parameter-identical to Can{m}).
struct ModelVariant {
  enum class Kind { Can, Dense };
  Kind kind = Kind::Dense;
  int k = 0;

  static ModelVariant can(int k) { return {Kind::Can, k}; }
  static ModelVariant dense() { return {Kind::Dense, 0}; }

  /// Number of trailing domain-specific rows for dimension m.
  int domain_rows(int m) const { return kind == Kind::Dense ? m : k; }
  std::string name() const;
};

/// Trainable ILD with the fixed shape g(z) = G LeakyReLU_{0.5}(z) + b_g and
/// f_d(eps) = (I - L_d)^{-1} diag(exp(log_s_d)) eps + b_d.
///
/// Parameters live in one flat vector. Rows of (L, log_s, b) before m - k are
/// stored once and shared by all domains; the trailing k rows have one slot
/// per domain. Layout: G (row-major), b_g, then for each row i and each slot
/// the block [L row i (i entries), log_s_i, b_i].
class TrainableILD {
 public:
  static constexpr double kSlope = 0.5;

  /// Identity parameters: G = I, b_g = 0, L = 0, log_s = 0, b = 0.
  TrainableILD(ModelVariant variant, int dim, int num_domains);

  /// G = I and b_g = 0; L and b drawn N(0, 0.1^2); log_s = 0.
  static TrainableILD initialized(ModelVariant variant, int dim, int num_domains,
                                  std::uint64_t seed);

  const ModelVariant& variant() const { return variant_; }
  int dim() const { return dim_; }
  int num_domains() const { return num_domains_; }
  int size() const { return static_cast<int>(theta_.size()); }

  const Vec& theta() const { return theta_; }
  void set_theta(const Vec& theta);

  bool shared_row(int row) const { return row < dim_ - variant_.domain_rows(dim_); }
  int g_offset(int r, int c) const { return r * dim_ + c; }
  int bg_offset(int r) const { return dim_ * dim_ + r; }
  /// Offsets for 0-based row and 1-based domain; shared rows ignore d.
  int l_offset(int row, int d) const { return row_block(row, d); }
  int log_s_offset(int row, int d) const { return row_block(row, d) + row; }
  int bias_offset(int row, int d) const { return row_block(row, d) + row + 1; }
  /// True for parameters of g (G and b_g).
  bool is_g_param(int index) const { return index < dim_ * dim_ + dim_; }

  Mat G() const;
  Vec bg() const;
  Mat L(int d) const;
  Vec log_s(int d) const;
  Vec bias(int d) const;
  AffineSCM scm(int d) const;
  ILDModel materialize() const;

 private:
  int row_block(int row, int d) const;

  ModelVariant variant_;
  int dim_;
  int num_domains_;
  std::vector<int> row_start_;
  Vec theta_;
};

struct TrainConfig {
  double learning_rate_g = 1e-3;
  double learning_rate_f = 1e-3;
  double beta1 = 0.5;
  double beta2 = 0.999;
  int batch_size = 500;
  int iterations = 50000;
  int eval_every = 100;
  std::uint64_t seed = 0;

  void validate() const;
};

double nll_loss(const TrainableILD& params, std::span<const DomainSample> batch);

struct NllGradient {
  double loss;
  Vec grad;
};

/// Exact reverse-mode gradient of nll_loss. LeakyReLU uses slope 1 at 0.
NllGradient nll_gradient(const TrainableILD& params, std::span<const DomainSample> batch);

struct AdamState {
  Vec theta;
  Vec m;
  Vec v;
  std::int64_t t = 0;

  static AdamState start(const Vec& theta);
};

inline constexpr double kAdamEpsilon = 1e-8;

/// One bias-corrected Adam update; learning_rates holds one rate per parameter.
AdamState adam_step(const AdamState& state, const Vec& grad, const Vec& learning_rates,
                    const TrainConfig& config);

/// Per-parameter rates: learning_rate_g for G and b_g, learning_rate_f otherwise.
Vec group_learning_rates(const TrainableILD& params, const TrainConfig& config);

struct HistoryRecord {
  int iteration;
  double train_nll;
  double val_nll;
};

struct TrainResult {
  ILDModel best_model;
  TrainableILD best_params;
  int best_iteration;
  std::vector<HistoryRecord> history;
  AdamState optimizer;
};

/// Minibatch Adam; every eval_every iterations (and at 0) records the full
/// train and validation NLL and keeps the parameters with the lowest
/// validation NLL.
TrainResult train(const TrainableILD& init, std::span<const DomainSample> train_split,
                  std::span<const DomainSample> val_split, const TrainConfig& config);

}  // namespace ild
