#include "ild/train.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "ild/error.hpp"
#include "ild/rng.hpp"

namespace ild {

namespace {

constexpr double kMinAbsDet = 1e-12;
constexpr int kMaxStepHalvings = 60;
constexpr std::uint64_t kInitStream = 0x1a17;
constexpr std::uint64_t kBatchStream = 0xba7c;

struct DomainParams {
  Mat L;
  Vec S;
  Vec b;
  double log_det;
};

// Shared kernel for the loss and its gradient. Works directly on the flat
// parameter vector so the training loop avoids materializing models.
class NllKernel {
 public:
  explicit NllKernel(const TrainableILD& params) : p_(params), m_(params.dim()) {
    lu_.compute(params.G());
    const double det = lu_.determinant();
    if (!(std::abs(det) > kMinAbsDet)) {
      fail(ErrorCode::SingularMatrix, "nll: |det G| is not above 1e-12");
    }
    log_abs_det_ = lu_.matrixLU().diagonal().cwiseAbs().array().log().sum();
    W_ = lu_.inverse();
    bg_ = params.bg();
    for (int d = 1; d <= params.num_domains(); ++d) {
      const Vec log_s = params.log_s(d);
      domains_.push_back({params.L(d), log_s.array().exp(), params.bias(d), log_s.sum()});
    }
    u_.resize(m_);
    z_.resize(m_);
    r_.resize(m_);
    eps_.resize(m_);
    a_.resize(m_);
    c_.resize(m_);
    e_.resize(m_);
    xc_.resize(m_);
  }

  // Returns the summed loss; accumulates into grad when non-null.
  double run(std::span<const DomainSample> batch, Vec* grad) {
    const double slope = TrainableILD::kSlope;
    const double log_slope = std::log(slope);
    const double constant = 0.5 * m_ * std::log(2.0 * std::numbers::pi) + log_abs_det_;
    Mat sum_eu;
    Vec sum_e;
    if (grad) {
      sum_eu = Mat::Zero(m_, m_);
      sum_e = Vec::Zero(m_);
    }
    double total = 0.0;
    for (const auto& s : batch) {
      if (s.x.size() != m_) fail(ErrorCode::DimensionMismatch, "nll: sample dimension mismatch");
      if (s.d < 1 || s.d > p_.num_domains()) fail(ErrorCode::DomainOutOfRange, "nll: bad domain");
      const DomainParams& f = domains_[s.d - 1];
      xc_ = s.x - bg_;
      u_.noalias() = W_ * xc_;
      int negatives = 0;
      for (int i = 0; i < m_; ++i) {
        if (u_[i] < 0.0) {
          z_[i] = u_[i] / slope;
          ++negatives;
        } else {
          z_[i] = u_[i];
        }
      }
      r_ = z_ - f.b;
      double sq = 0.0;
      for (int i = 0; i < m_; ++i) {
        double v = r_[i];
        for (int j = 0; j < i; ++j) v -= f.L(i, j) * r_[j];
        eps_[i] = v / f.S[i];
        sq += eps_[i] * eps_[i];
      }
      // log|det J_g| = log|det G| + negatives * log(slope); the SCM adds sum log S.
      total += constant + 0.5 * sq + negatives * log_slope + f.log_det;
      if (!grad) continue;

      Vec& g = *grad;
      for (int i = 0; i < m_; ++i) {
        a_[i] = eps_[i] / f.S[i];
        g[p_.log_s_offset(i, s.d)] += 1.0 - eps_[i] * eps_[i];
        const int l_off = p_.l_offset(i, s.d);
        for (int j = 0; j < i; ++j) g[l_off + j] -= a_[i] * r_[j];
      }
      for (int j = 0; j < m_; ++j) {
        double acc = a_[j];
        for (int i = j + 1; i < m_; ++i) acc -= f.L(i, j) * a_[i];
        c_[j] = acc;
        g[p_.bias_offset(j, s.d)] -= acc;
        e_[j] = u_[j] < 0.0 ? acc / slope : acc;
      }
      sum_eu.noalias() += e_ * u_.transpose();
      sum_e += e_;
    }
    if (grad) {
      const double n = static_cast<double>(batch.size());
      const Mat Wt = W_.transpose();
      const Mat grad_G = n * Wt - Wt * sum_eu;
      const Vec grad_bg = -(Wt * sum_e);
      Vec& g = *grad;
      for (int r = 0; r < m_; ++r) {
        for (int c = 0; c < m_; ++c) g[p_.g_offset(r, c)] += grad_G(r, c);
        g[p_.bg_offset(r)] += grad_bg[r];
      }
    }
    return total;
  }

 private:
  const TrainableILD& p_;
  int m_;
  Eigen::PartialPivLU<Mat> lu_;
  double log_abs_det_ = 0.0;
  Mat W_;
  Vec bg_;
  std::vector<DomainParams> domains_;
  Vec u_, z_, r_, eps_, a_, c_, e_, xc_;
};

double fast_mean_nll(const TrainableILD& params, std::span<const DomainSample> samples) {
  NllKernel kernel(params);
  return kernel.run(samples, nullptr) / static_cast<double>(samples.size());
}

double abs_det(const Mat& G) { return std::abs(G.partialPivLu().determinant()); }

}  // namespace

std::string ModelVariant::name() const {
  return kind == Kind::Dense ? "dense" : "can";
}

TrainableILD::TrainableILD(ModelVariant variant, int dim, int num_domains)
    : variant_(variant), dim_(dim), num_domains_(num_domains) {
  require(dim > 0, ErrorCode::InvalidArgument, "TrainableILD: dimension must be positive");
  require(num_domains >= 2, ErrorCode::InvalidArgument, "TrainableILD: need at least two domains");
  if (variant.kind == ModelVariant::Kind::Can) {
    require(variant.k >= 0 && variant.k <= dim, ErrorCode::InvalidArgument,
            "TrainableILD: Can{k} requires 0 <= k <= m");
  }
  int offset = dim * dim + dim;
  row_start_.resize(dim);
  for (int i = 0; i < dim; ++i) {
    row_start_[i] = offset;
    offset += (shared_row(i) ? 1 : num_domains) * (i + 2);
  }
  theta_ = Vec::Zero(offset);
  for (int i = 0; i < dim; ++i) theta_[g_offset(i, i)] = 1.0;
}

TrainableILD TrainableILD::initialized(ModelVariant variant, int dim, int num_domains,
                                       std::uint64_t seed) {
  TrainableILD p(variant, dim, num_domains);
  Rng rng(derive_seed(seed, {kInitStream}));
  // Walk the SCM blocks in storage order so Dense and Can{m} draw identically.
  for (int i = 0; i < dim; ++i) {
    const int slots = p.shared_row(i) ? 1 : num_domains;
    for (int s = 0; s < slots; ++s) {
      const int base = p.row_start_[i] + s * (i + 2);
      for (int j = 0; j < i; ++j) p.theta_[base + j] = 0.1 * rng.normal();
      p.theta_[base + i] = 0.0;
      p.theta_[base + i + 1] = 0.1 * rng.normal();
    }
  }
  return p;
}

void TrainableILD::set_theta(const Vec& theta) {
  require(theta.size() == theta_.size(), ErrorCode::DimensionMismatch,
          "TrainableILD: parameter vector size mismatch");
  theta_ = theta;
}

int TrainableILD::row_block(int row, int d) const {
  if (shared_row(row)) return row_start_[row];
  require(d >= 1 && d <= num_domains_, ErrorCode::DomainOutOfRange, "TrainableILD: bad domain");
  return row_start_[row] + (d - 1) * (row + 2);
}

Mat TrainableILD::G() const {
  Mat G(dim_, dim_);
  for (int r = 0; r < dim_; ++r) {
    for (int c = 0; c < dim_; ++c) G(r, c) = theta_[g_offset(r, c)];
  }
  return G;
}

Vec TrainableILD::bg() const { return theta_.segment(dim_ * dim_, dim_); }

Mat TrainableILD::L(int d) const {
  Mat L = Mat::Zero(dim_, dim_);
  for (int i = 0; i < dim_; ++i) {
    const int off = l_offset(i, d);
    for (int j = 0; j < i; ++j) L(i, j) = theta_[off + j];
  }
  return L;
}

Vec TrainableILD::log_s(int d) const {
  Vec out(dim_);
  for (int i = 0; i < dim_; ++i) out[i] = theta_[log_s_offset(i, d)];
  return out;
}

Vec TrainableILD::bias(int d) const {
  Vec out(dim_);
  for (int i = 0; i < dim_; ++i) out[i] = theta_[bias_offset(i, d)];
  return out;
}

AffineSCM TrainableILD::scm(int d) const {
  return AffineSCM(L(d), log_s(d).array().exp(), bias(d));
}

ILDModel TrainableILD::materialize() const {
  std::vector<Layer> layers{LeakyRelu(kSlope), AffineDense(G(), bg())};
  std::vector<AffineSCM> scms;
  for (int d = 1; d <= num_domains_; ++d) scms.push_back(scm(d));
  return ILDModel(LayerChain(dim_, std::move(layers)), std::move(scms));
}

void TrainConfig::validate() const {
  require(learning_rate_g > 0 && learning_rate_f > 0, ErrorCode::InvalidArgument,
          "TrainConfig: learning rates must be positive");
  require(beta1 > 0 && beta1 < 1 && beta2 > 0 && beta2 < 1, ErrorCode::InvalidArgument,
          "TrainConfig: beta1 and beta2 must lie in (0, 1)");
  require(batch_size > 0 && eval_every > 0, ErrorCode::InvalidArgument,
          "TrainConfig: batch_size and eval_every must be positive");
  require(iterations >= 0, ErrorCode::InvalidArgument, "TrainConfig: negative iterations");
}

double nll_loss(const TrainableILD& params, std::span<const DomainSample> batch) {
  require(!batch.empty(), ErrorCode::EmptyInput, "nll_loss: empty batch");
  // The log p(d) term is parameter-free and omitted.
  return mean_nll(params.materialize(), batch);
}

NllGradient nll_gradient(const TrainableILD& params, std::span<const DomainSample> batch) {
  require(!batch.empty(), ErrorCode::EmptyInput, "nll_gradient: empty batch");
  NllKernel kernel(params);
  Vec grad = Vec::Zero(params.size());
  const double total = kernel.run(batch, &grad);
  const double n = static_cast<double>(batch.size());
  return {total / n, grad / n};
}

AdamState AdamState::start(const Vec& theta) {
  return {theta, Vec::Zero(theta.size()), Vec::Zero(theta.size()), 0};
}

AdamState adam_step(const AdamState& state, const Vec& grad, const Vec& learning_rates,
                    const TrainConfig& config) {
  require(grad.size() == state.theta.size() && learning_rates.size() == state.theta.size() &&
              state.m.size() == state.theta.size() && state.v.size() == state.theta.size(),
          ErrorCode::DimensionMismatch, "adam_step: shape mismatch");
  AdamState next;
  next.t = state.t + 1;
  next.m = config.beta1 * state.m + (1.0 - config.beta1) * grad;
  next.v = config.beta2 * state.v + (1.0 - config.beta2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(next.t));
  const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(next.t));
  const Eigen::ArrayXd m_hat = next.m.array() / c1;
  const Eigen::ArrayXd v_hat = next.v.array() / c2;
  next.theta = state.theta.array() - learning_rates.array() * m_hat / (v_hat.sqrt() + kAdamEpsilon);
  return next;
}

Vec group_learning_rates(const TrainableILD& params, const TrainConfig& config) {
  Vec rates(params.size());
  for (int i = 0; i < params.size(); ++i) {
    rates[i] = params.is_g_param(i) ? config.learning_rate_g : config.learning_rate_f;
  }
  return rates;
}

TrainResult train(const TrainableILD& init, std::span<const DomainSample> train_split,
                  std::span<const DomainSample> val_split, const TrainConfig& config) {
  config.validate();
  require(!train_split.empty(), ErrorCode::EmptyInput, "train: empty training split");
  require(!val_split.empty(), ErrorCode::EmptyInput, "train: empty validation split");

  TrainableILD params = init;
  AdamState state = AdamState::start(params.theta());
  const Vec rates = group_learning_rates(params, config);
  Rng rng(derive_seed(config.seed, {kBatchStream}));

  std::vector<HistoryRecord> history;
  TrainableILD best = params;
  int best_iteration = 0;
  double best_val = std::numeric_limits<double>::infinity();
  auto record = [&](int iteration) {
    const double train_nll = fast_mean_nll(params, train_split);
    const double val_nll = fast_mean_nll(params, val_split);
    history.push_back({iteration, train_nll, val_nll});
    if (val_nll < best_val) {
      best_val = val_nll;
      best = params;
      best_iteration = iteration;
    }
  };
  record(0);

  const int batch_size = config.batch_size;
  Samples batch(batch_size);
  for (int it = 1; it <= config.iterations; ++it) {
    for (int i = 0; i < batch_size; ++i) {
      const DomainSample& s = train_split[rng.index(train_split.size())];
      batch[i].x = s.x;
      batch[i].d = s.d;
    }
    const Vec grad = nll_gradient(params, batch).grad;

    // Reject steps that make G (numerically) singular, halving the rate.
    double scale = 1.0;
    AdamState next = adam_step(state, grad, rates, config);
    for (int attempt = 0; attempt < kMaxStepHalvings; ++attempt) {
      params.set_theta(next.theta);
      if (abs_det(params.G()) > kMinAbsDet && next.theta.allFinite()) break;
      scale *= 0.5;
      next = adam_step(state, grad, rates * scale, config);
    }
    params.set_theta(next.theta);
    require(abs_det(params.G()) > kMinAbsDet, ErrorCode::SingularMatrix,
            "train: could not keep G invertible");
    state = std::move(next);

    if (it % config.eval_every == 0) record(it);
  }

  ILDModel best_model = best.materialize();
  return {std::move(best_model), std::move(best), best_iteration, std::move(history),
          std::move(state)};
}

}  // namespace ild
