#include "igc/oracle.hpp"

#include <cmath>
#include <stdexcept>

#include "igc/projection.hpp"
#include "igc/rng.hpp"

namespace igc {

// --------------------------------------------------------------------------
// Quadratic

QuadraticOracle::QuadraticOracle(Eigen::VectorXd spectrum,
                                 Eigen::VectorXd optimum,
                                 double noise_variance)
    : spectrum_(std::move(spectrum)),
      optimum_(std::move(optimum)),
      noise_variance_(noise_variance) {
  if (spectrum_.size() != optimum_.size()) {
    throw std::invalid_argument("QuadraticOracle: spectrum/optimum mismatch");
  }
  if ((spectrum_.array() < 0).any()) {
    throw std::invalid_argument("QuadraticOracle: spectrum must be >= 0");
  }
}

double QuadraticOracle::exact_loss(const Eigen::VectorXd& theta) const {
  const Eigen::VectorXd delta = theta - optimum_;
  return 0.5 * (spectrum_.array() * delta.array().square()).sum();
}

double QuadraticOracle::loss_and_grad(const Eigen::VectorXd& theta,
                                      const Batch& batch,
                                      Eigen::VectorXd& grad) const {
  grad = spectrum_.array() * (theta - optimum_).array();
  if (noise_variance_ > 0.0) {
    DetRng rng(derive_seed(batch.noise_seed, seeds::kNoiseTag));
    const double sd = std::sqrt(noise_variance_);
    for (Eigen::Index i = 0; i < grad.size(); ++i) {
      grad[i] += sd * rng.next_gaussian();
    }
  }
  return exact_loss(theta);
}

double QuadraticOracle::evaluate(const Eigen::VectorXd& theta) const {
  return exact_loss(theta);
}

// --------------------------------------------------------------------------
// Logistic regression

namespace {

// Softmax cross-entropy over a batch. theta = [W row-major (C x F), b (C)].
// Returns mean loss; accumulates the mean gradient into grad.
double softmax_xent(const Dataset& data, std::span<const std::size_t> idx,
                    const Eigen::VectorXd& theta, int classes,
                    Eigen::Index features, Eigen::VectorXd* grad) {
  const auto W = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic,
                                                Eigen::Dynamic, Eigen::RowMajor>>(
      theta.data(), classes, features);
  const auto b =
      Eigen::Map<const Eigen::VectorXd>(theta.data() + classes * features,
                                        classes);
  double loss = 0.0;
  const double inv_n = 1.0 / static_cast<double>(idx.size());
  for (std::size_t i : idx) {
    const Eigen::VectorXd x = data.features.row(i).transpose();
    Eigen::VectorXd logits = W * x + b;
    const double m = logits.maxCoeff();
    Eigen::VectorXd p = (logits.array() - m).exp();
    const double z = p.sum();
    p /= z;
    const int y = data.labels[static_cast<Eigen::Index>(i)];
    loss -= inv_n * std::log(std::max(p[y], 1e-300));
    if (grad != nullptr) {
      Eigen::VectorXd resid = p;
      resid[y] -= 1.0;
      auto gW = Eigen::Map<
          Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
          grad->data(), classes, features);
      auto gb = Eigen::Map<Eigen::VectorXd>(grad->data() + classes * features,
                                            classes);
      gW.noalias() += inv_n * resid * x.transpose();
      gb += inv_n * resid;
    }
  }
  return loss;
}

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  return idx;
}

double accuracy(const Dataset& data, const Eigen::VectorXd& theta, int classes,
                Eigen::Index features) {
  const auto W = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic,
                                                Eigen::Dynamic, Eigen::RowMajor>>(
      theta.data(), classes, features);
  const auto b =
      Eigen::Map<const Eigen::VectorXd>(theta.data() + classes * features,
                                        classes);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    Eigen::VectorXd logits = W * data.features.row(i).transpose() + b;
    Eigen::Index best;
    logits.maxCoeff(&best);
    if (best == data.labels[static_cast<Eigen::Index>(i)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

}  // namespace

LogisticOracle::LogisticOracle(Dataset train,
                               std::shared_ptr<const Dataset> eval)
    : train_(std::move(train)), eval_(std::move(eval)) {}

std::size_t LogisticOracle::dim() const {
  return static_cast<std::size_t>(train_.num_classes) *
         (train_.num_features() + 1);
}

double LogisticOracle::loss_and_grad(const Eigen::VectorXd& theta,
                                     const Batch& batch,
                                     Eigen::VectorXd& grad) const {
  if (static_cast<std::size_t>(theta.size()) != dim()) {
    throw std::invalid_argument("LogisticOracle: bad theta length");
  }
  grad = Eigen::VectorXd::Zero(theta.size());
  const auto idx =
      batch.indices.empty() ? all_indices(train_.size()) : batch.indices;
  return softmax_xent(train_, idx, theta, train_.num_classes,
                      static_cast<Eigen::Index>(train_.num_features()), &grad);
}

double LogisticOracle::evaluate(const Eigen::VectorXd& theta) const {
  const Dataset& d = eval_ ? *eval_ : train_;
  return accuracy(d, theta, train_.num_classes,
                  static_cast<Eigen::Index>(train_.num_features()));
}

// --------------------------------------------------------------------------
// MLP

namespace {

struct MlpViews {
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                 Eigen::RowMajor>>
      w1, w2;
  Eigen::Map<const Eigen::VectorXd> b1, b2;
};

MlpViews mlp_views(const Eigen::VectorXd& theta, Eigen::Index features,
                   Eigen::Index hidden, Eigen::Index classes) {
  const double* p = theta.data();
  return MlpViews{
      {p, hidden, features},
      {p + hidden * features + hidden, classes, hidden},
      {p + hidden * features, hidden},
      {p + hidden * features + hidden + classes * hidden, classes}};
}

}  // namespace

MlpOracle::MlpOracle(Dataset train, std::size_t hidden,
                     std::shared_ptr<const Dataset> eval)
    : train_(std::move(train)), hidden_(hidden), eval_(std::move(eval)) {}

std::size_t MlpOracle::dim() const {
  const std::size_t f = train_.num_features();
  const std::size_t c = static_cast<std::size_t>(train_.num_classes);
  return hidden_ * f + hidden_ + c * hidden_ + c;
}

double MlpOracle::loss_and_grad(const Eigen::VectorXd& theta,
                                const Batch& batch,
                                Eigen::VectorXd& grad) const {
  if (static_cast<std::size_t>(theta.size()) != dim()) {
    throw std::invalid_argument("MlpOracle: bad theta length");
  }
  const Eigen::Index f = static_cast<Eigen::Index>(train_.num_features());
  const Eigen::Index h = static_cast<Eigen::Index>(hidden_);
  const Eigen::Index c = train_.num_classes;
  const MlpViews v = mlp_views(theta, f, h, c);

  grad = Eigen::VectorXd::Zero(theta.size());
  double* gp = grad.data();
  auto gW1 = Eigen::Map<
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      gp, h, f);
  auto gb1 = Eigen::Map<Eigen::VectorXd>(gp + h * f, h);
  auto gW2 = Eigen::Map<
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      gp + h * f + h, c, h);
  auto gb2 = Eigen::Map<Eigen::VectorXd>(gp + h * f + h + c * h, c);

  const auto idx =
      batch.indices.empty() ? all_indices(train_.size()) : batch.indices;
  const double inv_n = 1.0 / static_cast<double>(idx.size());
  double loss = 0.0;
  for (std::size_t i : idx) {
    const Eigen::VectorXd x = train_.features.row(i).transpose();
    const Eigen::VectorXd pre = v.w1 * x + v.b1;
    const Eigen::VectorXd act = pre.array().tanh();
    Eigen::VectorXd logits = v.w2 * act + v.b2;
    const double m = logits.maxCoeff();
    Eigen::VectorXd p = (logits.array() - m).exp();
    p /= p.sum();
    const int y = train_.labels[static_cast<Eigen::Index>(i)];
    loss -= inv_n * std::log(std::max(p[y], 1e-300));

    Eigen::VectorXd resid = p;
    resid[y] -= 1.0;
    gW2.noalias() += inv_n * resid * act.transpose();
    gb2 += inv_n * resid;
    const Eigen::VectorXd back =
        (v.w2.transpose() * resid).array() * (1.0 - act.array().square());
    gW1.noalias() += inv_n * back * x.transpose();
    gb1 += inv_n * back;
  }
  return loss;
}

double MlpOracle::evaluate(const Eigen::VectorXd& theta) const {
  const Dataset& data = eval_ ? *eval_ : train_;
  const Eigen::Index f = static_cast<Eigen::Index>(train_.num_features());
  const Eigen::Index h = static_cast<Eigen::Index>(hidden_);
  const Eigen::Index c = train_.num_classes;
  const MlpViews v = mlp_views(theta, f, h, c);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Eigen::VectorXd x = data.features.row(i).transpose();
    const Eigen::VectorXd act = (v.w1 * x + v.b1).array().tanh();
    Eigen::VectorXd logits = v.w2 * act + v.b2;
    Eigen::Index best;
    logits.maxCoeff(&best);
    if (best == data.labels[static_cast<Eigen::Index>(i)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

Eigen::VectorXd random_init(std::size_t dim, std::uint64_t seed,
                            double stddev) {
  DetRng rng(derive_seed(seed, seeds::kInitTag));
  Eigen::VectorXd theta(static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    theta[i] = stddev * rng.next_gaussian();
  }
  return theta;
}

}  // namespace igc
