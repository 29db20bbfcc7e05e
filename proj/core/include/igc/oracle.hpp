#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "igc/data.hpp"

namespace igc {

// What a single stochastic gradient is computed on: a set of example indices
// for data-backed models, or a noise seed for synthetic oracles that emulate
// stochasticity with additive gradient noise.
struct Batch {
  std::vector<std::size_t> indices;
  std::uint64_t noise_seed = 0;
};

// A pluggable model: exact loss and gradient for parameters theta and a
// batch. Oracles are pure; concurrent evaluation on different batches is
// fine.
class GradientOracle {
 public:
  virtual ~GradientOracle() = default;
  virtual std::size_t dim() const = 0;
  virtual double loss_and_grad(const Eigen::VectorXd& theta, const Batch& batch,
                               Eigen::VectorXd& grad) const = 0;
  // Held-out evaluation metric (accuracy for classifiers, loss otherwise).
  virtual double evaluate(const Eigen::VectorXd& theta) const = 0;
  virtual std::size_t num_examples() const { return 0; }
};

// g(theta) = 1/2 sum_i lambda_i (theta_i - theta*_i)^2, exact gradient
// lambda .* (theta - theta*), plus optional isotropic Gaussian gradient
// noise of the configured variance drawn from the batch's noise seed.
class QuadraticOracle final : public GradientOracle {
 public:
  QuadraticOracle(Eigen::VectorXd spectrum, Eigen::VectorXd optimum,
                  double noise_variance = 0.0);

  std::size_t dim() const override {
    return static_cast<std::size_t>(spectrum_.size());
  }
  double loss_and_grad(const Eigen::VectorXd& theta, const Batch& batch,
                       Eigen::VectorXd& grad) const override;
  double evaluate(const Eigen::VectorXd& theta) const override;
  double exact_loss(const Eigen::VectorXd& theta) const;

  const Eigen::VectorXd& spectrum() const { return spectrum_; }
  const Eigen::VectorXd& optimum() const { return optimum_; }

 private:
  Eigen::VectorXd spectrum_;
  Eigen::VectorXd optimum_;
  double noise_variance_;
};

// Multinomial logistic regression with softmax cross-entropy. Parameter
// layout: class-major weight matrix followed by biases. evaluate() returns
// accuracy on the eval split (train split if none given).
class LogisticOracle final : public GradientOracle {
 public:
  explicit LogisticOracle(Dataset train,
                          std::shared_ptr<const Dataset> eval = nullptr);

  std::size_t dim() const override;
  double loss_and_grad(const Eigen::VectorXd& theta, const Batch& batch,
                       Eigen::VectorXd& grad) const override;
  double evaluate(const Eigen::VectorXd& theta) const override;
  std::size_t num_examples() const override { return train_.size(); }
  const Dataset& train() const { return train_; }

 private:
  Dataset train_;
  std::shared_ptr<const Dataset> eval_;
};

// One-hidden-layer tanh MLP with softmax output, exact backprop gradient
// flattened into R^D.
class MlpOracle final : public GradientOracle {
 public:
  MlpOracle(Dataset train, std::size_t hidden,
            std::shared_ptr<const Dataset> eval = nullptr);

  std::size_t dim() const override;
  double loss_and_grad(const Eigen::VectorXd& theta, const Batch& batch,
                       Eigen::VectorXd& grad) const override;
  double evaluate(const Eigen::VectorXd& theta) const override;
  std::size_t num_examples() const override { return train_.size(); }
  std::size_t hidden() const { return hidden_; }

 private:
  Dataset train_;
  std::size_t hidden_;
  std::shared_ptr<const Dataset> eval_;
};

// Seeded random initialization scaled for the given oracle dimension.
Eigen::VectorXd random_init(std::size_t dim, std::uint64_t seed,
                            double stddev = 0.1);

}  // namespace igc
