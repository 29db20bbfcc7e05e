#include "igc/experiments.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "igc/compressors.hpp"
#include "igc/errors.hpp"
#include "igc/rng.hpp"

namespace igc {

double RhoEstimate::median() const {
  if (fractions.empty()) return 1.0;
  std::vector<double> sorted = fractions;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  return (n % 2 == 1) ? sorted[n / 2]
                      : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
}

double RhoEstimate::mean() const {
  if (fractions.empty()) return 1.0;
  double s = 0.0;
  for (double f : fractions) s += f;
  return s / static_cast<double>(fractions.size());
}

double RhoEstimate::standard_error() const {
  const std::size_t n = fractions.size();
  if (n < 2) return 0.0;
  const double m = mean();
  double ss = 0.0;
  for (double f : fractions) ss += (f - m) * (f - m);
  return std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
}

std::size_t probe_thread_count() {
  const char* env = std::getenv("IGC_THREADS");
  if (env == nullptr) return 1;
  const long v = std::strtol(env, nullptr, 10);
  return v > 0 ? static_cast<std::size_t>(v) : 1;
}

double restricted_minimum_gap(const QuadraticOracle& problem,
                              const Eigen::VectorXd& theta0,
                              const Projection& matrix, bool* singular) {
  const Eigen::Index big = static_cast<Eigen::Index>(matrix.big_dim());
  const Eigen::Index small = static_cast<Eigen::Index>(matrix.small_dim());
  if (singular != nullptr) *singular = false;

  // Materialize the subspace basis column by column (small d only).
  Eigen::MatrixXd basis(big, small);
  for (Eigen::Index j = 0; j < small; ++j) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(small);
    e[j] = 1.0;
    basis.col(j) = matrix.forward(e);
  }

  const Eigen::VectorXd& lambda = problem.spectrum();
  const Eigen::VectorXd grad0 =
      lambda.array() * (theta0 - problem.optimum()).array();
  const Eigen::MatrixXd hess =
      basis.transpose() * lambda.asDiagonal() * basis;
  const Eigen::VectorXd rhs = -basis.transpose() * grad0;

  Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
  Eigen::VectorXd coeffs;
  if (ldlt.info() == Eigen::Success && ldlt.isPositive() &&
      (hess * ldlt.solve(rhs) - rhs).norm() <=
          1e-8 * std::max(1.0, rhs.norm())) {
    coeffs = ldlt.solve(rhs);
  } else {
    if (singular != nullptr) *singular = true;
    coeffs = hess.completeOrthogonalDecomposition().solve(rhs);
  }
  return problem.exact_loss(theta0 + basis * coeffs);
}

RhoEstimate estimate_intrinsic_rho(const QuadraticOracle& problem,
                                   const Eigen::VectorXd& theta0,
                                   std::size_t small_dim, std::size_t trials,
                                   std::uint64_t seed,
                                   const ProjectionFactory& factory) {
  RhoEstimate est;
  est.fractions.assign(trials, 1.0);
  const double initial = problem.exact_loss(theta0);
  std::vector<unsigned char> flagged(trials, 0);

  if (small_dim == 0 || initial == 0.0) {
    // Empty subspace, or already at the optimum: fraction 1 by convention
    // (0/0 gap treated as no improvement possible).
    if (initial == 0.0) est.fractions.assign(trials, 0.0);
    return est;
  }

  const auto run_trial = [&](std::size_t trial) {
    const auto matrix = factory(derive_seed(seed, trial), theta0.size(),
                                small_dim);
    bool singular = false;
    const double gap =
        restricted_minimum_gap(problem, theta0, *matrix, &singular);
    est.fractions[trial] = gap / initial;
    flagged[trial] = singular ? 1 : 0;
  };

  const std::size_t workers = std::min(probe_thread_count(), trials);
  if (workers <= 1) {
    for (std::size_t i = 0; i < trials; ++i) run_trial(i);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < trials; i += workers) run_trial(i);
      });
    }
    for (auto& t : pool) t.join();
  }
  for (unsigned char f : flagged) est.flagged_singular += f;
  return est;
}

namespace {

void check_divergence(double loss, double initial, const char* who) {
  if (loss > 10.0 * initial && initial > 0.0) {
    throw StepSizeError(std::string(who) + ": loss diverged");
  }
}

}  // namespace

double probe_static(const QuadraticOracle& problem,
                    const Eigen::VectorXd& theta0, std::size_t small_dim,
                    std::size_t steps, double lr, std::uint64_t seed,
                    const ProjectionFactory& factory) {
  StaticServer server(seed, theta0, small_dim, factory);
  ClientState client;
  const double initial = problem.exact_loss(theta0);
  for (std::size_t t = 0; t < steps; ++t) {
    static_reconcile(client, server.matrix(), server.theta0(), server.sigma());
    Batch batch;
    batch.noise_seed = seeds::client_round(seed, 1, t, 0);
    Eigen::VectorXd grad;
    const double loss = problem.loss_and_grad(client.params, batch, grad);
    check_divergence(loss, initial, "probe_static");
    server.step({compress_gradient(server.matrix(), grad, 0)}, lr);
  }
  static_reconcile(client, server.matrix(), server.theta0(), server.sigma());
  return problem.exact_loss(client.params);
}

std::vector<double> probe_time_varying(const QuadraticOracle& problem,
                                       const Eigen::VectorXd& theta0,
                                       std::size_t small_dim,
                                       std::size_t epochs,
                                       std::size_t steps_per_epoch, double lr,
                                       std::uint64_t seed,
                                       const ProjectionFactory& factory) {
  TimeVaryingServer server(seed, theta0, small_dim, factory);
  ClientState client;
  const double initial = problem.exact_loss(theta0);
  std::vector<double> epoch_gaps;
  epoch_gaps.reserve(epochs);
  std::size_t step_index = 0;
  for (std::size_t e = 0; e < epochs; ++e) {
    for (std::size_t t = 0; t < steps_per_epoch; ++t, ++step_index) {
      tv_reconcile(client, server);
      Batch batch;
      batch.noise_seed = seeds::client_round(seed, 1, step_index, 0);
      Eigen::VectorXd grad;
      const double loss = problem.loss_and_grad(client.params, batch, grad);
      check_divergence(loss, initial, "probe_time_varying");
      server.step({compress_gradient(server.matrix(server.epoch()), grad,
                                     server.epoch())},
                  lr);
    }
    tv_reconcile(client, server);
    epoch_gaps.push_back(problem.exact_loss(client.params));
    if (e + 1 < epochs) server.advance_epoch();
  }
  return epoch_gaps;
}

double probe_ksubspace(const QuadraticOracle& problem,
                       const Eigen::VectorXd& theta0, std::size_t small_dim,
                       std::size_t num_subspaces, std::size_t steps, double lr,
                       std::size_t clients, std::uint64_t seed,
                       const ProjectionFactory& factory) {
  KSubspaceServer server(seed, theta0, small_dim, num_subspaces, factory);
  ClientState client;
  const double initial = problem.exact_loss(theta0);
  for (std::size_t t = 0; t < steps; ++t) {
    ksub_reconcile(client, server);
    std::vector<Sketch> sketches;
    sketches.reserve(clients);
    for (std::size_t c = 0; c < clients; ++c) {
      const std::uint64_t client_seed = seeds::client_round(seed, 1, t, c);
      Batch batch;
      batch.noise_seed = client_seed;
      Eigen::VectorXd grad;
      const double loss = problem.loss_and_grad(client.params, batch, grad);
      check_divergence(loss, initial, "probe_ksubspace");
      const std::uint32_t k = ksub_assign(client_seed, num_subspaces);
      sketches.push_back(compress_gradient(server.matrix(k), grad, k));
    }
    server.step(sketches, lr);
  }
  ksub_reconcile(client, server);
  return problem.exact_loss(client.params);
}

LinearFit linear_fit(const std::vector<double>& x,
                     const std::vector<double>& y) {
  const std::size_t n = std::min(x.size(), y.size());
  LinearFit fit;
  if (n < 2) return fit;
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n;
  const double my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = (syy > 0) ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

}  // namespace igc
