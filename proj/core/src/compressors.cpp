#include "igc/compressors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "igc/dense_projection.hpp"
#include "igc/errors.hpp"

namespace igc {

const ProjectionFactory& fastfood_default() {
  static const ProjectionFactory factory = fastfood_factory();
  return factory;
}

Sketch compress_gradient(const Projection& matrix, const Eigen::VectorXd& grad,
                         std::uint32_t tag) {
  if (!grad.allFinite()) {
    throw PoisonedGradientError("compress_gradient: non-finite gradient");
  }
  Sketch s;
  s.payload = matrix.adjoint(grad).cast<float>();
  s.tag = tag;
  return s;
}

namespace {
// Fixed-order mean of payloads, accumulated in doubles.
Eigen::VectorXd mean_payload(const std::vector<Sketch>& sketches,
                             Eigen::Index d) {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(d);
  for (const Sketch& s : sketches) {
    if (s.payload.size() != d) {
      throw ProtocolError("sketch payload length mismatch");
    }
    sum += s.payload.cast<double>();
  }
  return sum / static_cast<double>(sketches.size());
}
}  // namespace

// --------------------------------------------------------------------------
// Static

StaticServer::StaticServer(std::uint64_t master_seed, Eigen::VectorXd theta0,
                           std::size_t small_dim,
                           const ProjectionFactory& factory)
    : matrix_(factory(seeds::subspace(master_seed, 0), theta0.size(),
                      small_dim)),
      theta0_(std::move(theta0)),
      sigma_(Eigen::VectorXd::Zero(small_dim)) {}

void StaticServer::step(const std::vector<Sketch>& sketches, double lr) {
  if (sketches.empty()) {
    throw ProtocolError("StaticServer::step: empty round");
  }
  for (const Sketch& s : sketches) {
    if (s.tag != 0) throw ProtocolError("StaticServer::step: non-static tag");
  }
  sigma_ -= lr * mean_payload(sketches, sigma_.size());
  ++steps_;
}

Eigen::VectorXd StaticServer::parameters() const {
  return theta0_ + matrix_->forward(sigma_);
}

std::size_t static_reconcile(ClientState& client, const Projection& matrix,
                             const Eigen::VectorXd& theta0,
                             const Eigen::VectorXd& sigma) {
  client.params = theta0 + matrix.forward(sigma);
  return static_cast<std::size_t>(sigma.size());
}

// --------------------------------------------------------------------------
// K-subspace

KSubspaceServer::KSubspaceServer(std::uint64_t master_seed,
                                 Eigen::VectorXd theta0, std::size_t small_dim,
                                 std::size_t num_subspaces,
                                 const ProjectionFactory& factory)
    : theta0_(std::move(theta0)) {
  if (num_subspaces == 0) {
    throw ConfigError("KSubspaceServer: K must be positive");
  }
  matrices_.reserve(num_subspaces);
  for (std::size_t k = 0; k < num_subspaces; ++k) {
    matrices_.push_back(
        factory(seeds::subspace(master_seed, k), theta0_.size(), small_dim));
    sigmas_.emplace_back(Eigen::VectorXd::Zero(small_dim));
  }
}

void KSubspaceServer::step(const std::vector<Sketch>& sketches, double lr) {
  if (sketches.empty()) {
    throw ProtocolError("KSubspaceServer::step: empty round");
  }
  const double w = static_cast<double>(sketches.size());
  std::vector<Eigen::VectorXd> bucket_sums(
      matrices_.size(), Eigen::VectorXd::Zero(sigmas_[0].size()));
  for (const Sketch& s : sketches) {
    if (s.tag >= matrices_.size()) {
      throw ProtocolError("KSubspaceServer::step: subspace tag out of range");
    }
    if (s.payload.size() != sigmas_[0].size()) {
      throw ProtocolError("sketch payload length mismatch");
    }
    bucket_sums[s.tag] += s.payload.cast<double>();
  }
  // Same rounding as the static server's mean: divide the sum by W first.
  for (std::size_t k = 0; k < sigmas_.size(); ++k) {
    sigmas_[k] -= lr * (bucket_sums[k] / w);
  }
}

Eigen::VectorXd KSubspaceServer::parameters() const {
  Eigen::VectorXd theta = theta0_;
  for (std::size_t k = 0; k < matrices_.size(); ++k) {
    theta += matrices_[k]->forward(sigmas_[k]);
  }
  return theta;
}

std::uint32_t ksub_assign(std::uint64_t client_round_seed, std::size_t K) {
  if (K == 0) throw ConfigError("ksub_assign: K must be positive");
  DetRng rng(derive_seed(client_round_seed, 0x4b504943ULL));  // "KPIC"
  return static_cast<std::uint32_t>(rng.next_below(K));
}

std::size_t ksub_reconcile(ClientState& client, const KSubspaceServer& server) {
  client.params = server.parameters();
  return server.num_subspaces() *
         static_cast<std::size_t>(server.sigma(0).size());
}

// --------------------------------------------------------------------------
// Time-varying

TimeVaryingServer::TimeVaryingServer(std::uint64_t master_seed,
                                     Eigen::VectorXd theta0,
                                     std::size_t small_dim,
                                     const ProjectionFactory& factory)
    : master_seed_(master_seed),
      small_dim_(small_dim),
      factory_(factory),
      theta0_(std::move(theta0)),
      sigma_current_(Eigen::VectorXd::Zero(small_dim)) {
  matrices_.push_back(
      factory_(seeds::epoch(master_seed_, 1), theta0_.size(), small_dim_));
}

void TimeVaryingServer::step(const std::vector<Sketch>& sketches, double lr) {
  if (sketches.empty()) {
    throw ProtocolError("TimeVaryingServer::step: empty round");
  }
  for (const Sketch& s : sketches) {
    if (s.tag != epoch_) {
      throw ProtocolError("TimeVaryingServer::step: sketch from wrong epoch");
    }
  }
  sigma_current_ -= lr * mean_payload(sketches, sigma_current_.size());
}

void TimeVaryingServer::advance_epoch() {
  finals_.push_back(sigma_current_);
  ++epoch_;
  sigma_current_.setZero();
  matrices_.push_back(factory_(seeds::epoch(master_seed_, epoch_),
                               theta0_.size(), small_dim_));
}

const Eigen::VectorXd& TimeVaryingServer::sigma_final(std::uint32_t e) const {
  if (e == 0 || e >= epoch_) {
    throw ProtocolError("TimeVaryingServer::sigma_final: epoch not frozen");
  }
  return finals_[e - 1];
}

const Projection& TimeVaryingServer::matrix(std::uint32_t e) const {
  if (e == 0 || e > epoch_) {
    throw ProtocolError("TimeVaryingServer::matrix: bad epoch");
  }
  return *matrices_[e - 1];
}

Eigen::VectorXd TimeVaryingServer::parameters() const {
  Eigen::VectorXd theta = theta0_;
  for (std::uint32_t e = 1; e < epoch_; ++e) {
    theta += matrices_[e - 1]->forward(finals_[e - 1]);
  }
  theta += matrices_[epoch_ - 1]->forward(sigma_current_);
  return theta;
}

std::size_t tv_reconcile(ClientState& client, const TimeVaryingServer& server) {
  const std::uint32_t e = server.epoch();
  const std::size_t d = static_cast<std::size_t>(server.sigma_current().size());

  // Wire cost: the (sigma_current, previous final) pair every round, plus one
  // extra final per epoch missed beyond the first.
  const std::uint32_t anchor = std::max(client.last_epoch, 1u);
  const std::uint32_t extra_finals = (e > anchor + 1) ? (e - anchor - 1) : 0;
  const std::size_t download_floats = 2 * d + extra_finals * d;

  if (client.last_epoch == 0) {
    // First contact: replay every frozen epoch from theta0.
    client.params = server.theta0();
    for (std::uint32_t past = 1; past < e; ++past) {
      client.params += server.matrix(past).forward(server.sigma_final(past));
    }
    client.params += server.matrix(e).forward(server.sigma_current());
  } else if (client.last_epoch == e) {
    // Within-epoch repeat: static-style update in span(A_e).
    client.params +=
        server.matrix(e).forward(server.sigma_current() - client.sigma_last);
  } else {
    // Replace the stale current-epoch contribution with that epoch's final,
    // then telescope over any fully missed epochs.
    client.params += server.matrix(client.last_epoch)
                         .forward(server.sigma_final(client.last_epoch) -
                                  client.sigma_last);
    for (std::uint32_t past = client.last_epoch + 1; past < e; ++past) {
      client.params += server.matrix(past).forward(server.sigma_final(past));
    }
    client.params += server.matrix(e).forward(server.sigma_current());
  }

  client.sigma_last = server.sigma_current();
  client.last_epoch = e;
  return download_floats;
}

// --------------------------------------------------------------------------
// Baselines

SparseUpdate topk_compress(const Eigen::VectorXd& grad, std::size_t k) {
  const std::size_t n = static_cast<std::size_t>(grad.size());
  if (k == 0 || k > n) {
    throw std::invalid_argument("topk_compress: k out of range");
  }
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  const auto larger = [&grad](std::uint32_t a, std::uint32_t b) {
    const double ma = std::abs(grad[a]);
    const double mb = std::abs(grad[b]);
    if (ma != mb) return ma > mb;
    return a < b;
  };
  std::nth_element(order.begin(), order.begin() + (k - 1), order.end(), larger);
  order.resize(k);
  std::sort(order.begin(), order.end());
  SparseUpdate out;
  out.indices = std::move(order);
  out.values.reserve(k);
  for (std::uint32_t idx : out.indices) out.values.push_back(grad[idx]);
  return out;
}

Eigen::VectorXd fedavg_local_update(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&, std::size_t)>&
        grad_at,
    const Eigen::VectorXd& theta, std::size_t steps, double lr) {
  if (steps == 0) {
    throw std::invalid_argument("fedavg_local_update: steps must be positive");
  }
  Eigen::VectorXd local = theta;
  for (std::size_t i = 0; i < steps; ++i) {
    local -= lr * grad_at(local, i);
  }
  return local - theta;
}

}  // namespace igc
