#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "igc/projection.hpp"

namespace igc {

// Compressed gradient payload. Stored at 32 bits, matching the 4-byte floats
// the bandwidth ledger counts; all server-side accumulation is in doubles.
struct Sketch {
  Eigen::VectorXf payload;
  std::uint32_t tag = 0;  // subspace index k, or epoch e (time-varying)
};

// Default projection factory: seeded structured matrices.
const ProjectionFactory& fastfood_default();

// Sketch a gradient: payload = A^T g quantized to 32 bits.
// Throws PoisonedGradientError on non-finite entries.
Sketch compress_gradient(const Projection& matrix, const Eigen::VectorXd& grad,
                         std::uint32_t tag = 0);

// Per-client state. sigma_last / last_epoch are only meaningful for the
// time-varying protocol; the other protocols re-derive params every round.
struct ClientState {
  std::uint32_t id = 0;
  std::uint32_t last_epoch = 0;  // 0 = never synced
  Eigen::VectorXd sigma_last;
  Eigen::VectorXd params;
};

// ---------------------------------------------------------------------------
// Static protocol: one subspace for the whole run. The server's parameter
// vector is implicit: always theta0 + A sigma.

class StaticServer {
 public:
  StaticServer(std::uint64_t master_seed, Eigen::VectorXd theta0,
               std::size_t small_dim,
               const ProjectionFactory& factory = fastfood_default());

  // sigma <- sigma - lr * mean(payloads). Throws ProtocolError on an empty
  // round or a non-static tag.
  void step(const std::vector<Sketch>& sketches, double lr);

  const Eigen::VectorXd& sigma() const { return sigma_; }
  Eigen::VectorXd parameters() const;  // materialized on demand
  const Projection& matrix() const { return *matrix_; }
  const Eigen::VectorXd& theta0() const { return theta0_; }
  std::size_t steps_taken() const { return steps_; }

 private:
  std::unique_ptr<Projection> matrix_;
  Eigen::VectorXd theta0_;
  Eigen::VectorXd sigma_;
  std::size_t steps_ = 0;
};

// Client reconciliation: params = theta0 + A sigma. Returns the number of
// floats downloaded (d).
std::size_t static_reconcile(ClientState& client, const Projection& matrix,
                             const Eigen::VectorXd& theta0,
                             const Eigen::VectorXd& sigma);

// ---------------------------------------------------------------------------
// K-subspace protocol: K fixed subspaces; each client uploads into one
// (chosen uniformly per round) and downloads all K accumulators.

class KSubspaceServer {
 public:
  KSubspaceServer(std::uint64_t master_seed, Eigen::VectorXd theta0,
                  std::size_t small_dim, std::size_t num_subspaces,
                  const ProjectionFactory& factory = fastfood_default());

  // Per-subspace update with uniform 1/W weighting over all sketches in the
  // round (W = sketches.size(), not the per-bucket count).
  void step(const std::vector<Sketch>& sketches, double lr);

  std::size_t num_subspaces() const { return matrices_.size(); }
  const Eigen::VectorXd& sigma(std::size_t k) const { return sigmas_[k]; }
  const std::vector<Eigen::VectorXd>& sigmas() const { return sigmas_; }
  Eigen::VectorXd parameters() const;
  const Projection& matrix(std::size_t k) const { return *matrices_[k]; }
  const Eigen::VectorXd& theta0() const { return theta0_; }

 private:
  std::vector<std::unique_ptr<Projection>> matrices_;
  Eigen::VectorXd theta0_;
  std::vector<Eigen::VectorXd> sigmas_;
};

// Uniform subspace assignment for a client round, deterministic given the
// per-(round, client) seed.
std::uint32_t ksub_assign(std::uint64_t client_round_seed, std::size_t K);

// params = theta0 + sum_k A^(k) sigma^(k). Requires all K accumulators;
// returns floats downloaded (d*K).
std::size_t ksub_reconcile(ClientState& client, const KSubspaceServer& server);

// ---------------------------------------------------------------------------
// Time-varying protocol: a fresh seeded subspace per epoch. Clients carry
// sigma_last so reconciliation needs only the current accumulator and the
// previous epoch's frozen one; stale clients telescope over missed epochs.

class TimeVaryingServer {
 public:
  TimeVaryingServer(std::uint64_t master_seed, Eigen::VectorXd theta0,
                    std::size_t small_dim,
                    const ProjectionFactory& factory = fastfood_default());

  void step(const std::vector<Sketch>& sketches, double lr);

  // Freeze sigma_current into the archive and open epoch e+1 with a fresh
  // seeded matrix.
  void advance_epoch();

  std::uint32_t epoch() const { return epoch_; }
  const Eigen::VectorXd& sigma_current() const { return sigma_current_; }
  // Frozen accumulator of a finished epoch e' in [1, epoch).
  const Eigen::VectorXd& sigma_final(std::uint32_t e) const;
  const Projection& matrix(std::uint32_t e) const;  // e in [1, epoch]
  Eigen::VectorXd parameters() const;
  const Eigen::VectorXd& theta0() const { return theta0_; }

 private:
  std::uint64_t master_seed_;
  std::size_t small_dim_;
  ProjectionFactory factory_;
  Eigen::VectorXd theta0_;
  std::uint32_t epoch_ = 1;
  Eigen::VectorXd sigma_current_;
  std::vector<Eigen::VectorXd> finals_;  // finals_[e-1] = epoch e
  mutable std::vector<std::unique_ptr<Projection>> matrices_;  // per epoch
};

// Two-term correction for a client last synced in the previous epoch, the
// static-style update within an epoch, and the telescoped catch-up path for
// clients stale by two or more epochs. Afterwards sigma_last tracks
// sigma_current and last_epoch the server epoch. Returns floats downloaded:
// 2d per round plus d per missed epoch beyond one.
std::size_t tv_reconcile(ClientState& client, const TimeVaryingServer& server);

// ---------------------------------------------------------------------------
// Baselines

struct SparseUpdate {
  std::vector<std::uint32_t> indices;
  std::vector<double> values;
};

// The k entries of largest magnitude, ties broken by lowest index.
// Upload cost is 2k float-slots (one per index, one per value).
SparseUpdate topk_compress(const Eigen::VectorXd& grad, std::size_t k);

// L local SGD steps from theta; returns theta_local - theta.
Eigen::VectorXd fedavg_local_update(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&, std::size_t)>&
        grad_at,
    const Eigen::VectorXd& theta, std::size_t steps, double lr);

}  // namespace igc
