#include "igc/federation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "igc/errors.hpp"
#include "igc/rng.hpp"

namespace igc {

std::string algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::kUncompressed: return "uncompressed";
    case Algorithm::kStatic: return "static";
    case Algorithm::kKSubspace: return "ksub";
    case Algorithm::kTimeVarying: return "timevarying";
    case Algorithm::kTopK: return "topk";
    case Algorithm::kFedAvg: return "fedavg";
  }
  return "unknown";
}

Algorithm algorithm_from_name(const std::string& name) {
  if (name == "uncompressed") return Algorithm::kUncompressed;
  if (name == "static") return Algorithm::kStatic;
  if (name == "ksub") return Algorithm::kKSubspace;
  if (name == "timevarying") return Algorithm::kTimeVarying;
  if (name == "topk") return Algorithm::kTopK;
  if (name == "fedavg") return Algorithm::kFedAvg;
  throw ConfigError("unknown algorithm: " + name);
}

void FederationConfig::validate() const {
  if (num_clients == 0) throw ConfigError("config: N must be positive");
  if (clients_per_round == 0 || clients_per_round > num_clients) {
    throw ConfigError("config: W must satisfy 1 <= W <= N");
  }
  if (epochs == 0) throw ConfigError("config: E must be positive");
  if (local_batch == 0) throw ConfigError("config: batch must be positive");
  switch (algorithm) {
    case Algorithm::kStatic:
    case Algorithm::kTimeVarying:
      if (small_dim == 0) throw ConfigError("config: d required");
      break;
    case Algorithm::kKSubspace:
      if (small_dim == 0) throw ConfigError("config: d required");
      if (num_subspaces == 0) throw ConfigError("config: K required");
      break;
    case Algorithm::kTopK:
      if (topk == 0) throw ConfigError("config: topk required");
      break;
    case Algorithm::kFedAvg:
      if (local_steps == 0) throw ConfigError("config: local_steps required");
      break;
    case Algorithm::kUncompressed:
      break;
  }
}

std::uint64_t BandwidthLedger::total_upload() const {
  return std::accumulate(upload_.begin(), upload_.end(), std::uint64_t{0});
}

std::uint64_t BandwidthLedger::total_download() const {
  return std::accumulate(download_.begin(), download_.end(), std::uint64_t{0});
}

DataPartition partition_data(const Dataset& data, std::size_t num_clients,
                             PartitionMode mode, std::uint64_t seed) {
  DataPartition part;
  part.mode = mode;
  part.shards.assign(num_clients, {});
  if (mode == PartitionMode::kIid) {
    DetRng rng(derive_seed(seed, seeds::kDataTag));
    auto order = random_permutation(data.size(), rng);
    for (std::size_t i = 0; i < order.size(); ++i) {
      part.shards[i % num_clients].push_back(order[i]);
    }
  } else {
    // Each client holds data from exactly one label: client i serves class
    // i mod C, and each class's examples are dealt round-robin over its
    // clients.
    const std::size_t classes = static_cast<std::size_t>(data.num_classes);
    std::vector<std::vector<std::size_t>> class_clients(classes);
    for (std::size_t i = 0; i < num_clients; ++i) {
      class_clients[i % classes].push_back(i);
    }
    std::vector<std::size_t> cursor(classes, 0);
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto label =
          static_cast<std::size_t>(data.labels[static_cast<Eigen::Index>(i)]);
      const auto& owners = class_clients[label];
      if (owners.empty()) continue;  // more classes than clients
      part.shards[owners[cursor[label] % owners.size()]].push_back(i);
      ++cursor[label];
    }
  }
  return part;
}

namespace {

std::vector<std::uint32_t> round_permutation(std::uint64_t round_seed,
                                             std::size_t num_clients) {
  DetRng rng(round_seed);
  return random_permutation(num_clients, rng);
}

std::vector<std::size_t> draw_batch(const std::vector<std::size_t>& shard,
                                    std::size_t batch, DetRng& rng) {
  if (shard.empty()) return {};
  std::vector<std::size_t> out;
  out.reserve(batch);
  if (batch <= shard.size()) {
    // Without replacement: partial Fisher-Yates over shard positions.
    std::vector<std::size_t> pos(shard.size());
    std::iota(pos.begin(), pos.end(), std::size_t{0});
    for (std::size_t i = 0; i < batch; ++i) {
      const std::size_t j = i + rng.next_below(pos.size() - i);
      std::swap(pos[i], pos[j]);
      out.push_back(shard[pos[i]]);
    }
  } else {
    for (std::size_t i = 0; i < batch; ++i) {
      out.push_back(shard[rng.next_below(shard.size())]);
    }
  }
  return out;
}

}  // namespace

std::vector<std::uint32_t> sample_clients(std::uint64_t round_seed,
                                          std::size_t num_clients,
                                          std::size_t per_round) {
  if (per_round > num_clients) {
    throw ConfigError("sample_clients: W exceeds N");
  }
  auto perm = round_permutation(round_seed, num_clients);
  perm.resize(per_round);
  std::sort(perm.begin(), perm.end());
  return perm;
}

Simulation::Simulation(FederationConfig config, const GradientOracle& oracle,
                       DataPartition partition, Eigen::VectorXd theta0,
                       const ProjectionFactory& factory)
    : config_(std::move(config)),
      oracle_(oracle),
      partition_(std::move(partition)),
      theta0_(std::move(theta0)),
      ledger_(config_.num_clients) {
  config_.validate();
  if (static_cast<std::size_t>(theta0_.size()) != oracle_.dim()) {
    throw ConfigError("Simulation: theta0 length != oracle dimension");
  }
  clients_.resize(config_.num_clients);
  for (std::size_t i = 0; i < clients_.size(); ++i) {
    clients_[i].id = static_cast<std::uint32_t>(i);
  }
  switch (config_.algorithm) {
    case Algorithm::kStatic:
      static_server_ = std::make_unique<StaticServer>(
          config_.master_seed, theta0_, config_.small_dim, factory);
      break;
    case Algorithm::kKSubspace:
      ksub_server_ = std::make_unique<KSubspaceServer>(
          config_.master_seed, theta0_, config_.small_dim,
          config_.num_subspaces, factory);
      break;
    case Algorithm::kTimeVarying:
      tv_server_ = std::make_unique<TimeVaryingServer>(
          config_.master_seed, theta0_, config_.small_dim, factory);
      break;
    default:
      dense_theta_ = theta0_;
      break;
  }
}

Eigen::VectorXd Simulation::server_parameters() const {
  switch (config_.algorithm) {
    case Algorithm::kStatic: return static_server_->parameters();
    case Algorithm::kKSubspace: return ksub_server_->parameters();
    case Algorithm::kTimeVarying: return tv_server_->parameters();
    default: return dense_theta_;
  }
}

void Simulation::advance_epoch() {
  if (tv_server_) tv_server_->advance_epoch();
}

double Simulation::run_round(std::uint32_t epoch, std::uint32_t round) {
  const std::uint64_t round_seed =
      seeds::round(config_.master_seed, epoch, round);
  const bool has_data = !partition_.shards.empty();

  // First W clients of the round permutation with usable shards; empty-shard
  // clients are skipped and replaced by the next candidate.
  auto perm = round_permutation(round_seed, config_.num_clients);
  std::vector<std::uint32_t> sampled;
  for (std::uint32_t id : perm) {
    if (sampled.size() == config_.clients_per_round) break;
    if (has_data && partition_.shards[id].empty()) continue;
    sampled.push_back(id);
  }
  std::sort(sampled.begin(), sampled.end());

  const std::size_t d = config_.small_dim;
  const std::size_t big_dim = oracle_.dim();
  std::vector<Sketch> sketches;
  std::vector<Eigen::VectorXd> dense_updates;  // baselines
  Eigen::VectorXd topk_sum;
  if (config_.algorithm == Algorithm::kTopK) {
    topk_sum = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(big_dim));
  }
  double loss_sum = 0.0;
  std::size_t loss_count = 0;

  for (std::uint32_t id : sampled) {
    ClientState& client = clients_[id];
    const std::uint64_t client_seed =
        seeds::client_round(config_.master_seed, epoch, round, id);

    // Reconciliation
    switch (config_.algorithm) {
      case Algorithm::kStatic:
        ledger_.charge_download(
            id, static_reconcile(client, static_server_->matrix(),
                                 static_server_->theta0(),
                                 static_server_->sigma()));
        break;
      case Algorithm::kKSubspace:
        ledger_.charge_download(id, ksub_reconcile(client, *ksub_server_));
        break;
      case Algorithm::kTimeVarying:
        ledger_.charge_download(id, tv_reconcile(client, *tv_server_));
        break;
      case Algorithm::kUncompressed:
      case Algorithm::kFedAvg:
        client.params = dense_theta_;
        ledger_.charge_download(id, big_dim);
        break;
      case Algorithm::kTopK:
        client.params = dense_theta_;
        ledger_.charge_download(id, 2 * config_.topk);
        break;
    }

    Batch batch;
    batch.noise_seed = client_seed;
    DetRng batch_rng(derive_seed(client_seed, seeds::kDataTag));
    if (has_data) {
      batch.indices =
          draw_batch(partition_.shards[id], config_.local_batch, batch_rng);
    }

    try {
      if (config_.algorithm == Algorithm::kFedAvg) {
        double first_loss = 0.0;
        const auto grad_at = [&](const Eigen::VectorXd& theta,
                                 std::size_t step) {
          Batch b;
          b.noise_seed = derive_seed(client_seed, step);
          DetRng step_rng(derive_seed(b.noise_seed, seeds::kDataTag));
          if (has_data) {
            b.indices = draw_batch(partition_.shards[id], config_.local_batch,
                                   step_rng);
          }
          Eigen::VectorXd g;
          const double loss = oracle_.loss_and_grad(theta, b, g);
          if (step == 0) first_loss = loss;
          if (!g.allFinite()) {
            throw PoisonedGradientError("fedavg: non-finite gradient");
          }
          return g;
        };
        Eigen::VectorXd delta =
            fedavg_local_update(grad_at, client.params, config_.local_steps,
                                config_.learning_rate);
        dense_updates.push_back(std::move(delta));
        ledger_.charge_upload(id, big_dim);
        loss_sum += first_loss;
        ++loss_count;
      } else {
        Eigen::VectorXd grad;
        const double loss = oracle_.loss_and_grad(client.params, batch, grad);
        switch (config_.algorithm) {
          case Algorithm::kStatic:
            sketches.push_back(
                compress_gradient(static_server_->matrix(), grad, 0));
            ledger_.charge_upload(id, d);
            break;
          case Algorithm::kKSubspace: {
            const std::uint32_t k =
                ksub_assign(client_seed, config_.num_subspaces);
            sketches.push_back(
                compress_gradient(ksub_server_->matrix(k), grad, k));
            ledger_.charge_upload(id, d);
            break;
          }
          case Algorithm::kTimeVarying:
            sketches.push_back(compress_gradient(
                tv_server_->matrix(tv_server_->epoch()), grad,
                tv_server_->epoch()));
            ledger_.charge_upload(id, d);
            break;
          case Algorithm::kUncompressed:
            if (!grad.allFinite()) {
              throw PoisonedGradientError("uncompressed: non-finite gradient");
            }
            dense_updates.push_back(grad);
            ledger_.charge_upload(id, big_dim);
            break;
          case Algorithm::kTopK: {
            if (!grad.allFinite()) {
              throw PoisonedGradientError("topk: non-finite gradient");
            }
            const SparseUpdate sparse = topk_compress(grad, config_.topk);
            for (std::size_t i = 0; i < sparse.indices.size(); ++i) {
              topk_sum[sparse.indices[i]] += sparse.values[i];
            }
            ledger_.charge_upload(id, 2 * config_.topk);
            break;
          }
          case Algorithm::kFedAvg:
            break;  // handled above
        }
        loss_sum += loss;
        ++loss_count;
      }
      ledger_.count_participation();
    } catch (const PoisonedGradientError&) {
      // Client excluded from the round; its download stays on the ledger.
    }
  }

  // Server update (fixed client-id-sorted aggregation order throughout).
  const double lr = config_.learning_rate;
  switch (config_.algorithm) {
    case Algorithm::kStatic:
      if (!sketches.empty()) static_server_->step(sketches, lr);
      break;
    case Algorithm::kKSubspace:
      if (!sketches.empty()) ksub_server_->step(sketches, lr);
      break;
    case Algorithm::kTimeVarying:
      if (!sketches.empty()) tv_server_->step(sketches, lr);
      break;
    case Algorithm::kUncompressed:
      if (!dense_updates.empty()) {
        Eigen::VectorXd mean =
            Eigen::VectorXd::Zero(static_cast<Eigen::Index>(big_dim));
        for (const auto& g : dense_updates) mean += g;
        dense_theta_ -= lr / static_cast<double>(dense_updates.size()) * mean;
      }
      break;
    case Algorithm::kTopK:
      if (loss_count > 0) {
        dense_theta_ -= lr / static_cast<double>(loss_count) * topk_sum;
      }
      break;
    case Algorithm::kFedAvg:
      if (!dense_updates.empty()) {
        Eigen::VectorXd mean =
            Eigen::VectorXd::Zero(static_cast<Eigen::Index>(big_dim));
        for (const auto& du : dense_updates) mean += du;
        dense_theta_ += mean / static_cast<double>(dense_updates.size());
      }
      break;
  }

  return loss_count > 0 ? loss_sum / static_cast<double>(loss_count) : 0.0;
}

CompressionRatios compression_ratio(const FederationConfig& config,
                                    const BandwidthLedger& ledger,
                                    std::size_t big_dim) {
  const std::uint64_t up = ledger.total_upload();
  const std::uint64_t down = ledger.total_download();
  if (up == 0 || down == 0) {
    throw std::domain_error("compression_ratio: empty ledger");
  }
  const double baseline = static_cast<double>(big_dim) *
                          static_cast<double>(ledger.participations()) *
                          static_cast<double>(config.local_steps);
  CompressionRatios r;
  r.upload = baseline / static_cast<double>(up);
  r.download = baseline / static_cast<double>(down);
  r.overall = 2.0 * baseline / static_cast<double>(up + down);
  return r;
}

RunResult run_experiment(const FederationConfig& config,
                         const GradientOracle& oracle,
                         const DataPartition& partition,
                         const Eigen::VectorXd& theta0,
                         const ProjectionFactory& factory) {
  config.validate();
  Simulation sim(config, oracle, partition, theta0, factory);
  RunResult result;

  const auto full_loss = [&](const Eigen::VectorXd& theta) {
    Eigen::VectorXd grad;
    return oracle.loss_and_grad(theta, Batch{}, grad);
  };

  MetricsRow initial;
  initial.train_loss = full_loss(theta0);
  initial.eval_metric = oracle.evaluate(theta0);
  result.rows.push_back(initial);

  for (std::uint32_t e = 1; e <= config.epochs; ++e) {
    for (std::uint32_t t = 1; t <= config.rounds_per_epoch; ++t) {
      const double loss = sim.run_round(e, t);
      if (std::isnan(loss)) {
        throw std::runtime_error(
            "run_experiment: NaN loss at epoch " + std::to_string(e) +
            " round " + std::to_string(t));
      }
      MetricsRow row;
      row.epoch = e;
      row.round = t;
      row.train_loss = loss;
      row.eval_metric = oracle.evaluate(sim.server_parameters());
      row.up_floats = sim.ledger().total_upload();
      row.down_floats = sim.ledger().total_download();
      result.rows.push_back(row);
    }
    if (e < config.epochs) sim.advance_epoch();
  }

  result.ledger = sim.ledger();
  result.final_metric = result.rows.back().eval_metric;
  return result;
}

}  // namespace igc
