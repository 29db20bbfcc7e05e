#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "igc/compressors.hpp"
#include "igc/oracle.hpp"
#include "igc/projection.hpp"

namespace igc {

enum class Algorithm {
  kUncompressed,
  kStatic,
  kKSubspace,
  kTimeVarying,
  kTopK,
  kFedAvg,
};

std::string algorithm_name(Algorithm a);
Algorithm algorithm_from_name(const std::string& name);  // throws ConfigError

struct FederationConfig {
  std::size_t num_clients = 1;        // N
  std::size_t clients_per_round = 1;  // W
  std::size_t rounds_per_epoch = 1;   // T
  std::size_t epochs = 1;             // E
  std::size_t local_batch = 1;        // stochastic gradient batch size
  double learning_rate = 0.1;
  Algorithm algorithm = Algorithm::kStatic;
  std::size_t small_dim = 0;      // d (intrinsic protocols)
  std::size_t num_subspaces = 0;  // K (required for ksub)
  std::size_t topk = 0;           // k (top-k baseline)
  std::size_t local_steps = 1;    // L (fedavg baseline)
  std::uint64_t master_seed = 0;

  void validate() const;  // throws ConfigError naming the offending key
};

// Exact per-client float-slot accounting. Floats, not bytes; seeds and
// subspace tags cost nothing.
class BandwidthLedger {
 public:
  explicit BandwidthLedger(std::size_t num_clients)
      : upload_(num_clients, 0), download_(num_clients, 0) {}

  void charge_upload(std::size_t client, std::uint64_t floats) {
    upload_[client] += floats;
  }
  void charge_download(std::size_t client, std::uint64_t floats) {
    download_[client] += floats;
  }
  void count_participation() { ++participations_; }

  std::uint64_t upload(std::size_t client) const { return upload_[client]; }
  std::uint64_t download(std::size_t client) const { return download_[client]; }
  std::uint64_t total_upload() const;
  std::uint64_t total_download() const;
  std::uint64_t participations() const { return participations_; }
  std::size_t num_clients() const { return upload_.size(); }

 private:
  std::vector<std::uint64_t> upload_;
  std::vector<std::uint64_t> download_;
  std::uint64_t participations_ = 0;
};

enum class PartitionMode { kIid, kSingleClass };

// Exact partition of example indices across clients.
struct DataPartition {
  std::vector<std::vector<std::size_t>> shards;
  PartitionMode mode = PartitionMode::kIid;
};

DataPartition partition_data(const Dataset& data, std::size_t num_clients,
                             PartitionMode mode, std::uint64_t seed);

// W distinct client ids, uniform without replacement, returned sorted so the
// server aggregates in a fixed order.
std::vector<std::uint32_t> sample_clients(std::uint64_t round_seed,
                                          std::size_t num_clients,
                                          std::size_t per_round);

struct MetricsRow {
  std::uint32_t epoch = 0;
  std::uint32_t round = 0;
  double train_loss = 0.0;
  double eval_metric = 0.0;
  std::uint64_t up_floats = 0;    // cumulative global totals
  std::uint64_t down_floats = 0;
};

struct RunResult {
  std::vector<MetricsRow> rows;
  BandwidthLedger ledger{0};
  double final_metric = 0.0;
};

struct CompressionRatios {
  double upload = 0.0;
  double download = 0.0;
  double overall = 0.0;  // average over both directions: 2*baseline/(up+down)
};

// Ratios against the uncompressed baseline of D floats each way per gradient
// step (fedavg amortizes over its local steps).
CompressionRatios compression_ratio(const FederationConfig& config,
                                    const BandwidthLedger& ledger,
                                    std::size_t big_dim);

// Round-based federated simulation of the configured algorithm. Owns all
// server and client state across one experiment.
class Simulation {
 public:
  Simulation(FederationConfig config, const GradientOracle& oracle,
             DataPartition partition, Eigen::VectorXd theta0,
             const ProjectionFactory& factory = fastfood_default());

  // One round: sample W clients, reconcile, compute stochastic gradients,
  // compress, aggregate, update the ledger. Returns the mean training loss
  // over participating clients.
  double run_round(std::uint32_t epoch, std::uint32_t round);

  void advance_epoch();  // time-varying only; no-op otherwise

  Eigen::VectorXd server_parameters() const;
  const BandwidthLedger& ledger() const { return ledger_; }
  const FederationConfig& config() const { return config_; }

 private:
  FederationConfig config_;
  const GradientOracle& oracle_;
  DataPartition partition_;
  Eigen::VectorXd theta0_;
  BandwidthLedger ledger_;
  std::vector<ClientState> clients_;

  // Exactly one of these is active, per config_.algorithm.
  std::unique_ptr<StaticServer> static_server_;
  std::unique_ptr<KSubspaceServer> ksub_server_;
  std::unique_ptr<TimeVaryingServer> tv_server_;
  Eigen::VectorXd dense_theta_;  // uncompressed / top-k / fedavg
};

// E epochs x T rounds with held-out evaluation every round; deterministic
// given the master seed. Throws on NaN loss with a diagnostic snapshot.
RunResult run_experiment(const FederationConfig& config,
                         const GradientOracle& oracle,
                         const DataPartition& partition,
                         const Eigen::VectorXd& theta0,
                         const ProjectionFactory& factory = fastfood_default());

}  // namespace igc
