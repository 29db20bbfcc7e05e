#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "igc/data.hpp"
#include "igc/dense_projection.hpp"
#include "igc/errors.hpp"
#include "igc/federation.hpp"
#include "igc/oracle.hpp"
#include "igc/rng.hpp"

using namespace igc;

namespace {

Eigen::VectorXd random_vector(Eigen::Index n, std::uint64_t seed) {
  DetRng rng(seed);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.next_gaussian();
  return v;
}

QuadraticOracle make_problem(std::size_t dim, std::uint64_t seed,
                             double noise = 0.0) {
  return QuadraticOracle(
      random_vector(static_cast<Eigen::Index>(dim), seed).array().abs() + 0.2,
      random_vector(static_cast<Eigen::Index>(dim), seed + 1), noise);
}

FederationConfig base_config(Algorithm alg) {
  FederationConfig c;
  c.num_clients = 4;
  c.clients_per_round = 2;
  c.rounds_per_epoch = 3;
  c.epochs = 2;
  c.learning_rate = 0.1;
  c.algorithm = alg;
  c.small_dim = 4;
  c.master_seed = 7;
  if (alg == Algorithm::kKSubspace) c.num_subspaces = 2;
  if (alg == Algorithm::kTopK) c.topk = 3;
  if (alg == Algorithm::kFedAvg) c.local_steps = 2;
  return c;
}

}  // namespace

// --------------------------------------------------------------------------
// Names and validation

TEST_CASE("algorithm names round-trip") {
  for (Algorithm a :
       {Algorithm::kUncompressed, Algorithm::kStatic, Algorithm::kKSubspace,
        Algorithm::kTimeVarying, Algorithm::kTopK, Algorithm::kFedAvg}) {
    CHECK(algorithm_from_name(algorithm_name(a)) == a);
  }
  CHECK_THROWS_AS(algorithm_from_name("banded"), ConfigError);
}

TEST_CASE("config validation names the offending key") {
  FederationConfig c = base_config(Algorithm::kStatic);
  SUBCASE("W > N") {
    c.clients_per_round = 5;
    CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("W"), ConfigError);
  }
  SUBCASE("missing d") {
    c.small_dim = 0;
    CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("d"), ConfigError);
  }
  SUBCASE("ksub without K") {
    c.algorithm = Algorithm::kKSubspace;
    c.num_subspaces = 0;
    CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("K"), ConfigError);
  }
  SUBCASE("topk without k") {
    c.algorithm = Algorithm::kTopK;
    c.topk = 0;
    CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("topk"), ConfigError);
  }
}

// --------------------------------------------------------------------------
// Sampling and partitioning

TEST_CASE("client sampling is sorted, distinct, and deterministic") {
  const auto a = sample_clients(42, 10, 4);
  const auto b = sample_clients(42, 10, 4);
  CHECK(a == b);
  CHECK(a.size() == 4);
  CHECK(std::is_sorted(a.begin(), a.end()));
  CHECK(std::set<std::uint32_t>(a.begin(), a.end()).size() == 4);
  for (std::uint32_t id : a) CHECK(id < 10);

  const auto all = sample_clients(42, 5, 5);
  CHECK(all == std::vector<std::uint32_t>{0, 1, 2, 3, 4});
  CHECK_THROWS_AS(sample_clients(42, 3, 4), ConfigError);
}

TEST_CASE("sampling is roughly uniform over rounds") {
  const std::size_t num_clients = 8, per_round = 2, rounds = 4000;
  std::vector<std::size_t> counts(num_clients, 0);
  for (std::size_t r = 0; r < rounds; ++r) {
    for (std::uint32_t id : sample_clients(r, num_clients, per_round)) {
      ++counts[id];
    }
  }
  const double p = double(per_round) / num_clients;
  const double sigma = std::sqrt(rounds * p * (1 - p));
  for (std::size_t c : counts) {
    CHECK(std::abs(double(c) - rounds * p) <= 4.0 * sigma);
  }
}

TEST_CASE("iid partition is an exact balanced partition") {
  const Dataset data = make_blobs(3, 11, 2, 3, 4.0);  // 33 examples
  const DataPartition part = partition_data(data, 5, PartitionMode::kIid, 9);
  REQUIRE(part.shards.size() == 5);
  std::set<std::size_t> seen;
  for (const auto& shard : part.shards) {
    CHECK(shard.size() >= 6);
    CHECK(shard.size() <= 7);
    for (std::size_t i : shard) CHECK(seen.insert(i).second);
  }
  CHECK(seen.size() == data.size());
  // Deterministic in the seed.
  const DataPartition again = partition_data(data, 5, PartitionMode::kIid, 9);
  for (std::size_t c = 0; c < 5; ++c) CHECK(part.shards[c] == again.shards[c]);
}

TEST_CASE("single-class partition keeps every shard label-pure") {
  const Dataset data = make_blobs(5, 12, 2, 3, 4.0);
  const DataPartition part =
      partition_data(data, 7, PartitionMode::kSingleClass, 0);
  std::set<std::size_t> seen;
  for (std::size_t c = 0; c < 7; ++c) {
    std::set<int> labels;
    for (std::size_t i : part.shards[c]) {
      labels.insert(data.labels[static_cast<Eigen::Index>(i)]);
      CHECK(seen.insert(i).second);
    }
    CHECK(labels.size() <= 1);
    if (!labels.empty()) CHECK(*labels.begin() == int(c % 3));
  }
  CHECK(seen.size() == data.size());
}

TEST_CASE("single-class partition scales to ten thousand clients") {
  const std::size_t num_clients = 10000;
  const Dataset data = make_blobs(17, 3000, 2, 10, 4.0);  // 30000 examples
  const DataPartition part =
      partition_data(data, num_clients, PartitionMode::kSingleClass, 0);
  REQUIRE(part.shards.size() == num_clients);
  // 1000 clients serve each class; 3000 examples dealt over them = 3 each.
  for (std::size_t c = 0; c < num_clients; ++c) {
    CHECK(part.shards[c].size() == 3);
    for (std::size_t i : part.shards[c]) {
      CHECK(data.labels[static_cast<Eigen::Index>(i)] == int(c % 10));
    }
  }
}

// --------------------------------------------------------------------------
// Bandwidth ledger exactness

TEST_CASE("ledger totals match the closed-form cost table") {
  const std::size_t dim = 32;
  const QuadraticOracle problem = make_problem(dim, 11, 0.01);
  const Eigen::VectorXd theta0 = random_init(dim, 3);
  const DataPartition no_data;

  const auto run = [&](FederationConfig c) {
    return run_experiment(c, problem, no_data, theta0);
  };

  SUBCASE("static: d up, d down per participation") {
    FederationConfig c = base_config(Algorithm::kStatic);
    const RunResult r = run(c);
    const std::uint64_t parts = r.ledger.participations();
    CHECK(parts == 2 * 3 * 2);  // W * T * E
    CHECK(r.ledger.total_upload() == parts * 4);
    CHECK(r.ledger.total_download() == parts * 4);
  }
  SUBCASE("ksub: d up, d*K down") {
    FederationConfig c = base_config(Algorithm::kKSubspace);
    const RunResult r = run(c);
    const std::uint64_t parts = r.ledger.participations();
    CHECK(r.ledger.total_upload() == parts * 4);
    CHECK(r.ledger.total_download() == parts * 4 * 2);
  }
  SUBCASE("time-varying, full participation: d up, 2d down") {
    FederationConfig c = base_config(Algorithm::kTimeVarying);
    c.clients_per_round = c.num_clients;  // nobody goes stale
    const RunResult r = run(c);
    const std::uint64_t parts = r.ledger.participations();
    CHECK(parts == 4 * 3 * 2);
    CHECK(r.ledger.total_upload() == parts * 4);
    CHECK(r.ledger.total_download() == parts * 2 * 4);
  }
  SUBCASE("uncompressed: D both ways") {
    FederationConfig c = base_config(Algorithm::kUncompressed);
    const RunResult r = run(c);
    const std::uint64_t parts = r.ledger.participations();
    CHECK(r.ledger.total_upload() == parts * dim);
    CHECK(r.ledger.total_download() == parts * dim);
  }
  SUBCASE("topk: 2k both ways") {
    FederationConfig c = base_config(Algorithm::kTopK);
    const RunResult r = run(c);
    const std::uint64_t parts = r.ledger.participations();
    CHECK(r.ledger.total_upload() == parts * 2 * 3);
    CHECK(r.ledger.total_download() == parts * 2 * 3);
  }
  SUBCASE("fedavg: D both ways, amortized over local steps") {
    FederationConfig c = base_config(Algorithm::kFedAvg);
    const RunResult r = run(c);
    const std::uint64_t parts = r.ledger.participations();
    CHECK(r.ledger.total_upload() == parts * dim);
    CHECK(r.ledger.total_download() == parts * dim);
    const CompressionRatios ratios = compression_ratio(c, r.ledger, dim);
    CHECK(ratios.upload == doctest::Approx(2.0));  // L = 2
  }
}

TEST_CASE("compression ratios reproduce the published model sizes") {
  // Transformer-scale accounting: the ledger only stores counts, so the
  // full model dimension fits without simulating it.
  const std::size_t big = 124439808;
  FederationConfig c = base_config(Algorithm::kStatic);
  c.local_steps = 1;

  SUBCASE("d = 4194304 gives about 29.7x") {
    BandwidthLedger ledger(1);
    ledger.charge_upload(0, 4194304);
    ledger.charge_download(0, 4194304);
    ledger.count_participation();
    const CompressionRatios r = compression_ratio(c, ledger, big);
    CHECK(std::abs(r.upload - 29.7) <= 0.1);
    CHECK(std::abs(r.overall - 29.7) <= 0.1);
  }
  SUBCASE("d = 65536 gives about 1899x") {
    BandwidthLedger ledger(1);
    ledger.charge_upload(0, 65536);
    ledger.charge_download(0, 65536);
    ledger.count_participation();
    const CompressionRatios r = compression_ratio(c, ledger, big);
    CHECK(std::abs(r.upload - 1899.0) <= 2.0);
  }
  SUBCASE("empty ledger is rejected") {
    BandwidthLedger ledger(1);
    CHECK_THROWS_AS(compression_ratio(c, ledger, big), std::domain_error);
  }
}

TEST_CASE("uncompressed run reports ratio 1.0") {
  const std::size_t dim = 16;
  const QuadraticOracle problem = make_problem(dim, 13);
  FederationConfig c = base_config(Algorithm::kUncompressed);
  const RunResult r = run_experiment(c, problem, {}, random_init(dim, 3));
  const CompressionRatios ratios = compression_ratio(c, r.ledger, dim);
  CHECK(ratios.upload == doctest::Approx(1.0));
  CHECK(ratios.download == doctest::Approx(1.0));
  CHECK(ratios.overall == doctest::Approx(1.0));
}

// --------------------------------------------------------------------------
// Experiment runner

TEST_CASE("runs are bit-for-bit deterministic in the master seed") {
  const std::size_t dim = 24;
  const QuadraticOracle problem = make_problem(dim, 17, 0.05);
  for (Algorithm alg : {Algorithm::kStatic, Algorithm::kKSubspace,
                        Algorithm::kTimeVarying, Algorithm::kTopK,
                        Algorithm::kFedAvg, Algorithm::kUncompressed}) {
    FederationConfig c = base_config(alg);
    const Eigen::VectorXd theta0 = random_init(dim, 5);
    const RunResult a = run_experiment(c, problem, {}, theta0);
    const RunResult b = run_experiment(c, problem, {}, theta0);
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
      CHECK(a.rows[i].train_loss == b.rows[i].train_loss);
      CHECK(a.rows[i].eval_metric == b.rows[i].eval_metric);
      CHECK(a.rows[i].up_floats == b.rows[i].up_floats);
    }
    c.master_seed = 8;
    const RunResult other = run_experiment(c, problem, {}, theta0);
    CHECK(other.final_metric != a.final_metric);
  }
}

TEST_CASE("zero rounds per epoch yields only the initial evaluation") {
  const std::size_t dim = 8;
  const QuadraticOracle problem = make_problem(dim, 19);
  FederationConfig c = base_config(Algorithm::kStatic);
  c.rounds_per_epoch = 0;
  c.epochs = 1;
  const Eigen::VectorXd theta0 = random_init(dim, 3);
  const RunResult r = run_experiment(c, problem, {}, theta0);
  REQUIRE(r.rows.size() == 1);
  CHECK(r.rows[0].epoch == 0);
  CHECK(r.rows[0].train_loss ==
        doctest::Approx(problem.exact_loss(theta0)).epsilon(1e-12));
  CHECK(r.ledger.total_upload() == 0);
  CHECK(r.ledger.total_download() == 0);
}

TEST_CASE("training decreases the quadratic loss") {
  const std::size_t dim = 32;
  const QuadraticOracle problem = make_problem(dim, 23, 0.001);
  for (Algorithm alg : {Algorithm::kStatic, Algorithm::kKSubspace,
                        Algorithm::kTimeVarying, Algorithm::kUncompressed,
                        Algorithm::kTopK, Algorithm::kFedAvg}) {
    FederationConfig c = base_config(alg);
    c.small_dim = 16;
    c.rounds_per_epoch = 20;
    c.epochs = 2;
    const Eigen::VectorXd theta0 = random_init(dim, 5);
    const RunResult r = run_experiment(c, problem, {}, theta0);
    CHECK(r.rows.back().eval_metric < r.rows.front().eval_metric);
  }
}

TEST_CASE("square orthonormal subspace reproduces uncompressed descent") {
  // With d = D and an orthonormal square matrix, A A^T = I, so the static
  // protocol's implicit update equals plain gradient descent up to the
  // 32-bit wire quantization.
  const std::size_t dim = 16;
  const QuadraticOracle problem = make_problem(dim, 29);
  const Eigen::VectorXd theta0 = random_init(dim, 3);

  FederationConfig plain = base_config(Algorithm::kUncompressed);
  plain.clients_per_round = plain.num_clients;  // same sampling either way
  FederationConfig projected = base_config(Algorithm::kStatic);
  projected.clients_per_round = projected.num_clients;
  projected.small_dim = dim;

  const RunResult a = run_experiment(plain, problem, {}, theta0);
  const RunResult b = run_experiment(projected, problem, {}, theta0,
                                     dense_orthonormal_factory());
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(std::abs(a.rows[i].eval_metric - b.rows[i].eval_metric) <= 1e-5);
  }
}

TEST_CASE("poisoned clients are excluded from the round") {
  // An oracle whose gradient blows up whenever the batch contains example 0.
  class TrapOracle final : public GradientOracle {
   public:
    std::size_t dim() const override { return 4; }
    double loss_and_grad(const Eigen::VectorXd& theta, const Batch& batch,
                         Eigen::VectorXd& grad) const override {
      grad = theta;
      for (std::size_t i : batch.indices) {
        if (i == 0) grad[0] = std::nan("");
      }
      return 0.5 * theta.squaredNorm();
    }
    double evaluate(const Eigen::VectorXd& theta) const override {
      return 0.5 * theta.squaredNorm();
    }
    std::size_t num_examples() const override { return 2; }
  };

  TrapOracle oracle;
  DataPartition part;
  part.shards = {{0}, {1}};  // client 0 always hits the trap
  FederationConfig c = base_config(Algorithm::kStatic);
  c.num_clients = 2;
  c.clients_per_round = 2;
  c.rounds_per_epoch = 1;
  c.epochs = 1;
  c.small_dim = 4;
  const Eigen::VectorXd theta0 = Eigen::VectorXd::Ones(4);

  const RunResult r = run_experiment(c, oracle, part, theta0);
  // Only the healthy client contributed an upload; both downloaded.
  CHECK(r.ledger.participations() == 1);
  CHECK(r.ledger.upload(0) == 0);
  CHECK(r.ledger.upload(1) == 4);
  CHECK(r.ledger.download(0) == 4);
  CHECK(std::isfinite(r.rows.back().train_loss));
  CHECK(r.rows.back().eval_metric < r.rows.front().eval_metric);
}

TEST_CASE("clients with empty shards are skipped in sampling") {
  const std::size_t dim = 6;
  const Dataset data = make_blobs(31, 4, dim, 2, 6.0);
  const LogisticOracle oracle(data);
  DataPartition part;
  part.shards.assign(4, {});
  for (std::size_t i = 0; i < data.size(); ++i) {
    part.shards[i % 2].push_back(i);  // clients 2 and 3 hold nothing
  }
  FederationConfig c = base_config(Algorithm::kStatic);
  c.num_clients = 4;
  c.clients_per_round = 2;
  c.rounds_per_epoch = 5;
  c.small_dim = 4;
  const RunResult r =
      run_experiment(c, oracle, part,
                     random_init(oracle.dim(), 3));
  CHECK(r.ledger.upload(2) == 0);
  CHECK(r.ledger.upload(3) == 0);
  CHECK(r.ledger.participations() == 2 * 5 * 2);
}
