// Command-line front end: deterministic federated-compression experiments,
// theorem probes, and cross-run comparison tables.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "igc/dense_projection.hpp"
#include "igc/errors.hpp"
#include "igc/experiments.hpp"
#include "igc/federation.hpp"
#include "igc/run_config.hpp"

namespace {

struct FlagOverrides {
  std::optional<std::string> algorithm;
  std::optional<std::uint64_t> dimension, subspaces, clients, per_round,
      rounds, epochs, seed;
  std::optional<double> lr;
  std::optional<std::string> out;
};

// Flags take precedence over config-file values.
void apply_overrides(igc::RunManifest& manifest, const FlagOverrides& f) {
  using igc::apply_setting;
  if (f.algorithm) apply_setting(manifest, "algorithm", *f.algorithm);
  if (f.dimension) apply_setting(manifest, "d", std::to_string(*f.dimension));
  if (f.subspaces) apply_setting(manifest, "K", std::to_string(*f.subspaces));
  if (f.clients) apply_setting(manifest, "N", std::to_string(*f.clients));
  if (f.per_round) apply_setting(manifest, "W", std::to_string(*f.per_round));
  if (f.rounds) apply_setting(manifest, "T", std::to_string(*f.rounds));
  if (f.epochs) apply_setting(manifest, "E", std::to_string(*f.epochs));
  if (f.seed) apply_setting(manifest, "seed", std::to_string(*f.seed));
  if (f.lr) apply_setting(manifest, "lr", igc::format_double(*f.lr));
  if (f.out) apply_setting(manifest, "out", *f.out);
}

void add_override_flags(CLI::App* cmd, FlagOverrides& f) {
  cmd->add_option("--algorithm", f.algorithm,
                  "uncompressed|static|ksub|timevarying|topk|fedavg");
  cmd->add_option("--dimension", f.dimension, "intrinsic dimension d");
  cmd->add_option("--subspaces", f.subspaces, "subspace count K");
  cmd->add_option("--clients", f.clients, "client population N");
  cmd->add_option("--per-round", f.per_round, "clients sampled per round W");
  cmd->add_option("--rounds", f.rounds, "rounds per epoch T");
  cmd->add_option("--epochs", f.epochs, "epochs E");
  cmd->add_option("--lr", f.lr, "learning rate");
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--out", f.out, "output directory");
}

int cmd_run(const std::string& config_path, const FlagOverrides& flags) {
  igc::RunManifest manifest;
  if (!config_path.empty()) manifest = igc::parse_config_file(config_path);
  apply_overrides(manifest, flags);
  manifest.fed.validate();
  const igc::RunResult result = igc::execute_run(manifest);
  std::cout << "run complete: final_metric="
            << igc::format_double(result.final_metric) << " rows="
            << result.rows.size() << " out=" << manifest.out_dir << '\n';
  return 0;
}

struct ProbeSpec {
  std::string name;  // rho | static | timevarying | ksubspace
  std::uint64_t big_dim = 64;
  std::uint64_t dimension = 8;
  std::uint64_t dominant = 4;
  double large_eig = 1.0;
  double small_eig = 0.01;
  double noise_var = 0.0;
  std::uint64_t trials = 100;
  std::uint64_t steps = 200;
  std::uint64_t epochs = 4;
  std::uint64_t subspaces = 2;
  std::uint64_t per_round = 1;
  double lr = 0.5;
  std::uint64_t seed = 0;
  bool dense = false;  // exact Grassmannian draw instead of Fastfood
  std::string out = ".";
};

igc::QuadraticOracle make_probe_problem(const ProbeSpec& p) {
  Eigen::VectorXd spectrum(static_cast<Eigen::Index>(p.big_dim));
  for (Eigen::Index i = 0; i < spectrum.size(); ++i) {
    spectrum[i] = static_cast<std::uint64_t>(i) < p.dominant ? p.large_eig
                                                             : p.small_eig;
  }
  Eigen::VectorXd optimum = igc::random_init(
      p.big_dim, igc::derive_seed(p.seed, 1), 1.0);
  return igc::QuadraticOracle(spectrum, optimum, p.noise_var);
}

int cmd_probe(const ProbeSpec& p) {
  const igc::QuadraticOracle problem = make_probe_problem(p);
  const Eigen::VectorXd theta0 = igc::random_init(p.big_dim, p.seed);
  const igc::ProjectionFactory factory =
      p.dense ? igc::dense_orthonormal_factory() : igc::fastfood_factory();
  std::filesystem::create_directories(p.out);

  igc::Summary summary;
  summary.emplace_back("probe", p.name);
  summary.emplace_back("D", std::to_string(p.big_dim));
  summary.emplace_back("d", std::to_string(p.dimension));
  summary.emplace_back("seed", std::to_string(p.seed));
  const double initial = problem.exact_loss(theta0);
  summary.emplace_back("initial_gap", igc::format_double(initial));

  std::ofstream report(p.out + "/probe_report.csv");
  if (!report) {
    std::cerr << "cannot write " << p.out << "/probe_report.csv\n";
    return 1;
  }

  if (p.name == "rho") {
    const igc::RhoEstimate est = igc::estimate_intrinsic_rho(
        problem, theta0, p.dimension, p.trials, p.seed, factory);
    report << "trial,fraction\n";
    for (std::size_t i = 0; i < est.fractions.size(); ++i) {
      report << i << ',' << igc::format_double(est.fractions[i]) << '\n';
    }
    summary.emplace_back("trials", std::to_string(p.trials));
    summary.emplace_back("rho_median", igc::format_double(est.median()));
    summary.emplace_back("rho_mean", igc::format_double(est.mean()));
    summary.emplace_back("rho_stderr", igc::format_double(est.standard_error()));
    summary.emplace_back("flagged_singular",
                         std::to_string(est.flagged_singular));
  } else if (p.name == "static") {
    const double gap = igc::probe_static(problem, theta0, p.dimension, p.steps,
                                         p.lr, p.seed, factory);
    report << "steps,loss_gap\n" << p.steps << ','
           << igc::format_double(gap) << '\n';
    summary.emplace_back("final_gap", igc::format_double(gap));
  } else if (p.name == "timevarying") {
    const std::vector<double> gaps = igc::probe_time_varying(
        problem, theta0, p.dimension, p.epochs, p.steps, p.lr, p.seed,
        factory);
    report << "epoch,loss_gap\n";
    for (std::size_t e = 0; e < gaps.size(); ++e) {
      report << (e + 1) << ',' << igc::format_double(gaps[e]) << '\n';
    }
    summary.emplace_back("final_gap", igc::format_double(gaps.back()));
  } else if (p.name == "ksubspace") {
    const double gap = igc::probe_ksubspace(problem, theta0, p.dimension,
                                            p.subspaces, p.steps, p.lr,
                                            p.per_round, p.seed, factory);
    report << "steps,loss_gap\n" << p.steps << ','
           << igc::format_double(gap) << '\n';
    summary.emplace_back("K", std::to_string(p.subspaces));
    summary.emplace_back("final_gap", igc::format_double(gap));
  } else {
    std::cerr << "unknown probe: " << p.name << '\n';
    return 1;
  }

  igc::write_summary(p.out + "/probe_summary.txt", summary);
  std::cout << "probe complete: out=" << p.out << '\n';
  return 0;
}

int cmd_compare(const std::vector<std::string>& configs,
                const std::string& out_dir) {
  if (configs.size() < 2) {
    std::cerr << "compare: need at least two config files\n";
    return 1;
  }
  std::vector<igc::RunManifest> manifests;
  for (const auto& path : configs) {
    manifests.push_back(igc::parse_config_file(path));
  }
  // All runs must share the model/dataset; only the algorithm may differ.
  auto model_key = [](const igc::RunManifest& m) {
    igc::RunManifest stripped = m;
    stripped.fed = igc::FederationConfig{};
    stripped.fed.master_seed = m.fed.master_seed;
    stripped.out_dir.clear();
    return stripped.canonical();
  };
  for (std::size_t i = 1; i < manifests.size(); ++i) {
    if (model_key(manifests[i]) != model_key(manifests[0])) {
      std::cerr << "compare: manifests disagree on model/dataset ("
                << configs[i] << ")\n";
      return 1;
    }
  }

  std::filesystem::create_directories(out_dir);
  std::ofstream table(out_dir + "/compare.csv");
  table << "algorithm,final_metric,upload_ratio,download_ratio,overall_ratio\n";
  for (std::size_t i = 0; i < manifests.size(); ++i) {
    igc::RunManifest& m = manifests[i];
    m.out_dir = out_dir + "/run_" + std::to_string(i);
    const igc::RunResult result = igc::execute_run(m);
    const igc::PreparedRun run = igc::prepare_run(m);
    const igc::CompressionRatios ratios =
        igc::compression_ratio(m.fed, result.ledger, run.oracle->dim());
    table << igc::algorithm_name(m.fed.algorithm) << ','
          << igc::format_double(result.final_metric) << ','
          << igc::format_double(ratios.upload) << ','
          << igc::format_double(ratios.download) << ','
          << igc::format_double(ratios.overall) << '\n';
  }
  std::cout << "compare complete: " << out_dir << "/compare.csv\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"intrinsic gradient compression experiment driver"};
  app.require_subcommand(1);

  std::string config_path;
  FlagOverrides flags;
  CLI::App* run = app.add_subcommand("run", "execute an experiment manifest");
  run->add_option("--config", config_path, "key=value config file");
  add_override_flags(run, flags);

  ProbeSpec probe;
  CLI::App* probe_cmd =
      app.add_subcommand("probe", "run a convergence/intrinsic-dimension probe");
  probe_cmd->add_option("name", probe.name, "rho|static|timevarying|ksubspace")
      ->required();
  probe_cmd->add_option("--big-dim", probe.big_dim, "problem dimension D");
  probe_cmd->add_option("--dimension", probe.dimension, "subspace dimension d");
  probe_cmd->add_option("--dominant", probe.dominant, "dominant eigenvalues");
  probe_cmd->add_option("--large-eig", probe.large_eig, "dominant eigenvalue");
  probe_cmd->add_option("--small-eig", probe.small_eig, "tail eigenvalue");
  probe_cmd->add_option("--noise-var", probe.noise_var, "gradient noise variance");
  probe_cmd->add_option("--trials", probe.trials, "trials (rho probe)");
  probe_cmd->add_option("--steps", probe.steps, "steps (per epoch for timevarying)");
  probe_cmd->add_option("--epochs", probe.epochs, "epochs (timevarying)");
  probe_cmd->add_option("--subspaces", probe.subspaces, "K (ksubspace)");
  probe_cmd->add_option("--per-round", probe.per_round, "clients per round");
  probe_cmd->add_option("--lr", probe.lr, "learning rate");
  probe_cmd->add_option("--seed", probe.seed, "master seed");
  probe_cmd->add_flag("--dense", probe.dense,
                      "exact orthonormal subspaces (small D only)");
  probe_cmd->add_option("--out", probe.out, "output directory");

  std::vector<std::string> compare_configs;
  std::string compare_out = ".";
  CLI::App* compare_cmd =
      app.add_subcommand("compare", "run several manifests, tabulate results");
  compare_cmd->add_option("configs", compare_configs, "config files");
  compare_cmd->add_option("--out", compare_out, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path, flags);
    if (probe_cmd->parsed()) return cmd_probe(probe);
    if (compare_cmd->parsed()) return cmd_compare(compare_configs, compare_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
