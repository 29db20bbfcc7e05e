#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "igc/federation.hpp"
#include "igc/oracle.hpp"

namespace igc {

// Model and dataset selection, fully defaulted.
struct ModelSpec {
  std::string model = "quadratic";  // quadratic | logistic | mlp
  // quadratic: `dominant` eigenvalues at large_eig, the rest at small_eig
  std::size_t dim = 32;
  std::size_t dominant = 4;
  double large_eig = 1.0;
  double small_eig = 0.01;
  double noise_var = 0.0;
  // data-backed models (synthetic blobs, or IDX files when given)
  std::size_t features = 16;
  int classes = 2;
  std::size_t examples_per_class = 50;
  double separation = 10.0;
  std::size_t hidden = 16;  // mlp
  std::string partition = "iid";  // iid | single-class
  std::string theta0_path;        // optional checkpoint for theta0
  std::string idx_images;         // optional IDX ingestion
  std::string idx_labels;
};

// Resolved run description: every default materialized, hashable, and
// sufficient to reproduce the run byte for byte.
struct RunManifest {
  FederationConfig fed;
  ModelSpec model;
  std::string out_dir = ".";

  // Canonical key=value serialization, keys sorted; the config hash is
  // FNV-1a over this text, so it changes iff any resolved field changes.
  std::string canonical() const;
  std::uint64_t config_hash() const;
};

// Apply one key=value setting. Throws ConfigError naming unknown keys or
// invalid values.
void apply_setting(RunManifest& manifest, const std::string& key,
                   const std::string& value);

// Parse a key=value config file ('#' comments, blank lines allowed).
RunManifest parse_config_file(const std::string& path);

// Everything needed to execute a manifest.
struct PreparedRun {
  std::unique_ptr<GradientOracle> oracle;
  DataPartition partition;
  Eigen::VectorXd theta0;
};

PreparedRun prepare_run(const RunManifest& manifest);

// Metrics table and summary emission. Doubles are printed round-trip exact.
extern const char* const kMetricsHeader;  // epoch,round,train_loss,...

void write_metrics(const std::string& path,
                   const std::vector<MetricsRow>& rows);
std::vector<MetricsRow> read_metrics(const std::string& path);

using Summary = std::vector<std::pair<std::string, std::string>>;
void write_summary(const std::string& path, const Summary& summary);
Summary read_summary(const std::string& path);

std::string format_double(double v);  // shortest round-trip representation

// Execute a manifest end to end: run the experiment and write
// <out>/metrics.csv and <out>/summary.txt.
RunResult execute_run(const RunManifest& manifest);

}  // namespace igc
