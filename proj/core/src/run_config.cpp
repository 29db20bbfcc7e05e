#include "igc/run_config.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "igc/data.hpp"
#include "igc/errors.hpp"

namespace igc {

const char* const kMetricsHeader =
    "epoch,round,train_loss,eval_metric,up_floats,down_floats";

std::string format_double(double v) {
  // Shortest representation that round-trips to the same double.
  for (int precision = 1; precision <= 17; ++precision) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) return buf;
  }
  return "0";
}

namespace {

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  std::uint64_t out = 0;
  const auto [ptr, ec] =
      std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    throw ConfigError("config key '" + key + "': bad integer '" + value + "'");
  }
  return out;
}

double parse_f64(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const double out = std::strtod(value.c_str(), &end);
  if (end != value.c_str() + value.size() || value.empty()) {
    throw ConfigError("config key '" + key + "': bad number '" + value + "'");
  }
  return out;
}

}  // namespace

void apply_setting(RunManifest& m, const std::string& key,
                   const std::string& value) {
  FederationConfig& f = m.fed;
  ModelSpec& s = m.model;
  if (key == "algorithm") f.algorithm = algorithm_from_name(value);
  else if (key == "d") f.small_dim = parse_u64(key, value);
  else if (key == "K") f.num_subspaces = parse_u64(key, value);
  else if (key == "topk") f.topk = parse_u64(key, value);
  else if (key == "local_steps") f.local_steps = parse_u64(key, value);
  else if (key == "N") f.num_clients = parse_u64(key, value);
  else if (key == "W") f.clients_per_round = parse_u64(key, value);
  else if (key == "T") f.rounds_per_epoch = parse_u64(key, value);
  else if (key == "E") f.epochs = parse_u64(key, value);
  else if (key == "batch") f.local_batch = parse_u64(key, value);
  else if (key == "lr") f.learning_rate = parse_f64(key, value);
  else if (key == "seed") f.master_seed = parse_u64(key, value);
  else if (key == "model") {
    if (value != "quadratic" && value != "logistic" && value != "mlp") {
      throw ConfigError("config key 'model': unknown model '" + value + "'");
    }
    s.model = value;
  } else if (key == "dim") s.dim = parse_u64(key, value);
  else if (key == "dominant") s.dominant = parse_u64(key, value);
  else if (key == "large_eig") s.large_eig = parse_f64(key, value);
  else if (key == "small_eig") s.small_eig = parse_f64(key, value);
  else if (key == "noise_var") s.noise_var = parse_f64(key, value);
  else if (key == "features") s.features = parse_u64(key, value);
  else if (key == "classes") s.classes = static_cast<int>(parse_u64(key, value));
  else if (key == "examples_per_class") s.examples_per_class = parse_u64(key, value);
  else if (key == "separation") s.separation = parse_f64(key, value);
  else if (key == "hidden") s.hidden = parse_u64(key, value);
  else if (key == "partition") {
    if (value != "iid" && value != "single-class") {
      throw ConfigError("config key 'partition': expected iid or single-class");
    }
    s.partition = value;
  } else if (key == "theta0") s.theta0_path = value;
  else if (key == "idx_images") s.idx_images = value;
  else if (key == "idx_labels") s.idx_labels = value;
  else if (key == "out") m.out_dir = value;
  else throw ConfigError("unknown config key '" + key + "'");
}

RunManifest parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  RunManifest m;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    line = line.substr(first, last - first + 1);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path + ":" + std::to_string(lineno) +
                        ": expected key=value");
    }
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t");
      const auto b = s.find_last_not_of(" \t");
      return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
    };
    apply_setting(m, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return m;
}

std::string RunManifest::canonical() const {
  // Keys in fixed sorted order; every resolved field appears.
  std::ostringstream out;
  out << "E=" << fed.epochs << '\n'
      << "K=" << fed.num_subspaces << '\n'
      << "N=" << fed.num_clients << '\n'
      << "T=" << fed.rounds_per_epoch << '\n'
      << "W=" << fed.clients_per_round << '\n'
      << "algorithm=" << algorithm_name(fed.algorithm) << '\n'
      << "batch=" << fed.local_batch << '\n'
      << "classes=" << model.classes << '\n'
      << "d=" << fed.small_dim << '\n'
      << "dim=" << model.dim << '\n'
      << "dominant=" << model.dominant << '\n'
      << "examples_per_class=" << model.examples_per_class << '\n'
      << "features=" << model.features << '\n'
      << "hidden=" << model.hidden << '\n'
      << "idx_images=" << model.idx_images << '\n'
      << "idx_labels=" << model.idx_labels << '\n'
      << "large_eig=" << format_double(model.large_eig) << '\n'
      << "local_steps=" << fed.local_steps << '\n'
      << "lr=" << format_double(fed.learning_rate) << '\n'
      << "model=" << model.model << '\n'
      << "noise_var=" << format_double(model.noise_var) << '\n'
      << "partition=" << model.partition << '\n'
      << "seed=" << fed.master_seed << '\n'
      << "separation=" << format_double(model.separation) << '\n'
      << "small_eig=" << format_double(model.small_eig) << '\n'
      << "theta0=" << model.theta0_path << '\n'
      << "topk=" << fed.topk << '\n';
  return out.str();
}

std::uint64_t RunManifest::config_hash() const {
  // FNV-1a
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

PreparedRun prepare_run(const RunManifest& m) {
  PreparedRun run;
  const std::uint64_t seed = m.fed.master_seed;

  if (m.model.model == "quadratic") {
    if (m.model.dominant > m.model.dim) {
      throw ConfigError("config: dominant exceeds dim");
    }
    Eigen::VectorXd spectrum(static_cast<Eigen::Index>(m.model.dim));
    for (Eigen::Index i = 0; i < spectrum.size(); ++i) {
      spectrum[i] = static_cast<std::size_t>(i) < m.model.dominant
                        ? m.model.large_eig
                        : m.model.small_eig;
    }
    Eigen::VectorXd optimum = random_init(m.model.dim, derive_seed(seed, 1), 1.0);
    run.oracle = std::make_unique<QuadraticOracle>(spectrum, optimum,
                                                   m.model.noise_var);
    run.partition = {};  // no data; clients draw noise seeds
  } else {
    Dataset train;
    std::shared_ptr<const Dataset> eval;
    if (!m.model.idx_images.empty() || !m.model.idx_labels.empty()) {
      if (m.model.idx_images.empty() || m.model.idx_labels.empty()) {
        throw ConfigError("config: idx_images and idx_labels must both be set");
      }
      train = load_idx_dataset(m.model.idx_images, m.model.idx_labels);
    } else {
      train = make_blobs(seed, m.model.examples_per_class, m.model.features,
                         m.model.classes, m.model.separation, /*split=*/0);
      eval = std::make_shared<Dataset>(
          make_blobs(seed, m.model.examples_per_class, m.model.features,
                     m.model.classes, m.model.separation, /*split=*/1));
    }
    const PartitionMode mode = m.model.partition == "iid"
                                   ? PartitionMode::kIid
                                   : PartitionMode::kSingleClass;
    run.partition = partition_data(train, m.fed.num_clients, mode, seed);
    if (m.model.model == "logistic") {
      run.oracle = std::make_unique<LogisticOracle>(std::move(train), eval);
    } else {
      run.oracle =
          std::make_unique<MlpOracle>(std::move(train), m.model.hidden, eval);
    }
  }

  if (!m.model.theta0_path.empty()) {
    run.theta0 = load_checkpoint(m.model.theta0_path);
    if (static_cast<std::size_t>(run.theta0.size()) != run.oracle->dim()) {
      throw ConfigError("config: theta0 checkpoint length != model dimension");
    }
  } else {
    run.theta0 = random_init(run.oracle->dim(), seed);
  }
  return run;
}

void write_metrics(const std::string& path,
                   const std::vector<MetricsRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << kMetricsHeader << '\n';
  for (const MetricsRow& r : rows) {
    out << r.epoch << ',' << r.round << ',' << format_double(r.train_loss)
        << ',' << format_double(r.eval_metric) << ',' << r.up_floats << ','
        << r.down_floats << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<MetricsRow> read_metrics(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader) {
    throw std::runtime_error(path + ": bad metrics header");
  }
  std::vector<MetricsRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string field;
    MetricsRow r;
    std::getline(ss, field, ',');
    r.epoch = static_cast<std::uint32_t>(std::stoul(field));
    std::getline(ss, field, ',');
    r.round = static_cast<std::uint32_t>(std::stoul(field));
    std::getline(ss, field, ',');
    r.train_loss = std::strtod(field.c_str(), nullptr);
    std::getline(ss, field, ',');
    r.eval_metric = std::strtod(field.c_str(), nullptr);
    std::getline(ss, field, ',');
    r.up_floats = std::stoull(field);
    std::getline(ss, field, ',');
    r.down_floats = std::stoull(field);
    rows.push_back(r);
  }
  return rows;
}

void write_summary(const std::string& path, const Summary& summary) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& [k, v] : summary) out << k << '=' << v << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

Summary read_summary(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  Summary summary;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error(path + ": bad summary line: " + line);
    }
    summary.emplace_back(line.substr(0, eq), line.substr(eq + 1));
  }
  return summary;
}

RunResult execute_run(const RunManifest& manifest) {
  manifest.fed.validate();
  PreparedRun run = prepare_run(manifest);
  RunResult result = run_experiment(manifest.fed, *run.oracle, run.partition,
                                    run.theta0);
  std::filesystem::create_directories(manifest.out_dir);
  write_metrics(manifest.out_dir + "/metrics.csv", result.rows);

  Summary summary;
  summary.emplace_back("config_hash", std::to_string(manifest.config_hash()));
  summary.emplace_back("algorithm", algorithm_name(manifest.fed.algorithm));
  summary.emplace_back("model", manifest.model.model);
  summary.emplace_back("D", std::to_string(run.oracle->dim()));
  summary.emplace_back("final_metric", format_double(result.final_metric));
  summary.emplace_back("final_train_loss",
                       format_double(result.rows.back().train_loss));
  summary.emplace_back("up_floats", std::to_string(result.ledger.total_upload()));
  summary.emplace_back("down_floats",
                       std::to_string(result.ledger.total_download()));
  if (result.ledger.total_upload() > 0 && result.ledger.total_download() > 0) {
    const CompressionRatios ratios =
        compression_ratio(manifest.fed, result.ledger, run.oracle->dim());
    summary.emplace_back("upload_ratio", format_double(ratios.upload));
    summary.emplace_back("download_ratio", format_double(ratios.download));
    summary.emplace_back("overall_ratio", format_double(ratios.overall));
  }
  write_summary(manifest.out_dir + "/summary.txt", summary);
  return result;
}

}  // namespace igc
