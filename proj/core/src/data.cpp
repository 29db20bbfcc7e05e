#include "igc/data.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

#include "igc/errors.hpp"
#include "igc/rng.hpp"

namespace igc {

Dataset make_blobs(std::uint64_t seed, std::size_t examples_per_class,
                   std::size_t num_features, int num_classes,
                   double separation, std::uint64_t noise_stream) {
  Dataset ds;
  ds.seed = seed;
  ds.num_classes = num_classes;
  const std::size_t n = examples_per_class * static_cast<std::size_t>(num_classes);
  ds.features.resize(n, num_features);
  ds.labels.resize(n);

  DetRng center_rng(derive_seed(seed, 0x43454e54ULL));  // "CENT"
  Eigen::MatrixXd centers(num_classes, num_features);
  for (int c = 0; c < num_classes; ++c) {
    for (std::size_t f = 0; f < num_features; ++f) {
      centers(c, f) = center_rng.next_gaussian();
    }
    centers.row(c) *= separation / centers.row(c).norm();
  }

  DetRng noise_rng(derive_seed(derive_seed(seed, 0x424c4f42ULL),  // "BLOB"
                               noise_stream));
  std::size_t row = 0;
  for (int c = 0; c < num_classes; ++c) {
    for (std::size_t i = 0; i < examples_per_class; ++i, ++row) {
      for (std::size_t f = 0; f < num_features; ++f) {
        ds.features(row, f) = centers(c, f) + noise_rng.next_gaussian();
      }
      ds.labels[row] = c;
    }
  }
  return ds;
}

namespace {

std::uint32_t read_be32(std::ifstream& in, const std::string& path,
                        std::size_t offset) {
  unsigned char buf[4];
  in.read(reinterpret_cast<char*>(buf), 4);
  if (!in) {
    throw IngestionError(path + ": truncated at offset " +
                         std::to_string(offset));
  }
  return (std::uint32_t(buf[0]) << 24) | (std::uint32_t(buf[1]) << 16) |
         (std::uint32_t(buf[2]) << 8) | std::uint32_t(buf[3]);
}

}  // namespace

Dataset load_idx_dataset(const std::string& images_path,
                         const std::string& labels_path) {
  std::ifstream img(images_path, std::ios::binary);
  if (!img) throw IngestionError(images_path + ": cannot open");
  const std::uint32_t img_magic = read_be32(img, images_path, 0);
  if (img_magic != 0x00000803u) {
    throw IngestionError(images_path + ": bad magic number at offset 0");
  }
  const std::uint32_t count = read_be32(img, images_path, 4);
  const std::uint32_t rows = read_be32(img, images_path, 8);
  const std::uint32_t cols = read_be32(img, images_path, 12);
  const std::size_t pixels = std::size_t(rows) * cols;
  std::vector<unsigned char> raw(std::size_t(count) * pixels);
  img.read(reinterpret_cast<char*>(raw.data()),
           static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(img.gcount()) != raw.size()) {
    throw IngestionError(images_path + ": truncated at offset " +
                         std::to_string(16 + img.gcount()));
  }

  std::ifstream lab(labels_path, std::ios::binary);
  if (!lab) throw IngestionError(labels_path + ": cannot open");
  const std::uint32_t lab_magic = read_be32(lab, labels_path, 0);
  if (lab_magic != 0x00000801u) {
    throw IngestionError(labels_path + ": bad magic number at offset 0");
  }
  const std::uint32_t lab_count = read_be32(lab, labels_path, 4);
  if (lab_count != count) {
    throw IngestionError(labels_path + ": label count " +
                         std::to_string(lab_count) + " != image count " +
                         std::to_string(count));
  }
  std::vector<unsigned char> label_raw(lab_count);
  lab.read(reinterpret_cast<char*>(label_raw.data()),
           static_cast<std::streamsize>(label_raw.size()));
  if (static_cast<std::size_t>(lab.gcount()) != label_raw.size()) {
    throw IngestionError(labels_path + ": truncated at offset " +
                         std::to_string(8 + lab.gcount()));
  }

  Dataset ds;
  ds.features.resize(count, pixels);
  ds.labels.resize(count);
  int max_label = 0;
  for (std::uint32_t i = 0; i < count; ++i) {
    for (std::size_t p = 0; p < pixels; ++p) {
      ds.features(i, p) = raw[i * pixels + p] / 255.0;
    }
    ds.labels[i] = label_raw[i];
    max_label = std::max(max_label, int(label_raw[i]));
  }
  ds.num_classes = max_label + 1;
  return ds;
}

void save_checkpoint(const std::string& path, const Eigen::VectorXd& theta) {
  static_assert(std::endian::native == std::endian::little,
                "checkpoint io assumes a little-endian host");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IngestionError(path + ": cannot open for writing");
  const std::uint64_t n = static_cast<std::uint64_t>(theta.size());
  out.write(reinterpret_cast<const char*>(&n), 8);
  for (std::uint64_t i = 0; i < n; ++i) {
    const float v = static_cast<float>(theta[static_cast<Eigen::Index>(i)]);
    out.write(reinterpret_cast<const char*>(&v), 4);
  }
  if (!out) throw IngestionError(path + ": write failed");
}

Eigen::VectorXd load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError(path + ": cannot open");
  std::uint64_t n = 0;
  in.read(reinterpret_cast<char*>(&n), 8);
  if (!in) throw IngestionError(path + ": truncated header");
  Eigen::VectorXd theta(static_cast<Eigen::Index>(n));
  for (std::uint64_t i = 0; i < n; ++i) {
    float v;
    in.read(reinterpret_cast<char*>(&v), 4);
    if (!in) {
      throw IngestionError(path + ": truncated at offset " +
                           std::to_string(8 + 4 * i));
    }
    theta[static_cast<Eigen::Index>(i)] = v;
  }
  return theta;
}

}  // namespace igc
