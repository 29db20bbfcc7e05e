#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>

namespace igc {

// In-memory dataset: one example per row. Reproducible from its seed.
struct Dataset {
  Eigen::MatrixXd features;  // num_examples x num_features
  Eigen::VectorXi labels;
  int num_classes = 0;
  std::uint64_t seed = 0;

  std::size_t size() const { return static_cast<std::size_t>(features.rows()); }
  std::size_t num_features() const {
    return static_cast<std::size_t>(features.cols());
  }
};

// Gaussian blobs, one per class, with centers of norm `separation` and unit
// within-class noise. separation >> 1 gives linearly separable data with a
// comfortable margin.
// `noise_stream` selects an independent noise draw with the same class
// centers (0 = train split, 1 = held-out split, ...).
Dataset make_blobs(std::uint64_t seed, std::size_t examples_per_class,
                   std::size_t num_features, int num_classes,
                   double separation, std::uint64_t noise_stream = 0);

// IDX-format ingestion (big-endian magic + dims + raw bytes), the format used
// by MNIST-style archives. Pixel values are scaled to [0, 1]. Throws
// IngestionError naming the byte offset on malformed input.
Dataset load_idx_dataset(const std::string& images_path,
                         const std::string& labels_path);

// Raw parameter checkpoint: 8-byte little-endian length header followed by
// 32-bit little-endian floats.
void save_checkpoint(const std::string& path, const Eigen::VectorXd& theta);
Eigen::VectorXd load_checkpoint(const std::string& path);

}  // namespace igc
