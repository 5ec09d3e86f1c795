#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "pwprox/common.hpp"
#include "pwprox/smooth.hpp"

namespace pwprox {

/// Platform-independent draws on top of mt19937_64 (whose output sequence is
/// fixed by the standard, unlike the std distributions).
double uniform01(std::mt19937_64& rng);
double standard_normal(std::mt19937_64& rng);
/// Uniform integer in [0, n) by rejection sampling.
std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t n);

/// Reads a big-endian IDX image file (magic 2051) and label file (magic 2049).
/// Pixels are scaled to [0, 1]; labels keep their raw digit values.
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

/// Writes features (rounded to bytes after scaling by 255) and labels in IDX
/// format. `rows * cols` must equal the feature dimension.
void write_idx(const Dataset& data, int rows, int cols, const std::string& images_path, const std::string& labels_path);

/// Keeps `per_class` random examples of each class; class_a maps to +1 and
/// class_b to -1. Samples keep their original relative order.
Dataset subsample_binary(const Dataset& data, double class_a, double class_b, std::size_t per_class,
                         std::uint64_t seed);

/// Numeric CSV, one sample per line, last column is the label.
/// `header` skips the first line.
Dataset load_csv(const std::string& path, bool header = false);

struct SynthSpec {
  LossKind kind = LossKind::least_squares;
  std::size_t n = 100;
  std::size_t d = 10;
  double sparsity = 0.1;  ///< fraction of nonzero coordinates in the planted x*
  double noise = 0.0;
  double feature_scale = 1.0;
  std::uint64_t seed = 0;
};

struct SynthResult {
  Dataset data;
  Vector x_true;
};

/// Gaussian features times feature_scale and a planted sparse x* whose
/// nonzeros have magnitude in [1, 2]. Labels are A x* + noise for least
/// squares and sign(A x* + noise) for logistic.
SynthResult synth(const SynthSpec& spec);

}  // namespace pwprox
