#include "pwprox/data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <numbers>
#include <sstream>
#include <vector>

namespace pwprox {

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double standard_normal(std::mt19937_64& rng) {
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t n) {
  if (n == 0) throw ModelError("uniform_index: empty range");
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t r = rng();
  while (r >= limit) r = rng();
  return r % n;
}

namespace {

constexpr std::uint32_t kImageMagic = 2051;
constexpr std::uint32_t kLabelMagic = 2049;

std::vector<unsigned char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelError("cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_u32(const std::vector<unsigned char>& buf, std::size_t offset, const std::string& path) {
  if (buf.size() < offset + 4) throw ModelError("truncated IDX header in '" + path + "'");
  return (std::uint32_t{buf[offset]} << 24) | (std::uint32_t{buf[offset + 1]} << 16) |
         (std::uint32_t{buf[offset + 2]} << 8) | std::uint32_t{buf[offset + 3]};
}

void write_u32(std::ofstream& out, std::uint32_t v) {
  const std::array<char, 4> b{static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8),
                              static_cast<char>(v)};
  out.write(b.data(), 4);
}

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
  const auto img = read_file(images_path);
  const auto lab = read_file(labels_path);

  const std::uint32_t img_magic = read_u32(img, 0, images_path);
  if (img_magic != kImageMagic) {
    throw ModelError("'" + images_path + "': image magic " + std::to_string(img_magic) + ", expected 2051");
  }
  const std::uint32_t lab_magic = read_u32(lab, 0, labels_path);
  if (lab_magic != kLabelMagic) {
    throw ModelError("'" + labels_path + "': label magic " + std::to_string(lab_magic) + ", expected 2049");
  }
  const std::uint64_t count = read_u32(img, 4, images_path);
  const std::uint64_t rows = read_u32(img, 8, images_path);
  const std::uint64_t cols = read_u32(img, 12, images_path);
  const std::uint64_t label_count = read_u32(lab, 4, labels_path);
  if (count != label_count) {
    throw ModelError("image count " + std::to_string(count) + " does not match label count " +
                     std::to_string(label_count));
  }
  if (count == 0 || rows == 0 || cols == 0) throw ModelError("'" + images_path + "' holds no pixels");
  const std::uint64_t d = rows * cols;
  if (img.size() != 16 + count * d) {
    throw ModelError("'" + images_path + "' has " + std::to_string(img.size()) + " bytes, expected " +
                     std::to_string(16 + count * d));
  }
  if (lab.size() != 8 + count) {
    throw ModelError("'" + labels_path + "' has " + std::to_string(lab.size()) + " bytes, expected " +
                     std::to_string(8 + count));
  }

  Dataset out;
  out.features.resize(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(d));
  out.labels.resize(static_cast<Eigen::Index>(count));
  for (std::uint64_t i = 0; i < count; ++i) {
    for (std::uint64_t j = 0; j < d; ++j) {
      out.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = img[16 + i * d + j] / 255.0;
    }
    out.labels[static_cast<Eigen::Index>(i)] = lab[8 + i];
  }
  return out;
}

void write_idx(const Dataset& data, int rows, int cols, const std::string& images_path,
               const std::string& labels_path) {
  if (rows <= 0 || cols <= 0 || static_cast<Eigen::Index>(rows) * cols != data.d()) {
    throw ModelError("write_idx: rows * cols must equal the feature dimension");
  }
  if (data.labels.size() != data.n()) throw ModelError("write_idx: label count mismatch");
  std::ofstream img(images_path, std::ios::binary);
  std::ofstream lab(labels_path, std::ios::binary);
  if (!img || !lab) throw ModelError("write_idx: cannot open output files");
  write_u32(img, kImageMagic);
  write_u32(img, static_cast<std::uint32_t>(data.n()));
  write_u32(img, static_cast<std::uint32_t>(rows));
  write_u32(img, static_cast<std::uint32_t>(cols));
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    for (Eigen::Index j = 0; j < data.d(); ++j) {
      const double v = std::clamp(data.features(i, j), 0.0, 1.0);
      img.put(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
    }
  }
  write_u32(lab, kLabelMagic);
  write_u32(lab, static_cast<std::uint32_t>(data.n()));
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    const double y = data.labels[i];
    if (!(y >= 0.0 && y <= 255.0) || y != std::floor(y)) throw ModelError("write_idx: labels must be integers in [0, 255]");
    lab.put(static_cast<char>(static_cast<unsigned char>(y)));
  }
  if (!img || !lab) throw ModelError("write_idx: write failed");
}

Dataset subsample_binary(const Dataset& data, double class_a, double class_b, std::size_t per_class,
                         std::uint64_t seed) {
  if (class_a == class_b) throw ModelError("subsample_binary: the two classes must differ");
  std::mt19937_64 rng(seed);
  std::vector<Eigen::Index> keep;
  for (double cls : {class_a, class_b}) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < data.labels.size(); ++i) {
      if (data.labels[i] == cls) idx.push_back(i);
    }
    if (idx.size() < per_class) {
      throw ModelError("class " + std::to_string(cls) + " has " + std::to_string(idx.size()) + " examples, " +
                       std::to_string(per_class) + " requested");
    }
    for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[uniform_index(rng, i)]);
    keep.insert(keep.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(per_class));
  }
  std::sort(keep.begin(), keep.end());

  Dataset out;
  out.features.resize(static_cast<Eigen::Index>(keep.size()), data.d());
  out.labels.resize(static_cast<Eigen::Index>(keep.size()));
  for (std::size_t r = 0; r < keep.size(); ++r) {
    const auto row = static_cast<Eigen::Index>(r);
    out.features.row(row) = data.features.row(keep[r]);
    out.labels[row] = data.labels[keep[r]] == class_a ? 1.0 : -1.0;
  }
  return out;
}

Dataset load_csv(const std::string& path, bool header) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (header && lineno == 1) continue;
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(cell, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || cell.find_first_not_of(" \t", used) != std::string::npos) {
        throw ModelError("'" + path + "' line " + std::to_string(lineno) + ": non-numeric cell '" + cell + "'");
      }
      row.push_back(v);
    }
    if (!line.empty() && line.back() == ',') {
      throw ModelError("'" + path + "' line " + std::to_string(lineno) + ": empty trailing cell");
    }
    if (row.size() < 2) throw ModelError("'" + path + "' line " + std::to_string(lineno) + ": need features and a label");
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ModelError("'" + path + "' line " + std::to_string(lineno) + ": ragged row (" + std::to_string(row.size()) +
                       " cells, expected " + std::to_string(rows.front().size()) + ")");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ModelError("'" + path + "' contains no data");

  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto d = static_cast<Eigen::Index>(rows.front().size() - 1);
  Dataset out;
  out.features.resize(n, d);
  out.labels.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < d; ++j) out.features(i, j) = r[static_cast<std::size_t>(j)];
    out.labels[i] = r.back();
  }
  return out;
}

SynthResult synth(const SynthSpec& spec) {
  if (spec.n < 1 || spec.d < 1) throw ModelError("synth: n and d must be positive");
  if (!(spec.sparsity > 0.0 && spec.sparsity <= 1.0)) throw ModelError("synth: sparsity must lie in (0, 1]");
  if (!(spec.noise >= 0.0)) throw ModelError("synth: noise must be nonnegative");
  std::mt19937_64 rng(spec.seed);
  const auto n = static_cast<Eigen::Index>(spec.n);
  const auto d = static_cast<Eigen::Index>(spec.d);

  SynthResult out;
  out.x_true = Vector::Zero(d);
  const auto nnz = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(spec.sparsity * static_cast<double>(spec.d))));
  std::vector<Eigen::Index> perm(spec.d);
  for (std::size_t i = 0; i < spec.d; ++i) perm[i] = static_cast<Eigen::Index>(i);
  for (std::size_t i = spec.d; i > 1; --i) std::swap(perm[i - 1], perm[uniform_index(rng, i)]);
  for (std::size_t j = 0; j < nnz; ++j) {
    const double mag = 1.0 + uniform01(rng);
    out.x_true[perm[j]] = uniform01(rng) < 0.5 ? -mag : mag;
  }

  out.data.features.resize(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) out.data.features(i, j) = spec.feature_scale * standard_normal(rng);
  }
  const Vector clean = out.data.features * out.x_true;
  out.data.labels.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double y = clean[i] + spec.noise * standard_normal(rng);
    out.data.labels[i] = spec.kind == LossKind::least_squares ? y : (y >= 0.0 ? 1.0 : -1.0);
  }
  return out;
}

}  // namespace pwprox
