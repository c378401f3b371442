#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include "pilot/errors.hpp"
#include "pilot/models.hpp"
#include "pilot/rng.hpp"
#include "pilot/vector_ops.hpp"

namespace pilot {

struct Normalization {
  double mean = 0.2860;  // FashionMNIST training-split defaults
  double stddev = 0.3530;
};

/// In-memory dataset: flat normalized features plus integer labels.
/// Immutable after load; shareable read-only across parallel runs.
struct Dataset {
  std::vector<double> inputs;  // count * dim, row-major
  std::vector<int> labels;
  std::size_t dim = 0;
  std::size_t count = 0;
  std::size_t class_count = 0;
  Normalization normalization;  // identity (0, 1) for synthetic features

  Batch whole() const { return Batch{inputs, labels, count}; }
};

namespace detail {

inline std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return bytes;
}

inline std::uint32_t read_be_u32(const std::vector<std::uint8_t>& bytes,
                                 std::size_t offset, const std::string& path) {
  if (offset + 4 > bytes.size()) {
    throw DataError("'" + path + "': truncated, need 4 bytes at offset " +
                    std::to_string(offset) + " but file has " +
                    std::to_string(bytes.size()));
  }
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

inline std::string hex_u32(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "0x%08x", v);
  return buf;
}

}  // namespace detail

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;  // ubyte, 3 dims
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;  // ubyte, 1 dim

/// Loads an IDX image/label file pair (the MNIST-family container: big-endian
/// u32 magic, big-endian u32 dimension sizes, then raw unsigned bytes
/// row-major). Pixels are scaled to [0,1] and normalized with (mean, std).
inline Dataset load_idx(const std::string& images_path, const std::string& labels_path,
                        Normalization norm = {}, std::size_t class_count = 10) {
  const auto img_bytes = detail::read_file_bytes(images_path);
  const auto lab_bytes = detail::read_file_bytes(labels_path);

  const std::uint32_t img_magic = detail::read_be_u32(img_bytes, 0, images_path);
  if (img_magic != kIdxImagesMagic) {
    throw DataError("'" + images_path + "': expected image magic " +
                    detail::hex_u32(kIdxImagesMagic) + " at offset 0, found " +
                    detail::hex_u32(img_magic));
  }
  const std::uint32_t lab_magic = detail::read_be_u32(lab_bytes, 0, labels_path);
  if (lab_magic != kIdxLabelsMagic) {
    throw DataError("'" + labels_path + "': expected label magic " +
                    detail::hex_u32(kIdxLabelsMagic) + " at offset 0, found " +
                    detail::hex_u32(lab_magic));
  }

  const std::uint32_t img_count = detail::read_be_u32(img_bytes, 4, images_path);
  const std::uint32_t rows = detail::read_be_u32(img_bytes, 8, images_path);
  const std::uint32_t cols = detail::read_be_u32(img_bytes, 12, images_path);
  const std::uint32_t lab_count = detail::read_be_u32(lab_bytes, 4, labels_path);
  if (img_count != lab_count) {
    throw DataError("count mismatch: '" + images_path + "' holds " +
                    std::to_string(img_count) + " images but '" + labels_path +
                    "' holds " + std::to_string(lab_count) + " labels");
  }

  const std::size_t dim = static_cast<std::size_t>(rows) * cols;
  const std::size_t want_img = 16 + static_cast<std::size_t>(img_count) * dim;
  if (img_bytes.size() < want_img) {
    throw DataError("'" + images_path + "': truncated at offset " +
                    std::to_string(img_bytes.size()) + ", expected " +
                    std::to_string(want_img) + " bytes total");
  }
  const std::size_t want_lab = 8 + static_cast<std::size_t>(lab_count);
  if (lab_bytes.size() < want_lab) {
    throw DataError("'" + labels_path + "': truncated at offset " +
                    std::to_string(lab_bytes.size()) + ", expected " +
                    std::to_string(want_lab) + " bytes total");
  }

  Dataset ds;
  ds.dim = dim;
  ds.count = img_count;
  ds.class_count = class_count;
  ds.normalization = norm;
  ds.inputs.resize(ds.count * dim);
  ds.labels.resize(ds.count);
  for (std::size_t i = 0; i < ds.count * dim; ++i) {
    const double pixel = static_cast<double>(img_bytes[16 + i]) / 255.0;
    ds.inputs[i] = (pixel - norm.mean) / norm.stddev;
  }
  for (std::size_t i = 0; i < ds.count; ++i) {
    const int label = lab_bytes[8 + i];
    if (static_cast<std::size_t>(label) >= class_count) {
      throw DataError("'" + labels_path + "': label " + std::to_string(label) +
                      " at record " + std::to_string(i) + " exceeds class count " +
                      std::to_string(class_count));
    }
    ds.labels[i] = label;
  }
  return ds;
}

/// Raw ubyte image set, the pre-normalization form that IDX files store.
struct RawImages {
  std::vector<std::uint8_t> pixels;  // count * rows * cols
  std::vector<std::uint8_t> labels;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t count = 0;
};

/// Writes the IDX pair bit-exactly: big-endian headers then raw bytes.
inline void write_idx(const RawImages& raw, const std::string& images_path,
                      const std::string& labels_path) {
  auto put_be = [](std::ofstream& out, std::uint32_t v) {
    const std::uint8_t b[4] = {static_cast<std::uint8_t>(v >> 24),
                               static_cast<std::uint8_t>(v >> 16),
                               static_cast<std::uint8_t>(v >> 8),
                               static_cast<std::uint8_t>(v)};
    out.write(reinterpret_cast<const char*>(b), 4);
  };
  std::ofstream img(images_path, std::ios::binary);
  if (!img) throw IoError("cannot open '" + images_path + "' for writing");
  put_be(img, kIdxImagesMagic);
  put_be(img, static_cast<std::uint32_t>(raw.count));
  put_be(img, static_cast<std::uint32_t>(raw.rows));
  put_be(img, static_cast<std::uint32_t>(raw.cols));
  img.write(reinterpret_cast<const char*>(raw.pixels.data()),
            static_cast<std::streamsize>(raw.pixels.size()));
  if (!img.good()) throw IoError("write to '" + images_path + "' failed");

  std::ofstream lab(labels_path, std::ios::binary);
  if (!lab) throw IoError("cannot open '" + labels_path + "' for writing");
  put_be(lab, kIdxLabelsMagic);
  put_be(lab, static_cast<std::uint32_t>(raw.count));
  lab.write(reinterpret_cast<const char*>(raw.labels.data()),
            static_cast<std::streamsize>(raw.labels.size()));
  if (!lab.good()) throw IoError("write to '" + labels_path + "' failed");
}

/// Class-conditional unit Gaussians whose means sit on a randomly oriented
/// regular simplex scaled so every pair of means is `separation` apart.
/// Labels cycle round-robin; everything is deterministic per seed.
inline Dataset synthetic_gaussian(std::size_t classes, std::size_t dim,
                                  std::size_t count, double separation,
                                  std::uint64_t seed) {
  if (classes < 2) throw ContractViolation("synthetic_gaussian: classes must be >= 2");
  if (dim < classes) {
    throw ContractViolation("synthetic_gaussian: dim must be >= classes for the simplex");
  }
  if (!(separation > 0.0)) {
    throw ContractViolation("synthetic_gaussian: separation must be > 0");
  }
  Rng rng(seed);

  // Orthonormal directions via Gram-Schmidt on Gaussian draws; scaling by
  // separation/sqrt(2) makes all pairwise mean distances equal `separation`.
  std::vector<DenseVector> axes(classes);
  for (std::size_t c = 0; c < classes; ++c) {
    DenseVector v(dim);
    while (true) {
      for (double& x : v) x = rng.normal();
      for (std::size_t j = 0; j < c; ++j) {
        const double proj = dot(v, axes[j]);
        for (std::size_t i = 0; i < dim; ++i) v[i] -= proj * axes[j][i];
      }
      const double norm = l2_norm(v);
      if (norm > 1e-6) {
        for (double& x : v) x /= norm;
        break;
      }
    }
    axes[c] = v;
  }
  const double scale = separation / std::sqrt(2.0);
  std::vector<DenseVector> means(classes, DenseVector(dim, 0.0));
  DenseVector centroid(dim, 0.0);
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t i = 0; i < dim; ++i) {
      means[c][i] = scale * axes[c][i];
      centroid[i] += means[c][i] / static_cast<double>(classes);
    }
  }
  for (auto& mean : means) {
    for (std::size_t i = 0; i < dim; ++i) mean[i] -= centroid[i];
  }

  Dataset ds;
  ds.dim = dim;
  ds.count = count;
  ds.class_count = classes;
  ds.normalization = Normalization{0.0, 1.0};
  ds.inputs.resize(count * dim);
  ds.labels.resize(count);
  for (std::size_t e = 0; e < count; ++e) {
    const std::size_t c = e % classes;
    ds.labels[e] = static_cast<int>(c);
    for (std::size_t i = 0; i < dim; ++i) {
      ds.inputs[e * dim + i] = means[c][i] + rng.normal();
    }
  }
  return ds;
}

/// Deterministic image-classification surrogate: each class is a smooth
/// random blob template; samples apply random gain, offset and pixel noise.
/// Intended for offline environments where the real IDX benchmark files are
/// not present (pair with write_idx / load_idx).
inline RawImages synthetic_image_dataset(std::size_t classes, std::size_t side,
                                         std::size_t count, double noise,
                                         std::uint64_t seed) {
  if (classes < 2 || classes > 255) {
    throw ContractViolation("synthetic_image_dataset: classes must be in [2, 255]");
  }
  if (side < 4) throw ContractViolation("synthetic_image_dataset: side must be >= 4");
  Rng rng(seed);
  const std::size_t dim = side * side;

  // Blob templates in [0, 1].
  std::vector<DenseVector> templates(classes, DenseVector(dim, 0.0));
  for (auto& temple : templates) {
    constexpr int kBlobs = 6;
    for (int b = 0; b < kBlobs; ++b) {
      const double cx = rng.uniform(0.15, 0.85) * static_cast<double>(side);
      const double cy = rng.uniform(0.15, 0.85) * static_cast<double>(side);
      const double sigma = rng.uniform(0.08, 0.22) * static_cast<double>(side);
      const double amp = (rng.u01() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.5, 1.0);
      for (std::size_t y = 0; y < side; ++y) {
        for (std::size_t x = 0; x < side; ++x) {
          const double dx = (static_cast<double>(x) - cx) / sigma;
          const double dy = (static_cast<double>(y) - cy) / sigma;
          temple[y * side + x] += amp * std::exp(-0.5 * (dx * dx + dy * dy));
        }
      }
    }
    const auto [lo, hi] = std::minmax_element(temple.begin(), temple.end());
    const double span = std::max(*hi - *lo, 1e-12);
    for (double& p : temple) p = (p - *lo) / span;
  }

  RawImages raw;
  raw.rows = side;
  raw.cols = side;
  raw.count = count;
  raw.pixels.resize(count * dim);
  raw.labels.resize(count);
  for (std::size_t e = 0; e < count; ++e) {
    const std::size_t c = e % classes;
    raw.labels[e] = static_cast<std::uint8_t>(c);
    const double gain = rng.uniform(0.7, 1.3);
    const double offset = rng.uniform(-0.1, 0.1);
    for (std::size_t i = 0; i < dim; ++i) {
      const double value =
          std::clamp(gain * templates[c][i] + offset + noise * rng.normal(), 0.0, 1.0);
      raw.pixels[e * dim + i] = static_cast<std::uint8_t>(std::lround(value * 255.0));
    }
  }
  return raw;
}

/// Deterministic epoch shuffling: identical (seed, epoch) gives an identical
/// permutation; the final partial batch is kept.
struct BatchPlan {
  std::size_t batch_size = 128;
  std::uint64_t seed = 42;

  std::vector<std::uint32_t> permutation(std::size_t count, std::uint32_t epoch) const {
    std::vector<std::uint32_t> perm(count);
    for (std::size_t i = 0; i < count; ++i) perm[i] = static_cast<std::uint32_t>(i);
    Rng rng(mix_seed(seed, 0x9e3779b9ULL + epoch));
    rng.shuffle(perm);
    return perm;
  }
};

/// One epoch of shuffled mini-batches over a dataset.
class BatchSequence {
 public:
  BatchSequence(const Dataset& ds, const BatchPlan& plan, std::uint32_t epoch)
      : ds_(&ds), batch_size_(plan.batch_size) {
    if (plan.batch_size == 0 || plan.batch_size > ds.count) {
      throw ContractViolation("BatchSequence: batch_size must be in [1, count]");
    }
    perm_ = plan.permutation(ds.count, epoch);
  }

  std::size_t batch_count() const {
    return (ds_->count + batch_size_ - 1) / batch_size_;
  }

  /// Gathers batch `index` into internal scratch and returns views over it.
  Batch batch(std::size_t index) {
    const std::size_t begin = index * batch_size_;
    if (begin >= ds_->count) {
      throw ContractViolation("BatchSequence: batch index out of range");
    }
    const std::size_t len = std::min(batch_size_, ds_->count - begin);
    inputs_.resize(len * ds_->dim);
    labels_.resize(len);
    for (std::size_t e = 0; e < len; ++e) {
      const std::size_t src = perm_[begin + e];
      std::copy_n(ds_->inputs.begin() + static_cast<std::ptrdiff_t>(src * ds_->dim),
                  ds_->dim, inputs_.begin() + static_cast<std::ptrdiff_t>(e * ds_->dim));
      labels_[e] = ds_->labels[src];
    }
    return Batch{inputs_, labels_, len};
  }

  const std::vector<std::uint32_t>& permutation() const { return perm_; }

 private:
  const Dataset* ds_;
  std::size_t batch_size_;
  std::vector<std::uint32_t> perm_;
  std::vector<double> inputs_;
  std::vector<int> labels_;
};

}  // namespace pilot
