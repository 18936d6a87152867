#include "infomorph/dataset.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "infomorph/errors.hpp"
#include "infomorph/rng.hpp"

namespace infomorph {

namespace {

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return bytes;
}

std::vector<std::uint8_t> gunzip(const std::vector<std::uint8_t>& compressed,
                                 const std::string& path) {
  z_stream zs{};
  if (inflateInit2(&zs, 15 + 32) != Z_OK) {  // accept zlib and gzip headers
    throw DataError("zlib init failed for " + path);
  }
  std::vector<std::uint8_t> out;
  out.reserve(compressed.size() * 4);
  std::uint8_t buffer[1 << 16];
  zs.next_in = const_cast<Bytef*>(compressed.data());
  zs.avail_in = static_cast<uInt>(compressed.size());
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    zs.next_out = buffer;
    zs.avail_out = sizeof(buffer);
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      throw DataError("corrupt gzip stream in " + path);
    }
    out.insert(out.end(), buffer, buffer + (sizeof(buffer) - zs.avail_out));
  }
  inflateEnd(&zs);
  return out;
}

std::vector<std::uint8_t> read_maybe_gzipped(const std::string& path) {
  auto bytes = read_file(path);
  if (bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b) {
    return gunzip(bytes, path);
  }
  return bytes;
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& bytes, std::size_t offset,
                        const std::string& path) {
  if (offset + 4 > bytes.size()) {
    throw DataError("truncated IDX header in " + path);
  }
  return (static_cast<std::uint32_t>(bytes[offset]) << 24) |
         (static_cast<std::uint32_t>(bytes[offset + 1]) << 16) |
         (static_cast<std::uint32_t>(bytes[offset + 2]) << 8) |
         static_cast<std::uint32_t>(bytes[offset + 3]);
}

}  // namespace

DatasetSplit load_idx(const std::string& images_path, const std::string& labels_path,
                      SplitRole role) {
  const auto image_bytes = read_maybe_gzipped(images_path);
  const auto label_bytes = read_maybe_gzipped(labels_path);

  const std::uint32_t image_magic = read_be32(image_bytes, 0, images_path);
  if (image_magic != 0x00000803u) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "0x%08x", image_magic);
    throw DataError("bad IDX image magic " + std::string(buf) + " in " + images_path);
  }
  const std::uint32_t n_images = read_be32(image_bytes, 4, images_path);
  const std::uint32_t rows = read_be32(image_bytes, 8, images_path);
  const std::uint32_t cols = read_be32(image_bytes, 12, images_path);
  const std::size_t expected_image_bytes =
      16 + static_cast<std::size_t>(n_images) * rows * cols;
  if (image_bytes.size() != expected_image_bytes) {
    throw DataError("truncated IDX image file " + images_path + ": expected " +
                    std::to_string(expected_image_bytes) + " bytes, got " +
                    std::to_string(image_bytes.size()));
  }

  const std::uint32_t label_magic = read_be32(label_bytes, 0, labels_path);
  if (label_magic != 0x00000801u) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "0x%08x", label_magic);
    throw DataError("bad IDX label magic " + std::string(buf) + " in " + labels_path);
  }
  const std::uint32_t n_labels = read_be32(label_bytes, 4, labels_path);
  const std::size_t expected_label_bytes = 8 + static_cast<std::size_t>(n_labels);
  if (label_bytes.size() != expected_label_bytes) {
    throw DataError("truncated IDX label file " + labels_path + ": expected " +
                    std::to_string(expected_label_bytes) + " bytes, got " +
                    std::to_string(label_bytes.size()));
  }
  if (n_images != n_labels) {
    throw DataError("image/label count mismatch: " + std::to_string(n_images) + " vs " +
                    std::to_string(n_labels));
  }

  DatasetSplit split;
  split.n_samples = n_images;
  split.rows = static_cast<int>(rows);
  split.cols = static_cast<int>(cols);
  split.role = role;
  split.images.resize(static_cast<std::size_t>(n_images) * rows * cols);
  for (std::size_t i = 0; i < split.images.size(); ++i) {
    split.images[i] = static_cast<float>(image_bytes[16 + i]) / 255.0f;
  }
  split.labels.assign(label_bytes.begin() + 8, label_bytes.end());
  return split;
}

std::pair<DatasetSplit, DatasetSplit> split_train_validation(const DatasetSplit& split,
                                                             double fraction,
                                                             std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw ConfigError("validation fraction must be in (0, 1)");
  }
  const std::size_t n = split.n_samples;
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  Rng64 rng(counter_hash({seed, 0x5917ULL}));
  for (std::size_t i = n; i > 1; --i) {
    std::swap(order[i - 1], order[rng.below(i)]);
  }
  const std::size_t n_validation = static_cast<std::size_t>(
      std::llround(fraction * static_cast<double>(n)));

  const int dim = split.sample_dim();
  auto take = [&](std::size_t begin, std::size_t count, SplitRole role) {
    DatasetSplit out;
    out.n_samples = count;
    out.rows = split.rows;
    out.cols = split.cols;
    out.role = role;
    out.images.resize(count * dim);
    out.labels.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
      const std::uint32_t src = order[begin + i];
      std::copy_n(split.image(src), dim, out.images.data() + i * dim);
      out.labels[i] = split.labels[src];
    }
    return out;
  };
  DatasetSplit validation = take(0, n_validation, SplitRole::validation);
  DatasetSplit train = take(n_validation, n - n_validation, SplitRole::train);
  return {std::move(train), std::move(validation)};
}

std::vector<std::vector<std::uint32_t>> batches(std::size_t n_samples,
                                                std::size_t batch_size,
                                                std::uint64_t seed,
                                                std::uint64_t epoch) {
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  std::vector<std::uint32_t> order(n_samples);
  std::iota(order.begin(), order.end(), 0u);
  Rng64 rng(counter_hash({seed, 0xBA7C4ULL, epoch}));
  for (std::size_t i = n_samples; i > 1; --i) {
    std::swap(order[i - 1], order[rng.below(i)]);
  }
  std::vector<std::vector<std::uint32_t>> out;
  for (std::size_t start = 0; start < n_samples; start += batch_size) {
    const std::size_t end = std::min(start + batch_size, n_samples);
    out.emplace_back(order.begin() + start, order.begin() + end);
  }
  return out;
}

namespace {

std::string resolve_with_gz(const std::string& dir, const std::string& name) {
  namespace fs = std::filesystem;
  const std::string plain = dir + "/" + name;
  if (fs::exists(plain)) return plain;
  const std::string gz = plain + ".gz";
  if (fs::exists(gz)) return gz;
  return {};
}

}  // namespace

MnistPaths locate_mnist(const std::string& data_dir) {
  MnistPaths paths;
  paths.train_images = resolve_with_gz(data_dir, "train-images-idx3-ubyte");
  paths.train_labels = resolve_with_gz(data_dir, "train-labels-idx1-ubyte");
  paths.test_images = resolve_with_gz(data_dir, "t10k-images-idx3-ubyte");
  paths.test_labels = resolve_with_gz(data_dir, "t10k-labels-idx1-ubyte");
  if (paths.train_images.empty() || paths.train_labels.empty() ||
      paths.test_images.empty() || paths.test_labels.empty()) {
    throw DataError("MNIST IDX files not found under '" + data_dir +
                    "' (expected train-images-idx3-ubyte etc., optionally .gz)");
  }
  return paths;
}

bool mnist_available(const std::string& data_dir) {
  try {
    locate_mnist(data_dir);
    return true;
  } catch (const DataError&) {
    return false;
  }
}

}  // namespace infomorph
