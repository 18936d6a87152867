#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace infomorph {

enum class SplitRole { train, validation, test };

// Images are flattened row-major with pixel values scaled to [0, 1].
struct DatasetSplit {
  std::size_t n_samples = 0;
  int rows = 0;
  int cols = 0;
  std::vector<float> images;   // n_samples * rows * cols
  std::vector<std::uint8_t> labels;
  SplitRole role = SplitRole::train;

  int sample_dim() const { return rows * cols; }
  const float* image(std::size_t i) const { return images.data() + i * sample_dim(); }
};

// Parses big-endian IDX files (magic 0x803 for images, 0x801 for labels).
// Gzip-compressed files are detected by their magic bytes and inflated
// transparently. Throws DataError on bad magic, truncation, or mismatched
// image/label counts.
DatasetSplit load_idx(const std::string& images_path, const std::string& labels_path,
                      SplitRole role = SplitRole::train);

// Seeded random partition into (train, validation); fraction must be in (0,1).
std::pair<DatasetSplit, DatasetSplit> split_train_validation(const DatasetSplit& split,
                                                             double fraction,
                                                             std::uint64_t seed);

// Epoch-seeded shuffled batches of sample indices; the final short batch is
// included. The union of batches is exactly [0, n_samples).
std::vector<std::vector<std::uint32_t>> batches(std::size_t n_samples,
                                                std::size_t batch_size,
                                                std::uint64_t seed,
                                                std::uint64_t epoch);

// Standard file names, with .gz fallbacks, resolved against a directory.
struct MnistPaths {
  std::string train_images, train_labels, test_images, test_labels;
};
MnistPaths locate_mnist(const std::string& data_dir);  // throws DataError if absent
bool mnist_available(const std::string& data_dir);

}  // namespace infomorph
