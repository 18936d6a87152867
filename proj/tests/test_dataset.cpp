#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <zlib.h>
#include <unistd.h>

#include <array>
#include <cstdlib>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "helpers/synthetic.hpp"
#include "infomorph/dataset.hpp"
#include "infomorph/errors.hpp"

using namespace infomorph;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("infomorph_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

void gzip_file(const std::string& src, const std::string& dst) {
  std::ifstream in(src, std::ios::binary);
  const std::string bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  gzFile out = gzopen(dst.c_str(), "wb");
  REQUIRE(out != nullptr);
  gzwrite(out, bytes.data(), static_cast<unsigned>(bytes.size()));
  gzclose(out);
}

}  // namespace

TEST_CASE("synthetic IDX round trip preserves tensors") {
  TempDir dir;
  const auto split = synthetic::prototype_task(4, 37, 5, 0.4, 99, 99, SplitRole::train);
  synthetic::write_idx_pair(split, dir.file("imgs"), dir.file("labels"));
  const auto loaded = load_idx(dir.file("imgs"), dir.file("labels"));
  REQUIRE(loaded.n_samples == 37);
  CHECK(loaded.rows == 5);
  CHECK(loaded.cols == 5);
  CHECK(loaded.labels == split.labels);
  for (std::size_t i = 0; i < loaded.images.size(); ++i) {
    CHECK(std::abs(loaded.images[i] - split.images[i]) <= 0.5f / 255.0f + 1e-6f);
    CHECK(loaded.images[i] >= 0.0f);
    CHECK(loaded.images[i] <= 1.0f);
  }
}

TEST_CASE("all-zero synthetic images load as zeros") {
  TempDir dir;
  synthetic::write_idx_images(dir.file("imgs"), std::vector<std::uint8_t>(10 * 4, 0), 10,
                              2, 2);
  synthetic::write_idx_labels(dir.file("labels"), std::vector<std::uint8_t>(10, 0));
  const auto loaded = load_idx(dir.file("imgs"), dir.file("labels"));
  REQUIRE(loaded.n_samples == 10);
  for (float v : loaded.images) CHECK(v == 0.0f);
}

TEST_CASE("gzip-compressed IDX files load transparently") {
  TempDir dir;
  const auto split = synthetic::prototype_task(2, 12, 3, 0.2, 5, 5, SplitRole::train);
  synthetic::write_idx_pair(split, dir.file("imgs"), dir.file("labels"));
  gzip_file(dir.file("imgs"), dir.file("imgs.gz"));
  gzip_file(dir.file("labels"), dir.file("labels.gz"));
  const auto loaded = load_idx(dir.file("imgs.gz"), dir.file("labels.gz"));
  CHECK(loaded.n_samples == 12);
  CHECK(loaded.labels == split.labels);
}

TEST_CASE("bad magic numbers are rejected") {
  TempDir dir;
  synthetic::write_idx_labels(dir.file("labels"), std::vector<std::uint8_t>(4, 1));
  synthetic::write_idx_images(dir.file("imgs"), std::vector<std::uint8_t>(4, 0), 4, 1, 1);
  CHECK_THROWS_WITH_AS(load_idx(dir.file("labels"), dir.file("labels")),
                       doctest::Contains("bad IDX image magic"), DataError);
  CHECK_THROWS_WITH_AS(load_idx(dir.file("imgs"), dir.file("imgs")),
                       doctest::Contains("bad IDX label magic"), DataError);
}

TEST_CASE("truncated files report expected and actual byte counts") {
  TempDir dir;
  synthetic::write_idx_images(dir.file("imgs"), std::vector<std::uint8_t>(10 * 9, 0), 10,
                              3, 3);
  fs::resize_file(dir.file("imgs"), 40);
  synthetic::write_idx_labels(dir.file("labels"), std::vector<std::uint8_t>(10, 0));
  try {
    load_idx(dir.file("imgs"), dir.file("labels"));
    FAIL("expected DataError");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("expected 106 bytes") != std::string::npos);
    CHECK(msg.find("got 40") != std::string::npos);
  }
}

TEST_CASE("image/label count mismatch is rejected") {
  TempDir dir;
  synthetic::write_idx_images(dir.file("imgs"), std::vector<std::uint8_t>(10 * 4, 0), 10,
                              2, 2);
  synthetic::write_idx_labels(dir.file("labels"), std::vector<std::uint8_t>(9, 0));
  CHECK_THROWS_WITH_AS(load_idx(dir.file("imgs"), dir.file("labels")),
                       doctest::Contains("mismatch"), DataError);
}

TEST_CASE("missing files are reported") {
  CHECK_THROWS_AS(load_idx("/nonexistent/a", "/nonexistent/b"), DataError);
  CHECK_FALSE(mnist_available("/nonexistent"));
}

TEST_CASE("train/validation split is a seeded disjoint partition") {
  const auto split = synthetic::prototype_task(3, 1000, 4, 0.3, 8, 8, SplitRole::train);
  const auto [train, validation] = split_train_validation(split, 0.2, 42);
  CHECK(train.n_samples == 800);
  CHECK(validation.n_samples == 200);
  CHECK(train.role == SplitRole::train);
  CHECK(validation.role == SplitRole::validation);

  // identical partition for the same seed
  const auto [train2, validation2] = split_train_validation(split, 0.2, 42);
  CHECK(train.images == train2.images);
  CHECK(validation.labels == validation2.labels);

  // a different seed produces a different partition
  const auto [train3, validation3] = split_train_validation(split, 0.2, 43);
  CHECK(train.images != train3.images);

  // exhaustive: multiset of images is preserved (check label histogram)
  std::array<int, 3> full{}, parts{};
  for (auto l : split.labels) ++full[l];
  for (auto l : train.labels) ++parts[l];
  for (auto l : validation.labels) ++parts[l];
  CHECK(full == parts);
}

TEST_CASE("degenerate validation fractions are rejected") {
  const auto split = synthetic::prototype_task(2, 10, 2, 0.1, 1, 1, SplitRole::train);
  CHECK_THROWS_AS(split_train_validation(split, 0.0, 1), ConfigError);
  CHECK_THROWS_AS(split_train_validation(split, 1.0, 1), ConfigError);
}

TEST_CASE("the MNIST-scale split yields the documented 48000/12000 partition") {
  DatasetSplit split;
  split.n_samples = 60000;
  split.rows = 1;
  split.cols = 1;
  split.images.assign(60000, 0.0f);
  split.labels.assign(60000, 0);
  const auto [train, validation] = split_train_validation(split, 0.2, 7);
  CHECK(train.n_samples == 48000);
  CHECK(validation.n_samples == 12000);
}

TEST_CASE("batches shuffle per epoch, include the short tail, and cover the split") {
  const auto batch_list = batches(48000, 1024, 11, 0);
  REQUIRE(batch_list.size() == 47);
  for (std::size_t b = 0; b + 1 < batch_list.size(); ++b) {
    CHECK(batch_list[b].size() == 1024);
  }
  CHECK(batch_list.back().size() == 896);

  std::set<std::uint32_t> seen;
  for (const auto& batch : batch_list) seen.insert(batch.begin(), batch.end());
  CHECK(seen.size() == 48000);
  CHECK(*seen.rbegin() == 47999);

  const auto same = batches(48000, 1024, 11, 0);
  CHECK(batch_list == same);
  const auto other_epoch = batches(48000, 1024, 11, 1);
  CHECK(batch_list != other_epoch);
}

TEST_CASE("batch size of one and oversized batches degrade gracefully") {
  const auto singles = batches(5, 1, 3, 0);
  CHECK(singles.size() == 5);
  const auto one = batches(5, 100, 3, 0);
  REQUIRE(one.size() == 1);
  CHECK(one[0].size() == 5);
  CHECK_THROWS_AS(batches(5, 0, 3, 0), ConfigError);
}

TEST_CASE("loaded MNIST test labels match the published class histogram") {
  const char* dir = std::getenv("INFOMORPH_DATA_DIR");
  if (dir == nullptr || !mnist_available(dir)) {
    MESSAGE("MNIST not available; skipping");
    return;
  }
  const auto paths = locate_mnist(dir);
  const auto test = load_idx(paths.test_images, paths.test_labels, SplitRole::test);
  REQUIRE(test.n_samples == 10000);
  REQUIRE(test.rows == 28);
  REQUIRE(test.cols == 28);
  std::array<int, 10> histogram{};
  for (auto label : test.labels) ++histogram[label];
  const std::array<int, 10> published = {980, 1135, 1032, 1010, 982,
                                         892, 958, 1028, 974, 1009};
  CHECK(histogram == published);

  const auto train = load_idx(paths.train_images, paths.train_labels, SplitRole::train);
  CHECK(train.n_samples == 60000);
}
