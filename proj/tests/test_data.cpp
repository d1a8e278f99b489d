#include <cstdlib>
#include <unistd.h>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include <gtest/gtest.h>

#include "tda/data.hpp"
#include "tda/error.hpp"

using namespace tda;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("tda_data_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

void be32(std::ofstream& os, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

// Hand-built IDX pair: n images of r x c pixels, pixel value (i + k) % 256.
void write_raw(const fs::path& img, const fs::path& lbl, std::uint32_t n, std::uint32_t r, std::uint32_t c,
               std::uint32_t img_magic = 2051, std::uint32_t lbl_magic = 2049, std::uint32_t n_labels = 0,
               std::size_t drop = 0) {
  std::ofstream is(img, std::ios::binary), ls(lbl, std::ios::binary);
  be32(is, img_magic);
  be32(is, n);
  be32(is, r);
  be32(is, c);
  const std::size_t total = std::size_t{n} * r * c - drop;
  for (std::size_t k = 0; k < total; ++k) is.put(static_cast<char>((k / (r * c) + k) % 256));
  be32(ls, lbl_magic);
  be32(ls, n_labels ? n_labels : n);
  for (std::uint32_t i = 0; i < (n_labels ? n_labels : n); ++i) ls.put(static_cast<char>(i % 10));
}

std::string error_of(const fs::path& a, const fs::path& b) {
  try {
    load_idx(a, b);
  } catch (const ParseError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Idx, HeaderBytesAndScaling) {
  TempDir d;
  write_raw(d.path / "i", d.path / "l", 3, 2, 2);
  {
    std::ifstream is(d.path / "i", std::ios::binary);
    unsigned char h[4];
    is.read(reinterpret_cast<char*>(h), 4);
    EXPECT_EQ(h[0], 0x00);
    EXPECT_EQ(h[1], 0x00);
    EXPECT_EQ(h[2], 0x08);
    EXPECT_EQ(h[3], 0x03);
  }
  const Dataset ds = load_idx(d.path / "i", d.path / "l");
  EXPECT_EQ(ds.size(), 3u);
  EXPECT_EQ(ds.feature_dim(), 4u);
  EXPECT_EQ(ds.rows, 2u);
  EXPECT_EQ(ds.cols, 2u);
  EXPECT_EQ(ds.n_classes, 3u);  // largest label + 1
  EXPECT_DOUBLE_EQ(ds.samples(1, 1), 6.0 / 255.0);
  EXPECT_EQ(ds.labels[2], 2u);
}

TEST(Idx, Pixel255IsOne) {
  TempDir d;
  std::ofstream is(d.path / "i", std::ios::binary), ls(d.path / "l", std::ios::binary);
  be32(is, 2051);
  be32(is, 1);
  be32(is, 1);
  be32(is, 2);
  is.put(static_cast<char>(255));
  is.put(0);
  be32(ls, 2049);
  be32(ls, 1);
  ls.put(1);
  is.close();
  ls.close();
  const Dataset ds = load_idx(d.path / "i", d.path / "l");
  EXPECT_EQ(ds.samples(0, 0), 1.0);
  EXPECT_EQ(ds.samples(0, 1), 0.0);
}

TEST(Idx, DistinctErrors) {
  TempDir d;
  write_raw(d.path / "i", d.path / "l", 4, 3, 3, 2051, 2051);
  const std::string magic = error_of(d.path / "i", d.path / "l");
  EXPECT_NE(magic.find("magic"), std::string::npos);

  write_raw(d.path / "i", d.path / "l", 4, 3, 3, 2051, 2049, 0, 5);
  const std::string trunc = error_of(d.path / "i", d.path / "l");
  EXPECT_NE(trunc.find("truncated"), std::string::npos);

  write_raw(d.path / "i", d.path / "l", 4, 3, 3, 2051, 2049, 3);
  const std::string count = error_of(d.path / "i", d.path / "l");
  EXPECT_NE(count.find("count"), std::string::npos);

  EXPECT_NE(magic, trunc);
  EXPECT_NE(trunc, count);
  EXPECT_THROW(load_idx(d.path / "missing", d.path / "l"), IoError);
}

TEST(Idx, RoundTrip) {
  TempDir d;
  write_raw(d.path / "i", d.path / "l", 17, 5, 4);
  const Dataset a = load_idx(d.path / "i", d.path / "l");
  write_idx(a, d.path / "i2", d.path / "l2");
  const Dataset b = load_idx(d.path / "i2", d.path / "l2");
  EXPECT_EQ(a.samples.data, b.samples.data);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_EQ(a.rows, b.rows);
  EXPECT_EQ(a.cols, b.cols);
}

TEST(Idx, MnistSplitIfPresent) {
  const fs::path dir = resolve_data_dir("");
  if (!fs::exists(dir / "t10k-images-idx3-ubyte")) GTEST_SKIP() << "no MNIST under " << dir;
  const Dataset t = load_mnist_split(dir, "test");
  EXPECT_EQ(t.size(), 10000u);
  EXPECT_EQ(t.feature_dim(), 784u);
  EXPECT_EQ(t.n_classes, 10u);
}

TEST(DataDir, Resolution) {
  EXPECT_EQ(resolve_data_dir("/x/y"), fs::path("/x/y"));
  const char* saved = std::getenv("TDA_DATA_DIR");
  const std::string keep = saved ? saved : "";
  ::setenv("TDA_DATA_DIR", "/from/env", 1);
  EXPECT_EQ(resolve_data_dir(""), fs::path("/from/env"));
  ::unsetenv("TDA_DATA_DIR");
  EXPECT_EQ(resolve_data_dir(""), fs::path("data"));
  if (saved) ::setenv("TDA_DATA_DIR", keep.c_str(), 1);
}

TEST(Encode, Direct) {
  const std::vector<double> s = {0.1, 0.0, 0.9};
  const auto x = encode_direct(s, 4);
  ASSERT_EQ(x.size(), 12u);
  for (std::size_t t = 0; t < 4; ++t)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(x[t * 3 + j], s[j]);
  for (double v : encode_direct(std::vector<double>(5, 0.0), 3)) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(encode_direct(s, 1), s);
}

TEST(Encode, Batch) {
  Dataset ds;
  ds.samples = Matrix(4, 2);
  ds.samples.data = {0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7};
  ds.labels = {0, 1, 0, 1};
  ds.n_classes = 2;
  const std::vector<std::size_t> idx = {3, 1};
  const auto b = encode_batch(ds, idx, 2);
  EXPECT_EQ(b.batch, 2u);
  EXPECT_EQ(b.labels, (std::vector<std::size_t>{1, 1}));
  EXPECT_EQ(std::vector<double>(b.input(0).begin(), b.input(0).end()), (std::vector<double>{0.6, 0.7, 0.6, 0.7}));
}

TEST(Split, DisjointExhaustive) {
  Dataset ds;
  ds.samples = Matrix(101, 1);
  for (std::size_t i = 0; i < 101; ++i) ds.samples(i, 0) = i / 200.0;
  ds.labels.assign(101, 0);
  ds.n_classes = 2;
  const auto [a, b] = split_dataset(ds, 0.7, 5);
  EXPECT_EQ(a.size(), 71u);
  EXPECT_EQ(b.size(), 30u);
  std::multiset<double> all;
  for (std::size_t i = 0; i < a.size(); ++i) all.insert(a.samples(i, 0));
  for (std::size_t i = 0; i < b.size(); ++i) all.insert(b.samples(i, 0));
  std::multiset<double> want;
  for (std::size_t i = 0; i < 101; ++i) want.insert(i / 200.0);
  EXPECT_EQ(all, want);
  const auto [a2, b2] = split_dataset(ds, 0.7, 5);
  EXPECT_EQ(a.samples.data, a2.samples.data);
}

TEST(Split, SeededPermutation) {
  const auto p = seeded_permutation(1000, 3);
  std::vector<std::size_t> sorted = p;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < 1000; ++i) EXPECT_EQ(sorted[i], i);
  EXPECT_EQ(p, seeded_permutation(1000, 3));
  EXPECT_NE(p, seeded_permutation(1000, 4));
}

TEST(PatternTask, Deterministic) {
  const auto [a, ta] = make_delayed_pattern_task(300, 40, 4, 20, 11);
  const auto [b, tb] = make_delayed_pattern_task(300, 40, 4, 20, 11);
  EXPECT_EQ(a.samples.data, b.samples.data);
  EXPECT_EQ(a.labels, b.labels);
  for (double v : a.samples.data) EXPECT_TRUE(v == 0.0 || v == 1.0);
  const auto [c, tc] = make_delayed_pattern_task(300, 40, 4, 20, 12);
  EXPECT_NE(a.samples.data, c.samples.data);
}

// Brute-force oracle: a table over (key pattern, cue bit) predicts every label.
TEST(PatternTask, LookupTableIsPerfect) {
  for (double rate : {0.0, 0.1}) {
    const auto [ds, task] = make_delayed_pattern_task(2000, 40, 4, 20, 3, 8, rate);
    std::map<std::pair<std::vector<double>, double>, std::set<std::size_t>> table;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      const auto s = ds.sample(i);
      std::vector<double> key(s.begin(), s.begin() + task.key_len);
      table[{key, s[task.cue_position()]}].insert(ds.labels[i]);
    }
    EXPECT_LE(table.size(), 8u);
    for (const auto& [k, labels] : table) EXPECT_EQ(labels.size(), 1u);
    // Neither key nor cue alone determines the label.
    std::map<std::vector<double>, std::set<std::size_t>> by_key;
    for (const auto& [k, labels] : table) by_key[k.first].insert(labels.begin(), labels.end());
    for (const auto& [k, labels] : by_key) EXPECT_EQ(labels.size(), 2u);
  }
}

TEST(PatternTask, ZeroGapIsLocal) {
  // With gap 0 the key and the cue sit in one contiguous window.
  const auto [ds, task] = make_delayed_pattern_task(500, 20, 4, 0, 9);
  EXPECT_EQ(task.cue_position(), task.key_len);
  std::map<std::vector<double>, std::set<std::size_t>> window;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto s = ds.sample(i);
    window[std::vector<double>(s.begin(), s.begin() + task.key_len + 1)].insert(ds.labels[i]);
  }
  for (const auto& [k, labels] : window) EXPECT_EQ(labels.size(), 1u);
}

TEST(PatternTask, InvalidSizes) {
  EXPECT_THROW(make_delayed_pattern_task(10, 20, 4, 20, 1), InvalidSpec);
  EXPECT_THROW(make_delayed_pattern_task(10, 20, 4, 15, 1), InvalidSpec);
  EXPECT_THROW(make_delayed_pattern_task(0, 40, 4, 5, 1), InvalidSpec);
  EXPECT_THROW(make_delayed_pattern_task(10, 40, 1, 5, 1), InvalidSpec);
}
