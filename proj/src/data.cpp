#include "tda/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <random>
#include <set>

#include "tda/error.hpp"

namespace tda {

namespace {

constexpr std::uint32_t kImageMagic = 2051;
constexpr std::uint32_t kLabelMagic = 2049;

std::uint32_t read_be32(std::istream& is, const std::string& what) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw ParseError(what + ": truncated header");
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | std::uint32_t{b[3]};
}

void write_be32(std::ostream& os, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::ifstream open_in(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw IoError("cannot open " + p.string());
  return is;
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

void Dataset::validate() const {
  if (samples.rows != labels.size()) throw InvalidInput("dataset: sample/label count mismatch");
  for (std::size_t l : labels)
    if (l >= n_classes) throw InvalidInput("dataset: label out of range");
  for (double x : samples.data)
    if (!std::isfinite(x) || x < 0.0 || x > 1.0) throw InvalidInput("dataset: feature outside [0, 1]");
}

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels) {
  auto is = open_in(images);
  const std::string iname = images.filename().string();
  if (read_be32(is, iname) != kImageMagic) throw ParseError(iname + ": magic mismatch (expected 2051)");
  const std::uint32_t n = read_be32(is, iname);
  const std::uint32_t rows = read_be32(is, iname);
  const std::uint32_t cols = read_be32(is, iname);

  auto ls = open_in(labels);
  const std::string lname = labels.filename().string();
  if (read_be32(ls, lname) != kLabelMagic) throw ParseError(lname + ": magic mismatch (expected 2049)");
  const std::uint32_t nl = read_be32(ls, lname);
  if (nl != n) throw ParseError("idx: image count " + std::to_string(n) + " != label count " + std::to_string(nl));

  Dataset ds;
  ds.rows = rows;
  ds.cols = cols;
  ds.feature_scale = 1.0 / 255.0;
  const std::size_t dim = std::size_t{rows} * cols;
  std::vector<unsigned char> pixels(std::size_t{n} * dim);
  if (!is.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(pixels.size())))
    throw ParseError(iname + ": truncated payload");
  std::vector<unsigned char> lab(n);
  if (!ls.read(reinterpret_cast<char*>(lab.data()), static_cast<std::streamsize>(lab.size())))
    throw ParseError(lname + ": truncated payload");

  ds.samples = Matrix(n, dim);
  for (std::size_t i = 0; i < pixels.size(); ++i) ds.samples.data[i] = pixels[i] / 255.0;
  ds.labels.assign(lab.begin(), lab.end());
  ds.n_classes = lab.empty() ? 0 : std::size_t{*std::max_element(lab.begin(), lab.end())} + 1;
  return ds;
}

void write_idx(const Dataset& ds, const std::filesystem::path& images, const std::filesystem::path& labels) {
  std::ofstream is(images, std::ios::binary);
  std::ofstream ls(labels, std::ios::binary);
  if (!is || !ls) throw IoError("cannot write idx files");
  const std::size_t rows = ds.rows ? ds.rows : 1;
  const std::size_t cols = ds.rows ? ds.cols : ds.feature_dim();
  write_be32(is, kImageMagic);
  write_be32(is, static_cast<std::uint32_t>(ds.size()));
  write_be32(is, static_cast<std::uint32_t>(rows));
  write_be32(is, static_cast<std::uint32_t>(cols));
  for (double x : ds.samples.data) is.put(static_cast<char>(static_cast<unsigned char>(std::lround(x * 255.0))));
  write_be32(ls, kLabelMagic);
  write_be32(ls, static_cast<std::uint32_t>(ds.size()));
  for (std::size_t l : ds.labels) ls.put(static_cast<char>(static_cast<unsigned char>(l)));
  if (!is || !ls) throw IoError("idx write failed");
}

std::filesystem::path resolve_data_dir(const std::string& configured) {
  if (!configured.empty()) return configured;
  if (const char* env = std::getenv("TDA_DATA_DIR"); env && *env) return env;
  return "data";
}

Dataset load_mnist_split(const std::filesystem::path& dir, const std::string& split) {
  const std::string prefix = split == "train" ? "train" : split == "test" ? "t10k" : "";
  if (prefix.empty()) throw InvalidSpec("unknown split '" + split + "'");
  return load_idx(dir / (prefix + "-images-idx3-ubyte"), dir / (prefix + "-labels-idx1-ubyte"));
}

std::vector<double> encode_direct(std::span<const double> sample, std::size_t external_T) {
  std::vector<double> out;
  out.reserve(sample.size() * external_T);
  for (std::size_t t = 0; t < external_T; ++t) out.insert(out.end(), sample.begin(), sample.end());
  return out;
}

EncodedBatch encode_batch(const Dataset& ds, std::span<const std::size_t> indices, std::size_t external_T) {
  EncodedBatch b;
  b.batch = indices.size();
  b.external_T = external_T;
  b.input_dim = ds.feature_dim();
  b.inputs.reserve(b.batch * external_T * b.input_dim);
  b.labels.reserve(b.batch);
  for (std::size_t i : indices) {
    const auto row = ds.sample(i);
    for (std::size_t t = 0; t < external_T; ++t) b.inputs.insert(b.inputs.end(), row.begin(), row.end());
    b.labels.push_back(ds.labels[i]);
  }
  return b;
}

std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = i;
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(p[i - 1], p[rng() % i]);
  return p;
}

Dataset subset(const Dataset& ds, std::span<const std::size_t> indices) {
  Dataset out;
  out.n_classes = ds.n_classes;
  out.rows = ds.rows;
  out.cols = ds.cols;
  out.feature_scale = ds.feature_scale;
  out.samples = Matrix(indices.size(), ds.feature_dim());
  out.labels.reserve(indices.size());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const auto row = ds.sample(indices[k]);
    std::copy(row.begin(), row.end(), out.samples.row(k).begin());
    out.labels.push_back(ds.labels[indices[k]]);
  }
  return out;
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction >= 0.0 && train_fraction <= 1.0)) throw InvalidSpec("split: fraction outside [0, 1]");
  const auto perm = seeded_permutation(ds.size(), seed);
  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(ds.size())));
  const std::span<const std::size_t> all(perm);
  return {subset(ds, all.first(n_train)), subset(ds, all.subspan(n_train))};
}

std::pair<Dataset, DelayedPatternTask> make_delayed_pattern_task(std::size_t n_samples, std::size_t seq_len,
                                                                 std::size_t n_classes, std::size_t gap,
                                                                 std::uint64_t seed, std::size_t key_len,
                                                                 double distractor_rate) {
  if (n_samples == 0 || n_classes < 2 || key_len == 0) throw InvalidSpec("pattern task: invalid sizes");
  if (gap >= seq_len || key_len + gap + 1 > seq_len) throw InvalidSpec("pattern task: key, gap and cue exceed seq_len");
  if (key_len < 63 && n_classes > (std::size_t{1} << key_len) - 1)
    throw InvalidSpec("pattern task: too many classes for key length");
  if (!(distractor_rate >= 0.0 && distractor_rate < 1.0)) throw InvalidSpec("pattern task: invalid distractor rate");

  DelayedPatternTask task;
  task.seq_len = seq_len;
  task.n_classes = n_classes;
  task.gap = gap;
  task.key_len = key_len;
  task.distractor_rate = distractor_rate;

  std::mt19937_64 rng(seed);
  std::set<std::vector<double>> seen;
  while (task.keys.size() < n_classes) {
    std::vector<double> key(key_len);
    for (auto& b : key) b = static_cast<double>(rng() & 1u);
    if (std::all_of(key.begin(), key.end(), [](double b) { return b == 0.0; })) continue;
    if (seen.insert(key).second) task.keys.push_back(std::move(key));
  }

  Dataset ds;
  ds.n_classes = n_classes;
  ds.samples = Matrix(n_samples, seq_len);
  ds.labels.resize(n_samples);
  const std::size_t cue = task.cue_position();
  for (std::size_t i = 0; i < n_samples; ++i) {
    const std::size_t key_id = rng() % n_classes;
    const std::size_t cue_bit = rng() & 1u;
    auto row = ds.samples.row(i);
    std::copy(task.keys[key_id].begin(), task.keys[key_id].end(), row.begin());
    row[cue] = static_cast<double>(cue_bit);
    for (std::size_t p = key_len; p < seq_len; ++p)
      if (p != cue && distractor_rate > 0.0 && uniform01(rng) < distractor_rate) row[p] = 1.0;
    ds.labels[i] = (key_id + cue_bit) % n_classes;
  }
  return {std::move(ds), std::move(task)};
}

}  // namespace tda
