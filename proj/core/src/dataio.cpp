#include "hsx/dataio.hpp"

#include <zlib.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <utility>

#include "hsx/error.hpp"

namespace hsx {

void LabeledDataset::validate() const {
  if (inputs.rows() != labels.size()) throw ContractError("dataset: input/label count mismatch");
  for (std::size_t y : labels) {
    if (y >= class_count) throw ContractError("dataset: label out of range");
  }
  if (!inputs.all_finite()) throw NumericError("dataset: non-finite input value");
}

LabeledDataset subset(const LabeledDataset& data, std::span<const std::size_t> indices) {
  LabeledDataset out;
  out.class_count = data.class_count;
  out.inputs = Matrix(indices.size(), data.width());
  out.labels.reserve(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const std::size_t src = indices[i];
    if (src >= data.size()) throw ContractError("subset: index out of range");
    std::copy(data.inputs.row(src).begin(), data.inputs.row(src).end(), out.inputs.row(i).begin());
    out.labels.push_back(data.labels[src]);
  }
  return out;
}

namespace {

// Reads a whole file, inflating it if it carries a gzip header.
std::vector<std::uint8_t> read_maybe_gzip(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("file not found: " + path.string());
  std::unique_ptr<gzFile_s, decltype(&gzclose)> file(gzopen(path.c_str(), "rb"), &gzclose);
  if (!file) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes;
  std::uint8_t buf[1 << 16];
  for (;;) {
    const int n = gzread(file.get(), buf, sizeof buf);
    if (n < 0) throw TruncatedFileError("corrupt compressed stream in " + path.string());
    if (n == 0) break;
    bytes.insert(bytes.end(), buf, buf + n);
  }
  return bytes;
}

std::uint32_t be32(const std::vector<std::uint8_t>& b, std::size_t off) {
  return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) |
         (std::uint32_t{b[off + 2]} << 8) | std::uint32_t{b[off + 3]};
}

void put_be32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v >> 24));
  out.push_back(static_cast<char>(v >> 16));
  out.push_back(static_cast<char>(v >> 8));
  out.push_back(static_cast<char>(v));
}

void write_bytes(const std::filesystem::path& path, const std::string& bytes, bool gzip) {
  if (gzip) {
    std::unique_ptr<gzFile_s, decltype(&gzclose)> f(gzopen(path.c_str(), "wb9"), &gzclose);
    if (!f) throw IoError("cannot create " + path.string());
    if (gzwrite(f.get(), bytes.data(), static_cast<unsigned>(bytes.size())) !=
        static_cast<int>(bytes.size())) {
      throw IoError("short write to " + path.string());
    }
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot create " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + path.string());
}

}  // namespace

LabeledDataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels) {
  const auto img = read_maybe_gzip(images);
  const auto lab = read_maybe_gzip(labels);
  if (img.size() < 4) throw TruncatedFileError("image file too short for a header");
  if (lab.size() < 4) throw TruncatedFileError("label file too short for a header");
  if (be32(img, 0) != kIdxImageMagic) throw BadMagicError("bad image magic in " + images.string());
  if (be32(lab, 0) != kIdxLabelMagic) throw BadMagicError("bad label magic in " + labels.string());
  if (img.size() < 16) throw TruncatedFileError("image header truncated");
  if (lab.size() < 8) throw TruncatedFileError("label header truncated");

  const std::size_t count = be32(img, 4);
  const std::size_t rows = be32(img, 8);
  const std::size_t cols = be32(img, 12);
  const std::size_t label_count = be32(lab, 4);
  const std::size_t pixels = rows * cols;
  if (img.size() - 16 < count * pixels) throw TruncatedFileError("image payload truncated");
  if (lab.size() - 8 < label_count) throw TruncatedFileError("label payload truncated");
  if (count != label_count) {
    throw CountMismatchError("image count " + std::to_string(count) + " != label count " +
                             std::to_string(label_count));
  }
  if (count == 0) throw FormatError("IDX files contain no samples");

  LabeledDataset ds;
  ds.inputs = Matrix(count, pixels);
  auto flat = ds.inputs.flat();
  for (std::size_t i = 0; i < count * pixels; ++i) flat[i] = img[16 + i] / 255.0;
  ds.labels.resize(count);
  std::size_t max_label = 0;
  for (std::size_t i = 0; i < count; ++i) {
    ds.labels[i] = lab[8 + i];
    max_label = std::max(max_label, ds.labels[i]);
  }
  ds.class_count = max_label + 1;
  return ds;
}

void write_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
               std::span<const std::uint8_t> pixels, std::uint32_t rows, std::uint32_t cols,
               std::span<const std::uint8_t> label_bytes, bool gzip) {
  const std::size_t per = std::size_t{rows} * cols;
  if (per == 0 || pixels.size() != per * label_bytes.size()) {
    throw ContractError("write_idx: pixel count does not match labels x rows x cols");
  }
  std::string img;
  put_be32(img, kIdxImageMagic);
  put_be32(img, static_cast<std::uint32_t>(label_bytes.size()));
  put_be32(img, rows);
  put_be32(img, cols);
  img.append(reinterpret_cast<const char*>(pixels.data()), pixels.size());
  std::string lab;
  put_be32(lab, kIdxLabelMagic);
  put_be32(lab, static_cast<std::uint32_t>(label_bytes.size()));
  lab.append(reinterpret_cast<const char*>(label_bytes.data()), label_bytes.size());
  write_bytes(images, img, gzip);
  write_bytes(labels, lab, gzip);
}

LabeledDataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty CSV file " + path.string());
  if (line.rfind("label", 0) != 0) throw FormatError("CSV header must start with 'label'");
  const std::size_t width = static_cast<std::size_t>(std::count(line.begin(), line.end(), ','));

  std::vector<double> values;
  std::vector<std::size_t> labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const char* p = line.data();
    const char* end = p + line.size();
    std::size_t label = 0;
    auto [lp, lec] = std::from_chars(p, end, label);
    if (lec != std::errc()) throw FormatError("bad label on CSV line " + std::to_string(line_no));
    p = lp;
    for (std::size_t f = 0; f < width; ++f) {
      if (p == end || *p != ',') {
        throw FormatError("too few fields on CSV line " + std::to_string(line_no));
      }
      ++p;
      double v = 0.0;
      auto [vp, vec] = std::from_chars(p, end, v);
      if (vec != std::errc()) throw FormatError("bad value on CSV line " + std::to_string(line_no));
      values.push_back(v);
      p = vp;
    }
    if (p != end && *p != '\r') {
      throw FormatError("too many fields on CSV line " + std::to_string(line_no));
    }
    labels.push_back(label);
  }
  LabeledDataset ds;
  const std::size_t n = labels.size();
  ds.inputs = Matrix(n, width, std::move(values));
  ds.class_count = n == 0 ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  ds.labels = std::move(labels);
  return ds;
}

void write_csv(const std::filesystem::path& path, const Matrix& features,
               std::span<const std::size_t> labels) {
  if (features.rows() != labels.size()) throw ContractError("write_csv: row/label count mismatch");
  std::ofstream out(path);
  if (!out) throw IoError("cannot create " + path.string());
  out << "label";
  for (std::size_t f = 0; f < features.cols(); ++f) out << ",f" << f;
  out << '\n';
  char buf[32];
  for (std::size_t i = 0; i < features.rows(); ++i) {
    out << labels[i];
    for (double v : features.row(i)) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << ',' << buf;
    }
    out << '\n';
  }
  if (!out) throw IoError("short write to " + path.string());
}

LabeledDataset synth_blobs(Rng& rng, std::size_t classes, std::size_t d_in, std::size_t per_class,
                           double spread) {
  if (classes == 0 || d_in == 0 || per_class == 0) {
    throw ContractError("synth_blobs: classes, d_in and per_class must be positive");
  }
  if (!(spread >= 0.0)) throw ContractError("synth_blobs: spread must be >= 0");
  const double min_gap = 6.0 * spread;
  const double unit = spread > 0.0 ? spread : 1.0;
  // Box large enough that rejection succeeds quickly.
  double half_width = 1.5 * 6.0 * unit *
                      std::pow(static_cast<double>(classes), 1.0 / static_cast<double>(d_in));
  std::vector<Vector> centers;
  std::size_t attempts = 0;
  while (centers.size() < classes) {
    Vector c(d_in);
    for (double& v : c) v = rng.uniform(-half_width, half_width);
    const bool far = std::all_of(centers.begin(), centers.end(), [&](const Vector& o) {
      return std::sqrt(squared_distance(c, o)) >= min_gap;
    });
    if (far) centers.push_back(std::move(c));
    if (++attempts % 1000 == 0) half_width *= 1.25;
  }

  LabeledDataset ds;
  ds.class_count = classes;
  ds.inputs = Matrix(classes * per_class, d_in);
  ds.labels.reserve(classes * per_class);
  std::size_t row = 0;
  for (std::size_t k = 0; k < classes; ++k) {
    for (std::size_t s = 0; s < per_class; ++s, ++row) {
      auto xi = ds.inputs.row(row);
      for (std::size_t a = 0; a < d_in; ++a) xi[a] = centers[k][a] + spread * rng.normal();
      ds.labels.push_back(k);
    }
  }
  return ds;
}

Split train_test_split(const LabeledDataset& data, Rng& rng, double test_fraction,
                       bool disjoint_classes) {
  if (!(test_fraction >= 0.0 && test_fraction <= 1.0)) {
    throw ContractError("train_test_split: fraction must lie in [0, 1]");
  }
  Split split;
  if (!disjoint_classes) {
    std::vector<std::size_t> order(data.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    const auto n_test =
        static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(data.size())));
    std::vector<std::size_t> test(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
    std::vector<std::size_t> train(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
    std::sort(test.begin(), test.end());
    std::sort(train.begin(), train.end());
    split.train = subset(data, train);
    split.test = subset(data, test);
    return split;
  }

  std::vector<std::size_t> classes(data.class_count);
  for (std::size_t k = 0; k < classes.size(); ++k) classes[k] = k;
  rng.shuffle(classes);
  const auto n_test_classes = static_cast<std::size_t>(
      std::llround(test_fraction * static_cast<double>(data.class_count)));
  std::set<std::size_t> test_classes(classes.begin(),
                                     classes.begin() + static_cast<std::ptrdiff_t>(n_test_classes));
  std::map<std::size_t, std::size_t> train_map, test_map;
  for (std::size_t k = 0; k < data.class_count; ++k) {
    auto& m = test_classes.count(k) ? test_map : train_map;
    const std::size_t next = m.size();
    m.emplace(k, next);
  }
  std::vector<std::size_t> train_idx, test_idx;
  for (std::size_t i = 0; i < data.size(); ++i) {
    (test_classes.count(data.labels[i]) ? test_idx : train_idx).push_back(i);
  }
  split.train = subset(data, train_idx);
  split.test = subset(data, test_idx);
  for (auto& y : split.train.labels) y = train_map.at(y);
  for (auto& y : split.test.labels) y = test_map.at(y);
  split.train.class_count = train_map.size();
  split.test.class_count = test_map.size();
  return split;
}

PairSet make_pairs(const LabeledDataset& data, Rng& rng, std::size_t pairs_per_polarity) {
  if (pairs_per_polarity == 0) throw ContractError("make_pairs: need at least one pair per polarity");
  std::map<std::size_t, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < data.size(); ++i) by_class[data.labels[i]].push_back(i);
  std::vector<const std::vector<std::size_t>*> genuine_pools;
  for (const auto& [k, members] : by_class) {
    if (members.size() >= 2) genuine_pools.push_back(&members);
  }
  if (genuine_pools.empty()) throw ContractError("make_pairs: no class has two samples");
  if (by_class.size() < 2) throw ContractError("make_pairs: impostor pairs need two classes");

  const std::size_t attempt_cap = 50 * pairs_per_polarity + 1000;
  auto collect = [&](auto draw) {
    std::set<std::pair<std::size_t, std::size_t>> seen;
    std::vector<std::pair<std::size_t, std::size_t>> picked;
    for (std::size_t attempt = 0; picked.size() < pairs_per_polarity; ++attempt) {
      auto [a, b] = draw();
      const auto key = std::minmax(a, b);
      // Past the cap, duplicates are accepted: the data has too few unique pairs.
      if (seen.insert(key).second || attempt >= attempt_cap) picked.emplace_back(a, b);
    }
    return picked;
  };

  const auto genuine = collect([&] {
    const auto& pool = *genuine_pools[rng.uniform_index(genuine_pools.size())];
    const std::size_t ia = rng.uniform_index(pool.size());
    std::size_t ib = rng.uniform_index(pool.size() - 1);
    if (ib >= ia) ++ib;
    return std::pair{pool[ia], pool[ib]};
  });
  const auto impostor = collect([&] {
    const std::size_t a = rng.uniform_index(data.size());
    std::size_t b;
    do {
      b = rng.uniform_index(data.size());
    } while (data.labels[b] == data.labels[a]);
    return std::pair{a, b};
  });

  PairSet pairs;
  pairs.reserve(2 * pairs_per_polarity);
  for (auto [a, b] : genuine) pairs.push_back({a, b, true});
  for (auto [a, b] : impostor) pairs.push_back({a, b, false});
  rng.shuffle(pairs);
  return pairs;
}

}  // namespace hsx
