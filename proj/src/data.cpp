#include "sharplab/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>

#include "sharplab/errors.hpp"
#include "sharplab/rng.hpp"

namespace sharplab {

Dataset gen_spirals(std::size_t n_per_class, std::size_t num_classes, double noise_sigma,
                    std::uint64_t seed, Split split) {
  if (n_per_class == 0) throw DomainError("spirals: n_per_class must be positive");
  if (num_classes < 2) throw DomainError("spirals: need at least two classes");
  if (!(noise_sigma >= 0.0)) throw DomainError("spirals: noise must be nonnegative");

  Dataset ds;
  ds.num_classes = num_classes;
  ds.split = split;
  ds.name = "spirals";
  ds.samples.reserve(n_per_class * num_classes);

  Rng rng(derive_seed(seed, split == Split::train ? 0 : 1));
  constexpr double pi = std::numbers::pi;
  for (std::size_t c = 0; c < num_classes; ++c) {
    const double phase = 2.0 * pi * static_cast<double>(c) / static_cast<double>(num_classes);
    for (std::size_t i = 0; i < n_per_class; ++i) {
      const double r = rng.uniform(0.2, 1.0);
      const double theta = 4.0 * pi * r + phase;
      const double nx = rng.normal() * noise_sigma;
      const double ny = rng.normal() * noise_sigma;
      ds.samples.push_back({{r * std::cos(theta) + nx, r * std::sin(theta) + ny}, c});
    }
  }
  return ds;
}

std::vector<Batch> epoch_batches(const Dataset& ds, std::size_t batch_size,
                                 std::uint64_t epoch_seed) {
  if (batch_size == 0) throw DomainError("epoch_batches: batch_size must be positive");
  std::vector<std::size_t> order(ds.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(epoch_seed);
  rng.shuffle(order);

  std::vector<Batch> batches;
  batches.reserve((order.size() + batch_size - 1) / batch_size);
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    Batch b;
    b.reserve(end - start);
    for (std::size_t i = start; i < end; ++i) b.push_back(&ds.samples[order[i]]);
    batches.push_back(std::move(b));
  }
  return batches;
}

// ---------------------------------------------------------------------------
// IDX

namespace {

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t offset,
                        const char* what) {
  if (bytes.size() < offset + 4) {
    throw IoError(std::string("idx: truncated header in ") + what);
  }
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

Dataset parse_idx(std::span<const std::uint8_t> image_bytes,
                  std::span<const std::uint8_t> label_bytes,
                  std::optional<std::size_t> limit) {
  const std::uint32_t image_magic = read_be32(image_bytes, 0, "images");
  if (image_magic != kIdxImagesMagic) throw FormatError("idx: bad image magic");
  const std::uint32_t label_magic = read_be32(label_bytes, 0, "labels");
  if (label_magic != kIdxLabelsMagic) throw FormatError("idx: bad label magic");

  const std::size_t count = read_be32(image_bytes, 4, "images");
  const std::size_t rows = read_be32(image_bytes, 8, "images");
  const std::size_t cols = read_be32(image_bytes, 12, "images");
  const std::size_t label_count = read_be32(label_bytes, 4, "labels");
  if (count != label_count) throw FormatError("idx: image and label counts differ");
  if (rows == 0 || cols == 0) throw FormatError("idx: zero image dimension");

  const std::size_t pixels = rows * cols;
  constexpr std::size_t image_header = 16;
  constexpr std::size_t label_header = 8;
  if (image_bytes.size() < image_header + count * pixels) throw IoError("idx: truncated image data");
  if (label_bytes.size() < label_header + count) throw IoError("idx: truncated label data");

  const std::size_t n = limit ? std::min(*limit, count) : count;
  Dataset ds;
  ds.name = "idx";
  ds.samples.reserve(n);
  std::size_t max_label = 0;
  for (std::size_t i = 0; i < n; ++i) {
    Sample s;
    s.features.resize(pixels);
    const std::uint8_t* src = image_bytes.data() + image_header + i * pixels;
    for (std::size_t p = 0; p < pixels; ++p) s.features[p] = static_cast<double>(src[p]) / 255.0;
    s.label = label_bytes[label_header + i];
    max_label = std::max(max_label, s.label);
    ds.samples.push_back(std::move(s));
  }
  ds.num_classes = std::max<std::size_t>(2, max_label + 1);
  return ds;
}

Dataset load_idx_images(const std::filesystem::path& image_path,
                        const std::filesystem::path& label_path,
                        std::optional<std::size_t> limit) {
  const auto images = read_file(image_path);
  const auto labels = read_file(label_path);
  Dataset ds = parse_idx(images, labels, limit);
  ds.name = image_path.filename().string();
  return ds;
}

std::vector<std::uint8_t> encode_idx_images(std::span<const std::uint8_t> pixels,
                                            std::uint32_t count, std::uint32_t rows,
                                            std::uint32_t cols) {
  if (pixels.size() != std::size_t{count} * rows * cols) {
    throw DomainError("idx: pixel buffer does not match dimensions");
  }
  std::vector<std::uint8_t> out;
  out.reserve(16 + pixels.size());
  put_be32(out, kIdxImagesMagic);
  put_be32(out, count);
  put_be32(out, rows);
  put_be32(out, cols);
  out.insert(out.end(), pixels.begin(), pixels.end());
  return out;
}

std::vector<std::uint8_t> encode_idx_labels(std::span<const std::uint8_t> labels) {
  std::vector<std::uint8_t> out;
  out.reserve(8 + labels.size());
  put_be32(out, kIdxLabelsMagic);
  put_be32(out, static_cast<std::uint32_t>(labels.size()));
  out.insert(out.end(), labels.begin(), labels.end());
  return out;
}

void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace sharplab
