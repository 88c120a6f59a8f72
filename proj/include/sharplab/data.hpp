#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sharplab/model.hpp"

namespace sharplab {

enum class Split { train, test };

struct Dataset {
  std::vector<Sample> samples;
  std::size_t num_classes = 0;
  std::string name;
  Split split = Split::train;

  std::size_t size() const noexcept { return samples.size(); }
  std::size_t feature_dim() const noexcept {
    return samples.empty() ? 0 : samples.front().features.size();
  }
  Batch view() const { return make_batch(samples); }
};

/// Interleaved 2-D spirals. A point of class c sits at radius r ~ U[0.2, 1]
/// and angle 4*pi*r + 2*pi*c/num_classes, with N(0, sigma^2) noise on each
/// coordinate. Train and test draw from disjoint streams of `seed`.
Dataset gen_spirals(std::size_t n_per_class, std::size_t num_classes, double noise_sigma,
                    std::uint64_t seed, Split split = Split::train);

/// Seeded shuffle into consecutive batches; only the last may be short.
std::vector<Batch> epoch_batches(const Dataset& ds, std::size_t batch_size,
                                 std::uint64_t epoch_seed);

// IDX (big-endian magic, big-endian u32 dims, row-major u8 payload).
inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

/// Parses an image/label pair already in memory. Pixels are scaled to [0, 1].
/// `limit` truncates to the first N samples.
Dataset parse_idx(std::span<const std::uint8_t> image_bytes,
                  std::span<const std::uint8_t> label_bytes,
                  std::optional<std::size_t> limit = std::nullopt);

Dataset load_idx_images(const std::filesystem::path& image_path,
                        const std::filesystem::path& label_path,
                        std::optional<std::size_t> limit = std::nullopt);

/// Serializers used to build fixtures. `pixels` holds count*rows*cols bytes.
std::vector<std::uint8_t> encode_idx_images(std::span<const std::uint8_t> pixels,
                                            std::uint32_t count, std::uint32_t rows,
                                            std::uint32_t cols);
std::vector<std::uint8_t> encode_idx_labels(std::span<const std::uint8_t> labels);

void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace sharplab
