// Copyright (c) 2026, advdm-lab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "advdm/tensor.hpp"

namespace advdm {

enum class DatasetKind { gaussian_mixture_2d, synthetic_shapes_16x16, idx_images };

DatasetKind parse_dataset_kind(std::string_view name);
std::string_view to_string(DatasetKind kind);

struct DatasetSpec {
  DatasetKind kind = DatasetKind::synthetic_shapes_16x16;
  std::size_t classes = 4;
  std::size_t per_class = 256;
  std::uint64_t seed = 1;
  /// Gaussian mixture: component standard deviation and distance of the means from the origin.
  double stddev = 0.02;
  double radius = 2.0;
  /// idx_images: paths of the image and label files.
  std::filesystem::path images;
  std::filesystem::path labels;
};

/// Labelled rows. Pixel datasets are flattened row-major images with values in [0, 1].
struct Dataset {
  Tensor inputs;
  std::vector<int> labels;
  std::size_t num_classes = 0;
  std::size_t image_side = 0;  ///< 0 for point data
  bool is_pixel() const noexcept { return image_side != 0; }

  std::vector<std::size_t> rows_of_class(int label) const;
  Tensor class_inputs(int label) const;
};

Dataset load_dataset(const DatasetSpec& spec);

Dataset make_gaussian_mixture(std::size_t classes, std::size_t per_class, double radius, double stddev,
                              std::uint64_t seed);
/// 16x16 grayscale shapes: square, disk, horizontal bar, cross, ring, vertical bar (up to 6 classes).
Dataset make_synthetic_shapes(std::size_t classes, std::size_t per_class, std::uint64_t seed);

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

struct IdxImages {
  std::size_t count = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> pixels;
};

IdxImages parse_idx_images(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> parse_idx_labels(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_idx_images(const IdxImages& images);
std::vector<std::uint8_t> encode_idx_labels(std::span<const std::uint8_t> labels);

/// Reads a whole IDX image/label pair; images are normalised to [0, 1].
Dataset load_idx_dataset(const std::filesystem::path& images, const std::filesystem::path& labels);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace advdm
