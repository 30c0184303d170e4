// Copyright (c) 2026, advdm-lab authors
// SPDX-License-Identifier: Apache-2.0

#include "advdm/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "advdm/errors.hpp"
#include "advdm/rng.hpp"

namespace advdm {

DatasetKind parse_dataset_kind(std::string_view name) {
  if (name == "gaussian_mixture_2d") return DatasetKind::gaussian_mixture_2d;
  if (name == "synthetic_shapes_16x16") return DatasetKind::synthetic_shapes_16x16;
  if (name == "idx_images") return DatasetKind::idx_images;
  throw ConfigError("unknown dataset kind '" + std::string(name) + "'");
}

std::string_view to_string(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::gaussian_mixture_2d: return "gaussian_mixture_2d";
    case DatasetKind::synthetic_shapes_16x16: return "synthetic_shapes_16x16";
    case DatasetKind::idx_images: return "idx_images";
  }
  return "?";
}

std::vector<std::size_t> Dataset::rows_of_class(int label) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == label) rows.push_back(i);
  return rows;
}

Tensor Dataset::class_inputs(int label) const { return gather_rows(inputs, rows_of_class(label)); }

Dataset load_dataset(const DatasetSpec& spec) {
  switch (spec.kind) {
    case DatasetKind::gaussian_mixture_2d:
      return make_gaussian_mixture(spec.classes, spec.per_class, spec.radius, spec.stddev, spec.seed);
    case DatasetKind::synthetic_shapes_16x16: return make_synthetic_shapes(spec.classes, spec.per_class, spec.seed);
    case DatasetKind::idx_images: return load_idx_dataset(spec.images, spec.labels);
  }
  throw ConfigError("unsupported dataset kind");
}

Dataset make_gaussian_mixture(std::size_t classes, std::size_t per_class, double radius, double stddev,
                              std::uint64_t seed) {
  if (classes == 0) throw ConfigError("gaussian mixture needs at least one component");
  RngStream rng(seed);
  Dataset ds;
  ds.num_classes = classes;
  ds.inputs = Tensor({classes * per_class, 2});
  for (std::size_t k = 0; k < classes; ++k) {
    const double angle = 2.0 * std::numbers::pi * double(k) / double(classes);
    const double mx = radius * std::cos(angle), my = radius * std::sin(angle);
    for (std::size_t i = 0; i < per_class; ++i) {
      const std::size_t r = k * per_class + i;
      ds.inputs[2 * r] = float(mx + stddev * rng.normal());
      ds.inputs[2 * r + 1] = float(my + stddev * rng.normal());
      ds.labels.push_back(int(k));
    }
  }
  return ds;
}

namespace {

constexpr std::size_t kSide = 16;

bool inside_shape(std::size_t kind, double dx, double dy, double size, double thickness) {
  const double ax = std::fabs(dx), ay = std::fabs(dy);
  const double rr = std::sqrt(dx * dx + dy * dy);
  switch (kind) {
    case 0: return ax <= size && ay <= size;                                    // square
    case 1: return ax <= size * 1.6 && ay <= thickness;                         // horizontal bar
    case 2: return (ax <= thickness && ay <= size * 1.4) || (ay <= thickness && ax <= size * 1.4);  // cross
    case 3: return rr <= size * 1.3 && rr >= size * 1.3 - 2.0 * thickness;      // ring
    case 4: return rr <= size;                                                  // disk
    default: return ay <= size * 1.6 && ax <= thickness;                        // vertical bar
  }
}

}  // namespace

Dataset make_synthetic_shapes(std::size_t classes, std::size_t per_class, std::uint64_t seed) {
  if (classes == 0 || classes > 6) throw ConfigError("synthetic shapes support 1 to 6 classes");
  RngStream rng(seed);
  Dataset ds;
  ds.num_classes = classes;
  ds.image_side = kSide;
  ds.inputs = Tensor({classes * per_class, kSide * kSide});
  for (std::size_t i = 0; i < per_class; ++i) {
    for (std::size_t k = 0; k < classes; ++k) {
      const std::size_t r = i * classes + k;
      const double cx = 7.5 + (rng.uniform() - 0.5) * 4.0;
      const double cy = 7.5 + (rng.uniform() - 0.5) * 4.0;
      const double size = 2.5 + rng.uniform() * 1.5;
      const double thickness = 1.0 + rng.uniform() * 0.6;
      const double fg = 0.7 + rng.uniform() * 0.3;
      const double bg = rng.uniform() * 0.15;
      float* px = ds.inputs.data() + r * kSide * kSide;
      for (std::size_t y = 0; y < kSide; ++y) {
        for (std::size_t x = 0; x < kSide; ++x) {
          const bool on = inside_shape(k, double(x) - cx, double(y) - cy, size, thickness);
          const double v = (on ? fg : bg) + 0.02 * rng.normal();
          px[y * kSide + x] = float(std::clamp(v, 0.0, 1.0));
        }
      }
      ds.labels.push_back(int(k));
    }
  }
  return ds;
}

// ---------------------------------------------------------------------------
// IDX

namespace {

std::uint32_t read_be32(std::span<const std::uint8_t> b, std::size_t off) {
  return (std::uint32_t(b[off]) << 24) | (std::uint32_t(b[off + 1]) << 16) | (std::uint32_t(b[off + 2]) << 8) |
         std::uint32_t(b[off + 3]);
}

void write_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(std::uint8_t(v >> 24));
  out.push_back(std::uint8_t(v >> 16));
  out.push_back(std::uint8_t(v >> 8));
  out.push_back(std::uint8_t(v));
}

void require_length(std::span<const std::uint8_t> b, std::size_t expected, const char* what) {
  if (b.size() < expected) throw TruncatedFileError(expected, b.size(), what);
}

}  // namespace

IdxImages parse_idx_images(std::span<const std::uint8_t> bytes) {
  require_length(bytes, 16, "IDX image header truncated");
  const std::uint32_t magic = read_be32(bytes, 0);
  if (magic != kIdxImageMagic) throw MagicMismatchError("IDX image magic mismatch: got " + std::to_string(magic));
  IdxImages img;
  img.count = read_be32(bytes, 4);
  img.height = read_be32(bytes, 8);
  img.width = read_be32(bytes, 12);
  const std::size_t expected = 16 + img.count * img.height * img.width;
  require_length(bytes, expected, "IDX image file truncated");
  img.pixels.assign(bytes.begin() + 16, bytes.begin() + std::ptrdiff_t(expected));
  return img;
}

std::vector<std::uint8_t> parse_idx_labels(std::span<const std::uint8_t> bytes) {
  require_length(bytes, 8, "IDX label header truncated");
  const std::uint32_t magic = read_be32(bytes, 0);
  if (magic != kIdxLabelMagic) throw MagicMismatchError("IDX label magic mismatch: got " + std::to_string(magic));
  const std::size_t count = read_be32(bytes, 4);
  require_length(bytes, 8 + count, "IDX label file truncated");
  return {bytes.begin() + 8, bytes.begin() + std::ptrdiff_t(8 + count)};
}

std::vector<std::uint8_t> encode_idx_images(const IdxImages& images) {
  std::vector<std::uint8_t> out;
  write_be32(out, kIdxImageMagic);
  write_be32(out, std::uint32_t(images.count));
  write_be32(out, std::uint32_t(images.height));
  write_be32(out, std::uint32_t(images.width));
  out.insert(out.end(), images.pixels.begin(), images.pixels.end());
  return out;
}

std::vector<std::uint8_t> encode_idx_labels(std::span<const std::uint8_t> labels) {
  std::vector<std::uint8_t> out;
  write_be32(out, kIdxLabelMagic);
  write_be32(out, std::uint32_t(labels.size()));
  out.insert(out.end(), labels.begin(), labels.end());
  return out;
}

Dataset load_idx_dataset(const std::filesystem::path& images, const std::filesystem::path& labels) {
  const IdxImages img = parse_idx_images(read_file_bytes(images));
  const std::vector<std::uint8_t> lab = parse_idx_labels(read_file_bytes(labels));
  if (lab.size() != img.count) {
    throw CountMismatchError("IDX label count " + std::to_string(lab.size()) + " differs from image count " +
                             std::to_string(img.count));
  }
  if (img.height != img.width) throw FormatError("IDX images must be square");
  Dataset ds;
  ds.image_side = img.height;
  ds.inputs = Tensor({img.count, img.height * img.width});
  for (std::size_t i = 0; i < img.pixels.size(); ++i) ds.inputs[i] = float(img.pixels[i]) / 255.0f;
  int max_label = -1;
  for (auto l : lab) {
    ds.labels.push_back(int(l));
    max_label = std::max(max_label, int(l));
  }
  ds.num_classes = std::size_t(max_label + 1);
  for (std::size_t k = 0; k < ds.num_classes; ++k) {
    if (ds.rows_of_class(int(k)).empty()) throw FormatError("IDX labels are not dense in [0, classes)");
  }
  return ds;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
}

}  // namespace advdm
