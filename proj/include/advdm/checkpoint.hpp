// Copyright (c) 2026, advdm-lab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "advdm/classifier.hpp"
#include "advdm/codec.hpp"
#include "advdm/diffusion.hpp"
#include "advdm/inversion.hpp"
#include "advdm/nn.hpp"

namespace advdm {

/// On-disk layout (all integers little-endian):
///
///   bytes 0..7    magic "ADVDMCKP"
///   u32           format version
///   u64           header length H
///   u64           payload length P
///   H bytes       JSON header manifest: kind, architecture, schedule, array table
///   P bytes       named float32 arrays, concatenated in header order
///   32 bytes      SHA-256 of everything above
inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr char kCheckpointMagic[8] = {'A', 'D', 'V', 'D', 'M', 'C', 'K', 'P'};

struct Checkpoint {
  nlohmann::json header = nlohmann::json::object();
  ParameterSet arrays;
};

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& checkpoint);
/// Throws MagicMismatchError, VersionMismatchError, TruncatedFileError or HashMismatchError.
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_hex(const std::string& text);
std::string file_sha256(const std::filesystem::path& path);

struct DenoiserBundle {
  Denoiser model;
  DiffusionSchedule schedule;
};

Checkpoint make_checkpoint(const Denoiser& model, const DiffusionSchedule& schedule);
Checkpoint make_checkpoint(const LatentCodec& codec);
Checkpoint make_checkpoint(const Classifier& classifier);
Checkpoint make_checkpoint(const ConditionEmbedding& embedding);

DenoiserBundle denoiser_from_checkpoint(const Checkpoint& checkpoint);
LatentCodec codec_from_checkpoint(const Checkpoint& checkpoint);
Classifier classifier_from_checkpoint(const Checkpoint& checkpoint);
ConditionEmbedding embedding_from_checkpoint(const Checkpoint& checkpoint);

}  // namespace advdm
