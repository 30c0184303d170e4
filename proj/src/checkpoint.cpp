// Copyright (c) 2026, advdm-lab authors
// SPDX-License-Identifier: Apache-2.0

#include "advdm/checkpoint.hpp"

#include <openssl/evp.h>

#include <array>
#include <bit>
#include <cstring>

#include "advdm/dataset.hpp"
#include "advdm/errors.hpp"

namespace advdm {

namespace {

template <class T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(std::uint8_t((std::uint64_t(value) >> (8 * i)) & 0xffu));
}

template <class T>
T get_le(std::span<const std::uint8_t> b, std::size_t offset) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= std::uint64_t(b[offset + i]) << (8 * i);
  return T(v);
}

void put_float(std::vector<std::uint8_t>& out, float f) { put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(f)); }

constexpr std::size_t kPrefix = 8 + 4 + 8 + 8;
constexpr std::size_t kDigest = 32;

std::array<std::uint8_t, kDigest> digest(std::span<const std::uint8_t> bytes) {
  std::array<std::uint8_t, kDigest> md{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1 || len != kDigest) {
    throw Error("SHA-256 computation failed");
  }
  return md;
}

nlohmann::json shape_json(const Shape& s) {
  nlohmann::json j = nlohmann::json::array();
  for (auto e : s) j.push_back(e);
  return j;
}

void require_kind(const Checkpoint& c, const char* kind) {
  if (c.header.value("kind", std::string()) != kind) {
    throw FormatError(std::string("checkpoint is not a ") + kind + " checkpoint");
  }
}

}  // namespace

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (std::uint8_t b : digest(bytes)) {
    out.push_back(hex[b >> 4]);
    out.push_back(hex[b & 0xf]);
  }
  return out;
}

std::string sha256_hex(const std::string& text) {
  return sha256_hex(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string file_sha256(const std::filesystem::path& path) { return sha256_hex(read_file_bytes(path)); }

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& checkpoint) {
  nlohmann::json header = checkpoint.header;
  header["format_version"] = kCheckpointVersion;
  nlohmann::json table = nlohmann::json::array();
  std::size_t payload = 0;
  for (std::size_t i = 0; i < checkpoint.arrays.size(); ++i) {
    table.push_back({{"name", checkpoint.arrays.name(i)}, {"shape", shape_json(checkpoint.arrays[i].shape())}});
    payload += checkpoint.arrays[i].size() * sizeof(float);
  }
  header["arrays"] = table;
  const std::string text = header.dump();

  std::vector<std::uint8_t> out;
  out.reserve(kPrefix + text.size() + payload + kDigest);
  out.insert(out.end(), std::begin(kCheckpointMagic), std::end(kCheckpointMagic));
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint64_t>(out, text.size());
  put_le<std::uint64_t>(out, payload);
  out.insert(out.end(), text.begin(), text.end());
  for (std::size_t i = 0; i < checkpoint.arrays.size(); ++i)
    for (float f : checkpoint.arrays[i].values()) put_float(out, f);
  const auto md = digest(out);
  out.insert(out.end(), md.begin(), md.end());
  return out;
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kPrefix) throw TruncatedFileError(kPrefix, bytes.size(), "checkpoint header truncated");
  if (std::memcmp(bytes.data(), kCheckpointMagic, 8) != 0) throw MagicMismatchError("not a checkpoint file (bad magic)");
  const auto version = get_le<std::uint32_t>(bytes, 8);
  if (version != kCheckpointVersion) {
    throw VersionMismatchError("checkpoint format version " + std::to_string(version) + ", expected " +
                               std::to_string(kCheckpointVersion));
  }
  const auto header_len = get_le<std::uint64_t>(bytes, 12);
  const auto payload_len = get_le<std::uint64_t>(bytes, 20);
  const std::size_t expected = kPrefix + header_len + payload_len + kDigest;
  if (bytes.size() < expected) throw TruncatedFileError(expected, bytes.size(), "checkpoint truncated");
  const auto body = bytes.first(expected - kDigest);
  const auto md = digest(body);
  if (std::memcmp(md.data(), bytes.data() + expected - kDigest, kDigest) != 0) {
    throw HashMismatchError("checkpoint content hash mismatch");
  }

  Checkpoint c;
  try {
    c.header = nlohmann::json::parse(bytes.begin() + kPrefix, bytes.begin() + std::ptrdiff_t(kPrefix + header_len));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint header is not valid JSON: ") + e.what());
  }
  std::size_t offset = kPrefix + header_len;
  const std::size_t end = offset + payload_len;
  for (const auto& entry : c.header.at("arrays")) {
    Shape shape = entry.at("shape").get<Shape>();
    Tensor t(shape);
    if (offset + t.size() * sizeof(float) > end) throw FormatError("checkpoint array table exceeds payload");
    for (std::size_t i = 0; i < t.size(); ++i) {
      t[i] = std::bit_cast<float>(get_le<std::uint32_t>(bytes, offset));
      offset += sizeof(float);
    }
    c.arrays.add(entry.at("name").get<std::string>(), std::move(t));
  }
  if (offset != end) throw FormatError("checkpoint payload has trailing bytes");
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  write_file_bytes(path, encode_checkpoint(checkpoint));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(read_file_bytes(path)); }

// ---------------------------------------------------------------------------

Checkpoint make_checkpoint(const Denoiser& model, const DiffusionSchedule& schedule) {
  Checkpoint c;
  const auto& cfg = model.config();
  c.header["kind"] = "denoiser";
  c.header["architecture"] = {{"data_dim", cfg.data_dim}, {"cond_dim", cfg.cond_dim}, {"time_dim", cfg.time_dim},
                              {"hidden", cfg.hidden},     {"depth", cfg.depth},       {"num_classes", cfg.num_classes}};
  std::vector<double> betas;
  for (std::size_t t = 1; t <= schedule.steps(); ++t) betas.push_back(schedule.beta(t));
  c.header["schedule"] = {{"steps", schedule.steps()},
                          {"beta_start", schedule.beta_start()},
                          {"beta_end", schedule.beta_end()},
                          {"betas", betas}};
  c.arrays = model.parameters();
  return c;
}

DenoiserBundle denoiser_from_checkpoint(const Checkpoint& c) {
  require_kind(c, "denoiser");
  const auto& a = c.header.at("architecture");
  DenoiserConfig cfg;
  cfg.data_dim = a.at("data_dim");
  cfg.cond_dim = a.at("cond_dim");
  cfg.time_dim = a.at("time_dim");
  cfg.hidden = a.at("hidden");
  cfg.depth = a.at("depth");
  cfg.num_classes = a.at("num_classes");
  auto schedule = DiffusionSchedule::from_betas(c.header.at("schedule").at("betas").get<std::vector<double>>());
  return DenoiserBundle{Denoiser::from_parameters(cfg, c.arrays), std::move(schedule)};
}

Checkpoint make_checkpoint(const LatentCodec& codec) {
  Checkpoint c;
  const auto& cfg = codec.config();
  c.header["kind"] = "codec";
  c.header["architecture"] = {{"input_dim", cfg.input_dim},
                              {"latent_dim", cfg.latent_dim},
                              {"hidden", cfg.hidden},
                              {"bounded_output", cfg.bounded_output}};
  c.arrays = codec.parameters();
  return c;
}

LatentCodec codec_from_checkpoint(const Checkpoint& c) {
  require_kind(c, "codec");
  const auto& a = c.header.at("architecture");
  CodecConfig cfg;
  cfg.input_dim = a.at("input_dim");
  cfg.latent_dim = a.at("latent_dim");
  cfg.hidden = a.at("hidden");
  cfg.bounded_output = a.at("bounded_output");
  return LatentCodec::from_parameters(cfg, c.arrays);
}

Checkpoint make_checkpoint(const Classifier& classifier) {
  Checkpoint c;
  const auto& cfg = classifier.config();
  c.header["kind"] = "classifier";
  c.header["architecture"] = {{"input_dim", cfg.input_dim}, {"hidden", cfg.hidden}, {"num_classes", cfg.num_classes}};
  c.arrays = classifier.parameters();
  return c;
}

Classifier classifier_from_checkpoint(const Checkpoint& c) {
  require_kind(c, "classifier");
  const auto& a = c.header.at("architecture");
  ClassifierConfig cfg;
  cfg.input_dim = a.at("input_dim");
  cfg.hidden = a.at("hidden");
  cfg.num_classes = a.at("num_classes");
  return Classifier::from_parameters(cfg, c.arrays);
}

Checkpoint make_checkpoint(const ConditionEmbedding& embedding) {
  Checkpoint c;
  c.header["kind"] = "embedding";
  c.header["provenance"] = std::string(to_string(embedding.provenance));
  c.header["source_class"] = embedding.source_class;
  c.arrays.add("embedding", embedding.vector);
  return c;
}

ConditionEmbedding embedding_from_checkpoint(const Checkpoint& c) {
  require_kind(c, "embedding");
  ConditionEmbedding e;
  e.vector = c.arrays.get("embedding");
  e.provenance = parse_provenance(c.header.at("provenance").get<std::string>());
  e.source_class = c.header.at("source_class");
  return e;
}

}  // namespace advdm
