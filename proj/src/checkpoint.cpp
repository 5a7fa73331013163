// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tkgd Authors

#include "checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "error.hpp"

namespace tkgd {

namespace {

constexpr char kMagic[8] = {'T', 'K', 'G', 'D', 'C', 'K', 'P', 'T'};

class Writer {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  std::vector<std::uint8_t>& data() { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  Reader(std::span<const std::uint8_t> bytes, std::string_view origin) : bytes_(bytes), origin_(origin) {}

  std::uint32_t u32() {
    need(4, "integer");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  float f32() { return std::bit_cast<float>(u32()); }
  void bytes(void* dst, std::size_t n, const char* what) {
    need(n, what);
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n, const char* what) {
    if (remaining() < n) fail(ErrorCode::kCheckpoint, std::string(origin_) + ": truncated checkpoint (reading " + what + ")");
  }
  std::span<const std::uint8_t> bytes_;
  std::string origin_;
  std::size_t pos_ = 0;
};

std::string dims_text(const ModelDims& d) {
  return std::string(to_string(d.backbone)) + " dim=" + std::to_string(d.dim) + " entities=" +
         std::to_string(d.n_entities) + " relations=" + std::to_string(d.n_relations) +
         " times=" + std::to_string(d.n_times());
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const ModelParams<float>& params, const Digest& dataset_digest,
                                            const Digest& config_digest) {
  const auto& d = params.dims;
  Writer w;
  w.bytes(kMagic, sizeof(kMagic));
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(d.backbone));
  w.u32(static_cast<std::uint32_t>(d.dim));
  w.u32(static_cast<std::uint32_t>(d.n_entities));
  w.u32(static_cast<std::uint32_t>(d.n_relations));
  w.u32(static_cast<std::uint32_t>(d.n_times()));
  for (int y : d.years) w.i32(y);
  w.bytes(dataset_digest.data(), dataset_digest.size());
  w.bytes(config_digest.data(), config_digest.size());
  w.u32(static_cast<std::uint32_t>(params.tensors.size()));
  for (const auto& t : params.tensors) {
    w.u32(static_cast<std::uint32_t>(t.rows));
    w.u32(static_cast<std::uint32_t>(t.cols));
    for (float v : t.values) w.f32(v);
  }
  const Digest tail = sha256(std::span<const std::uint8_t>(w.data()));
  w.bytes(tail.data(), tail.size());
  return std::move(w.data());
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes, std::string_view origin) {
  const std::string where(origin);
  if (bytes.size() < sizeof(kMagic) || !std::equal(kMagic, kMagic + sizeof(kMagic), bytes.begin())) {
    fail(ErrorCode::kCheckpoint, where + ": not a tkgd checkpoint (bad magic)");
  }
  Reader r(bytes.subspan(sizeof(kMagic)), origin);
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    fail(ErrorCode::kCheckpoint, where + ": unsupported checkpoint version " + std::to_string(version));
  }
  if (bytes.size() < sizeof(kMagic) + 4 + 32) fail(ErrorCode::kCheckpoint, where + ": truncated checkpoint");
  Checkpoint ck;
  const auto body = bytes.first(bytes.size() - 32);
  std::copy(bytes.end() - 32, bytes.end(), ck.file_digest.begin());

  ModelDims dims;
  const std::uint32_t tag = r.u32();
  if (tag != static_cast<std::uint32_t>(Backbone::kTTransE) && tag != static_cast<std::uint32_t>(Backbone::kTADistMult)) {
    fail(ErrorCode::kCheckpoint, where + ": unknown backbone tag " + std::to_string(tag));
  }
  dims.backbone = static_cast<Backbone>(tag);
  dims.dim = r.u32();
  dims.n_entities = r.u32();
  dims.n_relations = r.u32();
  const std::uint32_t n_times = r.u32();
  if (n_times > r.remaining() / 4) fail(ErrorCode::kCheckpoint, where + ": truncated checkpoint (reading years)");
  dims.years.resize(n_times);
  for (auto& y : dims.years) y = r.i32();
  r.bytes(ck.dataset_digest.data(), 32, "dataset digest");
  r.bytes(ck.config_digest.data(), 32, "config digest");

  if (dims.dim == 0 || dims.n_entities == 0 || dims.n_relations == 0) {
    fail(ErrorCode::kCheckpoint, where + ": invalid dimensions in header (" + dims_text(dims) + ")");
  }
  ck.params = allocate_params<float>(dims);
  const std::uint32_t n_tensors = r.u32();
  if (n_tensors != ck.params.tensors.size()) {
    fail(ErrorCode::kCheckpoint, where + ": expected " + std::to_string(ck.params.tensors.size()) + " tensors, found " +
                                     std::to_string(n_tensors));
  }
  for (auto& t : ck.params.tensors) {
    const std::uint32_t rows = r.u32();
    const std::uint32_t cols = r.u32();
    if (rows != t.rows || cols != t.cols) {
      fail(ErrorCode::kCheckpoint, where + ": tensor shape " + std::to_string(rows) + "x" + std::to_string(cols) +
                                       " does not match header (" + std::to_string(t.rows) + "x" +
                                       std::to_string(t.cols) + ")");
    }
    if (t.values.size() > r.remaining() / 4) fail(ErrorCode::kCheckpoint, where + ": truncated checkpoint (reading tensor)");
    for (auto& v : t.values) v = r.f32();
  }
  if (r.remaining() != 32) {
    fail(ErrorCode::kCheckpoint, where + (r.remaining() < 32 ? ": truncated checkpoint (reading digest)"
                                                             : ": trailing bytes after tensors"));
  }
  if (sha256(body) != ck.file_digest) fail(ErrorCode::kCheckpoint, where + ": checkpoint digest mismatch (file corrupted)");
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const ModelParams<float>& params, const Digest& dataset_digest,
                     const Digest& config_digest) {
  const auto bytes = encode_checkpoint(params, dataset_digest, config_digest);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::kIo, "cannot write checkpoint " + tmp);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorCode::kIo, "short write to " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const CheckpointExpectations& expect) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Checkpoint ck = decode_checkpoint(bytes, path.string());
  if (expect.dims) {
    ModelDims want = *expect.dims;
    if (want.dim == 0) want.dim = ck.params.dims.dim;
    if (!(want == ck.params.dims)) {
    fail(ErrorCode::kCheckpoint, path.string() + ": dimension mismatch: checkpoint has " + dims_text(ck.params.dims) +
                                       ", expected " + dims_text(want));
    }
  }
  if (expect.dataset_digest && *expect.dataset_digest != ck.dataset_digest) {
    warn(path.string() + ": checkpoint was trained on a different dataset (digest " +
         to_hex(ck.dataset_digest).substr(0, 12) + " vs " + to_hex(*expect.dataset_digest).substr(0, 12) + ")");
  }
  return ck;
}

}  // namespace tkgd
