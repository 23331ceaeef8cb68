// Copyright 2026 The cadpt Authors
// SPDX-License-Identifier: Apache-2.0
//
// Checkpoint layout (all integers little-endian u32, floats IEEE-754 binary32 LE):
//
//   "CADPT1"                              6-byte magic
//   config_len, config bytes              UTF-8 JSON echo of the run config
//   group_count
//   per group:  name_len, name, tensor_count
//     per tensor: name_len, name, rank, dims[rank], values[prod(dims)]
//   crc32                                 zlib/IEEE CRC-32 of every byte between
//                                         the magic and this field
#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <zlib.h>

#include "cadpt/params.hpp"
#include "cadpt/tensor.hpp"

namespace cadpt {

inline constexpr char kCheckpointMagic[6] = {'C', 'A', 'D', 'P', 'T', '1'};

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct StoredTensor {
  std::string name;
  Shape shape;
  std::vector<float> values;
};

struct Checkpoint {
  std::string config;  // JSON text
  std::map<std::string, std::vector<StoredTensor>> groups;
};

inline std::uint32_t crc32_of(const unsigned char* data, std::size_t n) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes 32-bit lengths
  while (n > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
    crc = crc32(crc, data, chunk);
    data += chunk;
    n -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

namespace detail {

class ByteWriter {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    buf_.insert(buf_.end(), s.begin(), s.end());
  }
  void f32(float f) { u32(std::bit_cast<std::uint32_t>(f)); }
  std::vector<unsigned char>& bytes() { return buf_; }

 private:
  std::vector<unsigned char> buf_;
};

class ByteReader {
 public:
  ByteReader(const unsigned char* p, std::size_t n) : p_(p), n_(n) {}
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::string str() {
    const auto len = u32();
    need(len);
    std::string s(reinterpret_cast<const char*>(p_ + pos_), len);
    pos_ += len;
    return s;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  bool done() const { return pos_ == n_; }

 private:
  void need(std::size_t k) const {
    if (pos_ + k > n_) throw CheckpointError("checkpoint truncated");
  }
  const unsigned char* p_;
  std::size_t n_;
  std::size_t pos_ = 0;
};

}  // namespace detail

template <class T>
std::vector<unsigned char> serialize_checkpoint(const ParamGroups<T>& groups, const std::string& config_json) {
  detail::ByteWriter w;
  w.str(config_json);
  w.u32(static_cast<std::uint32_t>(groups.size()));
  for (const auto& [name, params] : groups) {
    w.str(name);
    w.u32(static_cast<std::uint32_t>(params.size()));
    for (const auto& p : params) {
      w.str(p.name);
      w.u32(static_cast<std::uint32_t>(p.tensor.rank()));
      for (auto d : p.tensor.shape()) w.u32(static_cast<std::uint32_t>(d));
      for (T v : p.tensor.data()) w.f32(static_cast<float>(v));
    }
  }
  auto& payload = w.bytes();
  std::vector<unsigned char> out;
  out.reserve(sizeof kCheckpointMagic + payload.size() + 4);
  for (char c : kCheckpointMagic) out.push_back(static_cast<unsigned char>(c));
  for (unsigned char b : payload) out.push_back(b);
  const auto crc = crc32_of(payload.data(), payload.size());
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(crc >> (8 * i)));
  return out;
}

inline Checkpoint parse_checkpoint(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < sizeof kCheckpointMagic + 4 ||
      std::memcmp(bytes.data(), kCheckpointMagic, sizeof kCheckpointMagic) != 0) {
    throw CheckpointError("not a checkpoint (bad magic)");
  }
  const unsigned char* payload = bytes.data() + sizeof kCheckpointMagic;
  const std::size_t payload_len = bytes.size() - sizeof kCheckpointMagic - 4;
  detail::ByteReader tail(payload + payload_len, 4);
  const auto stored = tail.u32();
  const auto actual = crc32_of(payload, payload_len);
  if (stored != actual) throw CheckpointError("checkpoint CRC mismatch (file is corrupt)");
  detail::ByteReader r(payload, payload_len);
  Checkpoint ck;
  ck.config = r.str();
  const auto n_groups = r.u32();
  for (std::uint32_t g = 0; g < n_groups; ++g) {
    auto name = r.str();
    auto& list = ck.groups[name];
    const auto n_tensors = r.u32();
    for (std::uint32_t t = 0; t < n_tensors; ++t) {
      StoredTensor st;
      st.name = r.str();
      const auto rank = r.u32();
      for (std::uint32_t k = 0; k < rank; ++k) st.shape.push_back(r.u32());
      const auto n = shape_numel(st.shape);
      st.values.resize(n);
      for (std::size_t i = 0; i < n; ++i) st.values[i] = r.f32();
      list.push_back(std::move(st));
    }
  }
  if (!r.done()) throw CheckpointError("trailing bytes after checkpoint payload");
  return ck;
}

template <class T>
void save_checkpoint(const std::string& path, const ParamGroups<T>& groups, const std::string& config_json) {
  auto bytes = serialize_checkpoint(groups, config_json);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError("short write to " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_checkpoint(bytes);
}

/// Copies stored values into the matching model parameters (by group, name, shape).
template <class T>
void apply_checkpoint(const Checkpoint& ck, const ParamGroups<T>& groups) {
  for (const auto& [gname, params] : groups) {
    auto it = ck.groups.find(gname);
    if (it == ck.groups.end()) throw CheckpointError("checkpoint lacks group '" + gname + "'");
    for (auto p : params) {
      auto st = std::find_if(it->second.begin(), it->second.end(), [&](const StoredTensor& s) { return s.name == p.name; });
      if (st == it->second.end()) throw CheckpointError("checkpoint lacks tensor '" + p.name + "'");
      if (st->shape != p.tensor.shape()) {
        throw CheckpointError("tensor '" + p.name + "' has shape " + shape_str(st->shape) + ", model expects " +
                              shape_str(p.tensor.shape()));
      }
      auto data = p.tensor.data();
      for (std::size_t i = 0; i < data.size(); ++i) data[i] = static_cast<T>(st->values[i]);
    }
  }
}

}  // namespace cadpt
