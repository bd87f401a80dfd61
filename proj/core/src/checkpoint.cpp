//
// MolCPT - Copyright 2026 The MolCPT Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "molcpt/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "molcpt/error.h"

namespace molcpt {

namespace {

constexpr std::string_view kMagic = "MCPT";
constexpr std::string_view kMetaSection = "meta";
constexpr std::string_view kTensorPrefix = "tensor/";
constexpr std::string_view kEndSection = "end";

[[noreturn]] void fail(const std::string &msg) {
  throw Error(ErrorCategory::kCheckpoint, msg);
}

template <class T>
void put(std::string &out, T v) {
  static_assert(std::is_unsigned_v<T>);
  for (std::size_t i = 0; i < sizeof(T); ++i)
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string &out, double v) {
  put(out, std::bit_cast<std::uint64_t>(v));
}

class Reader {
public:
  explicit Reader(std::string_view s): s_(s) { }

  template <class T>
  T get() {
    need(sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
      v |= static_cast<T>(static_cast<unsigned char>(s_[pos_ + i])) << (8 * i);
    pos_ += sizeof(T);
    return v;
  }

  double get_f64() { return std::bit_cast<double>(get<std::uint64_t>()); }

  std::string_view bytes(std::uint64_t n) {
    need(n);
    std::string_view v = s_.substr(pos_, static_cast<std::size_t>(n));
    pos_ += static_cast<std::size_t>(n);
    return v;
  }

  bool done() const { return pos_ == s_.size(); }

private:
  void need(std::uint64_t n) const {
    if (n > s_.size() - pos_)
      fail("truncated checkpoint");
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

void put_section(std::string &out, std::string_view name, std::string_view payload) {
  put(out, static_cast<std::uint32_t>(name.size()));
  out.append(name);
  put(out, static_cast<std::uint64_t>(payload.size()));
  out.append(payload);
}

std::string tensor_payload(const nd::Tensor &t) {
  std::string out;
  put(out, static_cast<std::uint32_t>(t.rank()));
  for (std::size_t d: t.shape())
    put(out, static_cast<std::uint64_t>(d));
  for (double v: t.values())
    put_f64(out, v);
  return out;
}

nd::Tensor parse_tensor(std::string_view payload) {
  Reader r(payload);
  const std::uint32_t rank = r.get<std::uint32_t>();
  if (rank > 8)
    fail("tensor rank too large");
  nd::Shape shape;
  std::uint64_t count = 1;
  for (std::uint32_t i = 0; i < rank; ++i) {
    const std::uint64_t d = r.get<std::uint64_t>();
    if (d != 0 && count > (payload.size() / 8) / d)
      fail("tensor shape exceeds payload");
    count *= d;
    shape.push_back(static_cast<std::size_t>(d));
  }
  if (count * 8 != payload.size() - 4 - 8 * static_cast<std::uint64_t>(rank))
    fail("tensor payload size mismatch");
  std::vector<double> data(static_cast<std::size_t>(count));
  for (double &v: data)
    v = r.get_f64();
  return nd::Tensor(std::move(shape), std::move(data));
}

}  // namespace

const nd::Tensor *Checkpoint::find(std::string_view name) const {
  for (const auto &[n, t]: tensors)
    if (n == name)
      return &t;
  return nullptr;
}

const nd::Tensor &Checkpoint::tensor(std::string_view name) const {
  if (const nd::Tensor *t = find(name))
    return *t;
  fail("checkpoint has no tensor '" + std::string(name) + "'");
}

const std::string &Checkpoint::get(std::string_view key) const {
  auto it = meta.find(std::string(key));
  if (it == meta.end())
    fail("checkpoint has no '" + std::string(key) + "' entry");
  return it->second;
}

std::optional<std::string> Checkpoint::get_optional(std::string_view key) const {
  auto it = meta.find(std::string(key));
  if (it == meta.end())
    return std::nullopt;
  return it->second;
}

std::uint64_t Checkpoint::vocab_hash() const {
  auto v = get_optional("vocab_hash");
  if (!v)
    return 0;
  try {
    return std::stoull(*v, nullptr, 16);
  } catch (const std::exception &) {
    fail("malformed vocab_hash entry");
  }
}

std::string serialize_checkpoint(const Checkpoint &c) {
  std::string out(kMagic);
  put(out, kCheckpointVersion);
  std::string meta;
  for (const auto &[k, v]: c.meta) {
    if (k.find_first_of("=\n") != std::string::npos || v.find('\n') != std::string::npos)
      fail("meta entries must not contain '=' in keys or newlines");
    meta += k + "=" + v + "\n";
  }
  put_section(out, kMetaSection, meta);
  for (const auto &[name, t]: c.tensors)
    put_section(out, std::string(kTensorPrefix) + name, tensor_payload(t));
  std::string count;
  put(count, static_cast<std::uint64_t>(c.tensors.size()));
  put_section(out, kEndSection, count);
  return out;
}

Checkpoint deserialize_checkpoint(std::string_view bytes) {
  if (bytes.size() < kMagic.size() || bytes.substr(0, kMagic.size()) != kMagic)
    fail("bad checkpoint magic");
  Reader r(bytes.substr(kMagic.size()));
  const std::uint32_t version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion)
    fail("unsupported checkpoint version " + std::to_string(version));
  Checkpoint c;
  bool have_meta = false;
  bool have_end = false;
  while (!r.done()) {
    if (have_end)
      fail("data after the end section");
    const std::uint32_t name_len = r.get<std::uint32_t>();
    const std::string name(r.bytes(name_len));
    const std::uint64_t len = r.get<std::uint64_t>();
    const std::string_view payload = r.bytes(len);
    if (name == kMetaSection) {
      std::istringstream in { std::string(payload) };
      std::string line;
      while (std::getline(in, line)) {
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
          fail("malformed meta line");
        c.meta[line.substr(0, eq)] = line.substr(eq + 1);
      }
      have_meta = true;
    } else if (name == kEndSection) {
      Reader count(payload);
      if (payload.size() != 8 || count.get<std::uint64_t>() != c.tensors.size())
        fail("checkpoint tensor count mismatch");
      have_end = true;
    } else if (name.starts_with(kTensorPrefix)) {
      c.tensors.emplace_back(name.substr(kTensorPrefix.size()), parse_tensor(payload));
    } else {
      fail("unknown checkpoint section '" + name + "'");
    }
  }
  if (!have_meta)
    fail("checkpoint has no meta section");
  if (!have_end)
    fail("truncated checkpoint");
  return c;
}

void save_checkpoint(const Checkpoint &c, const std::filesystem::path &path) {
  const std::string bytes = serialize_checkpoint(c);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw Error(ErrorCategory::kIo, "cannot write checkpoint " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out)
    throw Error(ErrorCategory::kIo, "failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path &path,
                           std::optional<std::uint64_t> expected_vocab_hash) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(ErrorCategory::kIo, "cannot open checkpoint " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  Checkpoint c = deserialize_checkpoint(buf.str());
  if (expected_vocab_hash && c.vocab_hash() != 0
      && c.vocab_hash() != *expected_vocab_hash)
    fail("vocabulary hash mismatch: checkpoint was built with a different vocabulary");
  return c;
}

}  // namespace molcpt
