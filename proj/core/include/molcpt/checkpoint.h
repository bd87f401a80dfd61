//
// MolCPT - Copyright 2026 The MolCPT Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MOLCPT_CHECKPOINT_H_
#define MOLCPT_CHECKPOINT_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "molcpt/ndiff.h"

namespace molcpt {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Binary layout: "MCPT", u32 version, then sections of
// (u32 name length, name, u64 payload length, payload), all little-endian.
// The "meta" section holds key=value lines; each tensor is a section named
// "tensor/<name>" with payload u32 rank, u64 dims, f64 data. A final "end"
// section holds the u64 tensor count so truncation at a section boundary is
// detected.
struct Checkpoint {
  std::map<std::string, std::string> meta;
  std::vector<std::pair<std::string, nd::Tensor>> tensors;

  const nd::Tensor *find(std::string_view name) const;
  const nd::Tensor &tensor(std::string_view name) const;
  const std::string &get(std::string_view key) const;
  std::optional<std::string> get_optional(std::string_view key) const;
  void set(std::string key, std::string value) { meta[std::move(key)] = std::move(value); }
  void add(std::string name, nd::Tensor t) { tensors.emplace_back(std::move(name), std::move(t)); }

  // Vocabulary hash bound to this checkpoint; 0 when none is bound.
  std::uint64_t vocab_hash() const;
};

std::string serialize_checkpoint(const Checkpoint &c);
Checkpoint deserialize_checkpoint(std::string_view bytes);

void save_checkpoint(const Checkpoint &c, const std::filesystem::path &path);
// When expected_vocab_hash is given and the checkpoint binds a vocabulary,
// the hashes must match.
Checkpoint load_checkpoint(const std::filesystem::path &path,
                           std::optional<std::uint64_t> expected_vocab_hash = {});

}  // namespace molcpt

#endif  // MOLCPT_CHECKPOINT_H_
