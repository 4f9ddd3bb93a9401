// SPDX-License-Identifier: Apache-2.0
//
// GPGW1 tensor container. Layout:
//
//   GPGW1\n
//   iteration <n>\n
//   config <byte count>\n<config text>\n
//   tensors <count>\n
//   <name> <rows> <cols>\n        (one line per tensor)
//   data\n
//   <payloads: rows*cols little-endian float32 per tensor, directory order>
//
// Names must not contain whitespace.
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gpgait/tensor.hpp"

namespace gpgait {

struct NamedTensor {
    std::string name;
    RowMatrix value;
};

struct Checkpoint {
    std::int64_t iteration = 0;
    std::string config_text;
    std::vector<NamedTensor> tensors;

    const NamedTensor* find(const std::string& name) const;
};

std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::string& bytes, const std::string& where = "checkpoint");

/// Writes through a temporary file and renames it into place, so a crash never
/// leaves a truncated checkpoint behind.
void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::filesystem::path& path);

/// Appends every tensor of `store` (trainable or not) under `prefix + name`.
void append_tensors(Checkpoint& ckpt, const ParameterStore& store, const std::string& prefix = "");

/// Copies `prefix + name` from the checkpoint into every tensor of `store`.
/// Throws ShapeError naming the tensor when it is missing or has another shape.
void load_tensors(const Checkpoint& ckpt, ParameterStore& store, const std::string& prefix = "");

}  // namespace gpgait
