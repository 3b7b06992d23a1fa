// Copyright 2026 The MVLR Authors
// SPDX-License-Identifier: Apache-2.0
//
// Checkpoint directory layout:
//   model.cfg      architecture keys (flat config)
//   manifest.txt   one line per tensor: name shape dtype file
//   <name>.mvlt    one tensor per parameter

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mvlr/model.hpp"
#include "mvlr/mvlt.hpp"

namespace mvlr {

inline constexpr const char* kCheckpointManifest = "manifest.txt";
inline constexpr const char* kCheckpointModelConfig = "model.cfg";

struct ManifestEntry {
  std::string name;
  Shape shape;
  DType dtype = DType::f32;
  std::string file;
};

template <typename T>
void save_checkpoint(const std::filesystem::path& dir, const ModelParams<T>& model);

/// Rebuilds the model from model.cfg and the manifest. Tensors stored in the
/// other precision are converted. FormatError when a parameter is missing,
/// unexpected or has the wrong shape; IoError when the directory is unreadable.
template <typename T>
ModelParams<T> load_checkpoint(const std::filesystem::path& dir);

std::vector<ManifestEntry> read_checkpoint_manifest(const std::filesystem::path& dir);

}  // namespace mvlr
