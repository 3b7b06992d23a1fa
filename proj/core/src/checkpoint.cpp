// Copyright 2026 The MVLR Authors
// SPDX-License-Identifier: Apache-2.0

#include "mvlr/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "mvlr/config.hpp"

namespace mvlr {

namespace {

std::string shape_token(const Shape& shape) {
  std::string out;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += 'x';
    out += std::to_string(shape[i]);
  }
  return out;
}

Shape parse_shape_token(const std::string& token, const std::string& where) {
  Shape shape;
  std::size_t pos = 0;
  while (pos <= token.size()) {
    const std::size_t end = std::min(token.find('x', pos), token.size());
    const std::string part = token.substr(pos, end - pos);
    if (part.empty() || part.find_first_not_of("0123456789") != std::string::npos) {
      throw FormatError(where + ": bad shape '" + token + "'");
    }
    shape.push_back(std::stoull(part));
    if (end == token.size()) break;
    pos = end + 1;
  }
  return shape;
}

DType parse_dtype(const std::string& token, const std::string& where) {
  if (token == "f32") return DType::f32;
  if (token == "f64") return DType::f64;
  throw FormatError(where + ": bad dtype '" + token + "'");
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot create " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace

template <typename T>
void save_checkpoint(const std::filesystem::path& dir, const ModelParams<T>& model) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create checkpoint directory " + dir.string() + ": " + ec.message());

  ModelParams<T> copy = model;
  std::string manifest;
  for (const auto& p : copy.parameters()) {
    const std::string file = p.name + ".mvlt";
    write_mvlt(dir / file, *p.tensor);
    manifest += p.name + " " + shape_token(p.tensor->shape()) + " " +
                to_string(dtype_of<T>()) + " " + file + "\n";
  }
  write_text(dir / kCheckpointManifest, manifest);
  write_text(dir / kCheckpointModelConfig,
             model_config_entries(model.config, model.bank.frozen).to_text());
}

std::vector<ManifestEntry> read_checkpoint_manifest(const std::filesystem::path& dir) {
  const auto path = dir / kCheckpointManifest;
  std::ifstream in(path);
  if (!in) throw IoError("cannot open checkpoint manifest " + path.string());
  std::vector<ManifestEntry> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    std::istringstream fields(line);
    std::string name, shape, dtype, file, extra;
    if (!(fields >> name >> shape >> dtype >> file) || (fields >> extra)) {
      throw FormatError(where + ": expected 'name shape dtype file'");
    }
    entries.push_back({name, parse_shape_token(shape, where), parse_dtype(dtype, where), file});
  }
  return entries;
}

template <typename T>
ModelParams<T> load_checkpoint(const std::filesystem::path& dir) {
  bool frozen = false;
  const ModelConfig config =
      parse_model_config(FlatConfig::load(dir / kCheckpointModelConfig), &frozen);
  ModelParams<T> model = init_model<T>(config, 0);
  model.bank.frozen = frozen;

  const auto entries = read_checkpoint_manifest(dir);
  auto params = model.parameters();
  if (entries.size() != params.size()) {
    throw FormatError("checkpoint " + dir.string() + " lists " + std::to_string(entries.size()) +
                      " tensors, model expects " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& e = entries[i];
    if (e.name != params[i].name) {
      throw FormatError("checkpoint entry " + std::to_string(i) + " is '" + e.name +
                        "', expected '" + params[i].name + "'");
    }
    Tensor<T> value = read_mvlt<T>(dir / e.file);
    if (value.shape() != params[i].tensor->shape() || e.shape != value.shape()) {
      throw FormatError("checkpoint tensor '" + e.name + "' has shape " + to_string(value.shape()) +
                        ", expected " + to_string(params[i].tensor->shape()));
    }
    *params[i].tensor = std::move(value);
  }
  model.bank.validate();
  return model;
}

template void save_checkpoint(const std::filesystem::path&, const ModelParams<float>&);
template void save_checkpoint(const std::filesystem::path&, const ModelParams<double>&);
template ModelParams<float> load_checkpoint(const std::filesystem::path&);
template ModelParams<double> load_checkpoint(const std::filesystem::path&);

}  // namespace mvlr
