// Copyright 2026 The MVLR Authors
// SPDX-License-Identifier: Apache-2.0

#include "mvlr/prior.hpp"

#include "mvlr/mvlt.hpp"
#include "mvlr/random.hpp"

namespace mvlr {

template <typename T>
PriorEmbedding<T> synth_prior(const DegradationSpec& spec, std::uint64_t seed,
                              std::size_t tokens, std::size_t dim) {
  spec.validate();
  if (tokens < 1) throw ValidationError("prior needs at least one token");
  if (dim < kPriorMinDim) {
    throw ValidationError("prior width " + std::to_string(dim) + " below minimum " +
                          std::to_string(kPriorMinDim));
  }
  PriorEmbedding<T> prior{uniform_tensor<T>({tokens, dim}, -1.0, 1.0, derive_seed(seed, "prior")),
                          spec};
  for (std::size_t w = 0; w < 4; ++w) prior.matrix.at(0, kPriorWeatherOffset + w) = T{0};
  prior.matrix.at(0, kPriorWeatherOffset + static_cast<std::size_t>(spec.weather)) = T{1};
  prior.matrix.at(0, kPriorSeverityIndex) = static_cast<T>(spec.severity);
  return prior;
}

template <typename T>
PriorEmbedding<T> load_prior(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  const MvltHeader header = decode_mvlt_header(bytes, path.string());
  if (header.shape.size() != 2) {
    throw FormatError(path.string() + ": prior must be rank 2, file has rank " +
                      std::to_string(header.shape.size()));
  }
  return {decode_mvlt<T>(bytes, path.string()), std::nullopt};
}

template <typename T>
void save_prior(const std::filesystem::path& path, const PriorEmbedding<T>& prior) {
  write_mvlt(path, prior.matrix);
}

template <typename T>
ProjectionParams<T> make_projection(std::size_t prior_dim, std::size_t hidden,
                                    std::size_t feat_dim, std::uint64_t seed) {
  return {make_linear<T>(prior_dim, hidden, derive_seed(seed, "hidden")),
          make_linear<T>(hidden, feat_dim, derive_seed(seed, "out"))};
}

template <typename T>
ProjectedPrior<T> project_prior(const PriorEmbedding<T>& prior, const ProjectionParams<T>& params,
                                ProjectionCache<T>* cache) {
  if (prior.matrix.rank() != 2 || prior.dim() != params.input_dim()) {
    throw ShapeError("project_prior: embedding " + to_string(prior.matrix.shape()) +
                     " does not match MLP input " + to_string(params.hidden.weight.shape()));
  }
  Tensor<T> pre = linear_forward(params.hidden, prior.matrix);
  Tensor<T> act = relu(pre);
  ProjectedPrior<T> out{linear_forward(params.out, act)};
  if (cache) {
    cache->input = prior.matrix;
    cache->hidden_pre = std::move(pre);
    cache->hidden = std::move(act);
  }
  return out;
}

template <typename T>
void project_prior_backward(const ProjectionParams<T>& params, const ProjectionCache<T>& cache,
                            const Tensor<T>& d_projected, ProjectionParams<T>& grad) {
  Tensor<T> d_hidden = linear_backward(params.out, cache.hidden, d_projected, grad.out);
  linear_backward(params.hidden, cache.input, relu_backward(cache.hidden_pre, d_hidden),
                  grad.hidden, false);
}

#define MVLR_INSTANTIATE_PRIOR(T)                                                          \
  template PriorEmbedding<T> synth_prior(const DegradationSpec&, std::uint64_t, std::size_t, \
                                         std::size_t);                                     \
  template PriorEmbedding<T> load_prior(const std::filesystem::path&);                     \
  template void save_prior(const std::filesystem::path&, const PriorEmbedding<T>&);        \
  template ProjectionParams<T> make_projection(std::size_t, std::size_t, std::size_t,      \
                                               std::uint64_t);                             \
  template ProjectedPrior<T> project_prior(const PriorEmbedding<T>&,                       \
                                           const ProjectionParams<T>&, ProjectionCache<T>*); \
  template void project_prior_backward(const ProjectionParams<T>&, const ProjectionCache<T>&, \
                                       const Tensor<T>&, ProjectionParams<T>&);

MVLR_INSTANTIATE_PRIOR(float)
MVLR_INSTANTIATE_PRIOR(double)

#undef MVLR_INSTANTIATE_PRIOR

}  // namespace mvlr
