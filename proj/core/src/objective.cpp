#include "paver/objective.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "paver/errors.hpp"

namespace paver {

void LossWeights::validate() const {
  for (double w : {temporal, spatial, global}) {
    if (!std::isfinite(w) || w < 0.0) throw ConfigError("loss weights must be finite and >= 0");
  }
}

double default_epsilon(const geom::GridConfig& cfg) { return 2.5 * geom::patch_fov(cfg); }

SpatialNeighborhood build_neighborhood(std::span<const geom::SphereCoord> centers, double epsilon) {
  if (!(epsilon > 0.0)) throw ConfigError("neighbourhood epsilon must be positive");
  std::vector<geom::Vec3> dirs;
  dirs.reserve(centers.size());
  for (const auto& c : centers) dirs.push_back(geom::direction(c));

  SpatialNeighborhood nbhd;
  nbhd.epsilon = epsilon;
  nbhd.patches.resize(centers.size());
  for (std::size_t i = 0; i < centers.size(); ++i) {
    auto& list = nbhd.patches[i];
    double inv_sum = 0.0;
    for (std::size_t j = 0; j < centers.size(); ++j) {
      if (j == i) continue;
      const double g = geom::angle_between(dirs[i], dirs[j]);
      if (g > 0.0 && g < epsilon) {
        list.push_back({j, g, 1.0 / g});
        inv_sum += 1.0 / g;
      }
    }
    if (list.empty()) {
      throw ConfigError("patch " + std::to_string(i) + " has no neighbour within epsilon = " +
                        std::to_string(epsilon) + " rad; use a larger epsilon");
    }
    for (auto& nb : list) nb.weight /= inv_sum;
  }
  return nbhd;
}

SpatialNeighborhood build_neighborhood(const geom::GridConfig& cfg, double epsilon) {
  const auto centers = geom::patch_centers(cfg);
  return build_neighborhood(centers, epsilon > 0.0 ? epsilon : default_epsilon(cfg));
}

nn::Var loss_temporal(nn::Var local, std::size_t frames, std::size_t patches) {
  if (frames < 3) throw ConfigError("temporal loss needs at least 3 frames, got " + std::to_string(frames));
  if (local.value().rows() != frames * patches) throw ConfigError("temporal loss: row count mismatch");
  nn::RowMix mix;
  mix.rows.reserve((frames - 2) * patches);
  for (std::size_t t = 1; t + 1 < frames; ++t) {
    for (std::size_t i = 0; i < patches; ++i) {
      mix.rows.push_back({{t * patches + i, 1.0},
                          {(t + 1) * patches + i, -0.5},
                          {(t - 1) * patches + i, -0.5}});
    }
  }
  const double count = static_cast<double>(mix.rows.size());
  return nn::scale(nn::sum_squares(nn::mix_rows(local, mix)), 1.0 / count);
}

nn::Var loss_spatial(nn::Var local, std::size_t frames, const SpatialNeighborhood& nbhd) {
  const std::size_t patches = nbhd.size();
  if (local.value().rows() != frames * patches) throw ConfigError("spatial loss: row count mismatch");
  nn::RowMix mix;
  mix.rows.reserve(frames * patches);
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t i = 0; i < patches; ++i) {
      std::vector<nn::RowMix::Term> row{{t * patches + i, 1.0}};
      for (const auto& nb : nbhd.patches[i]) row.push_back({t * patches + nb.index, -nb.weight});
      mix.rows.push_back(std::move(row));
    }
  }
  const double count = static_cast<double>(mix.rows.size());
  return nn::scale(nn::sum_squares(nn::mix_rows(local, mix)), 1.0 / count);
}

nn::Var loss_global(nn::Var global) {
  const std::size_t frames = global.value().rows();
  if (frames < 1) throw ConfigError("global loss needs at least one frame");
  nn::RowMix mix;
  const double inv = 1.0 / static_cast<double>(frames);
  for (std::size_t t = 0; t < frames; ++t) {
    std::vector<nn::RowMix::Term> row;
    for (std::size_t s = 0; s < frames; ++s) row.push_back({s, (s == t ? 1.0 : 0.0) - inv});
    mix.rows.push_back(std::move(row));
  }
  return nn::scale(nn::sum_squares(nn::mix_rows(global, mix)), inv);
}

nn::Var loss_total(nn::Var global, nn::Var local, std::size_t frames,
                   const SpatialNeighborhood& nbhd, const LossWeights& weights) {
  weights.validate();
  const nn::Var lt = nn::scale(loss_temporal(local, frames, nbhd.size()), weights.temporal);
  const nn::Var ls = nn::scale(loss_spatial(local, frames, nbhd), weights.spatial);
  const nn::Var lg = nn::scale(loss_global(global), weights.global);
  return nn::add(nn::add(lt, ls), lg);
}

namespace {

nn::Tensor flatten_local(const nn::Tensor& local) {
  if (local.rank() != 3) throw ConfigError("expected [T, N, C] local features");
  return local.reshaped({local.dim(0) * local.dim(1), local.dim(2)});
}

}  // namespace

double loss_temporal(const nn::Tensor& local) {
  nn::Tape tape;
  return loss_temporal(tape.constant(flatten_local(local)), local.dim(0), local.dim(1)).value()[0];
}

double loss_spatial(const nn::Tensor& local, const SpatialNeighborhood& nbhd) {
  if (local.rank() != 3 || local.dim(1) != nbhd.size()) {
    throw ConfigError("spatial loss: features do not match the neighbourhood size");
  }
  nn::Tape tape;
  return loss_spatial(tape.constant(flatten_local(local)), local.dim(0), nbhd).value()[0];
}

double loss_global(const nn::Tensor& global) {
  nn::Tape tape;
  return loss_global(tape.constant(global)).value()[0];
}

double loss_total(const FusedFeatures& fused, const SpatialNeighborhood& nbhd, const LossWeights& weights) {
  nn::Tape tape;
  return loss_total(tape.constant(fused.global), tape.constant(flatten_local(fused.local)),
                    fused.frames(), nbhd, weights)
      .value()[0];
}

TrainResult train_fusion(const std::vector<ClipTokens>& clips, FusionParams& params,
                         const geom::GridConfig& cfg, const TrainConfig& config) {
  config.weights.validate();
  if (config.frames < 3) throw ConfigError("training window T must be >= 3");
  const SpatialNeighborhood nbhd = build_neighborhood(cfg, config.weights.epsilon);
  const std::size_t patches = nbhd.size();

  struct Window {
    nn::Tensor global;  // [T, C]
    nn::Tensor local;   // [T*N, C]
  };
  std::vector<Window> windows;
  for (const ClipTokens& clip : clips) {
    for (std::size_t start = 0; start + config.frames <= clip.size(); start += config.frames) {
      std::vector<nn::Tensor> grids(clip.begin() + static_cast<std::ptrdiff_t>(start),
                                    clip.begin() + static_cast<std::ptrdiff_t>(start + config.frames));
      nn::Tensor g, l;
      split_tokens(grids, g, l);
      if (l.dim(1) != patches) {
        throw ConfigError("clip tokens hold " + std::to_string(l.dim(1)) + " patches, grid has " +
                          std::to_string(patches));
      }
      windows.push_back({std::move(g), l.reshaped({config.frames * patches, l.dim(2)})});
    }
  }
  if (windows.empty()) throw ConfigError("no clip has at least T = " + std::to_string(config.frames) + " frames");

  nn::NamedParams named;
  params.collect("fusion", named);
  std::vector<nn::Tensor*> tensors;
  for (auto& [name, t] : named) tensors.push_back(t);
  nn::OptimizerState state = nn::OptimizerState::create(config.adam(), tensors);

  nn::Rng rng(config.seed);
  std::vector<std::size_t> order(windows.size());
  TrainResult result;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t w : order) {
      if (config.max_steps != 0 && result.steps >= config.max_steps) return result;
      const std::size_t step = result.steps + 1;
      nn::Tape tape;
      nn::Binder bind(tape, true);
      const FusedVars fused = fuse(bind, tape.borrow(windows[w].global), tape.borrow(windows[w].local),
                                   config.frames, patches, params);
      const nn::Var loss = loss_total(fused.global, fused.local, config.frames, nbhd, config.weights);
      const double value = loss.value()[0];
      if (!std::isfinite(value)) throw TrainingError(step, "non-finite loss");
      tape.backward(loss);

      std::vector<nn::Tensor> grads;
      grads.reserve(tensors.size());
      for (nn::Tensor* t : tensors) {
        if (!bind.contains(*t)) {
          grads.push_back(nn::Tensor::zeros_like(*t));
          continue;
        }
        const nn::Tensor& g = bind.bound(*t).grad();
        grads.push_back(g.empty() ? nn::Tensor::zeros_like(*t) : g);
      }
      try {
        nn::adam_step(tensors, grads, state);
      } catch (const TrainingError&) {
        throw TrainingError(step, "non-finite gradient");
      }
      result.loss_trace.push_back(value);
      result.steps = step;
    }
  }
  return result;
}

}  // namespace paver
