#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "paver/tensor.hpp"

namespace paver::nn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Moment accumulators mirror the parameter list they were created for.
struct OptimizerState {
  AdamConfig config;
  std::size_t step = 0;
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;

  static OptimizerState create(const AdamConfig& config, std::span<Tensor* const> params);
};

/// Bias-corrected Adam update in place. Throws TrainingError (carrying the
/// step about to be taken) on a non-finite gradient, leaving params untouched.
void adam_step(std::span<Tensor* const> params, std::span<const Tensor> grads, OptimizerState& state);

}  // namespace paver::nn
