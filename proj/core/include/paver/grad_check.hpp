#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "paver/autodiff.hpp"
#include "paver/nn.hpp"

namespace paver::nn {

/// Builds a scalar on `tape` from the given parameter variables.
using ScalarFn = std::function<Var(Tape& tape, std::span<const Var> params)>;

struct GradCheckEntry {
  std::size_t param = 0;
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct GradCheckReport {
  bool passed = true;
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::vector<GradCheckEntry> worst;  // descending by rel_error

  std::string summary() const;
};

struct GradCheckOptions {
  double step = 1e-5;
  double tol = 1e-4;
  /// Relative error uses max(|analytic|, |numeric|, abs_floor) as denominator.
  /// The floor sits above finite-difference roundoff for gradients that vanish exactly.
  double abs_floor = 1e-5;
  std::size_t keep_worst = 5;
};

/// Central finite differences against reverse-mode gradients for every
/// coordinate of every parameter.
GradCheckReport grad_check(const ScalarFn& f, std::span<const Tensor> params,
                           const GradCheckOptions& options = {});

/// Builds a scalar from parameters bound through `bind`.
using BoundFn = std::function<Var(Binder& bind)>;

/// Same check for a model's named parameter slots. The slots are perturbed in
/// place and restored; `param` in the report indexes `slots`.
GradCheckReport grad_check(const NamedParams& slots, const BoundFn& f, const GradCheckOptions& options = {});

/// Throws DomainError listing the worst coordinates when the report failed.
void require_passed(const GradCheckReport& report);

}  // namespace paver::nn
