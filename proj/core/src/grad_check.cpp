#include "paver/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace paver::nn {

namespace {

double evaluate(const ScalarFn& f, std::span<const Tensor> params) {
  Tape tape;
  std::vector<Var> vars;
  vars.reserve(params.size());
  for (const Tensor& p : params) vars.push_back(tape.constant(p));
  const Var out = f(tape, vars);
  if (out.value().size() != 1) throw ConfigError("grad_check: function must return a scalar");
  return out.value()[0];
}

GradCheckEntry entry(std::size_t param, std::size_t index, double analytic, double numeric,
                     const GradCheckOptions& options) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), options.abs_floor});
  return {param, index, analytic, numeric, std::abs(analytic - numeric) / denom};
}

GradCheckReport finish(std::vector<GradCheckEntry> entries, const GradCheckOptions& options) {
  GradCheckReport report;
  report.checked = entries.size();
  std::sort(entries.begin(), entries.end(),
            [](const GradCheckEntry& x, const GradCheckEntry& y) { return x.rel_error > y.rel_error; });
  if (!entries.empty()) report.max_rel_error = entries.front().rel_error;
  report.passed = report.max_rel_error <= options.tol;
  entries.resize(std::min(entries.size(), options.keep_worst));
  report.worst = std::move(entries);
  return report;
}

}  // namespace

std::string GradCheckReport::summary() const {
  std::ostringstream os;
  os << (passed ? "passed" : "FAILED") << ": " << checked << " coordinates, max rel error "
     << max_rel_error;
  for (const GradCheckEntry& e : worst) {
    os << "\n  param " << e.param << "[" << e.index << "] analytic=" << e.analytic
       << " numeric=" << e.numeric << " rel=" << e.rel_error;
  }
  return os.str();
}

GradCheckReport grad_check(const ScalarFn& f, std::span<const Tensor> params,
                           const GradCheckOptions& options) {
  std::vector<Tensor> analytic;
  {
    Tape tape;
    std::vector<Var> vars;
    for (const Tensor& p : params) vars.push_back(tape.leaf(p));
    const Var out = f(tape, vars);
    tape.backward(out);
    for (std::size_t i = 0; i < vars.size(); ++i) {
      const Tensor& g = vars[i].grad();
      analytic.push_back(g.empty() ? Tensor::zeros_like(params[i]) : g);
    }
  }

  std::vector<GradCheckEntry> entries;
  std::vector<Tensor> work(params.begin(), params.end());
  for (std::size_t pi = 0; pi < work.size(); ++pi) {
    for (std::size_t j = 0; j < work[pi].size(); ++j) {
      const double orig = work[pi][j];
      work[pi][j] = orig + options.step;
      const double up = evaluate(f, work);
      work[pi][j] = orig - options.step;
      const double down = evaluate(f, work);
      work[pi][j] = orig;
      entries.push_back(entry(pi, j, analytic[pi][j], (up - down) / (2.0 * options.step), options));
    }
  }
  return finish(std::move(entries), options);
}

GradCheckReport grad_check(const NamedParams& slots, const BoundFn& f, const GradCheckOptions& options) {
  std::vector<Tensor> analytic;
  {
    Tape tape;
    Binder bind(tape, true);
    tape.backward(f(bind));
    for (const auto& [name, t] : slots) {
      const Tensor* g = bind.contains(*t) ? &bind.bound(*t).grad() : nullptr;
      analytic.push_back(g && !g->empty() ? *g : Tensor::zeros_like(*t));
    }
  }
  auto evaluate_bound = [&] {
    Tape tape;
    Binder bind(tape, false);
    const Var out = f(bind);
    if (out.value().size() != 1) throw ConfigError("grad_check: function must return a scalar");
    return out.value()[0];
  };
  std::vector<GradCheckEntry> entries;
  for (std::size_t pi = 0; pi < slots.size(); ++pi) {
    Tensor& t = *slots[pi].second;
    for (std::size_t j = 0; j < t.size(); ++j) {
      const double orig = t[j];
      t[j] = orig + options.step;
      const double up = evaluate_bound();
      t[j] = orig - options.step;
      const double down = evaluate_bound();
      t[j] = orig;
      entries.push_back(entry(pi, j, analytic[pi][j], (up - down) / (2.0 * options.step), options));
    }
  }
  return finish(std::move(entries), options);
}

void require_passed(const GradCheckReport& report) {
  if (!report.passed) throw DomainError("gradient check " + report.summary());
}

}  // namespace paver::nn
