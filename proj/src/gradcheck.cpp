#include "rlab/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "rlab/errors.hpp"
#include "rlab/margin.hpp"

namespace rlab {

std::vector<double> numeric_gradient(const std::function<double(std::span<const double>)>& f,
                                     std::span<const double> s, double h) {
  std::vector<double> x(s.begin(), s.end()), g(s.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double orig = x[j];
    x[j] = orig + h;
    const double up = f(x);
    x[j] = orig - h;
    const double down = f(x);
    x[j] = orig;
    g[j] = (up - down) / (2.0 * h);
  }
  return g;
}

std::vector<LossSpec> default_gradcheck_losses() {
  using F = LossFamily;
  return {
      LossSpec::make(F::CE),
      LossSpec::make(F::FL, {.q = 2.0}),
      LossSpec::make(F::MAE),
      LossSpec::make(F::NCE),
      LossSpec::make(F::AUL, {.a = 2.0, .q = 2.0}),
      LossSpec::make(F::AGCE, {.a = 3.0, .q = 4.0}),
      LossSpec::make(F::AEL, {.q = 1.5}),
      LossSpec::make(F::GCE, {.q = 0.4}),
      LossSpec::make(F::SCE, {.mix = 0.95}),
      LossSpec::make(F::TCE, {.q = 3.0}),
      LossSpec::make(F::MSE),
      LossSpec::make(F::CE_GLS, {.alpha_reg = -0.2}),
      LossSpec::make(F::NCE_MAE, {.mix = 0.3}),
  };
}

std::vector<GradCheckResult> run_gradcheck(const GradCheckOptions& opts, const GradientFn& analytic) {
  if (opts.trials == 0) throw DomainError("gradcheck: trials must be >= 1");
  const GradientFn fn = analytic ? analytic : GradientFn(
      [](const LossSpec& l, std::span<const double> s, std::size_t y) { return eval(l, s, y); });

  std::vector<GradCheckResult> results;
  std::mt19937_64 gen(opts.seed);
  std::normal_distribution<double> draw(0.0, opts.score_std);
  for (const auto& loss : opts.losses) {
    GradCheckResult r{loss, 0, 0.0, std::nullopt, false};
    if (loss.standard_form()) r.max_factorization_error = 0.0;
    for (std::size_t k : opts.class_counts) {
      std::uniform_int_distribution<std::size_t> pick(0, k - 1);
      std::vector<double> s(k);
      for (std::size_t t = 0; t < opts.trials; ++t) {
        for (double& x : s) x = draw(gen);
        const std::size_t y = pick(gen);
        const LossEval ev = fn(loss, s, y);
        const auto fd = numeric_gradient(
            [&](std::span<const double> x) { return loss_value(loss, x, y); }, s, opts.h);
        double scale = 1.0, err = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
          scale = std::max(scale, std::abs(ev.grad[j]));
          err = std::max(err, std::abs(ev.grad[j] - fd[j]));
        }
        r.max_fd_error = std::max(r.max_fd_error, err / scale);
        if (loss.standard_form()) {
          const MarginView mv = margin(s, y);
          const double w = ev.weight.value_or(0.0);
          double ferr = 0.0;
          for (std::size_t j = 0; j < k; ++j)
            ferr = std::max(ferr, std::abs(ev.grad[j] + w * mv.grad_margin[j]));
          r.max_factorization_error = std::max(*r.max_factorization_error, ferr / scale);
        }
        ++r.cases;
      }
    }
    r.passed = r.max_fd_error <= opts.fd_tolerance &&
               (!r.max_factorization_error || *r.max_factorization_error <= opts.factorization_tolerance);
    results.push_back(r);
  }
  return results;
}

}  // namespace rlab
