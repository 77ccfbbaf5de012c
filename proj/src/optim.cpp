#include "evoloss/optim.hpp"

#include <cmath>

#include "evoloss/errors.hpp"

namespace evoloss {

double cosine_warmup_lr(std::size_t step, std::size_t total_steps,
                        double base_lr, std::size_t warmup_steps) {
  if (total_steps == 0) throw ValueError("cosine_warmup_lr: total_steps == 0");
  if (warmup_steps > total_steps) {
    throw ValueError("cosine_warmup_lr: warmup longer than schedule");
  }
  if (step >= total_steps) return 0.0;
  if (step < warmup_steps) {
    return base_lr * (static_cast<double>(step) + 1.0) /
           static_cast<double>(warmup_steps);
  }
  const double progress = static_cast<double>(step - warmup_steps) /
                          static_cast<double>(total_steps - warmup_steps);
  constexpr double kPi = 3.14159265358979323846;
  return base_lr * 0.5 * (1.0 + std::cos(kPi * progress));
}

void sgd_step(ParamSet& params, const GradSet& grads, double lr) {
  for (auto& [name, p] : params) {
    const DenseArray& g = grads.get(name);
    if (!g.same_shape(p)) throw_shape_mismatch("sgd_step " + name, p, g);
    if (!g.all_finite()) {
      throw ValueError("sgd_step: non-finite gradient for '" + name + "'");
    }
    double* pd = p.data();
    const double* gd = g.data();
    for (std::size_t i = 0; i < p.size(); ++i) pd[i] -= lr * gd[i];
  }
}

GradSet finite_diff_grad(const std::function<double(const ParamSet&)>& fn,
                         const ParamSet& params, double eps) {
  ParamSet work;
  for (const auto& [name, p] : params) work.add(name, p);
  GradSet out(params);
  for (const auto& [name, p] : params) {
    DenseArray& wp = work.get_mutable(name);
    DenseArray& g = out.get_mutable(name);
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double saved = wp[i];
      wp[i] = saved + eps;
      const double hi = fn(work);
      wp[i] = saved - eps;
      const double lo = fn(work);
      wp[i] = saved;
      g[i] = (hi - lo) / (2.0 * eps);
    }
  }
  return out;
}

double gradient_max_rel_err(const GradSet& a, const GradSet& b, double floor) {
  double worst = 0.0;
  for (const auto& [name, ga] : a) {
    const DenseArray& gb = b.get(name);
    if (!ga.same_shape(gb)) throw_shape_mismatch("rel_err " + name, ga, gb);
    for (std::size_t i = 0; i < ga.size(); ++i) {
      const double denom =
          std::max({std::abs(ga[i]), std::abs(gb[i]), floor});
      worst = std::max(worst, std::abs(ga[i] - gb[i]) / denom);
    }
  }
  return worst;
}

}  // namespace evoloss
