#pragma once

#include <functional>

#include "evoloss/param_set.hpp"

namespace evoloss {

// Linear warmup to base_lr over warmup_steps, then cosine decay to zero at
// total_steps. step is 0-based; steps past the end return 0.
double cosine_warmup_lr(std::size_t step, std::size_t total_steps,
                        double base_lr, std::size_t warmup_steps);

// p <- p - lr * g for every parameter. Throws ValueError naming the
// parameter if its gradient contains a non-finite entry.
void sgd_step(ParamSet& params, const GradSet& grads, double lr);

// Central-difference gradients of a scalar function of the parameters.
// The reference oracle for checking tape gradients.
GradSet finite_diff_grad(const std::function<double(const ParamSet&)>& fn,
                         const ParamSet& params, double eps = 1e-5);

// Largest relative elementwise error between two gradient sets, with
// denominator max(|a|, |b|, floor).
double gradient_max_rel_err(const GradSet& a, const GradSet& b,
                            double floor = 1e-8);

}  // namespace evoloss
