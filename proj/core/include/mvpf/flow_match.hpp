#pragma once

#include <functional>
#include <vector>

#include "mvpf/rng.hpp"
#include "mvpf/tensor.hpp"

namespace mvpf {

// One training draw: x0 ~ N(0, I), x1 from data, t in [0, 1].
// xt = (1 - t) x0 + t x1; the regression target x1 - x0 does not depend on t.
struct FlowSample {
    Tensor x0;
    Tensor x1;
    double t = 0.0;
    Tensor xt;
    Tensor target_v;
};

struct SamplerConfig {
    int steps = 50;  // uniform Euler grid over [0, 1]
};

// Exact convex combination; endpoints return the input tensor so t = 0 and
// t = 1 are bit-exact.
Tensor interpolate(const Tensor& x0, const Tensor& x1, double t);

FlowSample make_flow_sample(const Tensor& x0, const Tensor& x1, double t);
FlowSample draw_flow_sample(const Tensor& x1, Rng& rng);

// Velocity field v(xt, cond, t). cond may be an undefined Tensor for
// unconditional models.
using VelocityFn = std::function<Tensor(const Tensor& xt, const Tensor& cond, double t)>;

// Mean over the batch of the per-element mean squared error between the
// model velocity and x1 - x0. Differentiable w.r.t. anything the model's
// graph reaches. Throws on a non-finite model output.
Tensor fm_loss(const VelocityFn& model, const std::vector<FlowSample>& batch,
               const Tensor& cond);

// Euler integration of dx/dt = v(x, c, t) from t = 0 with x(0) = x0:
// x <- x + (1/K) v(x, c, k/K) for k = 0..K-1. No gradients are recorded.
// Throws DivergenceError naming the failing step if the state goes
// non-finite.
Tensor sample_euler(const VelocityFn& model, const Tensor& x0, const Tensor& cond, int steps);

// Joint variant for coupled states (multi-view sampling): all states advance
// with the same schedule and the velocity of each state may depend on all.
using JointVelocityFn =
    std::function<std::vector<Tensor>(const std::vector<Tensor>& states, double t)>;
std::vector<Tensor> sample_euler_joint(const JointVelocityFn& model, std::vector<Tensor> x0,
                                       int steps);

}  // namespace mvpf
