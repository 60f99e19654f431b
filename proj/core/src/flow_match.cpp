#include "mvpf/flow_match.hpp"

#include <cmath>

namespace mvpf {

Tensor interpolate(const Tensor& x0, const Tensor& x1, double t) {
    if (x0.shape() != x1.shape()) {
        throw DimensionError("interpolate " + shape_str(x0.shape()) + " vs " +
                             shape_str(x1.shape()));
    }
    if (!(t >= 0.0 && t <= 1.0)) throw ContractError("interpolate t outside [0, 1]");
    if (t == 0.0) return x0;
    if (t == 1.0) return x1;
    return add(mul_scalar(x0, 1.0 - t), mul_scalar(x1, t));
}

FlowSample make_flow_sample(const Tensor& x0, const Tensor& x1, double t) {
    FlowSample s;
    s.x0 = x0;
    s.x1 = x1;
    s.t = t;
    s.xt = interpolate(x0, x1, t);
    s.target_v = sub(x1, x0);
    return s;
}

FlowSample draw_flow_sample(const Tensor& x1, Rng& rng) {
    Tensor x0 = Tensor::randn(x1.shape(), rng);
    return make_flow_sample(x0, x1, rng.uniform());
}

Tensor fm_loss(const VelocityFn& model, const std::vector<FlowSample>& batch,
               const Tensor& cond) {
    if (batch.empty()) throw ContractError("fm_loss on empty batch");
    Tensor acc;
    for (const FlowSample& s : batch) {
        Tensor v = model(s.xt, cond, s.t);
        if (!v.all_finite()) throw DivergenceError("model velocity not finite");
        Tensor d = sub(v, s.target_v);
        Tensor per_sample = mean(mul(d, d));
        acc = acc.defined() ? add(acc, per_sample) : per_sample;
    }
    return mul_scalar(acc, 1.0 / static_cast<double>(batch.size()));
}

Tensor sample_euler(const VelocityFn& model, const Tensor& x0, const Tensor& cond, int steps) {
    if (steps < 1) throw ContractError("sampler needs K >= 1");
    GradGuard no_grad(false);
    const double dt = 1.0 / static_cast<double>(steps);
    Tensor x = x0.detach();
    for (int k = 0; k < steps; ++k) {
        const double t = static_cast<double>(k) * dt;
        Tensor v = model(x, cond, t);
        if (v.shape() != x.shape()) throw DimensionError("velocity shape != state shape");
        auto& xv = x.mutable_values();
        const auto& vv = v.values();
        for (std::size_t i = 0; i < xv.size(); ++i) xv[i] += dt * vv[i];
        if (!x.all_finite()) {
            throw DivergenceError("sampler state not finite at step " + std::to_string(k));
        }
    }
    return x;
}

std::vector<Tensor> sample_euler_joint(const JointVelocityFn& model, std::vector<Tensor> x0,
                                       int steps) {
    if (steps < 1) throw ContractError("sampler needs K >= 1");
    GradGuard no_grad(false);
    const double dt = 1.0 / static_cast<double>(steps);
    std::vector<Tensor> x;
    x.reserve(x0.size());
    for (const Tensor& s : x0) x.push_back(s.detach());
    for (int k = 0; k < steps; ++k) {
        const double t = static_cast<double>(k) * dt;
        const std::vector<Tensor> v = model(x, t);
        if (v.size() != x.size()) throw ContractError("joint velocity count mismatch");
        for (std::size_t s = 0; s < x.size(); ++s) {
            auto& xv = x[s].mutable_values();
            const auto& vv = v[s].values();
            if (vv.size() != xv.size()) throw DimensionError("joint velocity shape");
            for (std::size_t i = 0; i < xv.size(); ++i) xv[i] += dt * vv[i];
            if (!x[s].all_finite()) {
                throw DivergenceError("sampler state " + std::to_string(s) +
                                      " not finite at step " + std::to_string(k));
            }
        }
    }
    return x;
}

}  // namespace mvpf
