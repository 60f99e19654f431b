#pragma once

#include <map>
#include <string>
#include <vector>

#include "mvpf/rng.hpp"
#include "mvpf/tensor.hpp"

namespace mvpf {

// Named trainable leaf. Freezing drops requires_grad on the underlying node,
// so a frozen param's gradient stays identically zero through any backward.
struct Param {
    std::string id;
    Tensor tensor;
    bool trainable = true;

    void set_trainable(bool on);
};

// Ordered registry of a model's parameters. Iteration order is the name
// order, which keeps checkpoints and optimizer updates deterministic.
class ParamStore {
public:
    Tensor create(const std::string& id, Shape shape, std::vector<double> values,
                  bool trainable = true);
    bool has(const std::string& id) const { return params_.count(id) != 0; }
    Param& at(const std::string& id);
    const Param& at(const std::string& id) const;

    std::map<std::string, Param>& all() { return params_; }
    const std::map<std::string, Param>& all() const { return params_; }
    std::size_t size() const { return params_.size(); }

    void zero_grad();
    // Snapshot of every param's values, for exact parameter-diff checks.
    std::map<std::string, std::vector<double>> snapshot() const;

private:
    std::map<std::string, Param> params_;
};

enum class Init { kXavierUniform, kZero, kOne };

std::vector<double> init_values(Init init, std::size_t fan_in, std::size_t fan_out,
                                std::size_t count, Rng& rng);

// y = x W + b with W: [in, out], b: [out].
class Linear {
public:
    Linear() = default;
    Linear(ParamStore& store, const std::string& prefix, std::size_t in, std::size_t out,
           Init weight_init, Rng& rng);
    Tensor forward(const Tensor& x) const;
    const Tensor& weight() const { return w_; }
    const Tensor& bias() const { return b_; }

private:
    Tensor w_, b_;
};

class LayerNorm {
public:
    LayerNorm() = default;
    LayerNorm(ParamStore& store, const std::string& prefix, std::size_t dim, double eps = 1e-5);
    Tensor forward(const Tensor& x) const;

private:
    Tensor gamma_, beta_;
    double eps_ = 1e-5;
};

// Scaled dot-product attention. q: [m, d], k: [n, d], v: [n, d], d divisible
// by heads; per-head scale 1/sqrt(d/heads). Output: [m, d], rows are convex
// combinations of v rows.
Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v, std::size_t heads);

// Full attention layer with q/k/v/out projections. The output projection
// init is a knob because residual branches zero-init it.
class MultiHeadAttention {
public:
    MultiHeadAttention() = default;
    MultiHeadAttention(ParamStore& store, const std::string& prefix, std::size_t dim,
                       std::size_t heads, Init out_init, Rng& rng);
    // Self-attention when kv == q.
    Tensor forward(const Tensor& q_tokens, const Tensor& kv_tokens) const;

private:
    Linear wq_, wk_, wv_, wo_;
    std::size_t heads_ = 1;
};

// patchify + linear: frames [f, H, W, c] -> tokens [f*(H/p)*(W/p), dim].
class PatchEmbed {
public:
    PatchEmbed() = default;
    PatchEmbed(ParamStore& store, const std::string& prefix, std::size_t patch,
               std::size_t in_channels, std::size_t dim, Rng& rng);
    Tensor forward(const Tensor& frames) const;
    std::size_t patch() const { return patch_; }

private:
    std::size_t patch_ = 1;
    Linear lin_;
};

// Sinusoidal features of a scalar in [0, 1]; dim must be even.
std::vector<double> sinusoidal_features(double t, std::size_t dim);

}  // namespace mvpf
