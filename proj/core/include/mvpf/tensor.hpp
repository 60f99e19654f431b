#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "mvpf/errors.hpp"
#include "mvpf/rng.hpp"

namespace mvpf {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

namespace detail {

struct TensorNode {
    Shape shape;
    std::vector<double> values;
    std::vector<double> grad;  // same size as values once touched by backward
    bool requires_grad = false;
    std::vector<std::shared_ptr<TensorNode>> parents;
    // Accumulates into parents' grad buffers given this node's grad.
    std::function<void(TensorNode&)> backward_fn;

    void ensure_grad() {
        if (grad.size() != values.size()) grad.assign(values.size(), 0.0);
    }
};

}  // namespace detail

// Dense multi-dimensional array participating in a dynamic reverse-mode
// graph. Value semantics: copying a Tensor aliases the underlying node, ops
// build fresh nodes. Training math is double precision throughout; float32
// enters only at checkpoint serialization.
class Tensor {
public:
    Tensor() = default;

    // Leaves. constant() never receives gradient; leaf(requires_grad=true)
    // is what Param wraps.
    static Tensor constant(Shape shape, std::vector<double> values);
    static Tensor leaf(Shape shape, std::vector<double> values, bool requires_grad);
    static Tensor zeros(Shape shape);
    static Tensor full(Shape shape, double v);
    static Tensor scalar(double v);
    static Tensor randn(Shape shape, Rng& rng, double stddev = 1.0);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    std::size_t rank() const { return node_->shape.size(); }
    std::size_t numel() const { return node_->values.size(); }
    std::size_t rows() const;
    std::size_t cols() const;

    const std::vector<double>& values() const { return node_->values; }
    std::vector<double>& mutable_values() { return node_->values; }
    double value() const;                       // scalar tensors only
    double at(std::size_t i) const { return node_->values[i]; }
    double operator()(std::size_t r, std::size_t c) const;

    bool requires_grad() const { return node_->requires_grad; }
    const std::vector<double>& grad() const;
    void zero_grad();

    // Same values, no graph edge back to this tensor's history.
    Tensor detach() const;

    // Reverse-mode sweep from a scalar. Gradients accumulate into every
    // requires_grad leaf reachable from this node; everything else is left
    // untouched (zeros).
    void backward() const;

    bool all_finite() const;

    detail::TensorNode* node() const { return node_.get(); }
    const std::shared_ptr<detail::TensorNode>& node_ptr() const { return node_; }

private:
    explicit Tensor(std::shared_ptr<detail::TensorNode> n) : node_(std::move(n)) {}
    std::shared_ptr<detail::TensorNode> node_;

    friend Tensor make_op(Shape shape, std::vector<double> values,
                          std::vector<Tensor> parents,
                          std::function<void(detail::TensorNode&)> backward_fn);
};

// Scoped switch: while disabled, ops compute values but record no graph.
// Used by samplers and other pure-inference paths.
class GradGuard {
public:
    explicit GradGuard(bool enable);
    ~GradGuard();
    static bool enabled();

private:
    bool prev_;
};

// Elementwise; shapes must match exactly.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor add_scalar(const Tensor& a, double s);
Tensor mul_scalar(const Tensor& a, double s);
Tensor gelu(const Tensor& a);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator*(double s, const Tensor& a) { return mul_scalar(a, s); }

// Rank-2 linear algebra.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor softmax_rows(const Tensor& a);

// Reductions to scalar.
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);

// Rank-2 row ops; [r0, r1) half-open.
Tensor slice_rows(const Tensor& a, std::size_t r0, std::size_t r1);
Tensor concat_rows(const std::vector<Tensor>& parts);

// Last-dim ops for any rank >= 1 (leading dims act as rows).
Tensor slice_last(const Tensor& a, std::size_t c0, std::size_t c1);
Tensor concat_last(const std::vector<Tensor>& parts);

// X: [r, c], v: [c]. Adds v to every row.
Tensor add_rowvec(const Tensor& x, const Tensor& v);
// X: [r, c], v: [c]. Scales every row elementwise by v.
Tensor mul_rowvec(const Tensor& x, const Tensor& v);

Tensor reshape(const Tensor& a, Shape new_shape);

// [f, H, W, c] -> [f*(H/p)*(W/p), p*p*c]; token = one p x p patch, channel
// layout (dy, dx, c). H and W must be divisible by p.
Tensor patchify(const Tensor& frames, std::size_t p);
// Inverse: tokens [f*(H/p)*(W/p), p*p*c] -> [f, H, W, c].
Tensor unpatchify(const Tensor& tokens, std::size_t f, std::size_t H, std::size_t W,
                  std::size_t c, std::size_t p);

// Row-wise normalization over the last dim of a rank-2 tensor, then affine
// (gamma, beta both rank-1 [c]). Biased variance, eps inside the sqrt.
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps);

Tensor make_op(Shape shape, std::vector<double> values, std::vector<Tensor> parents,
               std::function<void(detail::TensorNode&)> backward_fn);

}  // namespace mvpf
