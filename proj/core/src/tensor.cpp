#include "mvpf/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

namespace mvpf {

namespace {
thread_local bool g_grad_enabled = true;

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw DimensionError(std::string(op) + " on " + shape_str(a.shape()) + " vs " +
                             shape_str(b.shape()));
    }
}

// Accumulate helper: only parents that participate in the graph get grads;
// detached constants are skipped, which keeps them identically zero.
bool wants_grad(detail::TensorNode& p) { return p.requires_grad; }
}  // namespace

std::size_t shape_numel(const Shape& s) {
    std::size_t n = 1;
    for (std::size_t d : s) n *= d;
    return n;
}

std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
    os << "]";
    return os.str();
}

GradGuard::GradGuard(bool enable) : prev_(g_grad_enabled) { g_grad_enabled = enable; }
GradGuard::~GradGuard() { g_grad_enabled = prev_; }
bool GradGuard::enabled() { return g_grad_enabled; }

Tensor Tensor::constant(Shape shape, std::vector<double> values) {
    return leaf(std::move(shape), std::move(values), false);
}

Tensor Tensor::leaf(Shape shape, std::vector<double> values, bool requires_grad) {
    if (shape_numel(shape) != values.size()) {
        throw DimensionError("leaf " + shape_str(shape) + " with " +
                             std::to_string(values.size()) + " values");
    }
    auto n = std::make_shared<detail::TensorNode>();
    n->shape = std::move(shape);
    n->values = std::move(values);
    n->requires_grad = requires_grad;
    if (requires_grad) n->ensure_grad();
    return Tensor(std::move(n));
}

Tensor Tensor::zeros(Shape shape) {
    const std::size_t n = shape_numel(shape);
    return constant(std::move(shape), std::vector<double>(n, 0.0));
}

Tensor Tensor::full(Shape shape, double v) {
    const std::size_t n = shape_numel(shape);
    return constant(std::move(shape), std::vector<double>(n, v));
}

Tensor Tensor::scalar(double v) { return constant({1}, {v}); }

Tensor Tensor::randn(Shape shape, Rng& rng, double stddev) {
    std::vector<double> v(shape_numel(shape));
    for (double& x : v) x = rng.normal() * stddev;
    return constant(std::move(shape), std::move(v));
}

std::size_t Tensor::rows() const {
    if (rank() != 2) throw DimensionError("rows() on rank-" + std::to_string(rank()));
    return shape()[0];
}

std::size_t Tensor::cols() const {
    if (rank() != 2) throw DimensionError("cols() on rank-" + std::to_string(rank()));
    return shape()[1];
}

double Tensor::value() const {
    if (numel() != 1) throw ContractError("value() on non-scalar tensor " + shape_str(shape()));
    return node_->values[0];
}

double Tensor::operator()(std::size_t r, std::size_t c) const {
    return node_->values[r * cols() + c];
}

const std::vector<double>& Tensor::grad() const {
    node_->ensure_grad();
    return node_->grad;
}

void Tensor::zero_grad() {
    node_->ensure_grad();
    std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

Tensor Tensor::detach() const { return constant(shape(), values()); }

bool Tensor::all_finite() const {
    for (double v : node_->values) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void Tensor::backward() const {
    if (numel() != 1) throw ContractError("backward() requires a scalar loss");
    // Post-order DFS over parent edges, then reverse sweep.
    std::vector<detail::TensorNode*> order;
    std::unordered_set<detail::TensorNode*> visited;
    std::vector<std::pair<detail::TensorNode*, std::size_t>> stack;
    stack.emplace_back(node_.get(), 0);
    visited.insert(node_.get());
    while (!stack.empty()) {
        auto& [n, idx] = stack.back();
        if (idx < n->parents.size()) {
            detail::TensorNode* p = n->parents[idx++].get();
            if (visited.insert(p).second) stack.emplace_back(p, 0);
        } else {
            order.push_back(n);
            stack.pop_back();
        }
    }
    for (detail::TensorNode* n : order) n->ensure_grad();
    node_->grad[0] = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        if ((*it)->backward_fn) (*it)->backward_fn(**it);
    }
}

Tensor make_op(Shape shape, std::vector<double> values, std::vector<Tensor> parents,
               std::function<void(detail::TensorNode&)> backward_fn) {
    if (shape_numel(shape) != values.size()) {
        throw DimensionError("op result " + shape_str(shape) + " with " +
                             std::to_string(values.size()) + " values");
    }
    auto n = std::make_shared<detail::TensorNode>();
    n->shape = std::move(shape);
    n->values = std::move(values);
    if (g_grad_enabled) {
        bool needs = false;
        for (const Tensor& p : parents) needs = needs || p.requires_grad();
        if (needs) {
            n->requires_grad = true;
            n->parents.reserve(parents.size());
            for (Tensor& p : parents) n->parents.push_back(p.node_ptr());
            n->backward_fn = std::move(backward_fn);
        }
    }
    return Tensor(std::move(n));
}

// ---- elementwise --------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "add");
    std::vector<double> out(a.numel());
    const auto &av = a.values(), &bv = b.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
    return make_op(a.shape(), std::move(out), {a, b}, [](detail::TensorNode& n) {
        for (int k = 0; k < 2; ++k) {
            auto& p = *n.parents[k];
            if (!wants_grad(p)) continue;
            p.ensure_grad();
            for (std::size_t i = 0; i < n.grad.size(); ++i) p.grad[i] += n.grad[i];
        }
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "sub");
    std::vector<double> out(a.numel());
    const auto &av = a.values(), &bv = b.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
    return make_op(a.shape(), std::move(out), {a, b}, [](detail::TensorNode& n) {
        auto& pa = *n.parents[0];
        auto& pb = *n.parents[1];
        if (wants_grad(pa)) {
            pa.ensure_grad();
            for (std::size_t i = 0; i < n.grad.size(); ++i) pa.grad[i] += n.grad[i];
        }
        if (wants_grad(pb)) {
            pb.ensure_grad();
            for (std::size_t i = 0; i < n.grad.size(); ++i) pb.grad[i] -= n.grad[i];
        }
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "mul");
    std::vector<double> out(a.numel());
    const auto &av = a.values(), &bv = b.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
    return make_op(a.shape(), std::move(out), {a, b}, [](detail::TensorNode& n) {
        auto& pa = *n.parents[0];
        auto& pb = *n.parents[1];
        if (wants_grad(pa)) {
            pa.ensure_grad();
            for (std::size_t i = 0; i < n.grad.size(); ++i) pa.grad[i] += n.grad[i] * pb.values[i];
        }
        if (wants_grad(pb)) {
            pb.ensure_grad();
            for (std::size_t i = 0; i < n.grad.size(); ++i) pb.grad[i] += n.grad[i] * pa.values[i];
        }
    });
}

Tensor add_scalar(const Tensor& a, double s) {
    std::vector<double> out(a.numel());
    const auto& av = a.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + s;
    return make_op(a.shape(), std::move(out), {a}, [](detail::TensorNode& n) {
        auto& p = *n.parents[0];
        if (!wants_grad(p)) return;
        p.ensure_grad();
        for (std::size_t i = 0; i < n.grad.size(); ++i) p.grad[i] += n.grad[i];
    });
}

Tensor mul_scalar(const Tensor& a, double s) {
    std::vector<double> out(a.numel());
    const auto& av = a.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * s;
    return make_op(a.shape(), std::move(out), {a}, [s](detail::TensorNode& n) {
        auto& p = *n.parents[0];
        if (!wants_grad(p)) return;
        p.ensure_grad();
        for (std::size_t i = 0; i < n.grad.size(); ++i) p.grad[i] += n.grad[i] * s;
    });
}

Tensor gelu(const Tensor& a) {
    constexpr double kInvSqrt2 = 0.7071067811865475244;
    constexpr double kInvSqrt2Pi = 0.3989422804014326779;
    std::vector<double> out(a.numel());
    const auto& av = a.values();
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = 0.5 * av[i] * (1.0 + std::erf(av[i] * kInvSqrt2));
    }
    return make_op(a.shape(), std::move(out), {a}, [=](detail::TensorNode& n) {
        auto& p = *n.parents[0];
        if (!wants_grad(p)) return;
        p.ensure_grad();
        for (std::size_t i = 0; i < n.grad.size(); ++i) {
            const double x = p.values[i];
            const double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
            const double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
            p.grad[i] += n.grad[i] * (cdf + x * pdf);
        }
    });
}

// ---- rank-2 linear algebra ----------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
    const std::size_t m = a.rows(), k = a.cols(), k2 = b.rows(), nn = b.cols();
    if (k != k2) {
        throw DimensionError("matmul " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
    }
    std::vector<double> out(m * nn, 0.0);
    const auto &av = a.values(), &bv = b.values();
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t l = 0; l < k; ++l) {
            const double ail = av[i * k + l];
            if (ail == 0.0) continue;
            const double* brow = &bv[l * nn];
            double* orow = &out[i * nn];
            for (std::size_t j = 0; j < nn; ++j) orow[j] += ail * brow[j];
        }
    }
    return make_op({m, nn}, std::move(out), {a, b}, [m, k, nn](detail::TensorNode& n) {
        auto& pa = *n.parents[0];
        auto& pb = *n.parents[1];
        if (wants_grad(pa)) {
            pa.ensure_grad();
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t l = 0; l < k; ++l) {
                    double acc = 0.0;
                    const double* grow = &n.grad[i * nn];
                    const double* brow = &pb.values[l * nn];
                    for (std::size_t j = 0; j < nn; ++j) acc += grow[j] * brow[j];
                    pa.grad[i * k + l] += acc;
                }
            }
        }
        if (wants_grad(pb)) {
            pb.ensure_grad();
            for (std::size_t i = 0; i < m; ++i) {
                const double* grow = &n.grad[i * nn];
                for (std::size_t l = 0; l < k; ++l) {
                    const double ail = pa.values[i * k + l];
                    if (ail == 0.0) continue;
                    double* brow = &pb.grad[l * nn];
                    for (std::size_t j = 0; j < nn; ++j) brow[j] += ail * grow[j];
                }
            }
        }
    });
}

Tensor transpose(const Tensor& a) {
    const std::size_t r = a.rows(), c = a.cols();
    std::vector<double> out(r * c);
    const auto& av = a.values();
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) out[j * r + i] = av[i * c + j];
    }
    return make_op({c, r}, std::move(out), {a}, [r, c](detail::TensorNode& n) {
        auto& p = *n.parents[0];
        if (!wants_grad(p)) return;
        p.ensure_grad();
        for (std::size_t i = 0; i < r; ++i) {
            for (std::size_t j = 0; j < c; ++j) p.grad[i * c + j] += n.grad[j * r + i];
        }
    });
}

Tensor softmax_rows(const Tensor& a) {
    const std::size_t r = a.rows(), c = a.cols();
    if (c == 0) throw DimensionError("softmax over empty rows");
    std::vector<double> out(r * c);
    const auto& av = a.values();
    for (std::size_t i = 0; i < r; ++i) {
        const double* row = &av[i * c];
        double mx = row[0];
        for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, row[j]);
        double denom = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            out[i * c + j] = std::exp(row[j] - mx);
            denom += out[i * c + j];
        }
        for (std::size_t j = 0; j < c; ++j) out[i * c + j] /= denom;
    }
    return make_op({r, c}, std::move(out), {a}, [r, c](detail::TensorNode& n) {
        auto& p = *n.parents[0];
        if (!wants_grad(p)) return;
        p.ensure_grad();
        for (std::size_t i = 0; i < r; ++i) {
            const double* s = &n.values[i * c];
            const double* g = &n.grad[i * c];
            double dot = 0.0;
            for (std::size_t j = 0; j < c; ++j) dot += g[j] * s[j];
            double* pg = &p.grad[i * c];
            for (std::size_t j = 0; j < c; ++j) pg[j] += (g[j] - dot) * s[j];
        }
    });
}

// ---- reductions ----------------------------------------------------------

Tensor sum(const Tensor& a) {
    double s = 0.0;
    for (double v : a.values()) s += v;
    return make_op({1}, {s}, {a}, [](detail::TensorNode& n) {
        auto& p = *n.parents[0];
        if (!wants_grad(p)) return;
        p.ensure_grad();
        const double g = n.grad[0];
        for (double& d : p.grad) d += g;
    });
}

Tensor mean(const Tensor& a) {
    const double inv = 1.0 / static_cast<double>(a.numel());
    double s = 0.0;
    for (double v : a.values()) s += v;
    return make_op({1}, {s * inv}, {a}, [inv](detail::TensorNode& n) {
        auto& p = *n.parents[0];
        if (!wants_grad(p)) return;
        p.ensure_grad();
        const double g = n.grad[0] * inv;
        for (double& d : p.grad) d += g;
    });
}

// ---- slicing / concatenation ---------------------------------------------

Tensor slice_rows(const Tensor& a, std::size_t r0, std::size_t r1) {
    const std::size_t r = a.rows(), c = a.cols();
    if (r0 > r1 || r1 > r) throw DimensionError("slice_rows bounds");
    std::vector<double> out(a.values().begin() + r0 * c, a.values().begin() + r1 * c);
    return make_op({r1 - r0, c}, std::move(out), {a}, [r0, c](detail::TensorNode& n) {
        auto& p = *n.parents[0];
        if (!wants_grad(p)) return;
        p.ensure_grad();
        for (std::size_t i = 0; i < n.grad.size(); ++i) p.grad[r0 * c + i] += n.grad[i];
    });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw ContractError("concat_rows of nothing");
    const std::size_t c = parts[0].cols();
    std::size_t r = 0;
    for (const Tensor& p : parts) {
        if (p.cols() != c) throw DimensionError("concat_rows column mismatch");
        r += p.rows();
    }
    std::vector<double> out;
    out.reserve(r * c);
    for (const Tensor& p : parts) out.insert(out.end(), p.values().begin(), p.values().end());
    return make_op({r, c}, std::move(out), parts, [](detail::TensorNode& n) {
        std::size_t off = 0;
        for (auto& pp : n.parents) {
            auto& p = *pp;
            const std::size_t len = p.values.size();
            if (wants_grad(p)) {
                p.ensure_grad();
                for (std::size_t i = 0; i < len; ++i) p.grad[i] += n.grad[off + i];
            }
            off += len;
        }
    });
}

Tensor slice_last(const Tensor& a, std::size_t c0, std::size_t c1) {
    const std::size_t c = a.shape().back();
    if (c0 > c1 || c1 > c) throw DimensionError("slice_last bounds");
    const std::size_t lead = a.numel() / c;
    const std::size_t w = c1 - c0;
    std::vector<double> out(lead * w);
    const auto& av = a.values();
    for (std::size_t i = 0; i < lead; ++i) {
        for (std::size_t j = 0; j < w; ++j) out[i * w + j] = av[i * c + c0 + j];
    }
    Shape os = a.shape();
    os.back() = w;
    return make_op(std::move(os), std::move(out), {a}, [lead, w, c, c0](detail::TensorNode& n) {
        auto& p = *n.parents[0];
        if (!wants_grad(p)) return;
        p.ensure_grad();
        for (std::size_t i = 0; i < lead; ++i) {
            for (std::size_t j = 0; j < w; ++j) p.grad[i * c + c0 + j] += n.grad[i * w + j];
        }
    });
}

Tensor concat_last(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw ContractError("concat_last of nothing");
    Shape lead_shape(parts[0].shape().begin(), parts[0].shape().end() - 1);
    std::size_t total = 0;
    std::vector<std::size_t> widths;
    for (const Tensor& p : parts) {
        Shape ls(p.shape().begin(), p.shape().end() - 1);
        if (ls != lead_shape) throw DimensionError("concat_last leading-dim mismatch");
        widths.push_back(p.shape().back());
        total += widths.back();
    }
    const std::size_t lead = shape_numel(lead_shape);
    std::vector<double> out(lead * total);
    std::size_t off = 0;
    for (std::size_t k = 0; k < parts.size(); ++k) {
        const auto& pv = parts[k].values();
        const std::size_t w = widths[k];
        for (std::size_t i = 0; i < lead; ++i) {
            for (std::size_t j = 0; j < w; ++j) out[i * total + off + j] = pv[i * w + j];
        }
        off += w;
    }
    Shape os = lead_shape;
    os.push_back(total);
    return make_op(std::move(os), std::move(out), parts,
                   [lead, total, widths](detail::TensorNode& n) {
                       std::size_t off = 0;
                       for (std::size_t k = 0; k < n.parents.size(); ++k) {
                           auto& p = *n.parents[k];
                           const std::size_t w = widths[k];
                           if (wants_grad(p)) {
                               p.ensure_grad();
                               for (std::size_t i = 0; i < lead; ++i) {
                                   for (std::size_t j = 0; j < w; ++j) {
                                       p.grad[i * w + j] += n.grad[i * total + off + j];
                                   }
                               }
                           }
                           off += w;
                       }
                   });
}

Tensor add_rowvec(const Tensor& x, const Tensor& v) {
    const std::size_t r = x.rows(), c = x.cols();
    if (v.numel() != c) throw DimensionError("add_rowvec " + shape_str(v.shape()));
    std::vector<double> out(r * c);
    const auto &xv = x.values(), &vv = v.values();
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) out[i * c + j] = xv[i * c + j] + vv[j];
    }
    return make_op({r, c}, std::move(out), {x, v}, [r, c](detail::TensorNode& n) {
        auto& px = *n.parents[0];
        auto& pv = *n.parents[1];
        if (wants_grad(px)) {
            px.ensure_grad();
            for (std::size_t i = 0; i < n.grad.size(); ++i) px.grad[i] += n.grad[i];
        }
        if (wants_grad(pv)) {
            pv.ensure_grad();
            for (std::size_t i = 0; i < r; ++i) {
                for (std::size_t j = 0; j < c; ++j) pv.grad[j] += n.grad[i * c + j];
            }
        }
    });
}

Tensor mul_rowvec(const Tensor& x, const Tensor& v) {
    const std::size_t r = x.rows(), c = x.cols();
    if (v.numel() != c) throw DimensionError("mul_rowvec " + shape_str(v.shape()));
    std::vector<double> out(r * c);
    const auto &xv = x.values(), &vv = v.values();
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) out[i * c + j] = xv[i * c + j] * vv[j];
    }
    return make_op({r, c}, std::move(out), {x, v}, [r, c](detail::TensorNode& n) {
        auto& px = *n.parents[0];
        auto& pv = *n.parents[1];
        if (wants_grad(px)) {
            px.ensure_grad();
            for (std::size_t i = 0; i < r; ++i) {
                for (std::size_t j = 0; j < c; ++j) {
                    px.grad[i * c + j] += n.grad[i * c + j] * pv.values[j];
                }
            }
        }
        if (wants_grad(pv)) {
            pv.ensure_grad();
            for (std::size_t i = 0; i < r; ++i) {
                for (std::size_t j = 0; j < c; ++j) {
                    pv.grad[j] += n.grad[i * c + j] * px.values[i * c + j];
                }
            }
        }
    });
}

Tensor reshape(const Tensor& a, Shape new_shape) {
    if (shape_numel(new_shape) != a.numel()) {
        throw DimensionError("reshape " + shape_str(a.shape()) + " -> " + shape_str(new_shape));
    }
    return make_op(std::move(new_shape), a.values(), {a}, [](detail::TensorNode& n) {
        auto& p = *n.parents[0];
        if (!wants_grad(p)) return;
        p.ensure_grad();
        for (std::size_t i = 0; i < n.grad.size(); ++i) p.grad[i] += n.grad[i];
    });
}

// ---- patch ops -------------------------------------------------------------

namespace {
// token t = (fi, py, px); column = (dy, dx, ch). Returns flat input index.
inline std::size_t patch_src_index(std::size_t fi, std::size_t py, std::size_t px,
                                   std::size_t dy, std::size_t dx, std::size_t ch,
                                   std::size_t H, std::size_t W, std::size_t c,
                                   std::size_t p) {
    const std::size_t y = py * p + dy;
    const std::size_t x = px * p + dx;
    return ((fi * H + y) * W + x) * c + ch;
}
}  // namespace

Tensor patchify(const Tensor& frames, std::size_t p) {
    if (frames.rank() != 4) throw DimensionError("patchify expects [f,H,W,c]");
    const std::size_t f = frames.shape()[0], H = frames.shape()[1], W = frames.shape()[2],
                      c = frames.shape()[3];
    if (p == 0 || H % p != 0 || W % p != 0) {
        throw DimensionError("patchify: " + std::to_string(H) + "x" + std::to_string(W) +
                             " not divisible by patch " + std::to_string(p));
    }
    const std::size_t gh = H / p, gw = W / p;
    const std::size_t tokens = f * gh * gw, dim = p * p * c;
    std::vector<double> out(tokens * dim);
    const auto& in = frames.values();
    std::size_t t = 0;
    for (std::size_t fi = 0; fi < f; ++fi) {
        for (std::size_t py = 0; py < gh; ++py) {
            for (std::size_t px = 0; px < gw; ++px, ++t) {
                double* row = &out[t * dim];
                std::size_t k = 0;
                for (std::size_t dy = 0; dy < p; ++dy) {
                    for (std::size_t dx = 0; dx < p; ++dx) {
                        for (std::size_t ch = 0; ch < c; ++ch, ++k) {
                            row[k] = in[patch_src_index(fi, py, px, dy, dx, ch, H, W, c, p)];
                        }
                    }
                }
            }
        }
    }
    return make_op({tokens, dim}, std::move(out), {frames},
                   [f, H, W, c, p, gh, gw, dim](detail::TensorNode& n) {
                       auto& pr = *n.parents[0];
                       if (!wants_grad(pr)) return;
                       pr.ensure_grad();
                       std::size_t t = 0;
                       for (std::size_t fi = 0; fi < f; ++fi) {
                           for (std::size_t py = 0; py < gh; ++py) {
                               for (std::size_t px = 0; px < gw; ++px, ++t) {
                                   const double* row = &n.grad[t * dim];
                                   std::size_t k = 0;
                                   for (std::size_t dy = 0; dy < p; ++dy) {
                                       for (std::size_t dx = 0; dx < p; ++dx) {
                                           for (std::size_t ch = 0; ch < c; ++ch, ++k) {
                                               pr.grad[patch_src_index(fi, py, px, dy, dx, ch, H,
                                                                       W, c, p)] += row[k];
                                           }
                                       }
                                   }
                               }
                           }
                       }
                   });
}

Tensor unpatchify(const Tensor& tokens, std::size_t f, std::size_t H, std::size_t W,
                  std::size_t c, std::size_t p) {
    if (tokens.rank() != 2) throw DimensionError("unpatchify expects rank-2 tokens");
    if (p == 0 || H % p != 0 || W % p != 0) throw DimensionError("unpatchify patch size");
    const std::size_t gh = H / p, gw = W / p;
    const std::size_t dim = p * p * c;
    if (tokens.rows() != f * gh * gw || tokens.cols() != dim) {
        throw DimensionError("unpatchify tokens " + shape_str(tokens.shape()));
    }
    std::vector<double> out(f * H * W * c);
    const auto& in = tokens.values();
    std::size_t t = 0;
    for (std::size_t fi = 0; fi < f; ++fi) {
        for (std::size_t py = 0; py < gh; ++py) {
            for (std::size_t px = 0; px < gw; ++px, ++t) {
                const double* row = &in[t * dim];
                std::size_t k = 0;
                for (std::size_t dy = 0; dy < p; ++dy) {
                    for (std::size_t dx = 0; dx < p; ++dx) {
                        for (std::size_t ch = 0; ch < c; ++ch, ++k) {
                            out[patch_src_index(fi, py, px, dy, dx, ch, H, W, c, p)] = row[k];
                        }
                    }
                }
            }
        }
    }
    return make_op({f, H, W, c}, std::move(out), {tokens},
                   [f, H, W, c, p, gh, gw, dim](detail::TensorNode& n) {
                       auto& pr = *n.parents[0];
                       if (!wants_grad(pr)) return;
                       pr.ensure_grad();
                       std::size_t t = 0;
                       for (std::size_t fi = 0; fi < f; ++fi) {
                           for (std::size_t py = 0; py < gh; ++py) {
                               for (std::size_t px = 0; px < gw; ++px, ++t) {
                                   double* row = &pr.grad[t * dim];
                                   std::size_t k = 0;
                                   for (std::size_t dy = 0; dy < p; ++dy) {
                                       for (std::size_t dx = 0; dx < p; ++dx) {
                                           for (std::size_t ch = 0; ch < c; ++ch, ++k) {
                                               row[k] += n.grad[patch_src_index(
                                                   fi, py, px, dy, dx, ch, H, W, c, p)];
                                           }
                                       }
                                   }
                               }
                           }
                       }
                   });
}

// ---- layer norm ------------------------------------------------------------

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
    const std::size_t r = x.rows(), c = x.cols();
    if (c == 0) throw DimensionError("layer_norm over empty rows");
    if (gamma.numel() != c || beta.numel() != c) {
        throw DimensionError("layer_norm affine params must be [cols]");
    }
    std::vector<double> out(r * c);
    auto norm = std::make_shared<std::vector<double>>(r * c);  // pre-affine rows, reused in backward
    auto inv_sigma = std::make_shared<std::vector<double>>(r);
    const auto &xv = x.values(), &gv = gamma.values(), &bv = beta.values();
    for (std::size_t i = 0; i < r; ++i) {
        const double* row = &xv[i * c];
        double mu = 0.0;
        for (std::size_t j = 0; j < c; ++j) mu += row[j];
        mu /= static_cast<double>(c);
        double var = 0.0;
        for (std::size_t j = 0; j < c; ++j) var += (row[j] - mu) * (row[j] - mu);
        var /= static_cast<double>(c);
        const double inv = 1.0 / std::sqrt(var + eps);
        (*inv_sigma)[i] = inv;
        for (std::size_t j = 0; j < c; ++j) {
            const double y = (row[j] - mu) * inv;
            (*norm)[i * c + j] = y;
            out[i * c + j] = y * gv[j] + bv[j];
        }
    }
    return make_op({r, c}, std::move(out), {x, gamma, beta},
                   [r, c, norm, inv_sigma](detail::TensorNode& n) {
                       auto& px = *n.parents[0];
                       auto& pg = *n.parents[1];
                       auto& pb = *n.parents[2];
                       const auto& gval = pg.values;
                       if (wants_grad(pg)) pg.ensure_grad();
                       if (wants_grad(pb)) pb.ensure_grad();
                       if (wants_grad(px)) px.ensure_grad();
                       for (std::size_t i = 0; i < r; ++i) {
                           const double* g = &n.grad[i * c];
                           const double* y = &(*norm)[i * c];
                           if (wants_grad(pg) || wants_grad(pb)) {
                               for (std::size_t j = 0; j < c; ++j) {
                                   if (wants_grad(pg)) pg.grad[j] += g[j] * y[j];
                                   if (wants_grad(pb)) pb.grad[j] += g[j];
                               }
                           }
                           if (wants_grad(px)) {
                               double m1 = 0.0, m2 = 0.0;
                               for (std::size_t j = 0; j < c; ++j) {
                                   const double gy = g[j] * gval[j];
                                   m1 += gy;
                                   m2 += gy * y[j];
                               }
                               m1 /= static_cast<double>(c);
                               m2 /= static_cast<double>(c);
                               const double inv = (*inv_sigma)[i];
                               double* dx = &px.grad[i * c];
                               for (std::size_t j = 0; j < c; ++j) {
                                   const double gy = g[j] * gval[j];
                                   dx[j] += (gy - m1 - y[j] * m2) * inv;
                               }
                           }
                       }
                   });
}

}  // namespace mvpf
