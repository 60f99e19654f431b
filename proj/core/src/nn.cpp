#include "mvpf/nn.hpp"

#include <cmath>

namespace mvpf {

void Param::set_trainable(bool on) {
    trainable = on;
    tensor.node()->requires_grad = on;
    if (on) tensor.node()->ensure_grad();
}

Tensor ParamStore::create(const std::string& id, Shape shape, std::vector<double> values,
                          bool trainable) {
    if (params_.count(id)) throw ContractError("duplicate param id: " + id);
    Tensor t = Tensor::leaf(std::move(shape), std::move(values), trainable);
    params_.emplace(id, Param{id, t, trainable});
    return t;
}

Param& ParamStore::at(const std::string& id) {
    auto it = params_.find(id);
    if (it == params_.end()) throw ContractError("unknown param id: " + id);
    return it->second;
}

const Param& ParamStore::at(const std::string& id) const {
    auto it = params_.find(id);
    if (it == params_.end()) throw ContractError("unknown param id: " + id);
    return it->second;
}

void ParamStore::zero_grad() {
    for (auto& [id, p] : params_) p.tensor.zero_grad();
}

std::map<std::string, std::vector<double>> ParamStore::snapshot() const {
    std::map<std::string, std::vector<double>> snap;
    for (const auto& [id, p] : params_) snap.emplace(id, p.tensor.values());
    return snap;
}

std::vector<double> init_values(Init init, std::size_t fan_in, std::size_t fan_out,
                                std::size_t count, Rng& rng) {
    std::vector<double> v(count, 0.0);
    switch (init) {
        case Init::kZero:
            break;
        case Init::kOne:
            std::fill(v.begin(), v.end(), 1.0);
            break;
        case Init::kXavierUniform: {
            const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
            for (double& x : v) x = rng.uniform(-limit, limit);
            break;
        }
    }
    return v;
}

Linear::Linear(ParamStore& store, const std::string& prefix, std::size_t in, std::size_t out,
               Init weight_init, Rng& rng) {
    w_ = store.create(prefix + ".w", {in, out}, init_values(weight_init, in, out, in * out, rng));
    b_ = store.create(prefix + ".b", {out}, std::vector<double>(out, 0.0));
}

Tensor Linear::forward(const Tensor& x) const { return add_rowvec(matmul(x, w_), b_); }

LayerNorm::LayerNorm(ParamStore& store, const std::string& prefix, std::size_t dim, double eps)
    : eps_(eps) {
    gamma_ = store.create(prefix + ".gamma", {dim}, std::vector<double>(dim, 1.0));
    beta_ = store.create(prefix + ".beta", {dim}, std::vector<double>(dim, 0.0));
}

Tensor LayerNorm::forward(const Tensor& x) const { return layer_norm(x, gamma_, beta_, eps_); }

Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v, std::size_t heads) {
    const std::size_t d = q.cols();
    if (heads == 0 || d % heads != 0) {
        throw DimensionError("attention dim " + std::to_string(d) + " not divisible by " +
                             std::to_string(heads) + " heads");
    }
    if (k.cols() != d || v.cols() != d) throw DimensionError("attention q/k/v width mismatch");
    if (k.rows() != v.rows()) throw DimensionError("attention k/v row mismatch");
    const std::size_t dh = d / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    std::vector<Tensor> outs;
    outs.reserve(heads);
    for (std::size_t h = 0; h < heads; ++h) {
        const std::size_t c0 = h * dh, c1 = (h + 1) * dh;
        Tensor qh = slice_last(q, c0, c1);
        Tensor kh = slice_last(k, c0, c1);
        Tensor vh = slice_last(v, c0, c1);
        Tensor logits = mul_scalar(matmul(qh, transpose(kh)), scale);
        outs.push_back(matmul(softmax_rows(logits), vh));
    }
    return heads == 1 ? outs[0] : concat_last(outs);
}

MultiHeadAttention::MultiHeadAttention(ParamStore& store, const std::string& prefix,
                                       std::size_t dim, std::size_t heads, Init out_init,
                                       Rng& rng)
    : heads_(heads) {
    wq_ = Linear(store, prefix + ".wq", dim, dim, Init::kXavierUniform, rng);
    wk_ = Linear(store, prefix + ".wk", dim, dim, Init::kXavierUniform, rng);
    wv_ = Linear(store, prefix + ".wv", dim, dim, Init::kXavierUniform, rng);
    wo_ = Linear(store, prefix + ".proj", dim, dim, out_init, rng);
}

Tensor MultiHeadAttention::forward(const Tensor& q_tokens, const Tensor& kv_tokens) const {
    Tensor q = wq_.forward(q_tokens);
    Tensor k = wk_.forward(kv_tokens);
    Tensor v = wv_.forward(kv_tokens);
    return wo_.forward(attention(q, k, v, heads_));
}

PatchEmbed::PatchEmbed(ParamStore& store, const std::string& prefix, std::size_t patch,
                       std::size_t in_channels, std::size_t dim, Rng& rng)
    : patch_(patch) {
    const std::size_t in = patch * patch * in_channels;
    lin_ = Linear(store, prefix, in, dim, Init::kXavierUniform, rng);
}

Tensor PatchEmbed::forward(const Tensor& frames) const {
    return lin_.forward(patchify(frames, patch_));
}

std::vector<double> sinusoidal_features(double t, std::size_t dim) {
    if (dim % 2 != 0) throw ContractError("sinusoidal_features needs even dim");
    const std::size_t half = dim / 2;
    std::vector<double> f(dim);
    for (std::size_t k = 0; k < half; ++k) {
        const double freq =
            std::exp(-std::log(10000.0) * static_cast<double>(k) / static_cast<double>(half));
        f[k] = std::sin(t * freq * 1000.0);
        f[half + k] = std::cos(t * freq * 1000.0);
    }
    return f;
}

}  // namespace mvpf
