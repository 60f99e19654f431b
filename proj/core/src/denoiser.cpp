#include "mvpf/denoiser.hpp"

#include <cmath>
#include <fstream>
#include <iostream>

#include "json.hpp"

namespace mvpf {

using nlohmann::json;

std::string DenoiserConfig::to_json() const {
    json j;
    j["depth"] = depth;
    j["dim"] = dim;
    j["heads"] = heads;
    j["patch"] = patch;
    j["video_channels"] = video_channels;
    j["mlp_ratio"] = mlp_ratio;
    j["init_seed"] = init_seed;
    j["temporal_stride"] = kTemporalStride;
    j["spatial_stride"] = kSpatialStride;
    return j.dump(2);
}

DenoiserConfig DenoiserConfig::from_json(const std::string& text) {
    json j = json::parse(text);
    DenoiserConfig c;
    c.depth = j.at("depth");
    c.dim = j.at("dim");
    c.heads = j.at("heads");
    c.patch = j.at("patch");
    c.video_channels = j.at("video_channels");
    c.mlp_ratio = j.value("mlp_ratio", 4);
    c.init_seed = j.value("init_seed", 0);
    return c;
}

void DenoiserConfig::save(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open for write: " + path);
    os << to_json() << "\n";
}

DenoiserConfig DenoiserConfig::load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open: " + path);
    std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    return from_json(text);
}

MultiViewBatch MultiViewBatch::make(std::vector<Tensor> z_noise, std::vector<Tensor> z_cond,
                                    Tensor z_ref) {
    MultiViewBatch b;
    b.z_noise = std::move(z_noise);
    b.z_cond = std::move(z_cond);
    b.z_ref = std::move(z_ref);
    if (!b.z_noise.empty()) {
        b.frame_index.resize(b.z_noise[0].shape()[0]);
        for (std::size_t i = 0; i < b.frame_index.size(); ++i) b.frame_index[i] = i;
    }
    return b;
}

MultiViewDenoiser::MultiViewDenoiser(const DenoiserConfig& config) : config_(config) {
    if (config_.dim % 2 != 0) throw ConfigError("denoiser dim must be even");
    if (config_.dim % config_.heads != 0) throw ConfigError("dim not divisible by heads");
    Rng rng(config_.init_seed ^ 0x6d76706600000001ULL);
    const std::size_t C = config_.latent_dim();
    const std::size_t p = config_.patch;
    embed_ = PatchEmbed(store_, "embed", p, 3 * C, config_.dim, rng);
    ref_embed_ = PatchEmbed(store_, "ref_embed", p, C, config_.dim, rng);
    temb_fc1_ = Linear(store_, "temb.fc1", config_.dim, config_.dim, Init::kXavierUniform, rng);
    temb_fc2_ = Linear(store_, "temb.fc2", config_.dim, config_.dim, Init::kXavierUniform, rng);
    blocks_.resize(config_.depth);
    for (std::size_t b = 0; b < config_.depth; ++b) {
        const std::string pre = "blocks." + std::to_string(b);
        Block& blk = blocks_[b];
        blk.ln1 = LayerNorm(store_, pre + ".ln1", config_.dim);
        blk.ln2 = LayerNorm(store_, pre + ".ln2", config_.dim);
        blk.self_attn =
            MultiHeadAttention(store_, pre + ".self", config_.dim, config_.heads,
                               Init::kXavierUniform, rng);
        blk.ref_attn = MultiHeadAttention(store_, pre + ".ref", config_.dim, config_.heads,
                                          Init::kZero, rng);
        blk.sync_attn = MultiHeadAttention(store_, pre + ".sync", config_.dim, config_.heads,
                                           Init::kZero, rng);
        blk.mlp_fc1 = Linear(store_, pre + ".mlp.fc1", config_.dim,
                             config_.dim * config_.mlp_ratio, Init::kXavierUniform, rng);
        blk.mlp_fc2 = Linear(store_, pre + ".mlp.fc2", config_.dim * config_.mlp_ratio,
                             config_.dim, Init::kXavierUniform, rng);
    }
    ln_out_ = LayerNorm(store_, "out.ln", config_.dim);
    head_ = Linear(store_, "out.head", config_.dim, C * p * p, Init::kXavierUniform, rng);
    input_gate_ = Linear(store_, "out.gate", config_.dim, 3 * C, Init::kZero, rng);
}

bool MultiViewDenoiser::is_sync_param(const std::string& id) {
    return id.find(".sync.") != std::string::npos;
}

void MultiViewDenoiser::set_stage(int stage) {
    for (auto& [id, p] : store_.all()) {
        const bool sync = is_sync_param(id);
        bool trainable = true;
        if (stage == 1) trainable = !sync;
        if (stage == 2) trainable = sync;
        p.set_trainable(trainable);
    }
}

Tensor ref_attention_block(const MultiHeadAttention& attn, const Tensor& z_in,
                           const Tensor& z_ref) {
    return add(z_in, attn.forward(z_in, z_ref));
}

std::vector<Tensor> sync_attention_block(const MultiHeadAttention& attn,
                                         const std::vector<Tensor>& views,
                                         const Tensor& ref_tokens,
                                         std::size_t tokens_per_frame) {
    if (views.empty()) throw ContractError("sync block with no views");
    const std::size_t rows = views[0].rows();
    if (tokens_per_frame == 0 || rows % tokens_per_frame != 0) {
        throw DimensionError("sync block rows vs tokens_per_frame");
    }
    for (const Tensor& v : views) {
        if (v.shape() != views[0].shape()) throw DimensionError("sync views disagree on shape");
    }
    if (ref_tokens.rows() != rows) throw DimensionError("sync reference token rows");
    const std::size_t frames = rows / tokens_per_frame;
    std::vector<std::vector<Tensor>> updated(views.size());
    for (std::size_t k = 0; k < frames; ++k) {
        const std::size_t r0 = k * tokens_per_frame, r1 = (k + 1) * tokens_per_frame;
        std::vector<Tensor> slices(views.size());
        std::vector<Tensor> kv_parts;
        kv_parts.reserve(views.size() + 1);
        for (std::size_t i = 0; i < views.size(); ++i) {
            slices[i] = slice_rows(views[i], r0, r1);
            kv_parts.push_back(slices[i]);
        }
        kv_parts.push_back(slice_rows(ref_tokens, r0, r1));
        const Tensor kv = concat_rows(kv_parts);
        for (std::size_t i = 0; i < views.size(); ++i) {
            updated[i].push_back(add(slices[i], attn.forward(slices[i], kv)));
        }
    }
    std::vector<Tensor> out(views.size());
    for (std::size_t i = 0; i < views.size(); ++i) {
        out[i] = frames == 1 ? updated[i][0] : concat_rows(updated[i]);
    }
    return out;
}

Tensor MultiViewDenoiser::time_embedding(double t) const {
    Tensor f = Tensor::constant({1, config_.dim}, sinusoidal_features(t, config_.dim));
    Tensor h = temb_fc2_.forward(gelu(temb_fc1_.forward(f)));
    return reshape(h, {config_.dim});
}

std::vector<Tensor> MultiViewDenoiser::forward(const MultiViewBatch& batch, double t,
                                               bool enable_ref, bool enable_sync) const {
    const std::size_t m = batch.z_noise.size();
    if (m == 0) throw ContractError("denoiser forward with no views");
    if (batch.z_cond.size() != m) throw DimensionError("views vs conditions count");
    const Shape& ns = batch.z_noise[0].shape();
    if (ns.size() != 4) throw DimensionError("noise latents must be [f,h,w,C]");
    const std::size_t lf = ns[0], lh = ns[1], lw = ns[2], C = ns[3];
    if (C != config_.latent_dim()) throw DimensionError("latent channel count vs config");
    for (std::size_t i = 0; i < m; ++i) {
        if (batch.z_noise[i].shape() != ns) throw DimensionError("views disagree on latent shape");
        const Shape& cs = batch.z_cond[i].shape();
        if (cs.size() != 4 || cs[0] != lf || cs[1] != lh || cs[2] != lw || cs[3] != 2 * C) {
            throw DimensionError("condition latents must be [f,h,w,2C]");
        }
    }
    if (!batch.z_ref.defined() || batch.z_ref.shape() != ns) {
        throw DimensionError("reference latents must match the view latent shape");
    }
    const std::size_t p = config_.patch;
    if (lh % p != 0 || lw % p != 0) throw DimensionError("latent grid not divisible by patch");
    const std::size_t spatial = (lh / p) * (lw / p);  // tokens per latent frame

    const Tensor temb = time_embedding(t);
    const Tensor gates = reshape(input_gate_.forward(reshape(temb, {1, config_.dim})), {3 * C});
    const Tensor ref_tokens = ref_embed_.forward(batch.z_ref);

    const std::size_t cells = lf * lh * lw;
    std::vector<Tensor> inputs(m), xs(m);
    for (std::size_t i = 0; i < m; ++i) {
        inputs[i] = concat_last({batch.z_noise[i], batch.z_cond[i]});
        xs[i] = add_rowvec(embed_.forward(inputs[i]), temb);
    }

    for (const Block& blk : blocks_) {
        for (std::size_t i = 0; i < m; ++i) {
            Tensor h = blk.ln1.forward(xs[i]);
            xs[i] = add(xs[i], blk.self_attn.forward(h, h));
        }
        if (enable_ref) {
            for (std::size_t i = 0; i < m; ++i) {
                xs[i] = ref_attention_block(blk.ref_attn, xs[i], ref_tokens);
            }
        }
        if (enable_sync) {
            xs = sync_attention_block(blk.sync_attn, xs, ref_tokens, spatial);
        }
        for (std::size_t i = 0; i < m; ++i) {
            Tensor h = blk.mlp_fc2.forward(gelu(blk.mlp_fc1.forward(blk.ln2.forward(xs[i]))));
            xs[i] = add(xs[i], h);
        }
    }

    std::vector<Tensor> out(m);
    for (std::size_t i = 0; i < m; ++i) {
        Tensor tokens = head_.forward(ln_out_.forward(xs[i]));
        Tensor main = unpatchify(tokens, lf, lh, lw, C, p);
        // gated input skip: per-channel readout of x_t and the two condition
        // slots, summed into the velocity
        Tensor gated = mul_rowvec(reshape(inputs[i], {cells, 3 * C}), gates);
        Tensor skip = add(add(slice_last(gated, 0, C), slice_last(gated, C, 2 * C)),
                          slice_last(gated, 2 * C, 3 * C));
        out[i] = add(main, reshape(skip, {lf, lh, lw, C}));
        if (!out[i].all_finite()) {
            throw DivergenceError("denoiser output not finite (view " + std::to_string(i) + ")");
        }
    }
    return out;
}

// ---- optimizer --------------------------------------------------------------

void AdamW::step(ParamStore& store, double lr) {
    ++t_;
    const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
    for (auto& [id, p] : store.all()) {
        if (!p.trainable) continue;
        auto& w = p.tensor.mutable_values();
        const auto& g = p.tensor.grad();
        State& s = state_[id];
        if (s.m.size() != w.size()) {
            s.m.assign(w.size(), 0.0);
            s.v.assign(w.size(), 0.0);
        }
        for (std::size_t i = 0; i < w.size(); ++i) {
            s.m[i] = config_.beta1 * s.m[i] + (1.0 - config_.beta1) * g[i];
            s.v[i] = config_.beta2 * s.v[i] + (1.0 - config_.beta2) * g[i] * g[i];
            const double mhat = s.m[i] / bc1;
            const double vhat = s.v[i] / bc2;
            w[i] -= lr * (mhat / (std::sqrt(vhat) + config_.eps) + config_.weight_decay * w[i]);
        }
    }
}

void AdamW::reset() {
    state_.clear();
    t_ = 0;
}

// ---- training ----------------------------------------------------------------

Tensor mv_fm_loss(const MultiViewDenoiser& model, const std::vector<const TrainSample*>& batch,
                  const std::vector<std::vector<Tensor>>& x0s, const std::vector<double>& ts,
                  bool enable_sync) {
    if (batch.empty()) throw ContractError("mv_fm_loss on empty batch");
    Tensor acc;
    std::size_t terms = 0;
    for (std::size_t b = 0; b < batch.size(); ++b) {
        const TrainSample& s = *batch[b];
        const double t = ts[b];
        const std::size_t m = s.targets.size();
        std::vector<Tensor> z_noise(m), z_cond(m);
        for (std::size_t i = 0; i < m; ++i) {
            z_noise[i] = interpolate(x0s[b][i], s.targets[i].data, t);
            z_cond[i] = s.conds[i].data;
        }
        MultiViewBatch mb = MultiViewBatch::make(z_noise, z_cond, s.ref.data);
        const std::vector<Tensor> v = model.forward(mb, t, true, enable_sync);
        for (std::size_t i = 0; i < m; ++i) {
            Tensor d = sub(v[i], sub(s.targets[i].data, x0s[b][i]));
            Tensor term = mean(mul(d, d));
            acc = acc.defined() ? add(acc, term) : term;
            ++terms;
        }
    }
    return mul_scalar(acc, 1.0 / static_cast<double>(terms));
}

namespace {
std::pair<std::vector<std::vector<Tensor>>, std::vector<double>> draw_noise(
    const std::vector<const TrainSample*>& batch, Rng& rng) {
    std::vector<std::vector<Tensor>> x0s(batch.size());
    std::vector<double> ts(batch.size());
    for (std::size_t b = 0; b < batch.size(); ++b) {
        ts[b] = rng.uniform();
        for (const Latent& tgt : batch[b]->targets) {
            x0s[b].push_back(Tensor::randn(tgt.data.shape(), rng));
        }
    }
    return {std::move(x0s), std::move(ts)};
}
}  // namespace

double eval_loss(const MultiViewDenoiser& model, const std::vector<TrainSample>& samples,
                 std::uint64_t eval_seed, bool enable_sync) {
    Rng rng(eval_seed ^ 0x65766c6f73730001ULL);
    std::vector<const TrainSample*> all;
    all.reserve(samples.size());
    for (const TrainSample& s : samples) all.push_back(&s);
    auto [x0s, ts] = draw_noise(all, rng);
    GradGuard no_grad(false);
    return mv_fm_loss(model, all, x0s, ts, enable_sync).value();
}

StageStats train_stage(MultiViewDenoiser& model, const std::vector<TrainSample>& dataset,
                       const TrainConfig& config, int stage) {
    if (dataset.empty()) throw ContractError("training on an empty dataset");
    if (stage != 1 && stage != 2) throw ConfigError("stage must be 1 or 2");
    const bool enable_sync = stage == 2;
    model.set_stage(stage);
    AdamW opt(config.adam);
    Rng rng(config.seed ^ (stage == 1 ? 0x7374616765310000ULL : 0x7374616765320000ULL));

    StageStats stats;
    stats.initial_loss = eval_loss(model, dataset, config.seed, enable_sync);
    const std::size_t batch_size = std::min(config.batch, dataset.size());
    for (std::size_t step = 0; step < config.steps; ++step) {
        std::vector<const TrainSample*> batch;
        batch.reserve(batch_size);
        for (std::size_t b = 0; b < batch_size; ++b) {
            batch.push_back(&dataset[rng.below(dataset.size())]);
        }
        auto [x0s, ts] = draw_noise(batch, rng);
        model.params().zero_grad();
        Tensor loss = mv_fm_loss(model, batch, x0s, ts, enable_sync);
        const double lv = loss.value();
        if (!std::isfinite(lv)) {
            throw DivergenceError("training loss not finite at step " + std::to_string(step));
        }
        loss.backward();
        const double frac = config.steps > 1
                                ? static_cast<double>(step) / static_cast<double>(config.steps - 1)
                                : 1.0;
        const double lr = config.lr_start + (config.lr_end - config.lr_start) * frac;
        opt.step(model.params(), lr);
        stats.step_losses.push_back(lv);
        if (config.log_every && step % config.log_every == 0) {
            std::cerr << "stage " << stage << " step " << step << " loss " << lv << " lr " << lr
                      << "\n";
        }
    }
    stats.final_loss = eval_loss(model, dataset, config.seed, enable_sync);
    return stats;
}

std::pair<StageStats, StageStats> train_two_stage(MultiViewDenoiser& model,
                                                  const std::vector<TrainSample>& dataset,
                                                  const TrainConfig& config) {
    StageStats s1 = train_stage(model, dataset, config, 1);
    StageStats s2 = train_stage(model, dataset, config, 2);
    return {std::move(s1), std::move(s2)};
}

// ---- generation ----------------------------------------------------------------

std::vector<Video> generate_from_conditions(const MultiViewDenoiser& model,
                                            const Latent& ref_latents,
                                            const std::vector<Latent>& conditions,
                                            const GenerateOptions& options) {
    const std::size_t m = conditions.size();
    if (m == 0) throw ContractError("generate with no target views");
    Rng rng(options.seed ^ 0x67656e0000000001ULL);
    std::vector<Tensor> x0(m);
    for (std::size_t i = 0; i < m; ++i) {
        x0[i] = Tensor::randn(ref_latents.data.shape(), rng);
    }
    std::vector<Tensor> conds(m);
    for (std::size_t i = 0; i < m; ++i) conds[i] = conditions[i].data;
    auto velocity = [&](const std::vector<Tensor>& states, double t) {
        MultiViewBatch b = MultiViewBatch::make(states, conds, ref_latents.data);
        return model.forward(b, t, options.enable_ref, options.enable_sync);
    };
    const std::vector<Tensor> x1 = sample_euler_joint(velocity, x0, options.steps);
    std::vector<Video> out;
    out.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
        Latent lat = latent_like(ref_latents, x1[i]);
        Video v = toy_decode(lat);
        for (double& x : v.data) x = std::clamp(x, 0.0, 1.0);
        out.push_back(std::move(v));
    }
    return out;
}

std::vector<Video> generate_multiview(const MultiViewDenoiser& model, const Video& ref_video,
                                      const std::vector<DepthMap>& ref_depth,
                                      const Camera& ref_camera,
                                      const std::vector<Camera>& target_cameras,
                                      const GenerateOptions& options) {
    if (static_cast<int>(ref_depth.size()) != ref_video.frames) {
        throw DimensionError("per-frame reference depth count");
    }
    const std::vector<Image> frames = ref_video.to_images();
    const std::size_t m = target_cameras.size();
    std::vector<Latent> conditions;
    conditions.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
        std::vector<Image> partials, normals;
        partials.reserve(frames.size());
        normals.reserve(frames.size());
        for (std::size_t f = 0; f < frames.size(); ++f) {
            WarpResult wr =
                warp(frames[f], ref_depth[f], ref_camera, target_cameras[i], options.splat);
            partials.push_back(std::move(wr.partial.rgb));
            normals.push_back(std::move(wr.normal.rgb));
        }
        conditions.push_back(
            assemble_conditions(Video::from_images(partials), Video::from_images(normals)));
    }
    return generate_from_conditions(model, toy_encode(ref_video), conditions, options);
}

}  // namespace mvpf
