#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "mvpf/flow_match.hpp"
#include "mvpf/latent.hpp"
#include "mvpf/nn.hpp"
#include "mvpf/splat.hpp"

namespace mvpf {

struct DenoiserConfig {
    std::size_t depth = 2;   // transformer blocks
    std::size_t dim = 32;    // hidden size, even
    std::size_t heads = 4;
    std::size_t patch = 1;   // spatial patch over the latent grid
    std::size_t video_channels = 3;
    std::size_t mlp_ratio = 4;
    std::uint64_t init_seed = 0;

    std::size_t latent_dim() const { return latent_channels(video_channels); }
    std::string to_json() const;
    static DenoiserConfig from_json(const std::string& text);
    void save(const std::string& path) const;
    static DenoiserConfig load(const std::string& path);
};

// Synchronized per-view latent stacks plus conditions and the clean
// reference latents. All views share the latent grid; frame_index aligns
// latent frames across views (identity for synchronized captures).
struct MultiViewBatch {
    std::vector<Tensor> z_noise;  // per view [f', h, w, C]
    std::vector<Tensor> z_cond;   // per view [f', h, w, 2C]
    Tensor z_ref;                 // [f', h, w, C]
    std::vector<std::size_t> frame_index;

    static MultiViewBatch make(std::vector<Tensor> z_noise, std::vector<Tensor> z_cond,
                               Tensor z_ref);
};

// Residual reference cross-attention: z_in + proj(cross_attn(z_in, z_ref))
// with z_in as queries and z_ref as keys/values. The projection is
// zero-initialized inside the denoiser, making a fresh block an identity.
Tensor ref_attention_block(const MultiHeadAttention& attn, const Tensor& z_in,
                           const Tensor& z_ref);

// Residual per-frame synchronization attention. Token rows are frame-major
// (tokens_per_frame rows per latent frame); for each frame, every view's
// tokens plus the reference tokens of that frame form one self-attention
// set. No token ever attends across frames here.
std::vector<Tensor> sync_attention_block(const MultiHeadAttention& attn,
                                         const std::vector<Tensor>& views,
                                         const Tensor& ref_tokens,
                                         std::size_t tokens_per_frame);

// Velocity transformer over multi-view latent tokens. Per block:
// spatial-temporal self-attention, reference cross-attention, per-frame
// synchronization attention across views, MLP; every branch residual, the
// ref and sync output projections zero-initialized so a fresh model ignores
// both. No camera pose embedding anywhere: viewpoint information enters only
// through the warped conditions.
//
// The velocity readout is head(tokens) plus a time-gated linear skip over
// the input channels (noisy latents and both condition slots, which the
// codec aligns pixelwise). The token width is far below the latent channel
// count at this scale, so without the skip the full-rank -x0/(1-t) part of
// the target could not reach the output at all. The gates come from the
// timestep embedding and start at zero.
class MultiViewDenoiser {
public:
    explicit MultiViewDenoiser(const DenoiserConfig& config);

    // Velocity latents per view, shaped like z_noise.
    std::vector<Tensor> forward(const MultiViewBatch& batch, double t, bool enable_ref = true,
                                bool enable_sync = true) const;

    const DenoiserConfig& config() const { return config_; }
    ParamStore& params() { return store_; }
    const ParamStore& params() const { return store_; }

    static bool is_sync_param(const std::string& id);
    // Stage 1 trains everything but sync; stage 2 exclusively sync; 0 = all.
    void set_stage(int stage);

private:
    struct Block {
        LayerNorm ln1, ln2;
        MultiHeadAttention self_attn;
        MultiHeadAttention ref_attn;   // proj zero-init
        MultiHeadAttention sync_attn;  // proj zero-init
        Linear mlp_fc1, mlp_fc2;
    };

    Tensor time_embedding(double t) const;

    DenoiserConfig config_;
    ParamStore store_;
    PatchEmbed embed_;      // noise+cond channels -> dim
    PatchEmbed ref_embed_;  // reference patch embedder
    Linear temb_fc1_, temb_fc2_;
    std::vector<Block> blocks_;
    LayerNorm ln_out_;
    Linear head_;
    Linear input_gate_;  // temb -> per-channel gates for the input skip
};

// -- training ---------------------------------------------------------------

struct AdamWConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
};

class AdamW {
public:
    explicit AdamW(AdamWConfig config = {}) : config_(config) {}
    // Updates trainable params from their accumulated gradients.
    void step(ParamStore& store, double lr);
    void reset();

private:
    struct State {
        std::vector<double> m, v;
    };
    AdamWConfig config_;
    std::map<std::string, State> state_;
    std::size_t t_ = 0;
};

// One dataset sample, already encoded to latents.
struct TrainSample {
    Latent ref;
    std::vector<Latent> targets;  // per-view x1
    std::vector<Latent> conds;    // per-view conditions, 2C channels
};

struct TrainConfig {
    std::size_t steps = 2000;  // optimizer steps per stage
    std::size_t batch = 4;
    double lr_start = 1e-4;  // decays toward lr_end across the stage
    double lr_end = 2e-5;
    std::uint64_t seed = 0;
    AdamWConfig adam;
    std::size_t log_every = 0;  // 0 = silent
};

struct StageStats {
    double initial_loss = 0.0;
    double final_loss = 0.0;
    std::vector<double> step_losses;
};

// Velocity-matching loss of the denoiser on drawn (x0, t) for each sample,
// averaged per element over views and samples.
Tensor mv_fm_loss(const MultiViewDenoiser& model, const std::vector<const TrainSample*>& batch,
                  const std::vector<std::vector<Tensor>>& x0s, const std::vector<double>& ts,
                  bool enable_sync);

// Deterministic held-out loss (fixed draws from eval_seed).
double eval_loss(const MultiViewDenoiser& model, const std::vector<TrainSample>& samples,
                 std::uint64_t eval_seed, bool enable_sync);

StageStats train_stage(MultiViewDenoiser& model, const std::vector<TrainSample>& dataset,
                       const TrainConfig& config, int stage);

// Stage 1 then stage 2 with the same per-stage budget.
std::pair<StageStats, StageStats> train_two_stage(MultiViewDenoiser& model,
                                                  const std::vector<TrainSample>& dataset,
                                                  const TrainConfig& config);

// -- generation ---------------------------------------------------------------

struct GenerateOptions {
    int steps = 50;
    std::uint64_t seed = 0;
    SplatConfig splat;
    bool enable_ref = true;
    bool enable_sync = true;
};

// Full pipeline: warp the reference RGBD stream to every target camera,
// assemble conditions, run joint Euler sampling across views, decode.
std::vector<Video> generate_multiview(const MultiViewDenoiser& model, const Video& ref_video,
                                      const std::vector<DepthMap>& ref_depth,
                                      const Camera& ref_camera,
                                      const std::vector<Camera>& target_cameras,
                                      const GenerateOptions& options);

// Same sampler on precomputed condition latents.
std::vector<Video> generate_from_conditions(const MultiViewDenoiser& model,
                                            const Latent& ref_latents,
                                            const std::vector<Latent>& conditions,
                                            const GenerateOptions& options);

}  // namespace mvpf
