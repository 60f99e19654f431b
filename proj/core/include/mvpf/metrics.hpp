#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mvpf/geometry.hpp"
#include "mvpf/latent.hpp"

namespace mvpf {

// 10 log10(peak^2 / MSE) in dB; +infinity for identical images.
double psnr(const Image& a, const Image& b, double peak = 1.0);

struct SsimParams {
    int window = 11;
    double sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
    double peak = 1.0;
};

// Mean local SSIM over valid window positions with a Gaussian window,
// averaged over the three channels. Symmetric in (a, b). Throws on images
// smaller than the window.
double ssim(const Image& a, const Image& b, const SsimParams& params = {});

double depth_rmse(const DepthMap& a, const DepthMap& b);

struct ConsistencyParams {
    double depth_tolerance = 0.01;  // co-visibility: |z - D| <= tol * D
};

struct ConsistencyResult {
    bool defined = false;
    double score = 0.0;        // mean abs RGB diff over co-visible pixels
    std::size_t pairs_used = 0;
    std::size_t pairs_skipped = 0;  // pairs with no co-visible pixels
};

// Cross-view agreement of generated videos, judged with ground-truth
// geometry: every pixel of view i is lifted by the GT depth, reprojected
// into view j, occlusion-tested against view j's GT depth, and compared.
// Undefined for fewer than two views.
ConsistencyResult cross_view_consistency(const std::vector<Video>& generated,
                                         const std::vector<std::vector<DepthMap>>& gt_depth,
                                         const std::vector<Camera>& cameras,
                                         const ConsistencyParams& params = {});

struct ViewScore {
    double psnr = 0.0;
    double ssim = 0.0;
};

struct EvalReport {
    std::vector<ViewScore> per_view;
    double mean_psnr = 0.0;
    double mean_ssim = 0.0;
    std::optional<double> depth_rmse;
    ConsistencyResult consistency;

    std::string to_json() const;
};

}  // namespace mvpf
