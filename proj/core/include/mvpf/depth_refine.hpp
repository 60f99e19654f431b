#pragma once

#include <vector>

#include "mvpf/geometry.hpp"

namespace mvpf {

struct AffineFit {
    double alpha = 1.0;
    double beta = 0.0;
    double residual_rms = 0.0;
};

// Closed-form least squares of alpha * relative + beta onto metric over the
// masked pixels: alpha = cov / var, beta = mean(metric) - alpha *
// mean(relative). Statistics use deterministic pairwise summation in double.
// Throws InsufficientDataError (< 2 pixels) or DegenerateFitError (constant
// relative depth on the mask).
AffineFit align_affine(const DepthMap& relative, const DepthMap& metric,
                       const std::vector<std::uint8_t>& mask);
// Mask = intersection of the two validity masks.
AffineFit align_affine(const DepthMap& relative, const DepthMap& metric);

DepthMap apply_affine(const DepthMap& depth, double alpha, double beta);

struct RefineParams {
    double lambda = 0.1;  // weight of the anchor to the aligned depth
    int iters = 200;
    // Backtracking line search (Armijo).
    double armijo_c = 1e-4;
    double step_init = 1.0;
    double step_min = 1e-12;
};

// Gradient descent on
//   E(D) = sum_p (1 - n_depth(D)(p) . target(p)) + lambda * sum_p (D(p) - D_in(p))^2
// where n_depth is normals_from_depth. Steps are accepted only when the
// energy decreases, so E is monotone non-increasing; the returned depth
// satisfies E(out) <= E(in). Throws on lambda <= 0 or non-finite energy.
DepthMap refine_with_normals(const DepthMap& aligned, const NormalMap& target_normals,
                             const Camera& camera, const RefineParams& params);

struct RefineResult {
    AffineFit fit;
    DepthMap aligned;
    DepthMap refined;
};

// align_affine, apply, then refine_with_normals.
RefineResult refine_pipeline(const DepthMap& relative, const DepthMap& metric,
                             const NormalMap& target_normals, const Camera& camera,
                             const RefineParams& params);

// Total refinement energy and its analytic gradient w.r.t. per-pixel depth,
// exposed for tests and monotonicity checks.
double refine_energy(const DepthMap& depth, const DepthMap& anchor,
                     const NormalMap& target_normals, const Camera& camera, double lambda);
std::vector<double> refine_energy_gradient(const DepthMap& depth, const DepthMap& anchor,
                                           const NormalMap& target_normals, const Camera& camera,
                                           double lambda);

}  // namespace mvpf
