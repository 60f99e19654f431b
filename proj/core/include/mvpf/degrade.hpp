#pragma once

#include <cstdint>

#include "mvpf/geometry.hpp"

namespace mvpf {

// Controlled corruption standing in for in-the-wild monocular estimators:
// the coarse metric depth picks up a smooth low-frequency bias, pixel noise
// and silhouette floaters that drift toward the background; the relative
// depth is an exact hidden affine recode of the ground truth.
struct DegradeConfig {
    double bias_amplitude = 0.05;   // fraction of the mean depth
    double noise_sigma = 0.01;      // fraction of the mean depth
    double floater_fraction = 0.25; // share of silhouette pixels pulled back
    double floater_shift = 0.35;    // relative depth push toward background
    double edge_threshold = 0.05;   // relative depth jump marking an edge
    double scale_min = 0.4, scale_max = 2.5;  // hidden a > 0
    double shift_min = 0.1, shift_max = 2.0;  // hidden b, keeps values positive
};

struct DegradeResult {
    DepthMap coarse_metric;
    DepthMap relative;
    double hidden_scale = 1.0;
    double hidden_shift = 0.0;
};

DegradeResult degrade_depth(const DepthMap& gt, std::uint64_t seed,
                            const DegradeConfig& config = {});

}  // namespace mvpf
