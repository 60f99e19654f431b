#include "mvpf/degrade.hpp"

#include <cmath>

#include "mvpf/rng.hpp"

namespace mvpf {

DegradeResult degrade_depth(const DepthMap& gt, std::uint64_t seed, const DegradeConfig& config) {
    Rng rng(seed);
    DegradeResult out;
    out.coarse_metric = gt;
    out.relative = gt;

    double mean_depth = 0.0;
    std::size_t n_valid = 0;
    for (std::size_t i = 0; i < gt.values.size(); ++i) {
        if (gt.valid[i]) {
            mean_depth += gt.values[i];
            ++n_valid;
        }
    }
    if (n_valid > 0) mean_depth /= static_cast<double>(n_valid);

    // Low-frequency bias field: a few image-scale sinusoids.
    struct Wave {
        double fu, fv, phase, amp;
    };
    Wave waves[3];
    for (Wave& w : waves) {
        w.fu = rng.uniform(0.5, 2.0);
        w.fv = rng.uniform(0.5, 2.0);
        w.phase = rng.uniform(0.0, 2.0 * M_PI);
        w.amp = rng.uniform(0.3, 1.0);
    }
    const double bias_scale = config.bias_amplitude * mean_depth;
    const double sigma = config.noise_sigma * mean_depth;
    for (int y = 0; y < gt.height; ++y) {
        for (int x = 0; x < gt.width; ++x) {
            if (!gt.is_valid(x, y)) continue;
            const double u = (x + 0.5) / gt.width, v = (y + 0.5) / gt.height;
            double bias = 0.0;
            for (const Wave& w : waves) {
                bias += w.amp * std::sin(2.0 * M_PI * (w.fu * u + w.fv * v) + w.phase);
            }
            double d = gt.at(x, y) + bias_scale * bias;
            if (sigma > 0.0) d += rng.normal() * sigma;
            out.coarse_metric.at(x, y) = d;
        }
    }

    // Silhouette floaters: random edge pixels pulled toward the background.
    if (config.floater_fraction > 0.0 && config.floater_shift > 0.0) {
        for (int y = 0; y < gt.height; ++y) {
            for (int x = 0; x < gt.width; ++x) {
                if (!gt.is_valid(x, y)) continue;
                bool edge = false;
                const double d0 = gt.at(x, y);
                const int nx[4] = {x - 1, x + 1, x, x};
                const int ny[4] = {y, y, y - 1, y + 1};
                for (int k = 0; k < 4 && !edge; ++k) {
                    if (nx[k] < 0 || ny[k] < 0 || nx[k] >= gt.width || ny[k] >= gt.height ||
                        !gt.is_valid(nx[k], ny[k])) {
                        edge = true;
                    } else if (std::abs(gt.at(nx[k], ny[k]) - d0) > config.edge_threshold * d0) {
                        edge = true;
                    }
                }
                if (edge && rng.uniform() < config.floater_fraction) {
                    out.coarse_metric.at(x, y) += config.floater_shift * d0;
                }
            }
        }
    }

    out.hidden_scale = rng.uniform(config.scale_min, config.scale_max);
    out.hidden_shift = rng.uniform(config.shift_min, config.shift_max);
    for (std::size_t i = 0; i < gt.values.size(); ++i) {
        if (gt.valid[i]) {
            out.relative.values[i] = out.hidden_scale * gt.values[i] + out.hidden_shift;
        }
    }
    return out;
}

}  // namespace mvpf
