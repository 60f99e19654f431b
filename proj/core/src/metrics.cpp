#include "mvpf/metrics.hpp"

#include <cmath>
#include <limits>

#include "json.hpp"

namespace mvpf {

double psnr(const Image& a, const Image& b, double peak) {
    if (!a.same_size(b)) throw DimensionError("psnr image sizes");
    if (peak <= 0.0) throw ContractError("psnr peak must be positive");
    double se = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = a.data[i] - b.data[i];
        se += d * d;
    }
    const double mse = se / static_cast<double>(a.data.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(peak * peak / mse);
}

namespace {
std::vector<double> gaussian_kernel(int window, double sigma) {
    std::vector<double> k(window);
    const double c = (window - 1) / 2.0;
    double sum = 0.0;
    for (int i = 0; i < window; ++i) {
        k[i] = std::exp(-0.5 * (i - c) * (i - c) / (sigma * sigma));
        sum += k[i];
    }
    for (double& v : k) v /= sum;
    return k;
}

// Separable valid-region Gaussian filter of one channel.
std::vector<double> blur_valid(const std::vector<double>& img, int w, int h,
                               const std::vector<double>& k) {
    const int win = static_cast<int>(k.size());
    const int ow = w - win + 1, oh = h - win + 1;
    std::vector<double> tmp(static_cast<std::size_t>(ow) * h, 0.0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int i = 0; i < win; ++i) s += k[i] * img[y * w + x + i];
            tmp[y * ow + x] = s;
        }
    }
    std::vector<double> out(static_cast<std::size_t>(ow) * oh, 0.0);
    for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int i = 0; i < win; ++i) s += k[i] * tmp[(y + i) * ow + x];
            out[y * ow + x] = s;
        }
    }
    return out;
}
}  // namespace

double ssim(const Image& a, const Image& b, const SsimParams& params) {
    if (!a.same_size(b)) throw DimensionError("ssim image sizes");
    if (a.width < params.window || a.height < params.window) {
        throw ContractError("ssim image smaller than window");
    }
    const auto kernel = gaussian_kernel(params.window, params.sigma);
    const double c1 = params.k1 * params.peak * params.k1 * params.peak;
    const double c2 = params.k2 * params.peak * params.k2 * params.peak;
    const int w = a.width, h = a.height;
    const std::size_t n = static_cast<std::size_t>(w) * h;
    std::vector<double> xa(n), xb(n), xaa(n), xbb(n), xab(n);
    double total = 0.0;
    for (int ch = 0; ch < 3; ++ch) {
        for (std::size_t i = 0; i < n; ++i) {
            xa[i] = a.data[3 * i + ch];
            xb[i] = b.data[3 * i + ch];
            xaa[i] = xa[i] * xa[i];
            xbb[i] = xb[i] * xb[i];
            xab[i] = xa[i] * xb[i];
        }
        const auto mu_a = blur_valid(xa, w, h, kernel);
        const auto mu_b = blur_valid(xb, w, h, kernel);
        const auto m_aa = blur_valid(xaa, w, h, kernel);
        const auto m_bb = blur_valid(xbb, w, h, kernel);
        const auto m_ab = blur_valid(xab, w, h, kernel);
        double acc = 0.0;
        for (std::size_t i = 0; i < mu_a.size(); ++i) {
            const double va = m_aa[i] - mu_a[i] * mu_a[i];
            const double vb = m_bb[i] - mu_b[i] * mu_b[i];
            const double cov = m_ab[i] - mu_a[i] * mu_b[i];
            const double num = (2.0 * mu_a[i] * mu_b[i] + c1) * (2.0 * cov + c2);
            const double den = (mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (va + vb + c2);
            acc += num / den;
        }
        total += acc / static_cast<double>(mu_a.size());
    }
    return total / 3.0;
}

double depth_rmse(const DepthMap& a, const DepthMap& b) {
    if (a.width != b.width || a.height != b.height) throw DimensionError("depth_rmse sizes");
    double se = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        if (!a.valid[i] || !b.valid[i]) continue;
        const double d = a.values[i] - b.values[i];
        se += d * d;
        ++n;
    }
    if (n == 0) throw InsufficientDataError("depth_rmse: empty joint mask");
    return std::sqrt(se / static_cast<double>(n));
}

ConsistencyResult cross_view_consistency(const std::vector<Video>& generated,
                                         const std::vector<std::vector<DepthMap>>& gt_depth,
                                         const std::vector<Camera>& cameras,
                                         const ConsistencyParams& params) {
    ConsistencyResult out;
    const std::size_t m = generated.size();
    if (m < 2) return out;  // undefined, reported as absent
    if (gt_depth.size() != m || cameras.size() != m) {
        throw DimensionError("cross_view_consistency inputs per view");
    }
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            if (i == j) continue;
            std::size_t pair_count = 0;
            for (int f = 0; f < generated[i].frames; ++f) {
                const DepthMap& di = gt_depth[i][f];
                const DepthMap& dj = gt_depth[j][f];
                for (int y = 0; y < di.height; ++y) {
                    for (int x = 0; x < di.width; ++x) {
                        if (!di.is_valid(x, y)) continue;
                        const Vec3 p =
                            unproject_pixel(cameras[i], x + 0.5, y + 0.5, di.at(x, y));
                        const auto proj = project(cameras[j], p);
                        if (!proj) continue;
                        const int qx = static_cast<int>(std::floor(proj->u));
                        const int qy = static_cast<int>(std::floor(proj->v));
                        if (qx < 0 || qy < 0 || qx >= dj.width || qy >= dj.height) continue;
                        if (!dj.is_valid(qx, qy)) continue;
                        if (std::abs(proj->depth - dj.at(qx, qy)) >
                            params.depth_tolerance * dj.at(qx, qy)) {
                            continue;  // occluded in view j
                        }
                        double diff = 0.0;
                        for (int c = 0; c < 3; ++c) {
                            diff += std::abs(generated[i].at(f, y, x, c) -
                                             generated[j].at(f, qy, qx, c));
                        }
                        sum += diff / 3.0;
                        ++count;
                        ++pair_count;
                    }
                }
            }
            if (pair_count == 0) {
                ++out.pairs_skipped;
            } else {
                ++out.pairs_used;
            }
        }
    }
    if (count == 0) return out;  // all pairs skipped: absent
    out.defined = true;
    out.score = sum / static_cast<double>(count);
    return out;
}

std::string EvalReport::to_json() const {
    nlohmann::json j;
    j["per_view"] = nlohmann::json::array();
    for (const ViewScore& v : per_view) {
        j["per_view"].push_back(
            {{"psnr", std::isinf(v.psnr) ? 1e9 : v.psnr}, {"ssim", v.ssim}});
    }
    j["mean_psnr"] = std::isinf(mean_psnr) ? 1e9 : mean_psnr;
    j["mean_ssim"] = mean_ssim;
    if (depth_rmse) j["depth_rmse"] = *depth_rmse;
    if (consistency.defined) {
        j["cross_view_consistency"] = consistency.score;
        j["consistency_pairs_used"] = consistency.pairs_used;
        j["consistency_pairs_skipped"] = consistency.pairs_skipped;
    } else {
        j["cross_view_consistency"] = nullptr;
    }
    return j.dump(2);
}

}  // namespace mvpf
