#include "mvpf/depth_refine.hpp"

#include <cmath>

#include "mvpf/parallel.hpp"

namespace mvpf {

namespace {
std::vector<std::uint8_t> joint_mask(const DepthMap& a, const DepthMap& b) {
    if (a.width != b.width || a.height != b.height) {
        throw DimensionError("depth maps " + std::to_string(a.width) + "x" +
                             std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" +
                             std::to_string(b.height));
    }
    std::vector<std::uint8_t> m(a.values.size());
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = a.valid[i] && b.valid[i];
    return m;
}
}  // namespace

AffineFit align_affine(const DepthMap& relative, const DepthMap& metric,
                       const std::vector<std::uint8_t>& mask) {
    if (relative.width != metric.width || relative.height != metric.height ||
        mask.size() != relative.values.size()) {
        throw DimensionError("align_affine inputs");
    }
    std::vector<double> xs, ys;
    xs.reserve(mask.size());
    ys.reserve(mask.size());
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (!mask[i]) continue;
        xs.push_back(relative.values[i]);
        ys.push_back(metric.values[i]);
    }
    const std::size_t n = xs.size();
    if (n < 2) throw InsufficientDataError("align_affine needs >= 2 masked pixels");
    const double inv_n = 1.0 / static_cast<double>(n);
    const double mean_x = pairwise_sum(xs.data(), n) * inv_n;
    const double mean_y = pairwise_sum(ys.data(), n) * inv_n;
    // Centered second moments, pairwise for determinism and accuracy.
    std::vector<double> cxx(n), cxy(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = xs[i] - mean_x;
        cxx[i] = dx * dx;
        cxy[i] = dx * (ys[i] - mean_y);
    }
    const double var_x = pairwise_sum(cxx.data(), n) * inv_n;
    const double cov_xy = pairwise_sum(cxy.data(), n) * inv_n;
    if (var_x < 1e-30) throw DegenerateFitError("relative depth constant on mask");
    AffineFit fit;
    fit.alpha = cov_xy / var_x;
    fit.beta = mean_y - fit.alpha * mean_x;
    std::vector<double> res(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double r = fit.alpha * xs[i] + fit.beta - ys[i];
        res[i] = r * r;
    }
    fit.residual_rms = std::sqrt(pairwise_sum(res.data(), n) * inv_n);
    return fit;
}

AffineFit align_affine(const DepthMap& relative, const DepthMap& metric) {
    return align_affine(relative, metric, joint_mask(relative, metric));
}

DepthMap apply_affine(const DepthMap& depth, double alpha, double beta) {
    DepthMap out = depth;
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        if (out.valid[i]) out.values[i] = alpha * out.values[i] + beta;
    }
    return out;
}

namespace {

// Per-pixel difference stencil along one axis: position difference is
// X(hi) - X(lo). Fixed by the validity pattern, so it stays stable across
// refinement iterations.
struct AxisStencil {
    bool ok = false;
    int lo = 0, hi = 0;  // flat pixel indices
};

struct RefineWorkspace {
    int width = 0, height = 0;
    Vec3 cam_center;
    std::vector<Vec3> ray;  // dX/dD per pixel
    std::vector<AxisStencil> sx, sy;
    std::vector<std::uint8_t> normal_pixel;  // both stencils + target normal valid

    RefineWorkspace(const DepthMap& d, const NormalMap& target, const Camera& cam) {
        width = d.width;
        height = d.height;
        cam_center = cam.center();
        const std::size_t n = d.values.size();
        ray.resize(n);
        sx.resize(n);
        sy.resize(n);
        normal_pixel.assign(n, 0);
        const Mat3 kinv = inverse(cam.K);
        const Mat3 rt = transposed(cam.R);
        for (int y = 0; y < height; ++y) {
            for (int x = 0; x < width; ++x) {
                const std::size_t at = static_cast<std::size_t>(y) * width + x;
                ray[at] = rt * (kinv * Vec3{x + 0.5, y + 0.5, 1.0});
                if (!d.is_valid(x, y)) continue;
                sx[at] = make_stencil(d, x, y, 1, 0);
                sy[at] = make_stencil(d, x, y, 0, 1);
                if (sx[at].ok && sy[at].ok && target.is_valid(x, y)) normal_pixel[at] = 1;
            }
        }
    }

    static AxisStencil make_stencil(const DepthMap& d, int x, int y, int dx, int dy) {
        auto valid_at = [&](int px, int py) {
            return px >= 0 && py >= 0 && px < d.width && py < d.height && d.is_valid(px, py);
        };
        AxisStencil s;
        const bool has_m = valid_at(x - dx, y - dy);
        const bool has_p = valid_at(x + dx, y + dy);
        const int at = y * d.width + x;
        if (has_m && has_p) {
            s = {true, (y - dy) * d.width + (x - dx), (y + dy) * d.width + (x + dx)};
        } else if (has_p) {
            s = {true, at, (y + dy) * d.width + (x + dx)};
        } else if (has_m) {
            s = {true, (y - dy) * d.width + (x - dx), at};
        }
        return s;
    }

    Vec3 position(const DepthMap& d, std::size_t at) const {
        return cam_center + ray[at] * d.values[at];
    }
};

// Normal term of one pixel plus optionally its gradient w.r.t. the stencil
// depths. Returns false when the cross product degenerates (skipped pixel,
// consistent with normals_from_depth marking it invalid).
bool normal_term(const RefineWorkspace& ws, const DepthMap& d, const NormalMap& target,
                 std::size_t at, double* term, std::vector<double>* grad) {
    const AxisStencil& ax = ws.sx[at];
    const AxisStencil& ay = ws.sy[at];
    const Vec3 tx = ws.position(d, ax.hi) - ws.position(d, ax.lo);
    const Vec3 ty = ws.position(d, ay.hi) - ws.position(d, ay.lo);
    const Vec3 c = cross(tx, ty);
    const double len = norm(c);
    if (len < 1e-30) return false;
    const Vec3 n_hat = c * (1.0 / len);
    const std::size_t x = at % ws.width, y = at / ws.width;
    const Vec3 tn = target.at(static_cast<int>(x), static_cast<int>(y));
    // Orientation flip matches normals_from_depth: point toward the camera.
    const Vec3 p = ws.position(d, at);
    const double s = dot(n_hat, ws.cam_center - p) < 0.0 ? -1.0 : 1.0;
    const double cosv = s * dot(n_hat, tn);
    *term = 1.0 - cosv;
    if (grad) {
        // d(cos)/dc = s * (tn - n_hat (n_hat . tn)) / len
        const Vec3 dcos_dc = (tn - n_hat * dot(n_hat, tn)) * (s / len);
        auto add = [&](std::size_t q, const Vec3& dc_dq) {
            (*grad)[q] -= dot(dcos_dc, dc_dq);  // energy term is 1 - cos
        };
        // x-axis stencil: dc/dD(q) = sigma * ray(q) x ty
        add(ax.hi, cross(ws.ray[ax.hi], ty));
        add(ax.lo, cross(ws.ray[ax.lo], ty) * -1.0);
        // y-axis stencil: dc/dD(q) = tx x (sigma * ray(q))
        add(ay.hi, cross(tx, ws.ray[ay.hi]));
        add(ay.lo, cross(tx, ws.ray[ay.lo]) * -1.0);
    }
    return true;
}

double energy_of(const RefineWorkspace& ws, const DepthMap& d, const DepthMap& anchor,
                 const NormalMap& target, double lambda, std::vector<double>& scratch) {
    scratch.clear();
    for (std::size_t at = 0; at < d.values.size(); ++at) {
        if (ws.normal_pixel[at]) {
            double term = 0.0;
            if (normal_term(ws, d, target, at, &term, nullptr)) scratch.push_back(term);
        }
        if (d.valid[at]) {
            const double r = d.values[at] - anchor.values[at];
            scratch.push_back(lambda * r * r);
        }
    }
    return pairwise_sum(scratch.data(), scratch.size());
}

void gradient_of(const RefineWorkspace& ws, const DepthMap& d, const DepthMap& anchor,
                 const NormalMap& target, double lambda, std::vector<double>& grad) {
    grad.assign(d.values.size(), 0.0);
    for (std::size_t at = 0; at < d.values.size(); ++at) {
        if (ws.normal_pixel[at]) {
            double term = 0.0;
            normal_term(ws, d, target, at, &term, &grad);
        }
        if (d.valid[at]) grad[at] += 2.0 * lambda * (d.values[at] - anchor.values[at]);
    }
}

}  // namespace

double refine_energy(const DepthMap& depth, const DepthMap& anchor,
                     const NormalMap& target_normals, const Camera& camera, double lambda) {
    RefineWorkspace ws(depth, target_normals, camera);
    std::vector<double> scratch;
    return energy_of(ws, depth, anchor, target_normals, lambda, scratch);
}

std::vector<double> refine_energy_gradient(const DepthMap& depth, const DepthMap& anchor,
                                           const NormalMap& target_normals, const Camera& camera,
                                           double lambda) {
    RefineWorkspace ws(depth, target_normals, camera);
    std::vector<double> grad;
    gradient_of(ws, depth, anchor, target_normals, lambda, grad);
    return grad;
}

DepthMap refine_with_normals(const DepthMap& aligned, const NormalMap& target_normals,
                             const Camera& camera, const RefineParams& params) {
    if (params.lambda <= 0.0) throw ContractError("refine lambda must be > 0");
    if (aligned.width != target_normals.width || aligned.height != target_normals.height) {
        throw DimensionError("refine depth vs normals size");
    }
    RefineWorkspace ws(aligned, target_normals, camera);
    DepthMap d = aligned;
    std::vector<double> scratch, grad, trial(d.values.size());
    double energy = energy_of(ws, d, aligned, target_normals, params.lambda, scratch);
    if (!std::isfinite(energy)) throw DivergenceError("initial refinement energy not finite");
    double step = params.step_init;
    DepthMap d_try = d;
    for (int iter = 0; iter < params.iters; ++iter) {
        gradient_of(ws, d, aligned, target_normals, params.lambda, grad);
        double gsq = 0.0;
        for (std::size_t i = 0; i < grad.size(); ++i) {
            if (!d.valid[i]) grad[i] = 0.0;  // frozen outside the mask
            gsq += grad[i] * grad[i];
        }
        if (!std::isfinite(gsq)) throw DivergenceError("refinement gradient not finite");
        if (gsq < 1e-28) break;
        bool accepted = false;
        while (step >= params.step_min) {
            for (std::size_t i = 0; i < grad.size(); ++i) {
                d_try.values[i] = d.values[i] - step * grad[i];
            }
            const double e_try =
                energy_of(ws, d_try, aligned, target_normals, params.lambda, scratch);
            if (std::isfinite(e_try) && e_try <= energy - params.armijo_c * step * gsq) {
                d.values.swap(d_try.values);
                energy = e_try;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;  // line search floor: converged
        step = std::min(step * 2.0, params.step_init * 1e6);
    }
    return d;
}

RefineResult refine_pipeline(const DepthMap& relative, const DepthMap& metric,
                             const NormalMap& target_normals, const Camera& camera,
                             const RefineParams& params) {
    RefineResult out;
    out.fit = align_affine(relative, metric);
    out.aligned = apply_affine(relative, out.fit.alpha, out.fit.beta);
    out.refined = refine_with_normals(out.aligned, target_normals, camera, params);
    return out;
}

}  // namespace mvpf
