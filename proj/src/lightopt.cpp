#include "arealight/lightopt.hpp"

#include "arealight/conv.hpp"
#include "arealight/parallel.hpp"
#include "arealight/shading.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <memory>
#include <stdexcept>

namespace arealight {

void adam_step(std::vector<double>& params, const std::vector<double>& grads, AdamState& state,
               double lr, double beta1, double beta2, double eps) {
    if (params.size() != grads.size()) throw std::invalid_argument("adam_step: shape mismatch");
    if (state.m.empty()) {
        state.m.assign(params.size(), 0.0);
        state.v.assign(params.size(), 0.0);
    }
    for (double g : grads)
        if (!std::isfinite(g)) throw std::runtime_error("adam_step: non-finite gradient");
    ++state.t;
    const double bc1 = 1.0 - std::pow(beta1, state.t);
    const double bc2 = 1.0 - std::pow(beta2, state.t);
    for (size_t i = 0; i < params.size(); ++i) {
        state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * grads[i];
        state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * grads[i] * grads[i];
        double m_hat = state.m[i] / bc1;
        double v_hat = state.v[i] / bc2;
        params[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
}

double cosine_lr(int iter, double lr_max, double lr_min, int cycle) {
    int t = iter % cycle;
    return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + std::cos(kPi * t / cycle));
}

OptConfig OptConfig::desk_scale() {
    OptConfig cfg;
    cfg.iters_step2 = 300;
    cfg.iters_step3 = 100;
    cfg.env_width = 64;
    cfg.env_height = 32;
    cfg.scene_resolution = 128;
    cfg.shadow_resolution = 128;
    return cfg;
}

double loss_repulsion(const LightSet& set, double tau) {
    const int n = set.n_lights();
    if (n < 2) return 0.0;
    double sum = 0.0;
    for (int l = 0; l < n; ++l)
        for (int m = 0; m < n; ++m) {
            if (m == l) continue;
            double h = std::fmax(0.0, dot(set.lights[l].direction, set.lights[m].direction) - tau);
            sum += h * h;
        }
    return sum / (double(n) * (n - 1));
}

std::pair<double, double> loss_shading(const ImageRGB& target_diff, const ImageRGB& target_spec,
                                       const LightSet& lights_cam, const GBuffer& scene) {
    const Vec3 view{0, 0, 1};
    ImageRGB pred_diff(scene.width(), scene.height());
    ImageRGB pred_spec(scene.width(), scene.height());
    for (const AreaLight& l : lights_cam.lights) {
        ShadingImage d = lambert(scene, l);
        ShadingImage s = disney_specular(scene, l, view);
        for (size_t i = 0; i < pred_diff.count(); ++i) {
            pred_diff.v[i] += d.radiance.v[i];
            pred_spec.v[i] += s.radiance.v[i];
        }
    }
    return {masked_mean_l1(target_diff, pred_diff, scene.mask),
            masked_mean_l1(target_spec, pred_spec, scene.mask)};
}

LightSet transform_directions(const LightSet& set, const Mat3& M) {
    LightSet out = set;
    for (AreaLight& l : out.lights) l.direction = normalize(M * l.direction);
    return out;
}

// ---------------------------------------------------------------------------
// Laplacian-of-Gaussian filtering
// ---------------------------------------------------------------------------

namespace {

struct LogKernel {
    int radius = 0;
    std::vector<double> g;   // normalized Gaussian, sum 1
    std::vector<double> gxx; // second derivative, mean-subtracted (sum 0)
};

LogKernel make_log_kernel(int k) {
    if (k < 3 || k % 2 == 0) throw std::invalid_argument("LoG kernel size must be odd and >= 3");
    LogKernel out;
    out.radius = (k - 1) / 2;
    const double sigma = (k - 1) / 6.0;
    out.g.resize(k);
    out.gxx.resize(k);
    double gs = 0.0;
    for (int i = -out.radius; i <= out.radius; ++i) {
        double e = std::exp(-0.5 * i * i / (sigma * sigma));
        out.g[i + out.radius] = e;
        gs += e;
    }
    for (double& v : out.g) v /= gs;
    double mean = 0.0;
    for (int i = -out.radius; i <= out.radius; ++i) {
        double e = (i * i - sigma * sigma) / (sigma * sigma * sigma * sigma) *
                   std::exp(-0.5 * i * i / (sigma * sigma));
        out.gxx[i + out.radius] = e;
        mean += e;
    }
    mean /= k;
    for (double& v : out.gxx) v -= mean; // exact zero response on constants
    return out;
}

// Separable zero-padded 1-D passes over a plane.
template <typename T>
void zp_rows(const T* src, T* dst, int w, int h, const double* kernel, int radius) {
    for (int y = 0; y < h; ++y) {
        const T* row = src + size_t(y) * w;
        T* out = dst + size_t(y) * w;
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            int lo = std::max(-radius, -x), hi = std::min(radius, w - 1 - x);
            for (int i = lo; i <= hi; ++i) acc += kernel[i + radius] * double(row[x + i]);
            out[x] = T(acc);
        }
    }
}

template <typename T>
void zp_cols(const T* src, T* dst, int w, int h, const double* kernel, int radius) {
    for (size_t i = 0; i < size_t(w) * h; ++i) dst[i] = T(0);
    for (int y = 0; y < h; ++y) {
        T* out = dst + size_t(y) * w;
        int lo = std::max(-radius, -y), hi = std::min(radius, h - 1 - y);
        for (int i = lo; i <= hi; ++i) {
            const T* row = src + size_t(y + i) * w;
            const double kv = kernel[i + radius];
            for (int x = 0; x < w; ++x) out[x] += T(kv * double(row[x]));
        }
    }
}

// LoG = gxx (x) g (y) + g (x) gxx (y), zero-padded over the full domain.
template <typename T>
void log_apply_full(const T* src, T* dst, T* tmp1, T* tmp2, int w, int h, const LogKernel& k) {
    zp_rows(src, tmp1, w, h, k.gxx.data(), k.radius);
    zp_cols(tmp1, dst, w, h, k.g.data(), k.radius);
    zp_rows(src, tmp1, w, h, k.g.data(), k.radius);
    zp_cols(tmp1, tmp2, w, h, k.gxx.data(), k.radius);
    for (size_t i = 0; i < size_t(w) * h; ++i) dst[i] += tmp2[i];
}

// Valid-region response: the full response with the border band (where
// the window leaves the image) zeroed.
template <typename T>
void log_apply_valid(const T* src, T* dst, T* tmp1, T* tmp2, int w, int h, const LogKernel& k) {
    log_apply_full(src, dst, tmp1, tmp2, w, h, k);
    const int r = k.radius;
    if (w <= 2 * r || h <= 2 * r) throw std::invalid_argument("LoG kernel larger than image");
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (y < r || y >= h - r || x < r || x >= w - r) dst[size_t(y) * w + x] = T(0);
}

} // namespace

ImageRGB log_filter(const ImageRGB& img, int kernel_size) {
    LogKernel k = make_log_kernel(kernel_size);
    const int w = img.width, h = img.height;
    std::vector<double> src(size_t(w) * h), dst(size_t(w) * h), t1(size_t(w) * h), t2(size_t(w) * h);
    ImageRGB out(w, h);
    for (int c = 0; c < 3; ++c) {
        for (size_t i = 0; i < src.size(); ++i) src[i] = img.v[i][c];
        log_apply_valid(src.data(), dst.data(), t1.data(), t2.data(), w, h, k);
        for (size_t i = 0; i < src.size(); ++i) out.v[i][c] = dst[i];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Sigma loss engine: DCSM-shadowed diffuse composition vs a target,
// filtered by LoG kernels, differentiable in each light's sigma.
// Templated so the optimizer can run in float while the public op runs
// in double.
// ---------------------------------------------------------------------------

namespace {

template <typename T>
T bilinear_plane(const T* img, int res, double tx, double ty) {
    int x0 = int(std::floor(tx)), y0 = int(std::floor(ty));
    double fx = tx - x0, fy = ty - y0;
    int x1 = std::clamp(x0 + 1, 0, res - 1);
    int y1 = std::clamp(y0 + 1, 0, res - 1);
    x0 = std::clamp(x0, 0, res - 1);
    y0 = std::clamp(y0, 0, res - 1);
    double v0 = double(img[size_t(y0) * res + x0]) * (1 - fx) + double(img[size_t(y0) * res + x1]) * fx;
    double v1 = double(img[size_t(y1) * res + x0]) * (1 - fx) + double(img[size_t(y1) * res + x1]) * fx;
    return T(v0 * (1 - fy) + v1 * fy);
}

template <typename T>
class SigmaShadowLoss {
public:
    SigmaShadowLoss(const GBuffer& g, const std::vector<AreaLight>& lights_cam,
                    const ImageRGB& target, const std::vector<int>& kernel_sizes, int res,
                    double bias)
        : scene_w_(g.width()), scene_h_(g.height()), res_(res) {
        for (int k : kernel_sizes) kernels_.push_back(make_log_kernel(k));

        for (int y = 0; y < scene_h_; ++y)
            for (int x = 0; x < scene_w_; ++x)
                if (g.masked(x, y)) pixels_.push_back(int32_t(y * scene_w_ + x));

        TriangleMesh mesh = depth_to_mesh(g.depth, g.mask, kMeshGapThreshold, g.depth_scale);
        const size_t npx = pixels_.size();
        lights_.resize(lights_cam.size());
        for (size_t li = 0; li < lights_cam.size(); ++li) {
            PerLight& L = lights_[li];
            const AreaLight& light = lights_cam[li];
            L.intensity = light.intensity;
            LightDepthMap ldm = render_light_depth(mesh, light.direction, res);
            L.c0.resize(size_t(res) * res);
            L.s0.resize(size_t(res) * res);
            for (size_t i = 0; i < L.c0.size(); ++i) {
                double th = 0.5 * kPi * ldm.depth.v[i];
                L.c0[i] = T(std::cos(th));
                L.s0[i] = T(std::sin(th));
            }
            L.rx.resize(npx);
            L.ry.resize(npx);
            L.cd0.resize(npx);
            L.sd0.resize(npx);
            L.shape.resize(npx);
            for (size_t i = 0; i < npx; ++i) {
                int x = pixels_[i] % scene_w_, y = pixels_[i] / scene_w_;
                Vec3 p = shadow_space_position(x, y, g.depth.at(x, y), scene_w_, g.depth_scale);
                double tx, ty, d;
                ldm.project(p, tx, ty, d);
                d -= bias + csm_step_offset();
                bool inside = tx >= -0.5 && tx <= res - 0.5 && ty >= -0.5 && ty <= res - 0.5;
                L.rx[i] = T(inside ? tx : -1e9);
                L.ry[i] = T(ty);
                L.cd0[i] = T(std::cos(0.5 * kPi * d));
                L.sd0[i] = T(std::sin(0.5 * kPi * d));
                L.shape[i] = T(std::fmax(0.0, dot(g.normal.at(x, y), light.direction)));
            }
        }

        // Target LoG responses per kernel per channel.
        const size_t n = size_t(scene_w_) * scene_h_;
        std::vector<T> src(n), t1(n), t2(n);
        target_log_.resize(kernels_.size());
        for (size_t ki = 0; ki < kernels_.size(); ++ki) {
            for (int c = 0; c < 3; ++c) {
                target_log_[ki][c].resize(n);
                for (size_t i = 0; i < n; ++i) src[i] = T(target.v[i][c]);
                log_apply_valid(src.data(), target_log_[ki][c].data(), t1.data(), t2.data(),
                                scene_w_, scene_h_, kernels_[ki]);
            }
        }
    }

    int light_count() const { return int(lights_.size()); }

    /// Loss and optional d loss / d sigma (per light, in pixels of res).
    double eval(const std::vector<double>& sigma_px, std::vector<double>* grad) {
        const size_t n = size_t(scene_w_) * scene_h_;
        const size_t npx = pixels_.size();
        const size_t plane = size_t(res_) * res_;
        if (grad) grad->assign(lights_.size(), 0.0);

        std::vector<T> pred[3];
        for (auto& p : pred) p.assign(n, T(0));
        std::vector<std::vector<T>> dvshape;
        if (grad) dvshape.assign(lights_.size(), std::vector<T>(npx, T(0)));

        // Scratch buffers shared across lights.
        std::vector<T> basis(plane * 2 * kCsmOrder);
        std::vector<T> convolved(plane * 2 * kCsmOrder);
        std::vector<T> dconv(grad ? plane * 2 * kCsmOrder : 0);
        std::vector<T> tmp1(plane), tmp2(plane);

        for (size_t li = 0; li < lights_.size(); ++li) {
            const PerLight& L = lights_[li];
            double sigma = sigma_px[li];
            const int radius = conv::gaussian_radius(sigma);
            std::vector<T> w = conv::gaussian_kernel<T>(sigma);
            std::vector<T> dw;
            if (grad) dw = conv::gaussian_kernel_dsigma<T>(sigma);

            // Rebuild the odd-harmonic basis via the angle-doubling
            // recurrence from the cached first harmonic.
            for (size_t i = 0; i < plane; ++i) {
                T c = L.c0[i], s = L.s0[i];
                T c2 = c * c - s * s, s2 = 2 * c * s;
                for (int k = 0; k < kCsmOrder; ++k) {
                    basis[k * plane + i] = c;          // cos((2k+1) theta)
                    basis[(kCsmOrder + k) * plane + i] = s;
                    T cn = c * c2 - s * s2;
                    s = s * c2 + c * s2;
                    c = cn;
                }
            }
            for (int img = 0; img < 2 * kCsmOrder; ++img) {
                const T* src = basis.data() + size_t(img) * plane;
                T* dst = convolved.data() + size_t(img) * plane;
                conv::convolve_rows(src, tmp1.data(), res_, res_, w.data(), radius);
                conv::convolve_cols(tmp1.data(), dst, res_, res_, w.data(), radius);
                if (grad) {
                    T* dd = dconv.data() + size_t(img) * plane;
                    conv::convolve_cols(tmp1.data(), dd, res_, res_, dw.data(), radius);
                    conv::convolve_rows(src, tmp2.data(), res_, res_, dw.data(), radius);
                    conv::convolve_cols(tmp2.data(), tmp1.data(), res_, res_, w.data(), radius);
                    for (size_t i = 0; i < plane; ++i) dd[i] += tmp1[i];
                }
            }

            for (size_t i = 0; i < npx; ++i) {
                if (double(L.rx[i]) < -1e8) continue; // outside the map: V = 1, no sigma dependence
                double tx = double(L.rx[i]), ty = double(L.ry[i]);
                double cd = double(L.cd0[i]), sd = double(L.sd0[i]);
                double cd2 = cd * cd - sd * sd, sd2 = 2 * cd * sd;
                double raw = 0.5, draw = 0.0;
                for (int k = 0; k < kCsmOrder; ++k) {
                    const double coeff = csm_coefficient(k + 1);
                    double A = double(bilinear_plane(convolved.data() + (kCsmOrder + k) * plane, res_, tx, ty));
                    double B = double(bilinear_plane(convolved.data() + k * plane, res_, tx, ty));
                    raw += coeff * (cd * A - sd * B);
                    if (grad) {
                        double dA = double(bilinear_plane(dconv.data() + (kCsmOrder + k) * plane, res_, tx, ty));
                        double dB = double(bilinear_plane(dconv.data() + k * plane, res_, tx, ty));
                        draw += coeff * (cd * dA - sd * dB);
                    }
                    double cdn = cd * cd2 - sd * sd2;
                    sd = sd * cd2 + cd * sd2;
                    cd = cdn;
                }
                double vis = clamp01(raw);
                double shape = double(L.shape[i]);
                int32_t px = pixels_[i];
                pred[0][px] += T(vis * shape * L.intensity.x);
                pred[1][px] += T(vis * shape * L.intensity.y);
                pred[2][px] += T(vis * shape * L.intensity.z);
                if (grad && raw > 0.0 && raw < 1.0) dvshape[li][i] = T(draw * shape);
            }
        }

        // LoG losses; for gradients, accumulate the adjoint weight image
        // W_c = sum_k LoG_k(sign_kc) (zero-padded LoG is self-adjoint
        // for the valid-region loss).
        double loss = 0.0;
        std::vector<T> resp(n), sign_plane(grad ? n : 0), adj(grad ? n : 0);
        std::vector<T> weight[3];
        if (grad)
            for (auto& s : weight) s.assign(n, T(0));
        for (size_t ki = 0; ki < kernels_.size(); ++ki) {
            const int r = kernels_[ki].radius;
            const double norm = 1.0 / (3.0 * double(scene_w_ - 2 * r) * double(scene_h_ - 2 * r));
            for (int c = 0; c < 3; ++c) {
                log_apply_valid(pred[c].data(), resp.data(), tmp_img1(n), tmp_img2(n), scene_w_,
                                scene_h_, kernels_[ki]);
                const std::vector<T>& tgt = target_log_[ki][c];
                if (grad) std::fill(sign_plane.begin(), sign_plane.end(), T(0));
                for (size_t i = 0; i < n; ++i) {
                    double d = double(resp[i]) - double(tgt[i]);
                    loss += norm * std::fabs(d);
                    if (grad && d != 0.0) sign_plane[i] = T(d > 0 ? norm : -norm);
                }
                if (grad) {
                    log_apply_full(sign_plane.data(), adj.data(), tmp_img1(n), tmp_img2(n),
                                   scene_w_, scene_h_, kernels_[ki]);
                    for (size_t i = 0; i < n; ++i) weight[c][i] += adj[i];
                }
            }
        }
        if (grad) {
            for (size_t li = 0; li < lights_.size(); ++li) {
                const Vec3& I = lights_[li].intensity;
                double acc = 0.0;
                for (size_t i = 0; i < npx; ++i) {
                    double dv = double(dvshape[li][i]);
                    if (dv == 0.0) continue;
                    int32_t px = pixels_[i];
                    acc += dv * (double(weight[0][px]) * I.x + double(weight[1][px]) * I.y +
                                 double(weight[2][px]) * I.z);
                }
                (*grad)[li] = acc;
            }
        }
        return loss;
    }

private:
    T* tmp_img1(size_t n) {
        if (scratch1_.size() < n) scratch1_.resize(n);
        return scratch1_.data();
    }
    T* tmp_img2(size_t n) {
        if (scratch2_.size() < n) scratch2_.resize(n);
        return scratch2_.data();
    }

    struct PerLight {
        Vec3 intensity;
        std::vector<T> c0, s0;       // first-harmonic basis of the light depth map
        std::vector<T> rx, ry;       // receiver texel coords per masked pixel
        std::vector<T> cd0, sd0;     // first-harmonic receiver depth terms
        std::vector<T> shape;        // detached Lambert shape per masked pixel
    };

    int scene_w_, scene_h_, res_;
    std::vector<LogKernel> kernels_;
    std::vector<int32_t> pixels_;
    std::vector<PerLight> lights_;
    std::vector<std::array<std::vector<T>, 3>> target_log_;
    std::vector<T> scratch1_, scratch2_;
};

} // namespace

double loss_laplacian(const ImageRGB& target_shadowed_diff, const LightSet& lights_cam,
                      const GBuffer& scene, const std::vector<int>& kernel_sizes,
                      int shadow_resolution, double bias, std::vector<double>* dloss_dsigma) {
    lights_cam.validate();
    require_same_size(target_shadowed_diff, scene.albedo, "loss_laplacian");
    SigmaShadowLoss<double> engine(scene, lights_cam.lights, target_shadowed_diff, kernel_sizes,
                                   shadow_resolution, bias);
    std::vector<double> sigma_px(lights_cam.n_lights());
    const double scale = sigma_scale_for(shadow_resolution);
    for (int i = 0; i < lights_cam.n_lights(); ++i) sigma_px[i] = lights_cam.lights[i].sigma * scale;
    double loss = engine.eval(sigma_px, dloss_dsigma);
    if (dloss_dsigma) // chain back to reference-resolution sigma units
        for (double& g : *dloss_dsigma) g *= scale;
    return loss;
}

// ---------------------------------------------------------------------------
// Three-step optimization
// ---------------------------------------------------------------------------

namespace {

struct SignImage {
    ImageRGB s;
    double loss = 0.0;
};

// Residual sign image of (pred - target) scaled for the masked-mean-L1
// gradient, plus the loss value itself.
SignImage masked_l1_sign(const ImageRGB& pred, const ImageRGB& target, const ImageScalar& mask,
                         size_t n_mask) {
    SignImage out;
    out.s = ImageRGB(pred.width, pred.height);
    const double norm = 1.0 / (3.0 * double(n_mask));
    for (size_t i = 0; i < pred.count(); ++i) {
        if (mask.v[i] <= 0.5) continue;
        Vec3 d = pred.v[i] - target.v[i];
        out.loss += (std::fabs(d.x) + std::fabs(d.y) + std::fabs(d.z)) * norm;
        out.s.v[i] = {d.x > 0 ? norm : (d.x < 0 ? -norm : 0.0),
                      d.y > 0 ? norm : (d.y < 0 ? -norm : 0.0),
                      d.z > 0 ? norm : (d.z < 0 ? -norm : 0.0)};
    }
    return out;
}

} // namespace

double shading_fit_objective(const GBuffer& scene, const std::vector<ReferenceTargets>& targets,
                             const std::vector<Mat3>& cam_rotations, double tau,
                             double repulsion_weight, int n_lights,
                             const std::vector<double>& params, std::vector<double>* grads) {
    const int n = n_lights;
    if (params.size() != size_t(6 * n)) throw std::invalid_argument("shading_fit_objective: bad parameter count");
    if (targets.size() != cam_rotations.size())
        throw std::invalid_argument("shading_fit_objective: targets/rotations mismatch");
    if (grads) grads->assign(6 * n, 0.0);
    const size_t n_mask = scene.mask_count();
    const Vec3 view{0, 0, 1};
    double loss = 0.0;

    std::vector<ShadingGradients> gd(n), gs(n);
    for (size_t r = 0; r < targets.size(); ++r) {
        ImageRGB pred_diff(scene.width(), scene.height());
        ImageRGB pred_spec(scene.width(), scene.height());
        for (int l = 0; l < n; ++l) {
            AreaLight light;
            for (int c = 0; c < 3; ++c) light.intensity[c] = params[3 * l + c];
            Vec3 p{params[3 * n + 3 * l], params[3 * n + 3 * l + 1], params[3 * n + 3 * l + 2]};
            light.direction = normalize(cam_rotations[r] * p);
            ShadingImage d = lambert(scene, light, grads ? &gd[l] : nullptr);
            ShadingImage s = disney_specular(scene, light, view, grads ? &gs[l] : nullptr);
            for (size_t i = 0; i < pred_diff.count(); ++i) {
                pred_diff.v[i] += d.radiance.v[i];
                pred_spec.v[i] += s.radiance.v[i];
            }
        }
        SignImage sd = masked_l1_sign(pred_diff, targets[r].diffuse, scene.mask, n_mask);
        SignImage ss = masked_l1_sign(pred_spec, targets[r].specular, scene.mask, n_mask);
        loss += sd.loss + ss.loss;
        if (!grads) continue;

        const Mat3 rot_t = cam_rotations[r].transposed();
        for (int l = 0; l < n; ++l) {
            Vec3 I{params[3 * l], params[3 * l + 1], params[3 * l + 2]};
            Vec3 gI(0.0), gq(0.0);
            for (size_t i = 0; i < pred_diff.count(); ++i) {
                const Vec3& wd = sd.s.v[i];
                const Vec3& ws = ss.s.v[i];
                if (wd == Vec3() && ws == Vec3()) continue;
                gI += wd * gd[l].shape.v[i] + ws * gs[l].shape.v[i];
                double wI_d = dot(wd, I), wI_s = dot(ws, I);
                gq.x += wI_d * gd[l].dshape_dir[0].v[i] + wI_s * gs[l].dshape_dir[0].v[i];
                gq.y += wI_d * gd[l].dshape_dir[1].v[i] + wI_s * gs[l].dshape_dir[1].v[i];
                gq.z += wI_d * gd[l].dshape_dir[2].v[i] + wI_s * gs[l].dshape_dir[2].v[i];
            }
            Vec3 gp = rot_t * gq;
            for (int c = 0; c < 3; ++c) (*grads)[3 * l + c] += gI[c];
            for (int c = 0; c < 3; ++c) (*grads)[3 * n + 3 * l + c] += gp[c];
        }
    }

    // Repulsion on the (unit) world directions.
    if (n >= 2 && repulsion_weight != 0.0) {
        const double pair_norm = 1.0 / (double(n) * (n - 1));
        for (int l = 0; l < n; ++l) {
            Vec3 dl = normalize(
                Vec3{params[3 * n + 3 * l], params[3 * n + 3 * l + 1], params[3 * n + 3 * l + 2]});
            Vec3 gsum(0.0);
            for (int m = 0; m < n; ++m) {
                if (m == l) continue;
                Vec3 dm = normalize(Vec3{params[3 * n + 3 * m], params[3 * n + 3 * m + 1],
                                         params[3 * n + 3 * m + 2]});
                double h = dot(dl, dm) - tau;
                if (h > 0.0) {
                    loss += repulsion_weight * pair_norm * h * h;
                    gsum += dm * (4.0 * h); // both ordered pairs (l,m) and (m,l)
                }
            }
            if (grads) {
                Vec3 gp = (gsum - dl * dot(dl, gsum)) * (repulsion_weight * pair_norm);
                for (int c = 0; c < 3; ++c) (*grads)[3 * n + 3 * l + c] += gp[c];
            }
        }
    }
    return loss;
}

std::pair<LightSet, OptTrace> optimize_lights(const EnvironmentMap& env, const OptConfig& cfg) {
    const auto t_start = std::chrono::steady_clock::now();
    if (cfg.n_lights < 1) throw std::invalid_argument("optimize_lights: n_lights must be >= 1");
    const int n = cfg.n_lights;

    EnvironmentMap env_ds = downsample_env(env, cfg.env_width, cfg.env_height);
    SphereScene scene{cfg.scene_resolution};
    GBuffer gbuf = render_gbuffer(scene);
    const Mat3 world_to_cam = scene.world_to_camera();

    std::vector<ReferenceTargets> targets = render_reference_rotations(scene, env_ds, cfg.rotations);
    std::vector<Mat3> cam_rot(cfg.rotations.size());
    for (size_t r = 0; r < cfg.rotations.size(); ++r)
        cam_rot[r] = world_to_cam * env_rotation(cfg.rotations[r].first, cfg.rotations[r].second);

    const double sigma_scale = sigma_scale_for(cfg.shadow_resolution);
    const double sigma0_ref = cfg.sigma0 < 0.0 ? 10.0 : cfg.sigma0;
    LightSet set = init_uniform(n, env_ds, sigma0_ref, default_initial_intensity(env_ds, n));

    OptTrace trace;

    // --- Step 2: intensities and directions -------------------------------
    // Parameter vector: [intensities (3n), raw directions (3n)]. The
    // warm-restart schedule explores aggressively, so the best iterate
    // seen is kept rather than the last one.
    std::vector<double> params(6 * n), grads(6 * n);
    for (int l = 0; l < n; ++l) {
        for (int c = 0; c < 3; ++c) params[3 * l + c] = set.lights[l].intensity[c];
        for (int c = 0; c < 3; ++c) params[3 * n + 3 * l + c] = set.lights[l].direction[c];
    }
    AdamState adam2;
    std::vector<double> best_params = params;
    double best_loss = 1e300;

    for (int it = 0; it < cfg.iters_step2; ++it) {
        double loss = shading_fit_objective(gbuf, targets, cam_rot, cfg.tau, cfg.repulsion_weight,
                                            n, params, &grads);
        trace.step2_loss.push_back(loss);
        if (!std::isfinite(loss)) {
            trace.diverged = true;
            break;
        }
        if (loss < best_loss) {
            best_loss = loss;
            best_params = params;
        }
        adam_step(params, grads, adam2, cosine_lr(it, cfg.lr_max, cfg.lr_min, cfg.cosine_cycle),
                  cfg.beta1, cfg.beta2);
        for (int l = 0; l < n; ++l) {
            for (int c = 0; c < 3; ++c) params[3 * l + c] = std::fmax(params[3 * l + c], 0.0);
            Vec3 p{params[3 * n + 3 * l], params[3 * n + 3 * l + 1], params[3 * n + 3 * l + 2]};
            double len = length(p);
            p = len > 1e-12 ? p / len : Vec3(0, 1, 0);
            for (int c = 0; c < 3; ++c) params[3 * n + 3 * l + c] = p[c];
        }
    }
    params = best_params;
    for (int l = 0; l < n; ++l) {
        for (int c = 0; c < 3; ++c) set.lights[l].intensity[c] = params[3 * l + c];
        set.lights[l].direction = normalize(
            Vec3{params[3 * n + 3 * l], params[3 * n + 3 * l + 1], params[3 * n + 3 * l + 2]});
    }

    // --- Step 3: sigmas (intensities and directions frozen) ---------------
    const size_t n_rot = cfg.rotations.size();
    if (!trace.diverged && cfg.iters_step3 > 0) {
        std::vector<std::unique_ptr<SigmaShadowLoss<float>>> engines;
        engines.reserve(n_rot);
        for (size_t r = 0; r < n_rot; ++r) {
            std::vector<AreaLight> lights_cam(n);
            for (int l = 0; l < n; ++l) {
                lights_cam[l] = set.lights[l];
                lights_cam[l].direction = normalize(cam_rot[r] * set.lights[l].direction);
            }
            engines.push_back(std::make_unique<SigmaShadowLoss<float>>(
                gbuf, lights_cam, targets[r].shadowed_diffuse, cfg.laplacian_kernels,
                cfg.shadow_resolution, cfg.bias));
        }

        // One rotation per iteration, round-robin: an incremental
        // gradient pass over the seven targets. A full sweep costs what
        // one joint evaluation would, so more sigma updates fit the
        // same budget.
        std::vector<double> sigma(n, sigma0_ref * sigma_scale);
        std::vector<double> sgrad(n);
        std::vector<double> best_sigma = sigma;
        double best3 = 1e300;
        std::vector<double> rolling(n_rot, 0.0);
        AdamState adam3;
        const double smin = sigma_min_for(cfg.shadow_resolution);
        const double smax = sigma_max_for(cfg.shadow_resolution);
        for (int it = 0; it < cfg.iters_step3; ++it) {
            const size_t r = size_t(it) % n_rot;
            double loss = engines[r]->eval(sigma, &sgrad);
            trace.step3_loss.push_back(loss);
            if (!std::isfinite(loss)) {
                trace.diverged = true;
                break;
            }
            rolling[r] = loss;
            if (size_t(it) + 1 >= n_rot) {
                double sweep = 0.0;
                for (double v : rolling) sweep += v;
                if (sweep < best3) {
                    best3 = sweep;
                    best_sigma = sigma;
                }
            }
            adam_step(sigma, sgrad, adam3, cosine_lr(it, cfg.lr_max, cfg.lr_min, cfg.cosine_cycle),
                      cfg.beta1, cfg.beta2);
            for (double& s : sigma) s = std::clamp(s, smin, smax);
        }
        for (int l = 0; l < n; ++l)
            set.lights[l].sigma = std::clamp(best_sigma[l] / sigma_scale, kSigmaMin, kSigmaMax);
    }

    set.validate();
    trace.wall_clock_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return {std::move(set), std::move(trace)};
}

} // namespace arealight
