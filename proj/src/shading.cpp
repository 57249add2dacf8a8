#include "arealight/shading.hpp"

#include "arealight/parallel.hpp"

#include <cmath>
#include <stdexcept>

namespace arealight {

namespace {

// Directions are treated as free vectors normalized in the forward
// pass; gradients chain through the normalization.
Vec3 normalized_input(const Vec3& v, double& inv_len, const char* what) {
    double len = length(v);
    if (len < 1e-9) throw std::invalid_argument(std::string(what) + " must be non-zero");
    inv_len = 1.0 / len;
    return v * inv_len;
}

// Jacobian of normalization: (I - d d^T) / |v|, applied to x.
Vec3 project_tangent(const Vec3& d, double inv_len, const Vec3& x) {
    return (x - d * dot(d, x)) * inv_len;
}

struct GgxParams {
    double alpha2;   // (roughness^2)^2
    double f0;       // Schlick reflectance at normal incidence
    double alpha_g2; // Smith remap squared
};

GgxParams ggx_params(double roughness, double specular) {
    double alpha = std::fmax(roughness * roughness, 1e-4);
    double ag = sqr(0.5 + roughness / 2.0);
    return {alpha * alpha, 0.08 * specular, ag * ag};
}

double gtr2(double nh, double alpha2) {
    double t = (alpha2 - 1.0) * nh * nh + 1.0;
    return alpha2 / (kPi * t * t);
}

double gtr2_deriv(double nh, double alpha2) {
    double t = (alpha2 - 1.0) * nh * nh + 1.0;
    return -4.0 * nh * (alpha2 - 1.0) * alpha2 / (kPi * t * t * t);
}

double schlick(double c, double f0) {
    double m = clamp01(1.0 - c);
    return f0 + (1.0 - f0) * m * m * m * m * m;
}

double schlick_deriv(double c, double f0) {
    double m = clamp01(1.0 - c);
    return -5.0 * (1.0 - f0) * m * m * m * m;
}

// Smith-GGX visibility per direction with the 2c numerator and the
// 1/(4 nl nv) denominator folded in: full G/(4 nl nv) = gb(nl) * gb(nv).
double smith_gb(double c, double alpha_g2) {
    return 1.0 / (c + std::sqrt(alpha_g2 + (1.0 - alpha_g2) * c * c));
}

double smith_gb_deriv(double c, double alpha_g2) {
    double s = std::sqrt(alpha_g2 + (1.0 - alpha_g2) * c * c);
    double g = 1.0 / (c + s);
    return -(1.0 + (1.0 - alpha_g2) * c / s) * g * g;
}

} // namespace

double disney_specular_lobe(const Vec3& n, const Vec3& l, const Vec3& v,
                            double roughness, double specular) {
    double nl = dot(n, l), nv = dot(n, v);
    if (nl <= 0.0 || nv <= 0.0) return 0.0;
    GgxParams p = ggx_params(roughness, specular);
    Vec3 h = normalize(l + v);
    return gtr2(dot(n, h), p.alpha2) * schlick(dot(l, h), p.f0) *
           smith_gb(nl, p.alpha_g2) * smith_gb(nv, p.alpha_g2);
}

ShadingImage lambert(const GBuffer& g, const AreaLight& light, ShadingGradients* grads) {
    double inv_len;
    const Vec3 l = normalized_input(light.direction, inv_len, "light direction");
    const int w = g.width(), h = g.height();
    ShadingImage out;
    out.radiance = ImageRGB(w, h);
    out.component = ShadingComponent::Diffuse;
    if (grads) {
        grads->shape = ImageScalar(w, h);
        for (auto& p : grads->dshape_dir) p = ImageScalar(w, h);
    }
    parallel_for(0, h, [&](int y) {
        for (int x = 0; x < w; ++x) {
            if (!g.masked(x, y)) continue;
            const Vec3& n = g.normal.at(x, y);
            if (std::fabs(length_squared(n) - 1.0) > 2e-3)
                throw std::invalid_argument("non-unit normal in masked gbuffer pixel");
            double nl = dot(n, l);
            double shape = std::fmax(0.0, nl);
            out.radiance.at(x, y) = light.intensity * shape;
            if (grads) {
                grads->shape.at(x, y) = shape;
                if (nl > 0.0) { // subgradient 0 at the kink
                    Vec3 d = project_tangent(l, inv_len, n);
                    grads->dshape_dir[0].at(x, y) = d.x;
                    grads->dshape_dir[1].at(x, y) = d.y;
                    grads->dshape_dir[2].at(x, y) = d.z;
                }
            }
        }
    });
    return out;
}

ShadingImage disney_specular(const GBuffer& g, const AreaLight& light, const Vec3& view,
                             ShadingGradients* grads) {
    double inv_len, view_inv_len;
    const Vec3 l = normalized_input(light.direction, inv_len, "light direction");
    const Vec3 v = normalized_input(view, view_inv_len, "view direction");
    const int w = g.width(), h = g.height();
    ShadingImage out;
    out.radiance = ImageRGB(w, h);
    out.component = ShadingComponent::Specular;
    if (grads) {
        grads->shape = ImageScalar(w, h);
        for (auto& p : grads->dshape_dir) p = ImageScalar(w, h);
    }
    parallel_for(0, h, [&](int y) {
        for (int x = 0; x < w; ++x) {
            if (!g.masked(x, y)) continue;
            const Vec3& n = g.normal.at(x, y);
            double nl = dot(n, l), nv = dot(n, v);
            if (nl <= 0.0 || nv <= 0.0) continue;
            GgxParams p = ggx_params(g.roughness.at(x, y), g.specular.at(x, y));

            Vec3 wsum = l + v;
            double wlen = length(wsum);
            Vec3 hv = wsum / wlen;
            double nh = dot(n, hv), lh = dot(l, hv);

            double D = gtr2(nh, p.alpha2);
            double F = schlick(lh, p.f0);
            double Gl = smith_gb(nl, p.alpha_g2);
            double Gv = smith_gb(nv, p.alpha_g2);
            double shape = D * F * Gl * Gv * nl;
            out.radiance.at(x, y) = light.intensity * shape;

            if (grads) {
                grads->shape.at(x, y) = shape;
                Vec3 dnh = (n - hv * nh) / wlen;
                Vec3 dlh = hv + (l - hv * lh) / wlen;
                Vec3 dshape = (gtr2_deriv(nh, p.alpha2) * F * Gl * nl) * dnh +
                              (D * schlick_deriv(lh, p.f0) * Gl * nl) * dlh +
                              (D * F * (smith_gb_deriv(nl, p.alpha_g2) * nl + Gl)) * n;
                dshape = project_tangent(l, inv_len, dshape * Gv);
                grads->dshape_dir[0].at(x, y) = dshape.x;
                grads->dshape_dir[1].at(x, y) = dshape.y;
                grads->dshape_dir[2].at(x, y) = dshape.z;
            }
        }
    });
    return out;
}

ImageRGB reconstruct(const GBuffer& g, const std::vector<ShadingImage>& shading_diff,
                     const std::vector<ShadingImage>& shading_spec,
                     const std::vector<ImageScalar>* shadows) {
    if (shading_diff.size() != shading_spec.size())
        throw std::invalid_argument("reconstruct: per-light list lengths differ");
    if (shadows && shadows->size() != shading_diff.size())
        throw std::invalid_argument("reconstruct: shadow list length differs");
    const int w = g.width(), h = g.height();
    ImageRGB out(w, h);
    for (size_t i = 0; i < shading_diff.size(); ++i) {
        require_same_size(shading_diff[i].radiance, out, "reconstruct");
        require_same_size(shading_spec[i].radiance, out, "reconstruct");
        if (shadows) require_same_size((*shadows)[i], g.depth, "reconstruct");
    }
    parallel_for(0, h, [&](int y) {
        for (int x = 0; x < w; ++x) {
            if (!g.masked(x, y)) continue;
            Vec3 acc(0.0);
            for (size_t i = 0; i < shading_diff.size(); ++i) {
                Vec3 term = g.albedo.at(x, y) * shading_diff[i].radiance.at(x, y) +
                            shading_spec[i].radiance.at(x, y);
                if (shadows) term *= (*shadows)[i].at(x, y);
                acc += term;
            }
            out.at(x, y) = acc;
        }
    });
    return out;
}

double masked_mean_l1(const ImageRGB& a, const ImageRGB& b, const ImageScalar& mask) {
    require_same_size(a, b, "masked_mean_l1");
    if (a.width != mask.width || a.height != mask.height)
        throw std::invalid_argument("masked_mean_l1: mask resolution mismatch");
    double sum = 0.0;
    size_t n = 0;
    for (size_t i = 0; i < a.count(); ++i) {
        if (mask.v[i] <= 0.5) continue;
        Vec3 d = a.v[i] - b.v[i];
        sum += std::fabs(d.x) + std::fabs(d.y) + std::fabs(d.z);
        ++n;
    }
    return n == 0 ? 0.0 : sum / (3.0 * n);
}

double masked_mean_l1(const ImageScalar& a, const ImageScalar& b, const ImageScalar& mask) {
    require_same_size(a, b, "masked_mean_l1");
    require_same_size(a, mask, "masked_mean_l1");
    double sum = 0.0;
    size_t n = 0;
    for (size_t i = 0; i < a.count(); ++i) {
        if (mask.v[i] <= 0.5) continue;
        sum += std::fabs(a.v[i] - b.v[i]);
        ++n;
    }
    return n == 0 ? 0.0 : sum / n;
}

namespace {

ImageRGB sum_lights(const std::vector<ShadingImage>& imgs, int w, int h) {
    ImageRGB out(w, h);
    for (const ShadingImage& s : imgs) {
        require_same_size(s.radiance, out, "decomposition_losses");
        for (size_t i = 0; i < out.count(); ++i) out.v[i] += s.radiance.v[i];
    }
    return out;
}

} // namespace

DecompositionLosses decomposition_losses(const GBuffer& gt,
                                         const ImageRGB& gt_diff_shading,
                                         const ImageRGB& gt_spec_shading,
                                         const GBuffer& pred,
                                         const std::vector<ShadingImage>& pred_diff,
                                         const std::vector<ShadingImage>& pred_spec) {
    const int w = gt.width(), h = gt.height();
    const ImageScalar& mask = gt.mask;
    ImageRGB sum_diff = sum_lights(pred_diff, w, h);
    ImageRGB sum_spec = sum_lights(pred_spec, w, h);

    auto hadamard = [](const ImageRGB& a, const ImageRGB& b) {
        ImageRGB out(a.width, a.height);
        for (size_t i = 0; i < a.count(); ++i) out.v[i] = a.v[i] * b.v[i];
        return out;
    };
    ImageRGB gt_diff_recon = hadamard(gt.albedo, gt_diff_shading);
    ImageRGB pred_diff_recon = hadamard(pred.albedo, sum_diff);
    ImageRGB gt_full = gt_diff_recon;
    for (size_t i = 0; i < gt_full.count(); ++i) gt_full.v[i] += gt_spec_shading.v[i];
    ImageRGB pred_full = pred_diff_recon;
    for (size_t i = 0; i < pred_full.count(); ++i) pred_full.v[i] += sum_spec.v[i];

    DecompositionLosses out;
    out.texture = masked_mean_l1(gt.albedo, pred.albedo, mask) +
                  masked_mean_l1(gt.roughness, pred.roughness, mask) +
                  masked_mean_l1(gt.specular, pred.specular, mask) +
                  masked_mean_l1(gt.normal, pred.normal, mask);
    out.diff_shading = masked_mean_l1(gt_diff_shading, sum_diff, mask);
    out.spec_shading = masked_mean_l1(gt_spec_shading, sum_spec, mask);
    out.diff_recon = masked_mean_l1(gt_diff_recon, pred_diff_recon, mask);
    out.full_recon = masked_mean_l1(gt_full, pred_full, mask);
    return out;
}

} // namespace arealight
