#include "arealight/pipeline.hpp"

#include "arealight/parallel.hpp"

#include <cmath>
#include <stdexcept>

namespace arealight {

namespace {

const Vec3 kViewDir{0.0, 0.0, 1.0}; // orthographic camera

double scaled_sigma(const AreaLight& light, int resolution) {
    double s = light.sigma * sigma_scale_for(resolution);
    return std::clamp(s, sigma_min_for(resolution), sigma_max_for(resolution));
}

} // namespace

ShadowMap render_shadow(const GBuffer& g, const TriangleMesh& mesh, const AreaLight& light,
                        ShadowMode mode, int resolution, double bias) {
    switch (mode) {
    case ShadowMode::None: {
        ShadowMap v;
        v.visibility = ImageScalar(g.width(), g.height(), 1.0);
        return v;
    }
    case ShadowMode::Hard:
        return hard_shadow(g, mesh, light.direction, resolution, bias);
    case ShadowMode::Csm:
        return dcsm(g, mesh, light.direction, scaled_sigma(light, resolution), resolution, bias);
    case ShadowMode::MinHardCsm: {
        ShadowMap hard = hard_shadow(g, mesh, light.direction, resolution, bias);
        ShadowMap soft = dcsm(g, mesh, light.direction, scaled_sigma(light, resolution), resolution, bias);
        for (size_t i = 0; i < hard.visibility.count(); ++i)
            hard.visibility.v[i] = std::fmin(hard.visibility.v[i], soft.visibility.v[i]);
        return hard;
    }
    }
    throw std::invalid_argument("render_shadow: bad mode");
}

RelightResult relight(const GBuffer& g, const LightSet& lights, const RelightRequest& req) {
    lights.validate();
    const int w = g.width(), h = g.height();
    TriangleMesh mesh;
    if (req.mode != ShadowMode::None) mesh = depth_to_mesh(g.depth, g.mask, kMeshGapThreshold, g.depth_scale);

    RelightResult out;
    out.image = ImageRGB(w, h);
    for (int li = 0; li < lights.n_lights(); ++li) {
        const AreaLight& light = lights.lights[li];
        ShadingImage diff = lambert(g, light);
        ShadingImage spec = disney_specular(g, light, kViewDir);
        diff.light_index = spec.light_index = li;
        ShadowMap vis = render_shadow(g, mesh, light, req.mode, req.shadow_resolution, req.bias);
        vis.light_index = li;

        parallel_for(0, h, [&](int y) {
            for (int x = 0; x < w; ++x) {
                if (!g.masked(x, y)) continue;
                Vec3 term = g.albedo.at(x, y) * diff.radiance.at(x, y) + spec.radiance.at(x, y);
                out.image.at(x, y) += term * vis.visibility.at(x, y);
            }
        });
        if (req.keep_per_light) {
            out.diffuse.push_back(std::move(diff));
            out.specular.push_back(std::move(spec));
            out.shadows.push_back(std::move(vis));
        }
    }
    return out;
}

double sigma_loss(const ImageRGB& gt_shadowed_diffuse, const GBuffer& g, const LightSet& lights,
                  int shadow_resolution, double bias, std::vector<double>* dloss_dsigma) {
    lights.validate();
    require_same_size(gt_shadowed_diffuse, g.albedo, "sigma_loss");
    const int w = g.width(), h = g.height();
    const int n = lights.n_lights();
    TriangleMesh mesh = depth_to_mesh(g.depth, g.mask, kMeshGapThreshold, g.depth_scale);

    ImageRGB pred(w, h);
    std::vector<ImageRGB> shading(n);
    std::vector<ImageScalar> dvis(n);
    for (int li = 0; li < n; ++li) {
        const AreaLight& light = lights.lights[li];
        ShadingImage diff = lambert(g, light);
        ImageScalar dv;
        ShadowMap vis = dcsm(g, mesh, light.direction, scaled_sigma(light, shadow_resolution),
                             shadow_resolution, bias, dloss_dsigma ? &dv : nullptr);
        for (size_t i = 0; i < pred.count(); ++i)
            pred.v[i] += diff.radiance.v[i] * vis.visibility.v[i];
        if (dloss_dsigma) {
            shading[li] = std::move(diff.radiance);
            dvis[li] = std::move(dv);
        }
    }

    size_t n_mask = g.mask_count();
    double loss = masked_mean_l1(gt_shadowed_diffuse, pred, g.mask);
    if (dloss_dsigma) {
        dloss_dsigma->assign(n, 0.0);
        const double norm = 1.0 / (3.0 * double(n_mask));
        for (size_t i = 0; i < pred.count(); ++i) {
            if (g.mask.v[i] <= 0.5) continue;
            Vec3 d = pred.v[i] - gt_shadowed_diffuse.v[i];
            Vec3 s{d.x > 0 ? 1.0 : (d.x < 0 ? -1.0 : 0.0),
                   d.y > 0 ? 1.0 : (d.y < 0 ? -1.0 : 0.0),
                   d.z > 0 ? 1.0 : (d.z < 0 ? -1.0 : 0.0)};
            for (int li = 0; li < n; ++li)
                (*dloss_dsigma)[li] += norm * dvis[li].v[i] * dot(s, shading[li].v[i]);
        }
        // Stored sigmas are in reference-resolution units; chain through
        // the pixel scale used by the DCSM pass.
        for (double& gder : *dloss_dsigma) gder *= sigma_scale_for(shadow_resolution);
    }
    return loss;
}

} // namespace arealight
