#pragma once

#include "arealight/gbuffer.hpp"
#include "arealight/lights.hpp"
#include "arealight/shading.hpp"
#include "arealight/shadowmap.hpp"

#include <vector>

namespace arealight {

constexpr double kLambdaSigma = 0.01; // weight of the sigma loss when combined with decomposition losses

enum class ShadowMode { None, Hard, Csm, MinHardCsm };

/// Options for one relighting pass. Light directions are interpreted in
/// the G-buffer's camera frame; each light is shaded as a directional
/// light (sigma only affects shadows).
struct RelightRequest {
    ShadowMode mode = ShadowMode::Csm;
    int shadow_resolution = kShadowMapResolution;
    double bias = kShadowBias;
    bool keep_per_light = false;
};

struct RelightResult {
    ImageRGB image;
    // Populated when keep_per_light is set.
    std::vector<ShadingImage> diffuse;
    std::vector<ShadingImage> specular;
    std::vector<ShadowMap> shadows;
};

/// Per light: Lambert + Disney specular shading, a shadow map per the
/// requested mode, and the merged composition
///   sum_l V_l * (A * S_diff_l + S_spec_l)
/// summed in light order (deterministic).
RelightResult relight(const GBuffer& g, const LightSet& lights, const RelightRequest& req = {});

/// Single-light shadow map per the requested mode (None yields all-1).
ShadowMap render_shadow(const GBuffer& g, const TriangleMesh& mesh, const AreaLight& light,
                        ShadowMode mode, int resolution = kShadowMapResolution,
                        double bias = kShadowBias);

/// Masked mean-L1 between the ground-truth shadowed diffuse shading and
/// sum_l V_l * S_diff_l with V from DCSM. Gradients (if requested) flow
/// only through the sigma dependence of V.
double sigma_loss(const ImageRGB& gt_shadowed_diffuse, const GBuffer& g, const LightSet& lights,
                  int shadow_resolution = kShadowMapResolution, double bias = kShadowBias,
                  std::vector<double>* dloss_dsigma = nullptr);

} // namespace arealight
