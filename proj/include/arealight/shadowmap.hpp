#pragma once

#include "arealight/gbuffer.hpp"
#include "arealight/lights.hpp"
#include "arealight/mesh.hpp"

#include <array>
#include <vector>

namespace arealight {

constexpr int kShadowMapResolution = 256;
constexpr double kShadowBias = 0.01;     // normalized depth units
constexpr double kMeshGapThreshold = 0.03;
constexpr int kCsmOrder = 8;             // truncation order K

/// Frequencies of the truncated step expansion: odd harmonics of the
/// half-period series, c_k = (2k-1) pi / 2. The half period keeps the
/// periodic wraparound jump outside the [-1, 1] depth-difference range.
inline double csm_frequency(int k) { return (2.0 * k - 1.0) * kPi / 2.0; }

/// Series coefficient of harmonic k: 2/c_k under a Lanczos window,
/// which suppresses the truncation ringing (visible as light bleeding
/// in wide penumbras) while the clamped step stays sharp.
inline double csm_coefficient(int k) {
    double a = kPi * k / (kCsmOrder + 1);
    return 2.0 / csm_frequency(k) * (std::sin(a) / a);
}

/// Clamped truncated step approximation f(d, z) ~ H(z - d) used by the
/// shadow test; exposed for analysis and tests.
double csm_step_approximation(double d, double z);

/// Smallest depth difference at which the truncated series saturates to
/// 1. Receivers are offset by this constant so surfaces do not shade
/// themselves through the finite-width step transition.
double csm_step_offset();

/// Sigma bounds in pixels of a shadow map of the given resolution
/// (the stored convention is defined at 256).
inline double sigma_scale_for(int resolution) { return double(resolution) / kSigmaReferenceResolution; }
inline double sigma_min_for(int resolution) { return kSigmaMin * sigma_scale_for(resolution); }
inline double sigma_max_for(int resolution) { return kSigmaMax * sigma_scale_for(resolution); }

/// Light-space depth image from an orthographic rasterization of the
/// mesh along -light_dir. Texels store normalized depth toward the
/// light in [0, 1] (0 = closest to the light, 1 = empty), normalized
/// over the mesh bounds padded 5%.
struct LightDepthMap {
    int resolution = 0;
    ImageScalar depth;
    Vec3 frame_u, frame_v, frame_w; // orthonormal; w points toward the light (shadow space)
    double u0 = 0, u1 = 0, v0 = 0, v1 = 0; // padded projection bounds
    double d_min = 0, d_max = 0;           // padded depth bounds

    /// Continuous texel coordinates of a shadow-space point.
    void project(const Vec3& p, double& tx, double& ty, double& d_norm) const;
};

/// light_dir is the camera-space direction toward the light.
LightDepthMap render_light_depth(const TriangleMesh& mesh, const Vec3& light_dir, int resolution);

/// Per-pixel visibility in [0, 1]; 1 outside the mask.
struct ShadowMap {
    ImageScalar visibility;
    int light_index = -1;
};

/// Binary shadow-map test: V = 1 where the pixel's light-space depth is
/// within bias of the stored blocker depth (nearest texel lookup).
ShadowMap hard_shadow(const GBuffer& g, const TriangleMesh& mesh, const Vec3& light_dir,
                      int resolution = kShadowMapResolution, double bias = kShadowBias);

/// Fourier basis images of the light-space depth, optionally Gaussian
/// convolved. Stores pairs (cos(c_k z), sin(c_k z)) for k = 1..K.
struct CsmStack {
    int resolution = 0;
    double sigma = 0.0; // 0 = unconvolved
    std::array<ImageScalar, kCsmOrder> cos_img;
    std::array<ImageScalar, kCsmOrder> sin_img;
};

CsmStack build_csm_basis(const LightDepthMap& ldm);

/// Gaussian-convolves every basis image (separable, clamp-to-edge,
/// window 2*ceil(3 sigma)+1). If dsigma is non-null it receives the
/// per-texel derivative of the convolved images w.r.t. sigma (window
/// held fixed).
CsmStack convolve_csm(const CsmStack& basis, double sigma, CsmStack* dsigma = nullptr);

/// Differentiable convolutional shadow map. sigma is in pixels of the
/// given resolution and must lie within [sigma_min_for, sigma_max_for].
/// If dvis_dsigma is non-null it receives dV/dsigma (zero where the
/// [0,1] clamp is active).
ShadowMap dcsm(const GBuffer& g, const TriangleMesh& mesh, const Vec3& light_dir, double sigma,
               int resolution = kShadowMapResolution, double bias = kShadowBias,
               ImageScalar* dvis_dsigma = nullptr);

/// DCSM reconstruction from an already-convolved stack; lets callers
/// reuse a cached light depth map and basis across sigma values.
ShadowMap dcsm_from_stack(const GBuffer& g, const LightDepthMap& ldm, const CsmStack& convolved,
                          double bias, const CsmStack* dstack = nullptr,
                          ImageScalar* dvis_dsigma = nullptr);

} // namespace arealight
