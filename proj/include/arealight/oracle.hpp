#pragma once

#include "arealight/env_map.hpp"
#include "arealight/gbuffer.hpp"
#include "arealight/shadowmap.hpp"

#include <vector>

namespace arealight {

/// Analytic test scene: a unit hemisphere at the origin resting on the
/// y = 0 plane with extent [-4, 4]^2, albedo 1, specular 0.5,
/// roughness 0.5. Orthographic camera looking along (0, -sin45, -cos45)
/// toward the origin, framing the plane extent with a square image.
struct SphereScene {
    int resolution = 256;

    static constexpr double kRadius = 1.0;
    static constexpr double kPlaneHalfExtent = 4.0;
    static constexpr double kAlbedo = 1.0;
    static constexpr double kSpecular = 0.5;
    static constexpr double kRoughness = 0.5;

    /// Camera basis in world space.
    Vec3 view_dir() const;   // forward (into the scene)
    Vec3 right() const { return {1, 0, 0}; }
    Vec3 up() const;
    Mat3 world_to_camera() const; // rows (right, up, -view)
};

struct SceneHit {
    bool hit = false;
    bool on_sphere = false;
    Vec3 position;   // world space
    Vec3 normal;     // world space, unit
    double t = 0.0;  // distance along the view direction
};

/// Intersects the orthographic camera ray through pixel (x, y).
SceneHit trace_pixel(const SphereScene& scene, int x, int y);

/// Analytic G-buffer: normalized depth (min 0, max 1 over the mask),
/// camera-space normals, constant materials, and the depth_scale that
/// makes shadow-space geometry similar to the world scene.
GBuffer render_gbuffer(const SphereScene& scene);

enum class ReferenceComponent { Diffuse, Specular, ShadowedDiffuse };

/// Deterministic texel-sum render under the environment map:
///   diffuse:  (albedo/pi) sum E(w) max(0, n.w) dW
///   specular: sum f_spec(n, w, v) E(w) max(0, n.w) dW
///   shadowed diffuse: the diffuse sum with analytic visibility.
/// dW = (2 pi / W)(pi / H) cos(latitude).
ImageRGB render_reference(const SphereScene& scene, const EnvironmentMap& env,
                          ReferenceComponent component);

/// Analytic visibility toward a world-space direction: 1 where the ray
/// from the surface point misses the hemisphere (and the plane), 0 on
/// backsides. Aligned with the scene G-buffer pixels; 1 outside mask.
ShadowMap raycast_visibility(const SphereScene& scene, const Vec3& world_dir);

/// All three reference components for a batch of environment rotations
/// (lon, lat) in degrees; the per-pixel-per-texel visibility table is
/// shared across the batch.
struct ReferenceTargets {
    ImageRGB diffuse;
    ImageRGB specular;
    ImageRGB shadowed_diffuse;
};
std::vector<ReferenceTargets> render_reference_rotations(
    const SphereScene& scene, const EnvironmentMap& env,
    const std::vector<std::pair<double, double>>& rotations_deg);

} // namespace arealight
