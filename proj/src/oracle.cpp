#include "arealight/oracle.hpp"

#include "arealight/parallel.hpp"
#include "arealight/shading.hpp"

#include <cmath>
#include <stdexcept>

namespace arealight {

namespace {

constexpr double kRayEps = 1e-9;

// Distance the camera plane sits behind the origin; rays start there so
// every t is positive.
constexpr double kCameraBack = 100.0;

} // namespace

Vec3 SphereScene::view_dir() const {
    double s = std::sqrt(0.5);
    return {0.0, -s, -s};
}

Vec3 SphereScene::up() const { return cross(right(), view_dir()); } // (0, s, -s): +y-ish in image

Mat3 SphereScene::world_to_camera() const {
    return Mat3::from_rows(right(), up(), -view_dir());
}

SceneHit trace_pixel(const SphereScene& scene, int x, int y) {
    const double extent = 2.0 * SphereScene::kPlaneHalfExtent;
    const Vec3 f = scene.view_dir();
    double a = ((x + 0.5) / scene.resolution - 0.5) * extent;
    double b = (0.5 - (y + 0.5) / scene.resolution) * extent;
    Vec3 o = scene.right() * a + scene.up() * b - f * kCameraBack;

    SceneHit best;
    double best_t = 1e300;

    // Sphere (keep the upper hemisphere y >= 0).
    double B = dot(o, f);
    double C = dot(o, o) - SphereScene::kRadius * SphereScene::kRadius;
    double disc = B * B - C;
    if (disc >= 0.0) {
        double sq = std::sqrt(disc);
        for (double t : {-B - sq, -B + sq}) {
            if (t <= kRayEps) continue;
            Vec3 p = o + f * t;
            if (p.y < -1e-12) continue;
            if (t < best_t) {
                best_t = t;
                best = {true, true, p, normalize(p), t};
            }
            break; // nearest admissible sphere hit
        }
    }

    // Ground plane.
    if (std::fabs(f.y) > 1e-12) {
        double t = -o.y / f.y;
        if (t > kRayEps && t < best_t) {
            Vec3 p = o + f * t;
            if (std::fabs(p.x) <= SphereScene::kPlaneHalfExtent &&
                std::fabs(p.z) <= SphereScene::kPlaneHalfExtent) {
                best = {true, false, p, {0, 1, 0}, t};
            }
        }
    }
    return best;
}

GBuffer render_gbuffer(const SphereScene& scene) {
    const int res = scene.resolution;
    if (res < 16) throw std::invalid_argument("scene resolution must be >= 16");
    GBuffer g;
    g.depth = ImageScalar(res, res);
    g.normal = ImageRGB(res, res, Vec3(0, 0, 1));
    g.albedo = ImageRGB(res, res);
    g.specular = ImageScalar(res, res);
    g.roughness = ImageScalar(res, res);
    g.mask = ImageScalar(res, res);

    const Mat3 M = scene.world_to_camera();
    ImageScalar t_map(res, res);
    double t_min = 1e300, t_max = -1e300;
    for (int y = 0; y < res; ++y) {
        for (int x = 0; x < res; ++x) {
            SceneHit hit = trace_pixel(scene, x, y);
            if (!hit.hit) continue;
            g.mask.at(x, y) = 1.0;
            t_map.at(x, y) = hit.t;
            t_min = std::fmin(t_min, hit.t);
            t_max = std::fmax(t_max, hit.t);
            g.normal.at(x, y) = M * hit.normal;
            g.albedo.at(x, y) = Vec3(SphereScene::kAlbedo);
            g.specular.at(x, y) = SphereScene::kSpecular;
            g.roughness.at(x, y) = SphereScene::kRoughness;
        }
    }
    if (!(t_max > t_min)) throw std::runtime_error("degenerate scene depth range");
    for (int y = 0; y < res; ++y)
        for (int x = 0; x < res; ++x)
            if (g.masked(x, y)) g.depth.at(x, y) = (t_map.at(x, y) - t_min) / (t_max - t_min);
    g.depth_scale = (t_max - t_min) / (2.0 * SphereScene::kPlaneHalfExtent);
    return g;
}

namespace {

// Occlusion toward `dir` from a scene point. Convexity means sphere
// points never re-hit the sphere on their front side; plane points
// test against the sphere, and downward rays test against the plane.
bool occluded(const SceneHit& hit, const Vec3& dir) {
    if (hit.on_sphere) {
        if (dir.y >= 0.0) return false;
        double t = -hit.position.y / dir.y;
        Vec3 p = hit.position + dir * t;
        return std::fabs(p.x) <= SphereScene::kPlaneHalfExtent &&
               std::fabs(p.z) <= SphereScene::kPlaneHalfExtent;
    }
    if (dir.y < 0.0) return true; // into the ground plane
    // Ray vs the unit sphere from a plane point.
    const Vec3& o = hit.position;
    double B = dot(o, dir);
    double C = dot(o, o) - SphereScene::kRadius * SphereScene::kRadius;
    double disc = B * B - C;
    if (disc < 0.0) return false;
    double t = -B - std::sqrt(disc);
    return t > 1e-9;
}

} // namespace

ImageRGB render_reference(const SphereScene& scene, const EnvironmentMap& env,
                          ReferenceComponent component) {
    const int res = scene.resolution;
    const int tw = env.width(), th = env.height();

    // Flatten the env texels once.
    std::vector<Vec3> dirs(size_t(tw) * th), weighted(size_t(tw) * th);
    for (int ty = 0; ty < th; ++ty) {
        double dw = env.texel_solid_angle(ty);
        for (int tx = 0; tx < tw; ++tx) {
            dirs[size_t(ty) * tw + tx] = env.texel_dir(tx, ty);
            weighted[size_t(ty) * tw + tx] = env.texel(tx, ty) * dw;
        }
    }

    const Vec3 v = -scene.view_dir();
    ImageRGB out(res, res);
    parallel_for(0, res, [&](int y) {
        for (int x = 0; x < res; ++x) {
            SceneHit hit = trace_pixel(scene, x, y);
            if (!hit.hit) continue;
            Vec3 acc(0.0);
            for (size_t i = 0; i < dirs.size(); ++i) {
                const Vec3& w = dirs[i];
                double nw = dot(hit.normal, w);
                if (nw <= 0.0) continue;
                double factor;
                switch (component) {
                case ReferenceComponent::Diffuse:
                    factor = SphereScene::kAlbedo / kPi * nw;
                    break;
                case ReferenceComponent::Specular:
                    factor = disney_specular_lobe(hit.normal, w, v, SphereScene::kRoughness,
                                                  SphereScene::kSpecular) *
                             nw;
                    break;
                case ReferenceComponent::ShadowedDiffuse:
                    factor = occluded(hit, w) ? 0.0 : SphereScene::kAlbedo / kPi * nw;
                    break;
                }
                acc += weighted[i] * factor;
            }
            out.at(x, y) = acc;
        }
    });
    return out;
}

ShadowMap raycast_visibility(const SphereScene& scene, const Vec3& world_dir) {
    if (std::fabs(length(world_dir) - 1.0) > 1e-6)
        throw std::invalid_argument("raycast_visibility: direction must be unit length");
    const int res = scene.resolution;
    ShadowMap out;
    out.visibility = ImageScalar(res, res, 1.0);
    parallel_for(0, res, [&](int y) {
        for (int x = 0; x < res; ++x) {
            SceneHit hit = trace_pixel(scene, x, y);
            if (!hit.hit) continue;
            bool lit = dot(hit.normal, world_dir) > 0.0 && !occluded(hit, world_dir);
            out.visibility.at(x, y) = lit ? 1.0 : 0.0;
        }
    });
    return out;
}

std::vector<ReferenceTargets> render_reference_rotations(
    const SphereScene& scene, const EnvironmentMap& env,
    const std::vector<std::pair<double, double>>& rotations_deg) {
    const int res = scene.resolution;
    const int tw = env.width(), th = env.height();
    const size_t n_texels = size_t(tw) * th;

    // Per-pixel hit cache.
    std::vector<SceneHit> hits(size_t(res) * res);
    for (int y = 0; y < res; ++y)
        for (int x = 0; x < res; ++x) hits[size_t(y) * res + x] = trace_pixel(scene, x, y);

    // Texel directions and solid angles are shared by every rotation,
    // so the visibility table is computed once.
    std::vector<Vec3> dirs(n_texels);
    std::vector<double> solid(n_texels);
    for (int ty = 0; ty < th; ++ty) {
        double dw = env.texel_solid_angle(ty);
        for (int tx = 0; tx < tw; ++tx) {
            dirs[size_t(ty) * tw + tx] = env.texel_dir(tx, ty);
            solid[size_t(ty) * tw + tx] = dw;
        }
    }
    // Byte-aligned per-pixel stride so parallel rows never share bytes.
    const size_t stride = (n_texels + 7) & ~size_t(7);
    std::vector<uint8_t> blocked(size_t(res) * res * stride / 8);
    parallel_for(0, res, [&](int y) {
        for (int x = 0; x < res; ++x) {
            const SceneHit& hit = hits[size_t(y) * res + x];
            if (!hit.hit) continue;
            size_t base = (size_t(y) * res + x) * stride;
            for (size_t i = 0; i < n_texels; ++i) {
                if (occluded(hit, dirs[i])) blocked[(base + i) >> 3] |= uint8_t(1u << ((base + i) & 7));
            }
        }
    });

    const Vec3 v = -scene.view_dir();
    std::vector<ReferenceTargets> out(rotations_deg.size());
    for (size_t r = 0; r < rotations_deg.size(); ++r) {
        EnvironmentMap rotated = rotate_env(env, rotations_deg[r].first, rotations_deg[r].second);
        std::vector<Vec3> weighted(n_texels);
        for (size_t i = 0; i < n_texels; ++i)
            weighted[i] = rotated.texel(int(i % tw), int(i / tw)) * solid[i];

        ReferenceTargets& tgt = out[r];
        tgt.diffuse = ImageRGB(res, res);
        tgt.specular = ImageRGB(res, res);
        tgt.shadowed_diffuse = ImageRGB(res, res);
        parallel_for(0, res, [&](int y) {
            for (int x = 0; x < res; ++x) {
                const SceneHit& hit = hits[size_t(y) * res + x];
                if (!hit.hit) continue;
                size_t base = (size_t(y) * res + x) * stride;
                Vec3 acc_d(0.0), acc_s(0.0), acc_sh(0.0);
                for (size_t i = 0; i < n_texels; ++i) {
                    double nw = dot(hit.normal, dirs[i]);
                    if (nw <= 0.0) continue;
                    const Vec3& ew = weighted[i];
                    Vec3 diff = ew * (SphereScene::kAlbedo / kPi * nw);
                    acc_d += diff;
                    acc_s += ew * (disney_specular_lobe(hit.normal, dirs[i], v, SphereScene::kRoughness,
                                                        SphereScene::kSpecular) *
                                   nw);
                    if (!(blocked[(base + i) >> 3] & (1u << ((base + i) & 7)))) acc_sh += diff;
                }
                tgt.diffuse.at(x, y) = acc_d;
                tgt.specular.at(x, y) = acc_s;
                tgt.shadowed_diffuse.at(x, y) = acc_sh;
            }
        });
    }
    return out;
}

} // namespace arealight
