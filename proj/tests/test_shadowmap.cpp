#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "arealight/conv.hpp"
#include "arealight/oracle.hpp"
#include "arealight/shadowmap.hpp"
#include "testutil.hpp"

using namespace arealight;
using namespace testutil;

namespace {

GBuffer flat_gbuffer(int n, double depth) {
    GBuffer g;
    g.depth = ImageScalar(n, n, depth);
    g.normal = ImageRGB(n, n, Vec3(0, 0, 1));
    g.albedo = ImageRGB(n, n, Vec3(1.0));
    g.specular = ImageScalar(n, n, 0.5);
    g.roughness = ImageScalar(n, n, 0.5);
    g.mask = ImageScalar(n, n, 1.0);
    return g;
}

// World -> shadow-space similarity for the hemisphere scene, recovered
// from the camera conventions (uniform scale 1/extent with y/z flips).
struct SceneShadowTransform {
    Mat3 M;           // world -> camera rotation
    double extent;    // world width of the image
    double t_min;     // view depth at normalized depth 0
    double depth_len; // world length of the [0,1] depth range

    static SceneShadowTransform make(const SphereScene& scene, const GBuffer& g) {
        SceneShadowTransform T;
        T.M = scene.world_to_camera();
        T.extent = 2.0 * SphereScene::kPlaneHalfExtent;
        T.depth_len = g.depth_scale * T.extent;
        // recover t_min from any masked pixel
        for (int y = 0;; ++y)
            for (int x = 0; x < scene.resolution; ++x) {
                SceneHit hit = trace_pixel(scene, x, y);
                if (!hit.hit) continue;
                T.t_min = hit.t - g.depth.at(x, y) * T.depth_len;
                return T;
            }
    }

    Vec3 world_to_shadow(const Vec3& p, const SphereScene& scene) const {
        Vec3 cam = M * p; // x right, y up, z toward viewer
        double t = dot(p, scene.view_dir()) + 100.0; // camera plane sits 100 behind origin
        return {cam.x / extent + 0.5, 0.5 - cam.y / extent, (t - t_min) / extent};
    }

    // Directions map with flips only (uniform scale drops out).
    Vec3 world_dir_to_shadow(const Vec3& d) const {
        Vec3 cam = M * d;
        return normalize(Vec3{cam.x, -cam.y, -cam.z});
    }
};

} // namespace

TEST_CASE("depth_to_mesh") {
    SUBCASE("full-mask constant depth 3x3 gives 8 triangles, 9 vertices") {
        ImageScalar depth(3, 3, 0.4), mask(3, 3, 1.0);
        TriangleMesh mesh = depth_to_mesh(depth, mask, 0.03);
        CHECK(mesh.triangle_count() == 8);
        CHECK(mesh.vertex_count() == 9);
        CHECK(mesh.source_pixel[4][0] == 1);
        CHECK(mesh.source_pixel[4][1] == 1);
    }
    SUBCASE("quads across a depth gap are skipped") {
        ImageScalar depth(3, 3, 0.1), mask(3, 3, 1.0);
        for (int y = 0; y < 3; ++y) depth.at(2, y) = 0.6; // step of 0.5
        TriangleMesh mesh = depth_to_mesh(depth, mask, 0.05);
        CHECK(mesh.triangle_count() == 4); // only the left column of quads survives
        CHECK(mesh.vertex_count() == 9);   // vertices remain per masked pixel
    }
    SUBCASE("masked-out pixels drop vertices and quads") {
        ImageScalar depth(3, 3, 0.4), mask(3, 3, 1.0);
        mask.at(1, 1) = 0.0;
        TriangleMesh mesh = depth_to_mesh(depth, mask, 0.03);
        CHECK(mesh.vertex_count() == 8);
        CHECK(mesh.triangle_count() == 0);
    }
    SUBCASE("empty mask rejected") {
        ImageScalar depth(3, 3, 0.4), mask(3, 3, 0.0);
        CHECK_THROWS(depth_to_mesh(depth, mask, 0.03));
    }
    SUBCASE("hemisphere scene: one vertex per masked pixel") {
        SphereScene scene{96};
        GBuffer g = render_gbuffer(scene);
        TriangleMesh mesh = depth_to_mesh(g.depth, g.mask, kMeshGapThreshold, g.depth_scale);
        CHECK(mesh.vertex_count() == g.mask_count());
    }
}

TEST_CASE("render_light_depth") {
    SUBCASE("planar geometry: covered texels share one depth, empty are 1") {
        GBuffer g = flat_gbuffer(8, 0.5);
        TriangleMesh mesh = depth_to_mesh(g.depth, g.mask, 0.03);
        LightDepthMap ldm = render_light_depth(mesh, {0, 0, 1}, 32);
        int covered = 0, empty = 0;
        double lo = 1e300, hi = -1e300;
        for (double z : ldm.depth.v) {
            if (z >= 1.0) {
                ++empty;
            } else {
                ++covered;
                lo = std::fmin(lo, z);
                hi = std::fmax(hi, z);
            }
        }
        CHECK(covered > 0);
        CHECK(empty > 0); // 5% padding leaves an empty border
        CHECK(hi - lo <= 1e-9);
    }
    SUBCASE("nearer quad wins in the overlap") {
        // two horizontal quads stacked along z, light from +z (camera)
        TriangleMesh mesh;
        auto add_quad = [&](double z, double half) {
            uint32_t base = uint32_t(mesh.vertices.size());
            mesh.vertices.push_back({0.5 - half, 0.5 - half, z});
            mesh.vertices.push_back({0.5 + half, 0.5 - half, z});
            mesh.vertices.push_back({0.5 - half, 0.5 + half, z});
            mesh.vertices.push_back({0.5 + half, 0.5 + half, z});
            for (int i = 0; i < 4; ++i) mesh.source_pixel.push_back({0, 0});
            mesh.triangles.push_back({base, base + 1, base + 2});
            mesh.triangles.push_back({base + 1, base + 3, base + 2});
        };
        add_quad(0.2, 0.1); // near the light
        add_quad(0.7, 0.3); // farther, larger
        LightDepthMap ldm = render_light_depth(mesh, {0, 0, 1}, 64);
        double tx, ty, d;
        ldm.project({0.5, 0.5, 0.2}, tx, ty, d);
        double center = ldm.depth.at(int(std::lround(tx)), int(std::lround(ty)));
        CHECK(center == doctest::Approx(d).epsilon(1e-6));
        // a point on the far quad outside the near quad's footprint
        double tx2, ty2, d2;
        ldm.project({0.5 + 0.25, 0.5, 0.7}, tx2, ty2, d2);
        double outer = ldm.depth.at(int(std::lround(tx2)), int(std::lround(ty2)));
        CHECK(outer == doctest::Approx(d2).epsilon(1e-6));
        CHECK(center < outer);
    }
    SUBCASE("single point mesh has degenerate bounds") {
        TriangleMesh mesh;
        mesh.vertices.push_back({0.5, 0.5, 0.5});
        mesh.source_pixel.push_back({0, 0});
        CHECK_THROWS(render_light_depth(mesh, {0, 0, 1}, 32));
    }
    SUBCASE("hemisphere mesh matches the analytic ray-cast light depth") {
        SphereScene scene{128};
        GBuffer g = render_gbuffer(scene);
        TriangleMesh mesh = depth_to_mesh(g.depth, g.mask, kMeshGapThreshold, g.depth_scale);
        SceneShadowTransform T = SceneShadowTransform::make(scene, g);

        const Vec3 light_world = normalize(Vec3{0.3, 1.0, 0.4});
        const Vec3 light_cam = scene.world_to_camera() * light_world;
        const int res = 128;
        LightDepthMap ldm = render_light_depth(mesh, light_cam, res);

        // Analytic pass: march a ray toward -w from far away for every
        // texel; depth of the first hemisphere/plane hit, else empty.
        double err = 0.0;
        int n = 0;
        for (int ty = 0; ty < res; ++ty) {
            for (int tx = 0; tx < res; ++tx) {
                double a = ldm.u0 + (tx + 0.5) / res * (ldm.u1 - ldm.u0);
                double b = ldm.v0 + (ty + 0.5) / res * (ldm.v1 - ldm.v0);
                // shadow-space ray origin on the far side of the light
                Vec3 o_s = ldm.frame_u * a + ldm.frame_v * b + ldm.frame_w * 10.0;
                // map to world: T is affine; invert via directions
                // world ray: origin T^-1(o_s), direction -light_world
                // Solve T(p) = o_s using the similarity structure.
                Vec3 cam{(o_s.x - 0.5) * T.extent, (0.5 - o_s.y) * T.extent, 0.0};
                // z component: o_s.z = (t - t_min)/extent with t = p.f + 100
                double t_view = o_s.z * T.extent + T.t_min;
                Vec3 p = scene.world_to_camera().transposed() * cam; // camera plane point at z_cam = 0
                // shift along view dir so the view depth matches
                double t_p = dot(p, scene.view_dir()) + 100.0;
                p += scene.view_dir() * (t_view - t_p);

                // analytic nearest hit along -light_world
                const Vec3 d = -light_world;
                double best = 1e300;
                double B = dot(p, d), C = dot(p, p) - 1.0;
                double disc = B * B - C;
                if (disc >= 0) {
                    for (double t : {-B - std::sqrt(disc), -B + std::sqrt(disc)}) {
                        if (t > 1e-9 && (p + d * t).y >= 0 && t < best) { best = t; break; }
                    }
                }
                if (std::fabs(d.y) > 1e-12) {
                    double t = -p.y / d.y;
                    Vec3 q = p + d * t;
                    if (t > 1e-9 && t < best && std::fabs(q.x) <= 4 && std::fabs(q.z) <= 4) best = t;
                }
                double analytic = 1.0;
                if (best < 1e300) {
                    Vec3 hit_s = T.world_to_shadow(p + d * best, scene);
                    analytic = (ldm.d_max - dot(hit_s, ldm.frame_w)) / (ldm.d_max - ldm.d_min);
                    analytic = clamp01(analytic);
                }
                err += std::fabs(ldm.depth.at(tx, ty) - analytic);
                ++n;
            }
        }
        CHECK(err / n < 2.0 / res);
    }
}

TEST_CASE("hard_shadow") {
    SUBCASE("no blockers: everything lit") {
        GBuffer g = flat_gbuffer(16, 0.5);
        TriangleMesh mesh = depth_to_mesh(g.depth, g.mask, 0.03);
        ShadowMap sm = hard_shadow(g, mesh, {0, 0, 1}, 64);
        for (double v : sm.visibility.v) CHECK(v == 1.0);
    }
    SUBCASE("hemisphere scene matches the ray-cast oracle at three elevations") {
        SphereScene scene{256};
        GBuffer g = render_gbuffer(scene);
        TriangleMesh mesh = depth_to_mesh(g.depth, g.mask, kMeshGapThreshold, g.depth_scale);
        const Mat3 M = scene.world_to_camera();
        for (double elev : {30.0, 45.0, 60.0}) {
            double e = radians(elev);
            Vec3 light_world = normalize(Vec3{0.4, std::tan(e) * std::hypot(0.4, -0.9), -0.9});
            ShadowMap oracle = raycast_visibility(scene, light_world);
            ShadowMap sm = hard_shadow(g, mesh, M * light_world, 256);
            size_t agree = 0, total = 0;
            for (int y = 0; y < 256; ++y)
                for (int x = 0; x < 256; ++x) {
                    if (!g.masked(x, y)) continue;
                    ++total;
                    agree += (sm.visibility.at(x, y) > 0.5) == (oracle.visibility.at(x, y) > 0.5);
                }
            CAPTURE(elev);
            CHECK(double(agree) / double(total) >= 0.97);
        }
    }
}

TEST_CASE("csm step approximation and kernel rule") {
    SUBCASE("series at the step is one half") {
        for (double d : {0.1, 0.33, 0.5, 0.77, 1.0})
            CHECK(csm_step_approximation(d, d) == doctest::Approx(0.5).epsilon(1e-12));
    }
    SUBCASE("window rule 2 ceil(3 sigma) + 1") {
        CHECK(conv::gaussian_window(10.0) == 61);
        CHECK(conv::gaussian_window(0.5) == 5);
        CHECK(conv::gaussian_window(1.0) == 7);
        CHECK(conv::gaussian_window(3.4) == 23);
        CHECK(conv::gaussian_window(40.0) == 241);
    }
    SUBCASE("gaussian kernel is normalized across the sigma range") {
        for (double s : {0.5, 1.0, 3.4, 10.0, 25.0, 40.0}) {
            auto k = conv::gaussian_kernel<double>(s);
            double sum = 0;
            for (double v : k) sum += v;
            CHECK(std::fabs(sum - 1.0) <= 1e-6);
        }
    }
}

TEST_CASE("dcsm on the hemisphere scene") {
    SphereScene scene{128};
    GBuffer g = render_gbuffer(scene);
    TriangleMesh mesh = depth_to_mesh(g.depth, g.mask, kMeshGapThreshold, g.depth_scale);
    const Mat3 M = scene.world_to_camera();
    const Vec3 light_world = normalize(Vec3{0.5, 1.0, -0.5});
    const Vec3 light_cam = M * light_world;

    SUBCASE("sigma out of bounds rejected") {
        CHECK_THROWS(dcsm(g, mesh, light_cam, 0.01, 256));
        CHECK_THROWS(dcsm(g, mesh, light_cam, 100.0, 256));
    }

    SUBCASE("tiny sigma approaches the hard shadow away from boundaries") {
        ShadowMap hard = hard_shadow(g, mesh, light_cam, 256);
        ShadowMap soft = dcsm(g, mesh, light_cam, 0.5, 256);
        // 2-pixel exclusion band around hard-shadow boundaries
        ImageScalar boundary(128, 128, 0.0);
        for (int y = 0; y < 128; ++y)
            for (int x = 0; x < 128; ++x) {
                double v = hard.visibility.at(x, y);
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        int xx = std::clamp(x + dx, 0, 127), yy = std::clamp(y + dy, 0, 127);
                        if (hard.visibility.at(xx, yy) != v) boundary.at(x, y) = 1.0;
                    }
            }
        double sum = 0;
        int n = 0;
        for (int y = 0; y < 128; ++y)
            for (int x = 0; x < 128; ++x) {
                if (!g.masked(x, y)) continue;
                bool near_boundary = false;
                for (int dy = -2; dy <= 2 && !near_boundary; ++dy)
                    for (int dx = -2; dx <= 2; ++dx) {
                        int xx = std::clamp(x + dx, 0, 127), yy = std::clamp(y + dy, 0, 127);
                        if (boundary.at(xx, yy) > 0.5) { near_boundary = true; break; }
                    }
                if (near_boundary) continue;
                sum += std::fabs(hard.visibility.at(x, y) - soft.visibility.at(x, y));
                ++n;
            }
        CHECK(sum / n <= 0.05);
    }

    SUBCASE("monotone softening: total variation non-increasing in sigma") {
        double prev_tv = 1e300;
        for (double sigma : {1.0, 5.0, 10.0, 20.0}) {
            ShadowMap sm = dcsm(g, mesh, light_cam, sigma, 256);
            double tv = 0;
            for (int y = 0; y + 1 < 128; ++y)
                for (int x = 0; x + 1 < 128; ++x) {
                    tv += std::fabs(sm.visibility.at(x + 1, y) - sm.visibility.at(x, y));
                    tv += std::fabs(sm.visibility.at(x, y + 1) - sm.visibility.at(x, y));
                }
            CHECK(tv <= prev_tv + 1e-9);
            prev_tv = tv;
        }
    }

    SUBCASE("visibility bounded, and 1 where the window sees no blocker") {
        for (double sigma : {1.0, 5.0, 20.0}) {
            LightDepthMap ldm = render_light_depth(mesh, light_cam, 256);
            ShadowMap sm = dcsm(g, mesh, light_cam, sigma, 256);
            const int radius = conv::gaussian_radius(sigma);
            for (int y = 0; y < 128; ++y)
                for (int x = 0; x < 128; ++x) {
                    double v = sm.visibility.at(x, y);
                    CHECK(v >= 0.0);
                    CHECK(v <= 1.0);
                    if (!g.masked(x, y)) continue;
                    Vec3 p = shadow_space_position(x, y, g.depth.at(x, y), 128, g.depth_scale);
                    double tx, ty, d;
                    ldm.project(p, tx, ty, d);
                    int cx = int(std::lround(tx)), cy = int(std::lround(ty));
                    double zmin = 1e300;
                    for (int dy = -radius; dy <= radius; ++dy)
                        for (int dx = -radius; dx <= radius; ++dx) {
                            int xx = std::clamp(cx + dx, 0, 255), yy = std::clamp(cy + dy, 0, 255);
                            zmin = std::fmin(zmin, ldm.depth.at(xx, yy));
                        }
                    if (zmin >= d - kShadowBias + 0.02) CHECK(v >= 0.95);
                }
        }
    }

    SUBCASE("sigma gradient matches finite differences inside a window plateau") {
        // sample pairs chosen so ceil(3 sigma) stays constant; h small
        // enough that FD truncation stays below the 1e-3 bound
        const double h = 0.0025;
        for (double sigma_hi : {3.0, 7.0, 12.0}) {
            double sigma_c = sigma_hi - h;
            ImageScalar grad;
            dcsm(g, mesh, light_cam, sigma_c, 128, kShadowBias, &grad);
            ShadowMap up = dcsm(g, mesh, light_cam, sigma_hi, 128);
            ShadowMap dn = dcsm(g, mesh, light_cam, sigma_hi - 2 * h, 128);
            int checked = 0;
            for (size_t i = 0; i < grad.count(); ++i) {
                double fd = (up.visibility.v[i] - dn.visibility.v[i]) / (2 * h);
                double an = grad.v[i];
                if (std::fabs(an) <= 1e-4) continue;
                // skip pixels where the clamp saturates one of the FD samples
                if (up.visibility.v[i] <= 0.0 || up.visibility.v[i] >= 1.0) continue;
                if (dn.visibility.v[i] <= 0.0 || dn.visibility.v[i] >= 1.0) continue;
                CHECK(rel_err(an, fd) < 1e-3);
                ++checked;
            }
            CAPTURE(sigma_hi);
            CHECK(checked > 50);
        }
    }
}
