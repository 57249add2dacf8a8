#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "arealight/oracle.hpp"
#include "testutil.hpp"

using namespace arealight;
using namespace testutil;

namespace {

// Pixel whose camera ray passes through the given world point.
void pixel_of_world(const SphereScene& scene, const Vec3& p, int& x, int& y) {
    double a = dot(p, scene.right());
    double b = dot(p, scene.up());
    const double extent = 2 * SphereScene::kPlaneHalfExtent;
    x = int((a / extent + 0.5) * scene.resolution);
    y = int((0.5 - b / extent) * scene.resolution);
}

} // namespace

TEST_CASE("render_gbuffer") {
    SphereScene scene{128};
    GBuffer g = render_gbuffer(scene);
    const double s = std::sqrt(0.5);

    SUBCASE("depth normalized to exactly [0, 1]") {
        double lo = 1e300, hi = -1e300;
        for (int y = 0; y < 128; ++y)
            for (int x = 0; x < 128; ++x)
                if (g.masked(x, y)) {
                    lo = std::fmin(lo, g.depth.at(x, y));
                    hi = std::fmax(hi, g.depth.at(x, y));
                }
        CHECK(lo == 0.0);
        CHECK(hi == 1.0);
    }
    SUBCASE("plane normal is constant (0, s, s) in camera space") {
        int x, y;
        pixel_of_world(scene, {3.0, 0, 3.0}, x, y);
        REQUIRE(g.masked(x, y));
        Vec3 n = g.normal.at(x, y);
        CHECK(n.x == doctest::Approx(0.0).epsilon(1e-9));
        CHECK(n.y == doctest::Approx(s).epsilon(1e-9));
        CHECK(n.z == doctest::Approx(s).epsilon(1e-9));
    }
    SUBCASE("hemisphere top points up in camera space") {
        int x, y;
        pixel_of_world(scene, {0, 1.0, 0}, x, y);
        REQUIRE(g.masked(x, y));
        Vec3 n = g.normal.at(x, y);
        CHECK(std::fabs(n.x) < 0.1);
        CHECK(n.y == doctest::Approx(s).epsilon(0.05));
        CHECK(n.z == doctest::Approx(s).epsilon(0.05));
    }
    SUBCASE("materials and depth scale") {
        int x, y;
        pixel_of_world(scene, {2.0, 0, -2.0}, x, y);
        CHECK(g.albedo.at(x, y).x == 1.0);
        CHECK(g.specular.at(x, y) == 0.5);
        CHECK(g.roughness.at(x, y) == 0.5);
        // depth range of the 45-degree plane is extent * sin(45)
        CHECK(g.depth_scale == doctest::Approx(std::sqrt(0.5)).epsilon(0.05));
        g.validate();
    }
    SUBCASE("resolution below 16 rejected") {
        SphereScene tiny{8};
        CHECK_THROWS(render_gbuffer(tiny));
    }
}

TEST_CASE("render_reference") {
    SphereScene scene{96};

    SUBCASE("constant white env: diffuse on the plane integrates to 1") {
        EnvironmentMap env = constant_env(64, 32, Vec3(1.0));
        ImageRGB img = render_reference(scene, env, ReferenceComponent::Diffuse);
        int x, y;
        pixel_of_world(scene, {3.2, 0, 3.2}, x, y); // far from the hemisphere
        CHECK(img.at(x, y).x == doctest::Approx(1.0).epsilon(0.02));
        CHECK(img.at(x, y).y == doctest::Approx(1.0).epsilon(0.02));
    }
    SUBCASE("single-texel env: pixel ratios follow the cosine term") {
        ImageRGB e(32, 16, Vec3(0.0));
        e.at(10, 4) = Vec3(50.0);
        EnvironmentMap env(std::move(e));
        Vec3 w0 = env.texel_dir(10, 4);
        ImageRGB img = render_reference(scene, env, ReferenceComponent::Diffuse);
        GBuffer g = render_gbuffer(scene);
        const Mat3 M = scene.world_to_camera();
        Vec3 w0_cam = M * w0;
        // compare two plane-vs-dome pixels
        int x1, y1, x2, y2;
        pixel_of_world(scene, {2.5, 0, 2.5}, x1, y1);
        pixel_of_world(scene, {0.3, std::sqrt(1 - 0.18), -0.3}, x2, y2);
        REQUIRE(g.masked(x1, y1));
        REQUIRE(g.masked(x2, y2));
        double c1 = std::fmax(0.0, dot(g.normal.at(x1, y1), w0_cam));
        double c2 = std::fmax(0.0, dot(g.normal.at(x2, y2), w0_cam));
        REQUIRE(c2 > 0.05);
        CHECK(img.at(x1, y1).x / img.at(x2, y2).x == doctest::Approx(c1 / c2).epsilon(1e-6));
    }
    SUBCASE("single texel behind the hemisphere: shadowed pixel is zero") {
        // light from azimuth +x at 45 degrees; p = (-1.2, 0, 0) is occluded
        ImageRGB e(64, 32, Vec3(0.0));
        EnvironmentMap probe = constant_env(64, 32, Vec3(0));
        Vec3 w0 = normalize(Vec3{1, 1, 0});
        double u, v;
        dir_to_equirect(w0, u, v);
        e.at(int(u * 64), int(v * 32)) = Vec3(50.0);
        EnvironmentMap env(std::move(e));
        ImageRGB img = render_reference(scene, env, ReferenceComponent::ShadowedDiffuse);
        int x, y;
        pixel_of_world(scene, {-1.2, 0, 0}, x, y);
        CHECK(img.at(x, y).x == 0.0);
        // while the unshadowed diffuse there is positive
        ImageRGB diff = render_reference(scene, env, ReferenceComponent::Diffuse);
        CHECK(diff.at(x, y).x > 0.0);
    }
    SUBCASE("linear in the env radiance") {
        EnvironmentMap env = smooth_env(32, 16, 4);
        ImageRGB doubled_env(32, 16);
        for (size_t i = 0; i < doubled_env.count(); ++i) doubled_env.v[i] = env.radiance.v[i] * 2.0;
        EnvironmentMap env2(std::move(doubled_env));
        ImageRGB a = render_reference(scene, env, ReferenceComponent::Specular);
        ImageRGB b = render_reference(scene, env2, ReferenceComponent::Specular);
        for (size_t i = 0; i < a.count(); ++i) CHECK(b.v[i].x == doctest::Approx(2.0 * a.v[i].x).epsilon(1e-12));
    }
    SUBCASE("shadowed diffuse never exceeds diffuse") {
        EnvironmentMap env = smooth_env(32, 16, 5);
        ImageRGB d = render_reference(scene, env, ReferenceComponent::Diffuse);
        ImageRGB sd = render_reference(scene, env, ReferenceComponent::ShadowedDiffuse);
        for (size_t i = 0; i < d.count(); ++i) CHECK(sd.v[i].x <= d.v[i].x + 1e-12);
    }
    SUBCASE("rotation of the map matches rotating the directions") {
        SphereScene small{64};
        EnvironmentMap env = smooth_env(32, 16, 6);
        const double lon = 72.0;
        ImageRGB a = render_reference(small, rotate_env(env, lon, 0), ReferenceComponent::Diffuse);
        // brute force: original texels, rotated directions
        const Mat3 R = env_rotation(lon, 0);
        ImageRGB b(64, 64);
        for (int y = 0; y < 64; ++y)
            for (int x = 0; x < 64; ++x) {
                SceneHit hit = trace_pixel(small, x, y);
                if (!hit.hit) continue;
                Vec3 acc(0.0);
                for (int ty = 0; ty < 16; ++ty)
                    for (int tx = 0; tx < 32; ++tx) {
                        Vec3 w = R * env.texel_dir(tx, ty);
                        double nw = dot(hit.normal, w);
                        if (nw <= 0) continue;
                        acc += env.texel(tx, ty) * (env.texel_solid_angle(ty) / kPi * nw);
                    }
                b.at(x, y) = acc;
            }
        double err = 0;
        size_t n = 0;
        for (size_t i = 0; i < a.count(); ++i) {
            if (b.v[i].x == 0.0 && a.v[i].x == 0.0) continue;
            err += std::fabs(a.v[i].x - b.v[i].x);
            ++n;
        }
        CHECK(err / n < 1e-3); // bilinear map resampling tolerance
    }
}

TEST_CASE("raycast_visibility") {
    SphereScene scene{256};

    SUBCASE("straight up outside the shadow footprint is lit") {
        ShadowMap sm = raycast_visibility(scene, {0, 1, 0});
        int x, y;
        pixel_of_world(scene, {2.0, 0, 2.0}, x, y);
        CHECK(sm.visibility.at(x, y) == 1.0);
    }
    SUBCASE("dome surface is lit from above, plane under a side light is not") {
        ShadowMap up = raycast_visibility(scene, {0, 1, 0});
        int x, y;
        pixel_of_world(scene, {0.5, std::sqrt(0.75), 0}, x, y); // dome above r = 0.5
        CHECK(up.visibility.at(x, y) == 1.0);
        // side-ish light: plane point on the far side is occluded
        Vec3 w = normalize(Vec3{1, 1, 0});
        ShadowMap side = raycast_visibility(scene, w);
        pixel_of_world(scene, {-1.2, 0, 0}, x, y);
        CHECK(side.visibility.at(x, y) == 0.0);
        // and the dome's backside (n.w < 0) is dark
        pixel_of_world(scene, {-0.9, std::sqrt(1 - 0.81), 0}, x, y);
        CHECK(side.visibility.at(x, y) == 0.0);
    }
    SUBCASE("shadow area at elevation 45 matches the analytic ellipse band") {
        // light behind the scene so the shadow falls toward the camera
        // and no part of it hides behind the dome
        Vec3 w = normalize(Vec3{0, 1.0, -1.0});
        ShadowMap sm = raycast_visibility(scene, w);
        GBuffer g = render_gbuffer(scene);
        // pixel footprint on the 45-degree plane is foreshortened by
        // 1/cos(45) relative to the image plane
        double pixel_area = sqr(8.0 / scene.resolution) * std::sqrt(2.0);
        double area = 0.0;
        for (int y = 0; y < scene.resolution; ++y)
            for (int x = 0; x < scene.resolution; ++x) {
                if (!g.masked(x, y)) continue;
                SceneHit hit = trace_pixel(scene, x, y);
                if (hit.on_sphere) continue;
                if (sm.visibility.at(x, y) == 0.0) area += pixel_area;
            }
        // visible plane shadow of the unit hemisphere:
        // (pi/2)(1/sin(elev) - 1)
        double analytic = kPi / 2.0 * (std::sqrt(2.0) - 1.0);
        CHECK(area == doctest::Approx(analytic).epsilon(0.03));
    }
}
