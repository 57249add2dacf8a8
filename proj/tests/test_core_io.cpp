#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "arealight/gbuffer.hpp"
#include "arealight/image_io.hpp"
#include "testutil.hpp"

#include <random>

using namespace arealight;
using namespace testutil;

TEST_CASE("load_env_map: constant white and dimension passthrough") {
    std::string dir = temp_dir("core_io");
    {
        ImageRGB img(64, 32, Vec3(1.0));
        save_hdr(dir + "/white.hdr", img);
        EnvironmentMap env = load_env_map(dir + "/white.hdr");
        CHECK(env.width() == 64);
        CHECK(env.height() == 32);
        for (const Vec3& t : env.radiance.v) {
            CHECK(t.x == doctest::Approx(1.0).epsilon(0.01));
            CHECK(t.y == doctest::Approx(1.0).epsilon(0.01));
            CHECK(t.z == doctest::Approx(1.0).epsilon(0.01));
        }
    }
    {
        ImageRGB img(128, 64, Vec3(0.25));
        save_pfm(dir + "/q.pfm", img);
        EnvironmentMap env = load_env_map(dir + "/q.pfm");
        CHECK(env.width() == 128);
        CHECK(env.height() == 64);
    }
    {
        ImageRGB img(100, 60, Vec3(1.0));
        save_pfm(dir + "/bad.pfm", img);
        CHECK_THROWS(load_env_map(dir + "/bad.pfm"));
    }
    CHECK_THROWS(load_env_map(dir + "/missing.hdr"));
}

TEST_CASE("format round trips within format precision") {
    std::string dir = temp_dir("core_io");
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> uni(0.0, 4.0);
    ImageRGB img(37, 23);
    for (Vec3& p : img.v) p = {uni(rng), uni(rng), uni(rng)};

    SUBCASE("pfm: exact at float precision") {
        save_pfm(dir + "/r.pfm", img);
        ImageRGB back = load_pfm(dir + "/r.pfm");
        REQUIRE(back.same_size(img));
        for (size_t i = 0; i < img.count(); ++i)
            CHECK(back.v[i].x == doctest::Approx(img.v[i].x).epsilon(1e-7));
    }
    SUBCASE("exr: exact at float precision") {
        save_exr(dir + "/r.exr", img);
        ImageRGB back = load_exr(dir + "/r.exr");
        REQUIRE(back.same_size(img));
        for (size_t i = 0; i < img.count(); ++i) {
            CHECK(back.v[i].x == doctest::Approx(img.v[i].x).epsilon(1e-7));
            CHECK(back.v[i].z == doctest::Approx(img.v[i].z).epsilon(1e-7));
        }
    }
    SUBCASE("hdr: shared-exponent precision") {
        save_hdr(dir + "/r.hdr", img);
        ImageRGB back = load_hdr(dir + "/r.hdr");
        REQUIRE(back.same_size(img));
        for (size_t i = 0; i < img.count(); ++i) {
            double m = max_component(img.v[i]);
            CHECK(std::fabs(back.v[i].x - img.v[i].x) <= m / 128.0 + 1e-9);
            CHECK(std::fabs(back.v[i].y - img.v[i].y) <= m / 128.0 + 1e-9);
        }
    }
    SUBCASE("png: 8-bit sRGB") {
        ImageRGB ldr(19, 11);
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        for (Vec3& p : ldr.v) p = {u01(rng), u01(rng), u01(rng)};
        save_png(dir + "/r.png", ldr);
        ImageRGB back = load_png(dir + "/r.png");
        for (size_t i = 0; i < ldr.count(); ++i) {
            // error bounded by half an 8-bit step through the transfer
            CHECK(std::fabs(linear_to_srgb(back.v[i].y) - linear_to_srgb(ldr.v[i].y)) <= 0.5 / 255 + 1e-9);
        }
    }
    SUBCASE("png 16-bit grayscale: depth maps") {
        ImageScalar d(31, 17);
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        for (double& v : d.v) v = u01(rng);
        save_png_gray16(dir + "/d.png", d);
        ImageScalar back = load_png_gray16(dir + "/d.png");
        for (size_t i = 0; i < d.count(); ++i)
            CHECK(std::fabs(back.v[i] - d.v[i]) <= 0.5 / 65535 + 1e-12);
    }
}

TEST_CASE("equirect conventions") {
    double u, v;
    dir_to_equirect({0, 1, 0}, u, v);
    CHECK(v == doctest::Approx(0.0));     // zenith row
    dir_to_equirect({0, 0, -1}, u, v);
    CHECK(u == doctest::Approx(0.5));     // forward at image center
    CHECK(v == doctest::Approx(0.5));
    CHECK_THROWS(dir_to_equirect({0, 0, 0}, u, v));

    SUBCASE("identity on texel centers exactly") {
        const int W = 64, H = 32;
        for (int y = 0; y < H; y += 5)
            for (int x = 0; x < W; x += 7) {
                double uu = (x + 0.5) / W, vv = (y + 0.5) / H;
                Vec3 d = equirect_to_dir(uu, vv);
                double u2, v2;
                dir_to_equirect(d, u2, v2);
                CHECK(u2 == doctest::Approx(uu).epsilon(1e-12));
                CHECK(v2 == doctest::Approx(vv).epsilon(1e-12));
            }
    }
    SUBCASE("round trip with pixel rounding stays under a texel diagonal") {
        const int W = 64, H = 32;
        const double texel_diag = std::sqrt(sqr(2 * kPi / W) + sqr(kPi / H));
        std::mt19937 rng(11);
        std::normal_distribution<double> gauss;
        double worst = 0.0;
        for (int i = 0; i < 1000; ++i) {
            Vec3 d = normalize({gauss(rng), gauss(rng), gauss(rng)});
            double uu, vv;
            dir_to_equirect(d, uu, vv);
            int tx = std::min(W - 1, int(uu * W)), ty = std::min(H - 1, int(vv * H));
            Vec3 back = equirect_to_dir((tx + 0.5) / W, (ty + 0.5) / H);
            worst = std::fmax(worst, std::acos(std::clamp(dot(d, back), -1.0, 1.0)));
        }
        CHECK(worst < texel_diag);
    }
}

TEST_CASE("rotate_env") {
    EnvironmentMap env = smooth_env(64, 32, 3);

    SUBCASE("identity and periodicity") {
        EnvironmentMap r0 = rotate_env(env, 0, 0);
        EnvironmentMap r360 = rotate_env(env, 360, 0);
        for (size_t i = 0; i < env.radiance.count(); ++i) {
            CHECK(std::fabs(r0.radiance.v[i].x - env.radiance.v[i].x) <= 1e-6);
            CHECK(std::fabs(r360.radiance.v[i].x - env.radiance.v[i].x) <= 1e-6);
        }
    }
    SUBCASE("single bright texel moves by the longitude rotation") {
        ImageRGB img(64, 32, Vec3(0.0));
        img.at(32, 16) = Vec3(100.0);
        EnvironmentMap point(std::move(img));
        EnvironmentMap rot = rotate_env(point, 72, 0);
        int best = 0;
        double best_v = -1;
        for (size_t i = 0; i < rot.radiance.count(); ++i)
            if (rot.radiance.v[i].x > best_v) {
                best_v = rot.radiance.v[i].x;
                best = int(i);
            }
        int bx = best % 64, by = best / 64;
        double src_lon = (32 + 0.5) / 64.0 * 360.0;
        double got_lon = (bx + 0.5) / 64.0 * 360.0;
        double dlon = std::fmod(got_lon - src_lon + 540.0, 360.0) - 180.0;
        CHECK(std::fabs(dlon - 72.0) <= 360.0 / 64.0); // within one texel
        CHECK(by == 16);
    }
    SUBCASE("total radiance preserved within 1% for smooth maps") {
        EnvironmentMap rot = rotate_env(env, 72, 35);
        Vec3 a = env.mean_radiance(), b = rot.mean_radiance();
        CHECK(b.x == doctest::Approx(a.x).epsilon(0.01));
        CHECK(b.y == doctest::Approx(a.y).epsilon(0.01));
        CHECK(b.z == doctest::Approx(a.z).epsilon(0.01));
    }
    SUBCASE("pole rotation lifts the forward point to the zenith") {
        ImageRGB img(64, 32, Vec3(0.0));
        img.at(32, 16) = Vec3(100.0);
        EnvironmentMap point(std::move(img));
        EnvironmentMap rot = rotate_env(point, 0, 90);
        double top = 0;
        for (int x = 0; x < 64; ++x) top = std::fmax(top, rot.radiance.at(x, 0).x);
        CHECK(top > 1.0);
    }
}

TEST_CASE("gbuffer directory round trip") {
    std::string dir = temp_dir("gbuf_io");
    GBuffer g;
    const int n = 24;
    g.depth = ImageScalar(n, n, 0.5);
    g.normal = ImageRGB(n, n, Vec3(0, 0, 1));
    g.albedo = ImageRGB(n, n, Vec3(0.8, 0.5, 0.3));
    g.specular = ImageScalar(n, n, 0.5);
    g.roughness = ImageScalar(n, n, 0.4);
    g.mask = ImageScalar(n, n, 1.0);
    g.depth_scale = 0.7071;
    save_gbuffer(dir, g);
    GBuffer back = load_gbuffer(dir);
    CHECK(back.width() == n);
    CHECK(back.depth_scale == doctest::Approx(0.7071));
    CHECK(back.albedo.at(3, 4).x == doctest::Approx(0.8).epsilon(1e-6));
    CHECK(back.normal.at(5, 5).z == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("downsample_env preserves mean radiance") {
    EnvironmentMap env = smooth_env(128, 64, 1);
    EnvironmentMap ds = downsample_env(env, 32, 16);
    CHECK(ds.width() == 32);
    Vec3 a = env.mean_radiance(), b = ds.mean_radiance();
    CHECK(b.x == doctest::Approx(a.x).epsilon(0.02));
}
