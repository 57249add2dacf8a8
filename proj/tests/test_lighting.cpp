#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "arealight/lights.hpp"
#include "testutil.hpp"

#include <random>
#include <set>

using namespace arealight;
using namespace testutil;

TEST_CASE("init_uniform basics") {
    EnvironmentMap env = constant_env(32, 16, Vec3(1.0));

    SUBCASE("16 lights, sigma 10 everywhere") {
        LightSet set = init_uniform(16, env, 10.0, Vec3(0.3));
        CHECK(set.n_lights() == 16);
        for (const AreaLight& l : set.lights) {
            CHECK(l.sigma == 10.0);
            CHECK(length(l.direction) == doctest::Approx(1.0).epsilon(1e-9));
            CHECK(l.intensity.x == 0.3);
        }
    }
    SUBCASE("single light is valid") {
        LightSet set = init_uniform(1, env, 10.0, Vec3(1.0));
        CHECK(set.n_lights() == 1);
        CHECK(length(set.lights[0].direction) == doctest::Approx(1.0));
    }
    SUBCASE("zero lights rejected") { CHECK_THROWS(init_uniform(0, env, 10.0, Vec3(1.0))); }

    SUBCASE("minimum pairwise separation of the 16-point set") {
        LightSet set = init_uniform(16, env, 10.0, Vec3(1.0));
        double max_dot = -2.0;
        for (int i = 0; i < 16; ++i)
            for (int j = i + 1; j < 16; ++j)
                max_dot = std::fmax(max_dot, dot(set.lights[i].direction, set.lights[j].direction));
        CHECK(degrees(std::acos(max_dot)) > 30.0);
        // spread refinement keeps every pair below the repulsion
        // threshold for 16 lights
        CHECK(max_dot <= 0.65);
    }

    SUBCASE("deterministic") {
        LightSet a = init_uniform(16, env, 10.0, Vec3(1.0));
        LightSet b = init_uniform(16, env, 10.0, Vec3(1.0));
        for (int i = 0; i < 16; ++i) {
            CHECK(a.lights[i].direction == b.lights[i].direction);
            CHECK(a.lights[i].intensity == b.lights[i].intensity);
        }
    }

    SUBCASE("counts 8 and 32 stay near-uniform") {
        for (int n : {8, 32}) {
            LightSet set = init_uniform(n, env, 10.0, Vec3(1.0));
            // every direction has a neighbor within a lattice-scale angle
            for (int i = 0; i < n; ++i) {
                double best = -2;
                for (int j = 0; j < n; ++j)
                    if (j != i) best = std::fmax(best, dot(set.lights[i].direction, set.lights[j].direction));
                CHECK(degrees(std::acos(best)) < 90.0);
            }
        }
    }
}

TEST_CASE("default initial intensity scales with mean radiance") {
    EnvironmentMap env = constant_env(32, 16, Vec3(2.0));
    Vec3 i0 = default_initial_intensity(env, 16);
    CHECK(i0.x == doctest::Approx(2.0 * 2.0 * kPi / 16.0).epsilon(1e-6));
}

TEST_CASE("serialize / deserialize") {
    EnvironmentMap env = constant_env(32, 16, Vec3(1.0));

    SUBCASE("bitwise round trip of random sets") {
        std::mt19937 rng(3);
        std::uniform_real_distribution<double> uni(0.01, 5.0);
        std::normal_distribution<double> gauss;
        for (int trial = 0; trial < 20; ++trial) {
            LightSet set;
            int n = 1 + int(uni(rng) * 5);
            for (int i = 0; i < n; ++i) {
                AreaLight l;
                l.intensity = {uni(rng), uni(rng), uni(rng)};
                l.direction = normalize({gauss(rng), gauss(rng), gauss(rng)});
                l.sigma = 0.5 + uni(rng) * 7.0;
                set.lights.push_back(l);
            }
            LightSet back = deserialize(serialize(set));
            REQUIRE(back.n_lights() == n);
            for (int i = 0; i < n; ++i) {
                CHECK(back.lights[i].intensity == set.lights[i].intensity);
                CHECK(back.lights[i].direction == set.lights[i].direction);
                CHECK(back.lights[i].sigma == set.lights[i].sigma);
            }
        }
    }
    SUBCASE("zero-length direction rejected on load") {
        std::string text = R"({"n_lights":1,"lights":[
            {"intensity":[1,1,1],"direction":[0,0,0],"sigma":10}]})";
        CHECK_THROWS(deserialize(text));
    }
    SUBCASE("count passthrough") {
        LightSet set = init_uniform(16, env, 10.0, Vec3(1.0));
        CHECK(deserialize(serialize(set)).n_lights() == 16);
    }
    SUBCASE("malformed text rejected") {
        CHECK_THROWS(deserialize("not json"));
        CHECK_THROWS(deserialize("{\"lights\": 5}"));
        CHECK_THROWS(deserialize(R"({"n_lights":3,"lights":[]})"));
    }
}

TEST_CASE("visualize") {
    EnvironmentMap env = smooth_env(128, 64, 2);

    SUBCASE("light at the forward direction draws at the horizontal center") {
        LightSet set;
        AreaLight l;
        l.direction = {0, 0, -1};
        l.intensity = {5, 0, 0};
        l.sigma = 10;
        set.lights.push_back(l);
        ImageRGB img = visualize(set, env);
        // the marker is pure red at the center, unlike the smooth base
        Vec3 c = img.at(64, 32);
        CHECK(c.x == doctest::Approx(1.0));
        CHECK(c.y == doctest::Approx(0.0));
    }
    SUBCASE("sigma doubling doubles the marker extent") {
        auto marked_width = [&](double sigma) {
            LightSet set;
            AreaLight l;
            l.direction = {0, 0, -1};
            l.intensity = {5, 0, 0};
            l.sigma = sigma;
            set.lights.push_back(l);
            ImageRGB img = visualize(set, env);
            int count = 0;
            for (int x = 0; x < img.width; ++x) {
                Vec3 c = img.at(x, 32);
                if (c.x > 0.99 && c.y < 0.01) ++count;
            }
            return count;
        };
        int w10 = marked_width(10.0), w20 = marked_width(20.0);
        CHECK(w20 == doctest::Approx(2 * w10).epsilon(0.15));
    }
    SUBCASE("16 markers drawn with seam wraparound") {
        LightSet set = init_uniform(16, env, 10.0, Vec3(1.0));
        // move one light onto the seam (longitude 180 = u near 0)
        set.lights[0].direction = normalize(Vec3{0.05, 0.0, 1.0});
        ImageRGB img = visualize(set, env);
        CHECK(img.width == env.width());
        // seam light paints pixels on both borders
        bool left = false, right = false;
        for (int y = 0; y < img.height; ++y) {
            Vec3 cl = img.at(0, y), cr = img.at(img.width - 1, y);
            if (cl.x > 0.9 && cl.y > 0.9 && cl.z > 0.9) left = true;
            if (cr.x > 0.9 && cr.y > 0.9 && cr.z > 0.9) right = true;
        }
        CHECK(left);
        CHECK(right);
    }
}
