#pragma once

#include "arealight/env_map.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>

namespace testutil {

using namespace arealight;

/// Deterministic temp directory for test artifacts.
inline std::string temp_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("arealight_" + name);
    std::filesystem::create_directories(p);
    return p.string();
}

inline EnvironmentMap constant_env(int w, int h, const Vec3& c) {
    ImageRGB img(w, h, c);
    return EnvironmentMap(std::move(img));
}

/// Bright disk of the given angular radius around `center`, dim
/// elsewhere.
inline EnvironmentMap disk_env(int w, int h, const Vec3& center, double radius_deg,
                               double disk_radiance = 10.0, double background = 0.05) {
    ImageRGB img(w, h);
    const double cos_r = std::cos(radians(radius_deg));
    EnvironmentMap tmp = constant_env(w, h, Vec3(0.0));
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            Vec3 dir = tmp.texel_dir(x, y);
            double v = dot(dir, center) >= cos_r ? disk_radiance : background;
            img.at(x, y) = Vec3(v);
        }
    return EnvironmentMap(std::move(img));
}

/// Smooth low-frequency positive map (deterministic).
inline EnvironmentMap smooth_env(int w, int h, int seed = 0) {
    ImageRGB img(w, h);
    EnvironmentMap tmp = constant_env(w, h, Vec3(0.0));
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            Vec3 d = tmp.texel_dir(x, y);
            double a = 0.6 + 0.4 * std::sin(2.1 * d.x + 0.7 * seed) * std::cos(1.3 * d.y);
            double b = 0.5 + 0.5 * std::cos(1.7 * d.z + 0.3 * seed + 1.0);
            double c = 0.4 + 0.3 * std::sin(3.0 * d.y + 2.0 * d.x + seed);
            img.at(x, y) = {std::fabs(a), std::fabs(b), std::fabs(c) + 0.05};
        }
    return EnvironmentMap(std::move(img));
}

/// Sky-like map: bright overhead hemisphere plus a sun disk (seeded).
inline EnvironmentMap sky_env(int w, int h, int seed = 0) {
    std::mt19937 rng(seed * 7919 + 13);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    double lon = uni(rng) * 2.0 * kPi, lat = 0.3 + 0.9 * uni(rng);
    Vec3 sun = {std::cos(lat) * std::sin(lon), std::sin(lat), -std::cos(lat) * std::cos(lon)};
    ImageRGB img(w, h);
    EnvironmentMap tmp = constant_env(w, h, Vec3(0.0));
    const double cos_r = std::cos(radians(10.0));
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            Vec3 d = tmp.texel_dir(x, y);
            double sky = d.y > 0 ? 0.4 + 0.3 * d.y : 0.08;
            Vec3 c = {0.7 * sky, 0.82 * sky, sky};
            if (dot(d, sun) >= cos_r) c += Vec3(18.0, 16.0, 13.0);
            img.at(x, y) = c;
        }
    return EnvironmentMap(std::move(img));
}

inline double rel_err(double got, double want) {
    return std::fabs(got - want) / std::fmax(std::fabs(want), 1e-30);
}

} // namespace testutil
