#pragma once

#include "arealight/env_map.hpp"
#include "arealight/image.hpp"

#include <string>
#include <vector>

namespace arealight {

// Sigma is measured in shadow-map pixels at the 256x256 reference
// resolution; renderers scale it when rasterizing at other sizes.
constexpr double kSigmaMin = 0.5;
constexpr double kSigmaMax = 40.0;
constexpr int kSigmaReferenceResolution = 256;

/// One area light: RGB intensity, unit direction from the scene toward
/// the light, and the Gaussian standard deviation encoding its area.
struct AreaLight {
    Vec3 intensity{1.0, 1.0, 1.0};
    Vec3 direction{0.0, 0.0, -1.0};
    double sigma = 10.0;

    void validate() const;
};

struct LightSet {
    std::vector<AreaLight> lights;

    int n_lights() const { return int(lights.size()); }
    void validate() const;
};

/// Deterministic near-uniform directions for n points on the sphere:
/// a Fibonacci lattice followed by a bounded hinge-repulsion relaxation
/// that spreads the tightest pairs (keeps every pairwise dot <= ~0.64
/// whenever the count permits).
std::vector<Vec3> uniform_sphere_directions(int n);

/// Step-1 initialization: near-uniform directions, constant sigma, and
/// a constant RGB intensity per light.
LightSet init_uniform(int n_lights, const EnvironmentMap& env, double sigma0, const Vec3& intensity0);

/// Default initial intensity: mean env radiance * 2 pi / n per channel.
Vec3 default_initial_intensity(const EnvironmentMap& env, int n_lights);

/// Lossless JSON round-trip of all seven parameters per light.
std::string serialize(const LightSet& set);
LightSet deserialize(const std::string& text);

void save_lights(const std::string& path, const LightSet& set);
LightSet load_lights(const std::string& path);

/// Tone-mapped env map overlaid with one square per light: centered at
/// the light's direction, side proportional to sigma, filled with the
/// normalized intensity color (drawn with longitude wraparound).
ImageRGB visualize(const LightSet& set, const EnvironmentMap& env);

} // namespace arealight
