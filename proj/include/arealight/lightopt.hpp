#pragma once

#include "arealight/env_map.hpp"
#include "arealight/gbuffer.hpp"
#include "arealight/lights.hpp"
#include "arealight/oracle.hpp"

#include <utility>
#include <vector>

namespace arealight {

/// Textbook Adam optimizer state over a flat parameter vector.
struct AdamState {
    std::vector<double> m, v;
    int t = 0;
};

void adam_step(std::vector<double>& params, const std::vector<double>& grads, AdamState& state,
               double lr, double beta1 = 0.5, double beta2 = 0.999, double eps = 1e-8);

/// Cosine-annealing schedule with warm restarts every `cycle` ticks:
/// lr(t) = lr_min + (lr_max - lr_min) (1 + cos(pi (t mod T)/T)) / 2.
double cosine_lr(int iter, double lr_max, double lr_min, int cycle);

struct OptConfig {
    int n_lights = 16;
    int iters_step2 = 1000;
    int iters_step3 = 300;
    double beta1 = 0.5, beta2 = 0.999;
    double lr_max = 1.0, lr_min = 1e-5;
    int cosine_cycle = 20;          // scheduler ticks per cycle; 1 iteration = 1 tick
    double tau = 0.65;              // repulsion hinge threshold
    double repulsion_weight = 1.0;
    std::vector<int> laplacian_kernels = {15, 21, 33};
    // Longitude sweep plus both poles; (lon, lat) in degrees.
    std::vector<std::pair<double, double>> rotations = {
        {0, 0}, {72, 0}, {144, 0}, {216, 0}, {288, 0}, {0, 90}, {0, -90}};
    int shadow_resolution = 256;
    int scene_resolution = 256;
    int env_width = 128, env_height = 64; // optimization-time env downsample
    double sigma0 = -1.0;                 // < 0: 10 scaled to shadow_resolution
    double bias = 0.01;

    /// Small configuration for quick runs and tests.
    static OptConfig desk_scale();
};

struct OptTrace {
    std::vector<double> step2_loss; // loss at the start of each iteration
    std::vector<double> step3_loss;
    bool diverged = false;
    double wall_clock_sec = 0.0;
};

/// Three-step area-light fit to the environment map: uniform init,
/// intensity/direction descent against diffuse+specular oracle renders
/// of all rotations jointly, then sigma descent against the
/// Laplacian-filtered shadowed shading. Deterministic.
std::pair<LightSet, OptTrace> optimize_lights(const EnvironmentMap& env, const OptConfig& cfg);

/// Masked mean-L1 shading losses (diffuse, specular) of the light set
/// against oracle targets. Light directions are taken in the G-buffer's
/// camera frame.
std::pair<double, double> loss_shading(const ImageRGB& target_diff, const ImageRGB& target_spec,
                                       const LightSet& lights_cam, const GBuffer& scene);

/// Mean squared hinge over ordered direction pairs:
/// 1/(N(N-1)) sum_{l != m} max(0, <d_l, d_m> - tau)^2.
double loss_repulsion(const LightSet& set, double tau);

/// Full Step-2 objective over the flat parameter vector
/// [intensities (3n), raw world directions (3n)]: the masked mean-L1
/// diffuse and specular losses summed over all rotations, plus the
/// weighted repulsion hinge. cam_rotations[r] maps a world direction
/// into the scene camera frame for rotation r. Exposed so the analytic
/// gradient can be checked against finite differences directly.
double shading_fit_objective(const GBuffer& scene, const std::vector<ReferenceTargets>& targets,
                             const std::vector<Mat3>& cam_rotations, double tau,
                             double repulsion_weight, int n_lights,
                             const std::vector<double>& params, std::vector<double>* grads);

/// Sum over kernel sizes of mean-L1 between Laplacian-of-Gaussian
/// responses of the target and of sum_l V_l * S_l (shading detached;
/// V from DCSM). Optional analytic d loss / d sigma_l per light.
/// sigma values are taken in pixels of shadow_resolution.
double loss_laplacian(const ImageRGB& target_shadowed_diff, const LightSet& lights_cam,
                      const GBuffer& scene, const std::vector<int>& kernel_sizes,
                      int shadow_resolution, double bias,
                      std::vector<double>* dloss_dsigma = nullptr);

/// Laplacian-of-Gaussian response, sigma = (k-1)/6 for window k
/// (separable, clamp-to-edge, exactly zero on constants).
ImageRGB log_filter(const ImageRGB& img, int kernel_size);

/// Rotates every light direction by M (e.g. into a camera frame).
LightSet transform_directions(const LightSet& set, const Mat3& M);

} // namespace arealight
