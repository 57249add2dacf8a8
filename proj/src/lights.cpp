#include "arealight/lights.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace arealight {

using nlohmann::json;

void AreaLight::validate() const {
    if (!is_finite(intensity) || !is_finite(direction) || !std::isfinite(sigma))
        throw std::invalid_argument("light parameters must be finite");
    if (intensity.x < 0 || intensity.y < 0 || intensity.z < 0)
        throw std::invalid_argument("light intensity must be non-negative");
    if (std::fabs(length(direction) - 1.0) > 1e-6)
        throw std::invalid_argument("light direction must be unit length");
    if (sigma < kSigmaMin || sigma > kSigmaMax)
        throw std::invalid_argument("light sigma out of bounds");
}

void LightSet::validate() const {
    if (lights.empty()) throw std::invalid_argument("light set is empty");
    for (const AreaLight& l : lights) l.validate();
}

namespace {

std::vector<Vec3> fibonacci_sphere(int n) {
    const double golden_angle = kPi * (3.0 - std::sqrt(5.0));
    std::vector<Vec3> pts(n);
    for (int i = 0; i < n; ++i) {
        double y = 1.0 - (2.0 * i + 1.0) / n;
        double r = std::sqrt(std::fmax(0.0, 1.0 - y * y));
        double theta = golden_angle * i;
        pts[i] = {r * std::cos(theta), y, r * std::sin(theta)};
    }
    return pts;
}

double max_pairwise_dot(const std::vector<Vec3>& pts) {
    double mx = -2.0;
    for (size_t i = 0; i < pts.size(); ++i)
        for (size_t j = i + 1; j < pts.size(); ++j) mx = std::fmax(mx, dot(pts[i], pts[j]));
    return mx;
}

// Hinge-repulsion relaxation: pairs with dot above `target` push each
// other apart (displacement capped per step, points renormalized).
// Keeps the best configuration seen, so infeasible counts (dense sets
// where `target` cannot be reached) never end up worse than the plain
// lattice.
std::vector<Vec3> spread_directions(std::vector<Vec3> pts, double target, int max_iters, double step, double cap) {
    const int n = int(pts.size());
    std::vector<Vec3> best = pts;
    double best_mx = max_pairwise_dot(pts);
    std::vector<Vec3> grad(n);
    for (int it = 0; it < max_iters && best_mx > target; ++it) {
        for (Vec3& g : grad) g = Vec3(0.0);
        for (int i = 0; i < n; ++i) {
            for (int j = i + 1; j < n; ++j) {
                double d = dot(pts[i], pts[j]);
                if (d > target) {
                    double w = 2.0 * (d - target);
                    grad[i] -= pts[j] * w;
                    grad[j] -= pts[i] * w;
                }
            }
        }
        for (int i = 0; i < n; ++i) {
            double glen = length(grad[i]);
            if (glen == 0.0) continue;
            double s = std::fmin(step * glen, cap) / glen;
            pts[i] = normalize(pts[i] + grad[i] * s);
        }
        double mx = max_pairwise_dot(pts);
        if (mx < best_mx) {
            best_mx = mx;
            best = pts;
        }
    }
    return best;
}

} // namespace

std::vector<Vec3> uniform_sphere_directions(int n) {
    if (n < 1) throw std::invalid_argument("need at least one direction");
    std::vector<Vec3> pts = fibonacci_sphere(n);
    if (n >= 2) pts = spread_directions(std::move(pts), 0.64, 4000, 0.01, 0.02);
    return pts;
}

LightSet init_uniform(int n_lights, const EnvironmentMap& env, double sigma0, const Vec3& intensity0) {
    (void)env; // directions do not depend on map content
    if (n_lights < 1) throw std::invalid_argument("n_lights must be >= 1");
    LightSet set;
    set.lights.reserve(n_lights);
    for (const Vec3& dir : uniform_sphere_directions(n_lights)) {
        AreaLight l;
        l.intensity = intensity0;
        l.direction = dir;
        l.sigma = sigma0;
        set.lights.push_back(l);
    }
    set.validate();
    return set;
}

Vec3 default_initial_intensity(const EnvironmentMap& env, int n_lights) {
    return env.mean_radiance() * (2.0 * kPi / n_lights);
}

std::string serialize(const LightSet& set) {
    json j;
    j["n_lights"] = set.n_lights();
    json arr = json::array();
    for (const AreaLight& l : set.lights) {
        arr.push_back({{"intensity", {l.intensity.x, l.intensity.y, l.intensity.z}},
                       {"direction", {l.direction.x, l.direction.y, l.direction.z}},
                       {"sigma", l.sigma}});
    }
    j["lights"] = std::move(arr);
    return j.dump(2);
}

LightSet deserialize(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw std::runtime_error(std::string("malformed light-set JSON: ") + e.what());
    }
    if (!j.contains("lights") || !j["lights"].is_array())
        throw std::runtime_error("light-set JSON missing 'lights' array");
    LightSet set;
    for (const json& jl : j["lights"]) {
        auto vec = [&](const char* key) {
            const json& a = jl.at(key);
            if (!a.is_array() || a.size() != 3) throw std::runtime_error("light-set JSON: bad vector");
            return Vec3(a[0].get<double>(), a[1].get<double>(), a[2].get<double>());
        };
        AreaLight l;
        l.intensity = vec("intensity");
        l.direction = vec("direction");
        l.sigma = jl.at("sigma").get<double>();
        set.lights.push_back(l);
    }
    if (j.contains("n_lights") && j["n_lights"].get<int>() != set.n_lights())
        throw std::runtime_error("light-set JSON: n_lights disagrees with array length");
    set.validate();
    return set;
}

void save_lights(const std::string& path, const LightSet& set) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << serialize(set) << "\n";
}

LightSet load_lights(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return deserialize(ss.str());
}

ImageRGB visualize(const LightSet& set, const EnvironmentMap& env) {
    const int w = env.width(), h = env.height();
    ImageRGB out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const Vec3& c = env.texel(x, y);
            out.at(x, y) = {c.x / (1.0 + c.x), c.y / (1.0 + c.y), c.z / (1.0 + c.z)};
        }

    double max_lum = 0.0;
    for (const AreaLight& l : set.lights) max_lum = std::fmax(max_lum, luminance(l.intensity));
    if (max_lum <= 0.0) max_lum = 1.0;

    for (const AreaLight& l : set.lights) {
        double u, v;
        dir_to_equirect(l.direction, u, v);
        int cx = int(u * w), cy = int(v * h);
        // Side proportional to sigma: sigma/reference-resolution of the
        // map width, doubled so sigma = 10 reads clearly.
        int half = std::max(1, int(std::lround(l.sigma / kSigmaReferenceResolution * w)));
        Vec3 fill = l.intensity / max_lum;
        fill = {clamp01(fill.x), clamp01(fill.y), clamp01(fill.z)};
        for (int dy = -half; dy <= half; ++dy) {
            int yy = cy + dy;
            if (yy < 0 || yy >= h) continue;
            for (int dx = -half; dx <= half; ++dx) {
                int xx = ((cx + dx) % w + w) % w; // wrap longitude seam
                out.at(xx, yy) = fill;
            }
        }
    }
    return out;
}

} // namespace arealight
