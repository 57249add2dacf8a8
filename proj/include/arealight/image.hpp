#pragma once

#include "arealight/vec3.hpp"

#include <cassert>
#include <stdexcept>
#include <vector>

namespace arealight {

/// Single-channel image, row-major, linear values.
struct ImageScalar {
    int width = 0, height = 0;
    std::vector<double> v;

    ImageScalar() = default;
    ImageScalar(int w, int h, double fill = 0.0) : width(w), height(h), v(size_t(w) * h, fill) {}

    size_t count() const { return v.size(); }
    double& at(int x, int y) { return v[size_t(y) * width + x]; }
    double at(int x, int y) const { return v[size_t(y) * width + x]; }
    bool same_size(const ImageScalar& o) const { return width == o.width && height == o.height; }
};

/// Three-channel image, row-major, linear RGB.
struct ImageRGB {
    int width = 0, height = 0;
    std::vector<Vec3> v;

    ImageRGB() = default;
    ImageRGB(int w, int h, const Vec3& fill = Vec3(0.0)) : width(w), height(h), v(size_t(w) * h, fill) {}

    size_t count() const { return v.size(); }
    Vec3& at(int x, int y) { return v[size_t(y) * width + x]; }
    const Vec3& at(int x, int y) const { return v[size_t(y) * width + x]; }
    bool same_size(const ImageRGB& o) const { return width == o.width && height == o.height; }
    bool same_size(const ImageScalar& o) const { return width == o.width && height == o.height; }
};

inline void require_same_size(const ImageRGB& a, const ImageRGB& b, const char* what) {
    if (!a.same_size(b)) throw std::invalid_argument(std::string(what) + ": resolution mismatch");
}

inline void require_same_size(const ImageScalar& a, const ImageScalar& b, const char* what) {
    if (!a.same_size(b)) throw std::invalid_argument(std::string(what) + ": resolution mismatch");
}

// sRGB transfer functions. All internal pixel math is linear; these are
// applied only at 8-bit PNG boundaries.
inline double linear_to_srgb(double u) {
    u = clamp01(u);
    return u <= 0.0031308 ? 12.92 * u : 1.055 * std::pow(u, 1.0 / 2.4) - 0.055;
}

inline double srgb_to_linear(double u) {
    return u <= 0.04045 ? u / 12.92 : std::pow((u + 0.055) / 1.055, 2.4);
}

} // namespace arealight
