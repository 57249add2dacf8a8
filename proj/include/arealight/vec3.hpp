#pragma once

#include <cmath>
#include <cstdlib>

namespace arealight {

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec3() = default;
    Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}
    explicit Vec3(double s) : x(s), y(s), z(s) {}

    double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
    double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }

    Vec3 operator-() const { return {-x, -y, -z}; }
    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    Vec3 operator*(const Vec3& o) const { return {x * o.x, y * o.y, z * o.z}; }
    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
    Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }
    bool operator==(const Vec3& o) const { return x == o.x && y == o.y && z == o.z; }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline double length_squared(const Vec3& v) { return dot(v, v); }
inline double length(const Vec3& v) { return std::sqrt(dot(v, v)); }

inline Vec3 normalize(const Vec3& v) {
    double len = length(v);
    return v / len;
}

inline double max_component(const Vec3& v) { return std::fmax(v.x, std::fmax(v.y, v.z)); }
inline double luminance(const Vec3& c) { return 0.2126 * c.x + 0.7152 * c.y + 0.0722 * c.z; }

inline bool is_finite(const Vec3& v) {
    return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z);
}

/// Row-major 3x3 matrix, used for environment/camera rotations.
struct Mat3 {
    double m[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};

    static Mat3 identity() { return {}; }

    static Mat3 from_rows(const Vec3& r0, const Vec3& r1, const Vec3& r2) {
        Mat3 out;
        out.m[0][0] = r0.x; out.m[0][1] = r0.y; out.m[0][2] = r0.z;
        out.m[1][0] = r1.x; out.m[1][1] = r1.y; out.m[1][2] = r1.z;
        out.m[2][0] = r2.x; out.m[2][1] = r2.y; out.m[2][2] = r2.z;
        return out;
    }

    // Right-handed rotation by `rad` about +x.
    static Mat3 rotation_x(double rad) {
        double c = std::cos(rad), s = std::sin(rad);
        return from_rows({1, 0, 0}, {0, c, -s}, {0, s, c});
    }

    // Right-handed rotation by `rad` about +y.
    static Mat3 rotation_y(double rad) {
        double c = std::cos(rad), s = std::sin(rad);
        return from_rows({c, 0, s}, {0, 1, 0}, {-s, 0, c});
    }

    Vec3 operator*(const Vec3& v) const {
        return {m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
                m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
                m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z};
    }

    Mat3 operator*(const Mat3& o) const {
        Mat3 out;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                out.m[i][j] = 0.0;
                for (int k = 0; k < 3; ++k) out.m[i][j] += m[i][k] * o.m[k][j];
            }
        return out;
    }

    Mat3 transposed() const {
        Mat3 out;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) out.m[i][j] = m[j][i];
        return out;
    }
};

constexpr double kPi = 3.14159265358979323846;

inline double radians(double deg) { return deg * (kPi / 180.0); }
inline double degrees(double rad) { return rad * (180.0 / kPi); }
inline double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }
inline double sqr(double v) { return v * v; }

} // namespace arealight
