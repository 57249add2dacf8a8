#include "arealight/env_map.hpp"

#include "arealight/parallel.hpp"

#include <algorithm>
#include <stdexcept>

namespace arealight {

EnvironmentMap::EnvironmentMap(ImageRGB img) : radiance(std::move(img)) {
    if (radiance.width != 2 * radiance.height || radiance.height < 1)
        throw std::invalid_argument("environment map must be 2:1 equirectangular");
    for (Vec3& t : radiance.v) {
        if (!is_finite(t)) throw std::invalid_argument("environment map contains non-finite radiance");
        t.x = std::fmax(t.x, 0.0);
        t.y = std::fmax(t.y, 0.0);
        t.z = std::fmax(t.z, 0.0);
    }
}

void dir_to_equirect(const Vec3& dir, double& u, double& v) {
    if (length_squared(dir) == 0.0) throw std::invalid_argument("zero-length direction");
    u = (std::atan2(dir.x, -dir.z) + kPi) / (2.0 * kPi);
    if (u >= 1.0) u -= 1.0;
    double y = std::clamp(dir.y, -1.0, 1.0);
    v = (kPi / 2.0 - std::asin(y)) / kPi;
}

Vec3 equirect_to_dir(double u, double v) {
    double phi = 2.0 * kPi * u - kPi;       // atan2(x, -z)
    double lat = kPi / 2.0 - kPi * v;       // +pi/2 at v=0 (zenith)
    double cl = std::cos(lat);
    return {cl * std::sin(phi), std::sin(lat), -cl * std::cos(phi)};
}

Vec3 EnvironmentMap::sample(double u, double v) const {
    const int w = width(), h = height();
    u -= std::floor(u); // longitude wraps
    double fx = u * w - 0.5;
    double fy = std::clamp(v, 0.0, 1.0) * h - 0.5;
    int x0 = int(std::floor(fx)), y0 = int(std::floor(fy));
    double tx = fx - x0, ty = fy - y0;
    int x1 = x0 + 1, y1 = y0 + 1;
    x0 = (x0 % w + w) % w;
    x1 = (x1 % w + w) % w;
    y0 = std::clamp(y0, 0, h - 1); // latitude clamps
    y1 = std::clamp(y1, 0, h - 1);
    const Vec3& c00 = radiance.at(x0, y0);
    const Vec3& c10 = radiance.at(x1, y0);
    const Vec3& c01 = radiance.at(x0, y1);
    const Vec3& c11 = radiance.at(x1, y1);
    return (c00 * (1 - tx) + c10 * tx) * (1 - ty) + (c01 * (1 - tx) + c11 * tx) * ty;
}

Vec3 EnvironmentMap::sample_dir(const Vec3& dir) const {
    double u, v;
    dir_to_equirect(normalize(dir), u, v);
    return sample(u, v);
}

Vec3 EnvironmentMap::texel_dir(int x, int y) const {
    return equirect_to_dir((x + 0.5) / width(), (y + 0.5) / height());
}

double EnvironmentMap::texel_solid_angle(int y) const {
    double lat = kPi / 2.0 - kPi * (y + 0.5) / height();
    return (2.0 * kPi / width()) * (kPi / height()) * std::cos(lat);
}

Vec3 EnvironmentMap::mean_radiance() const {
    Vec3 sum(0.0);
    double wsum = 0.0;
    for (int y = 0; y < height(); ++y) {
        double dw = texel_solid_angle(y);
        for (int x = 0; x < width(); ++x) {
            sum += radiance.at(x, y) * dw;
            wsum += dw;
        }
    }
    return sum / wsum;
}

Mat3 env_rotation(double lon_deg, double lat_deg) {
    // rotation_y(-lon) shifts content longitude by +lon; rotation_x(lat)
    // lifts the forward direction toward the zenith for lat > 0.
    return Mat3::rotation_x(radians(lat_deg)) * Mat3::rotation_y(-radians(lon_deg));
}

EnvironmentMap rotate_env(const EnvironmentMap& env, double lon_deg, double lat_deg) {
    const Mat3 inv = env_rotation(lon_deg, lat_deg).transposed();
    ImageRGB out(env.width(), env.height());
    parallel_for(0, env.height(), [&](int y) {
        for (int x = 0; x < env.width(); ++x) {
            Vec3 src = inv * env.texel_dir(x, y);
            double u, v;
            dir_to_equirect(normalize(src), u, v);
            out.at(x, y) = env.sample(u, v);
        }
    });
    return EnvironmentMap(std::move(out));
}

EnvironmentMap downsample_env(const EnvironmentMap& env, int width, int height) {
    if (width != 2 * height || height < 1)
        throw std::invalid_argument("downsample target must be 2:1");
    if (width > env.width())
        return env; // never upsample; the source already is coarse enough
    ImageRGB out(width, height);
    const double sx = double(env.width()) / width;
    const double sy = double(env.height()) / height;
    parallel_for(0, height, [&](int y) {
        for (int x = 0; x < width; ++x) {
            // Area-weighted box filter over the source footprint.
            double x0 = x * sx, x1 = (x + 1) * sx;
            double y0 = y * sy, y1 = (y + 1) * sy;
            Vec3 acc(0.0);
            double area = 0.0;
            for (int yy = int(y0); yy < int(std::ceil(y1)); ++yy) {
                double hy = std::min<double>(yy + 1, y1) - std::max<double>(yy, y0);
                for (int xx = int(x0); xx < int(std::ceil(x1)); ++xx) {
                    double hx = std::min<double>(xx + 1, x1) - std::max<double>(xx, x0);
                    acc += env.texel(std::min(xx, env.width() - 1), std::min(yy, env.height() - 1)) * (hx * hy);
                    area += hx * hy;
                }
            }
            out.at(x, y) = acc / area;
        }
    });
    return EnvironmentMap(std::move(out));
}

} // namespace arealight
