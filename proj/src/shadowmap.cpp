#include "arealight/shadowmap.hpp"

#include "arealight/conv.hpp"
#include "arealight/parallel.hpp"

#include <cmath>
#include <stdexcept>

namespace arealight {

double csm_step_approximation(double d, double z) {
    double s = 0.5;
    for (int k = 1; k <= kCsmOrder; ++k)
        s += csm_coefficient(k) * std::sin(csm_frequency(k) * (z - d));
    return clamp01(s);
}

double csm_step_offset() {
    static const double offset = [] {
        auto raw = [](double t) {
            double s = 0.5;
            for (int k = 1; k <= kCsmOrder; ++k)
                s += csm_coefficient(k) * std::sin(csm_frequency(k) * t);
            return s;
        };
        double lo = 0.0, hi = 0.2;
        for (int i = 0; i < 80; ++i) {
            double mid = 0.5 * (lo + hi);
            (raw(mid) < 1.0 ? lo : hi) = mid;
        }
        return hi;
    }();
    return offset;
}

void LightDepthMap::project(const Vec3& p, double& tx, double& ty, double& d_norm) const {
    double a = dot(p, frame_u);
    double b = dot(p, frame_v);
    tx = (a - u0) / (u1 - u0) * resolution - 0.5;
    ty = (b - v0) / (v1 - v0) * resolution - 0.5;
    d_norm = (d_max - dot(p, frame_w)) / (d_max - d_min);
}

LightDepthMap render_light_depth(const TriangleMesh& mesh, const Vec3& light_dir, int resolution) {
    if (mesh.vertices.empty()) throw std::invalid_argument("render_light_depth: empty mesh");
    if (resolution < 1) throw std::invalid_argument("render_light_depth: bad resolution");

    LightDepthMap ldm;
    ldm.resolution = resolution;
    ldm.frame_w = normalize(shadow_space_dir(light_dir));
    Vec3 helper = std::fabs(ldm.frame_w.z) < 0.9 ? Vec3(0, 0, 1) : Vec3(1, 0, 0);
    ldm.frame_u = normalize(cross(helper, ldm.frame_w));
    ldm.frame_v = cross(ldm.frame_w, ldm.frame_u);

    double a0 = 1e300, a1 = -1e300, b0 = 1e300, b1 = -1e300, d0 = 1e300, d1 = -1e300;
    for (const Vec3& p : mesh.vertices) {
        double a = dot(p, ldm.frame_u), b = dot(p, ldm.frame_v), d = dot(p, ldm.frame_w);
        a0 = std::fmin(a0, a); a1 = std::fmax(a1, a);
        b0 = std::fmin(b0, b); b1 = std::fmax(b1, b);
        d0 = std::fmin(d0, d); d1 = std::fmax(d1, d);
    }
    if (a1 - a0 <= 0 && b1 - b0 <= 0)
        throw std::invalid_argument("render_light_depth: degenerate projection bounds");
    auto pad = [](double& lo, double& hi) {
        double ext = std::fmax(hi - lo, 1e-9);
        lo -= 0.05 * ext;
        hi += 0.05 * ext;
    };
    pad(a0, a1); pad(b0, b1); pad(d0, d1);
    ldm.u0 = a0; ldm.u1 = a1; ldm.v0 = b0; ldm.v1 = b1;
    ldm.d_min = d0; ldm.d_max = d1;

    ldm.depth = ImageScalar(resolution, resolution, 1.0); // empty = farthest

    const double su = resolution / (a1 - a0);
    const double sv = resolution / (b1 - b0);
    const double inv_dd = 1.0 / (d1 - d0);
    for (const auto& tri : mesh.triangles) {
        // Project to continuous texel coordinates (texel centers at +0.5).
        double px[3], py[3], pz[3];
        for (int i = 0; i < 3; ++i) {
            const Vec3& p = mesh.vertices[tri[i]];
            px[i] = (dot(p, ldm.frame_u) - a0) * su;
            py[i] = (dot(p, ldm.frame_v) - b0) * sv;
            pz[i] = (d1 - dot(p, ldm.frame_w)) * inv_dd;
        }
        double area = (px[1] - px[0]) * (py[2] - py[0]) - (px[2] - px[0]) * (py[1] - py[0]);
        if (area == 0.0) continue;
        int x0 = std::max(0, int(std::floor(std::min({px[0], px[1], px[2]}) - 0.5)));
        int x1 = std::min(resolution - 1, int(std::ceil(std::max({px[0], px[1], px[2]}) - 0.5)));
        int y0 = std::max(0, int(std::floor(std::min({py[0], py[1], py[2]}) - 0.5)));
        int y1 = std::min(resolution - 1, int(std::ceil(std::max({py[0], py[1], py[2]}) - 0.5)));
        const double inv_area = 1.0 / area;
        for (int y = y0; y <= y1; ++y) {
            double cy = y + 0.5;
            for (int x = x0; x <= x1; ++x) {
                double cx = x + 0.5;
                double w0 = ((px[1] - cx) * (py[2] - cy) - (px[2] - cx) * (py[1] - cy)) * inv_area;
                double w1 = ((px[2] - cx) * (py[0] - cy) - (px[0] - cx) * (py[2] - cy)) * inv_area;
                double w2 = 1.0 - w0 - w1;
                if (w0 < 0 || w1 < 0 || w2 < 0) continue;
                double z = w0 * pz[0] + w1 * pz[1] + w2 * pz[2];
                double& cell = ldm.depth.at(x, y);
                cell = std::fmin(cell, z); // keep the blocker nearest the light
            }
        }
    }
    return ldm;
}

ShadowMap hard_shadow(const GBuffer& g, const TriangleMesh& mesh, const Vec3& light_dir,
                      int resolution, double bias) {
    LightDepthMap ldm = render_light_depth(mesh, light_dir, resolution);
    const int w = g.width(), h = g.height();
    ShadowMap out;
    out.visibility = ImageScalar(w, h, 1.0);
    parallel_for(0, h, [&](int y) {
        for (int x = 0; x < w; ++x) {
            if (!g.masked(x, y)) continue;
            Vec3 p = shadow_space_position(x, y, g.depth.at(x, y), w, g.depth_scale);
            double tx, ty, d;
            ldm.project(p, tx, ty, d);
            int ix = int(std::lround(tx)), iy = int(std::lround(ty));
            if (ix < 0 || ix >= resolution || iy < 0 || iy >= resolution) continue;
            out.visibility.at(x, y) = d <= ldm.depth.at(ix, iy) + bias ? 1.0 : 0.0;
        }
    });
    return out;
}

CsmStack build_csm_basis(const LightDepthMap& ldm) {
    CsmStack stack;
    stack.resolution = ldm.resolution;
    stack.sigma = 0.0;
    const size_t n = ldm.depth.count();
    for (int k = 0; k < kCsmOrder; ++k) {
        stack.cos_img[k] = ImageScalar(ldm.resolution, ldm.resolution);
        stack.sin_img[k] = ImageScalar(ldm.resolution, ldm.resolution);
        const double c = csm_frequency(k + 1);
        for (size_t i = 0; i < n; ++i) {
            stack.cos_img[k].v[i] = std::cos(c * ldm.depth.v[i]);
            stack.sin_img[k].v[i] = std::sin(c * ldm.depth.v[i]);
        }
    }
    return stack;
}

CsmStack convolve_csm(const CsmStack& basis, double sigma, CsmStack* dsigma) {
    if (sigma <= 0.0) throw std::invalid_argument("convolve_csm: sigma must be positive");
    const int res = basis.resolution;
    const int radius = conv::gaussian_radius(sigma);
    std::vector<double> w = conv::gaussian_kernel<double>(sigma);
    std::vector<double> dw;
    if (dsigma) dw = conv::gaussian_kernel_dsigma<double>(sigma);

    CsmStack out;
    out.resolution = res;
    out.sigma = sigma;
    if (dsigma) {
        dsigma->resolution = res;
        dsigma->sigma = sigma;
    }

    std::vector<double> t1(size_t(res) * res), t2(size_t(res) * res);
    auto convolve_one = [&](const ImageScalar& src, ImageScalar& dst, ImageScalar* ddst) {
        dst = ImageScalar(res, res);
        conv::convolve_rows(src.v.data(), t1.data(), res, res, w.data(), radius);
        conv::convolve_cols(t1.data(), dst.v.data(), res, res, w.data(), radius);
        if (ddst) {
            // d/dsigma (w * w * B) = dw*(w*B) + w*(dw*B)
            *ddst = ImageScalar(res, res);
            conv::convolve_cols(t1.data(), ddst->v.data(), res, res, dw.data(), radius);
            conv::convolve_rows(src.v.data(), t2.data(), res, res, dw.data(), radius);
            conv::convolve_cols(t2.data(), t1.data(), res, res, w.data(), radius);
            for (size_t i = 0; i < ddst->v.size(); ++i) ddst->v[i] += t1[i];
        }
    };
    for (int k = 0; k < kCsmOrder; ++k) {
        convolve_one(basis.cos_img[k], out.cos_img[k], dsigma ? &dsigma->cos_img[k] : nullptr);
        convolve_one(basis.sin_img[k], out.sin_img[k], dsigma ? &dsigma->sin_img[k] : nullptr);
    }
    return out;
}

namespace {

double bilinear(const ImageScalar& img, double tx, double ty) {
    int x0 = int(std::floor(tx)), y0 = int(std::floor(ty));
    double fx = tx - x0, fy = ty - y0;
    int x1 = std::clamp(x0 + 1, 0, img.width - 1);
    int y1 = std::clamp(y0 + 1, 0, img.height - 1);
    x0 = std::clamp(x0, 0, img.width - 1);
    y0 = std::clamp(y0, 0, img.height - 1);
    return (img.at(x0, y0) * (1 - fx) + img.at(x1, y0) * fx) * (1 - fy) +
           (img.at(x0, y1) * (1 - fx) + img.at(x1, y1) * fx) * fy;
}

} // namespace

ShadowMap dcsm_from_stack(const GBuffer& g, const LightDepthMap& ldm, const CsmStack& convolved,
                          double bias, const CsmStack* dstack, ImageScalar* dvis_dsigma) {
    const int w = g.width(), h = g.height();
    const int res = ldm.resolution;
    ShadowMap out;
    out.visibility = ImageScalar(w, h, 1.0);
    if (dvis_dsigma) *dvis_dsigma = ImageScalar(w, h, 0.0);
    parallel_for(0, h, [&](int y) {
        for (int x = 0; x < w; ++x) {
            if (!g.masked(x, y)) continue;
            Vec3 p = shadow_space_position(x, y, g.depth.at(x, y), w, g.depth_scale);
            double tx, ty, d;
            ldm.project(p, tx, ty, d);
            if (tx < -0.5 || tx > res - 0.5 || ty < -0.5 || ty > res - 0.5) continue;
            d -= bias + csm_step_offset(); // keep self-shading out of the step transition
            double raw = 0.5, draw = 0.0;
            for (int k = 0; k < kCsmOrder; ++k) {
                const double c = csm_frequency(k + 1);
                const double cd = std::cos(c * d), sd = std::sin(c * d);
                double s_conv = bilinear(convolved.sin_img[k], tx, ty);
                double c_conv = bilinear(convolved.cos_img[k], tx, ty);
                raw += csm_coefficient(k + 1) * (cd * s_conv - sd * c_conv);
                if (dstack) {
                    double ds = bilinear(dstack->sin_img[k], tx, ty);
                    double dc = bilinear(dstack->cos_img[k], tx, ty);
                    draw += csm_coefficient(k + 1) * (cd * ds - sd * dc);
                }
            }
            out.visibility.at(x, y) = clamp01(raw);
            if (dvis_dsigma && raw > 0.0 && raw < 1.0) dvis_dsigma->at(x, y) = draw;
        }
    });
    return out;
}

ShadowMap dcsm(const GBuffer& g, const TriangleMesh& mesh, const Vec3& light_dir, double sigma,
               int resolution, double bias, ImageScalar* dvis_dsigma) {
    if (sigma < sigma_min_for(resolution) || sigma > sigma_max_for(resolution))
        throw std::invalid_argument("dcsm: sigma out of bounds for this resolution");
    LightDepthMap ldm = render_light_depth(mesh, light_dir, resolution);
    CsmStack basis = build_csm_basis(ldm);
    CsmStack dstack;
    CsmStack convolved = convolve_csm(basis, sigma, dvis_dsigma ? &dstack : nullptr);
    return dcsm_from_stack(g, ldm, convolved, bias, dvis_dsigma ? &dstack : nullptr, dvis_dsigma);
}

} // namespace arealight
