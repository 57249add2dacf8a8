#include "arealight/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace arealight {

double rmse(const ImageRGB& a, const ImageRGB& b) {
    require_same_size(a, b, "rmse");
    double sum = 0.0;
    for (size_t i = 0; i < a.count(); ++i) {
        Vec3 d = a.v[i] - b.v[i];
        sum += d.x * d.x + d.y * d.y + d.z * d.z;
    }
    return std::sqrt(sum / (3.0 * a.count()));
}

namespace {

constexpr int kSsimRadius = 5; // 11x11 window
constexpr double kSsimSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

double ssim_channel(const ImageRGB& a, const ImageRGB& b, int ch) {
    const int w = a.width, h = a.height;
    if (w < 2 * kSsimRadius + 1 || h < 2 * kSsimRadius + 1)
        throw std::invalid_argument("ssim: image smaller than the 11x11 window");

    double kernel[2 * kSsimRadius + 1];
    double ksum = 0.0;
    for (int i = -kSsimRadius; i <= kSsimRadius; ++i) {
        kernel[i + kSsimRadius] = std::exp(-0.5 * i * i / (kSsimSigma * kSsimSigma));
        ksum += kernel[i + kSsimRadius];
    }
    for (double& k : kernel) k /= ksum;

    auto px = [&](const ImageRGB& img, int x, int y) { return clamp01(img.at(x, y)[ch]); };

    // Separable window moments; valid region only.
    double total = 0.0;
    size_t n = 0;
    std::vector<double> ma(w), mb(w), maa(w), mbb(w), mab(w);
    for (int y = kSsimRadius; y < h - kSsimRadius; ++y) {
        // Vertical pass for this output row.
        for (int x = 0; x < w; ++x) {
            double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
            for (int i = -kSsimRadius; i <= kSsimRadius; ++i) {
                double k = kernel[i + kSsimRadius];
                double va = px(a, x, y + i), vb = px(b, x, y + i);
                sa += k * va;
                sb += k * vb;
                saa += k * va * va;
                sbb += k * vb * vb;
                sab += k * va * vb;
            }
            ma[x] = sa; mb[x] = sb; maa[x] = saa; mbb[x] = sbb; mab[x] = sab;
        }
        for (int x = kSsimRadius; x < w - kSsimRadius; ++x) {
            double mu_a = 0, mu_b = 0, raw_aa = 0, raw_bb = 0, raw_ab = 0;
            for (int i = -kSsimRadius; i <= kSsimRadius; ++i) {
                double k = kernel[i + kSsimRadius];
                mu_a += k * ma[x + i];
                mu_b += k * mb[x + i];
                raw_aa += k * maa[x + i];
                raw_bb += k * mbb[x + i];
                raw_ab += k * mab[x + i];
            }
            double var_a = raw_aa - mu_a * mu_a;
            double var_b = raw_bb - mu_b * mu_b;
            double cov = raw_ab - mu_a * mu_b;
            double s = ((2 * mu_a * mu_b + kC1) * (2 * cov + kC2)) /
                       ((mu_a * mu_a + mu_b * mu_b + kC1) * (var_a + var_b + kC2));
            total += s;
            ++n;
        }
    }
    return total / double(n);
}

} // namespace

double ssim(const ImageRGB& a, const ImageRGB& b) {
    require_same_size(a, b, "ssim");
    return (ssim_channel(a, b, 0) + ssim_channel(a, b, 1) + ssim_channel(a, b, 2)) / 3.0;
}

double partial_rmse_t(const FrameSequence& gt, const FrameSequence& pred, int t) {
    if (gt.count() != pred.count()) throw std::invalid_argument("partial_rmse: length mismatch");
    const int n = gt.count();
    if (n <= t) throw std::invalid_argument("partial_rmse: too few frames for step");
    double sum = 0.0;
    for (int i = 0; i + t < n; ++i) {
        const ImageRGB& f0 = gt.frames[i];
        const ImageRGB& f1 = gt.frames[i + t];
        const ImageRGB& p0 = pred.frames[i];
        const ImageRGB& p1 = pred.frames[i + t];
        require_same_size(f0, f1, "partial_rmse");
        require_same_size(f0, p0, "partial_rmse");
        ImageRGB dg(f0.width, f0.height), dp(f0.width, f0.height);
        for (size_t j = 0; j < dg.count(); ++j) {
            dg.v[j] = f1.v[j] - f0.v[j];
            dp.v[j] = p1.v[j] - p0.v[j];
        }
        sum += rmse(dg, dp);
    }
    return sum / (n - t);
}

double partial_rmse(const FrameSequence& gt, const FrameSequence& pred) {
    if (gt.count() < 5) throw std::invalid_argument("partial_rmse: needs at least 5 frames");
    return (partial_rmse_t(gt, pred, 1) + partial_rmse_t(gt, pred, 2) + partial_rmse_t(gt, pred, 4)) / 3.0;
}

double scale_invariant_l1(const ImageScalar& gt_depth, const ImageScalar& pred_depth,
                          const ImageScalar& mask) {
    require_same_size(gt_depth, pred_depth, "scale_invariant_l1");
    require_same_size(gt_depth, mask, "scale_invariant_l1");
    double offset = 0.0;
    size_t n = 0;
    for (size_t i = 0; i < gt_depth.count(); ++i) {
        if (mask.v[i] <= 0.5) continue;
        offset += gt_depth.v[i] - pred_depth.v[i];
        ++n;
    }
    if (n == 0) throw std::invalid_argument("scale_invariant_l1: empty mask");
    offset /= double(n);
    double sum = 0.0;
    for (size_t i = 0; i < gt_depth.count(); ++i) {
        if (mask.v[i] <= 0.5) continue;
        sum += std::fabs(gt_depth.v[i] - (pred_depth.v[i] + offset));
    }
    return sum / double(n);
}

double slope_loss(const ImageScalar& gt_depth, const ImageScalar& pred_depth) {
    require_same_size(gt_depth, pred_depth, "slope_loss");
    const int w = gt_depth.width, h = gt_depth.height;
    double sum_x = 0.0, sum_y = 0.0;
    size_t nx = 0, ny = 0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x + 1 < w; ++x) {
            double gx = gt_depth.at(x + 1, y) - gt_depth.at(x, y);
            double px = pred_depth.at(x + 1, y) - pred_depth.at(x, y);
            sum_x += std::fabs(gx - px);
            ++nx;
        }
    for (int y = 0; y + 1 < h; ++y)
        for (int x = 0; x < w; ++x) {
            double gy = gt_depth.at(x, y + 1) - gt_depth.at(x, y);
            double py = pred_depth.at(x, y + 1) - pred_depth.at(x, y);
            sum_y += std::fabs(gy - py);
            ++ny;
        }
    return sum_x / double(nx) + sum_y / double(ny);
}

double depth_loss(const ImageScalar& gt_depth, const ImageScalar& pred_depth,
                  const ImageScalar& mask, double lambda_slope) {
    return scale_invariant_l1(gt_depth, pred_depth, mask) +
           lambda_slope * slope_loss(gt_depth, pred_depth);
}

} // namespace arealight
