#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

namespace arealight::conv {

/// Normalized Gaussian taps for window 2*ceil(3 sigma)+1.
inline int gaussian_radius(double sigma) { return int(std::ceil(3.0 * sigma)); }
inline int gaussian_window(double sigma) { return 2 * gaussian_radius(sigma) + 1; }

template <typename T>
std::vector<T> gaussian_kernel(double sigma) {
    const int r = gaussian_radius(sigma);
    std::vector<T> k(2 * r + 1);
    double sum = 0.0;
    for (int i = -r; i <= r; ++i) {
        double g = std::exp(-0.5 * (double(i) * i) / (sigma * sigma));
        k[i + r] = T(g);
        sum += g;
    }
    for (T& v : k) v = T(double(v) / sum);
    return k;
}

/// d/dsigma of the normalized taps, window held fixed:
/// dw_i = w_i (i^2 - sum_j w_j j^2) / sigma^3.
template <typename T>
std::vector<T> gaussian_kernel_dsigma(double sigma) {
    const int r = gaussian_radius(sigma);
    std::vector<T> w = gaussian_kernel<T>(sigma);
    double m2 = 0.0;
    for (int i = -r; i <= r; ++i) m2 += double(w[i + r]) * i * i;
    std::vector<T> dw(w.size());
    const double inv_s3 = 1.0 / (sigma * sigma * sigma);
    for (int i = -r; i <= r; ++i) dw[i + r] = T(double(w[i + r]) * (i * i - m2) * inv_s3);
    return dw;
}

/// 1-D horizontal pass with clamp-to-edge borders. Taps form the outer
/// loop so the inner accumulation vectorizes; the tap order is fixed,
/// keeping results independent of threading and chunking.
template <typename T>
void convolve_rows(const T* src, T* dst, int w, int h, const T* kernel, int radius) {
    for (int y = 0; y < h; ++y) {
        const T* row = src + size_t(y) * w;
        T* out = dst + size_t(y) * w;
        for (int x = 0; x < w; ++x) out[x] = T(0);
        for (int j = -radius; j <= radius; ++j) {
            const T k = kernel[j + radius];
            const int lo = std::max(0, -j), hi = std::min(w, w - j);
            for (int x = 0; x < lo; ++x) out[x] += k * row[0];
            const T* s = row + j;
            for (int x = lo; x < hi; ++x) out[x] += k * s[x];
            for (int x = hi; x < w; ++x) out[x] += k * row[w - 1];
        }
    }
}

/// 1-D vertical pass with clamp-to-edge borders.
template <typename T>
void convolve_cols(const T* src, T* dst, int w, int h, const T* kernel, int radius) {
    for (int y = 0; y < h; ++y) {
        T* out = dst + size_t(y) * w;
        for (int x = 0; x < w; ++x) out[x] = 0;
        for (int i = -radius; i <= radius; ++i) {
            int yy = std::clamp(y + i, 0, h - 1);
            const T* row = src + size_t(yy) * w;
            const T k = kernel[i + radius];
            for (int x = 0; x < w; ++x) out[x] += k * row[x];
        }
    }
}

} // namespace arealight::conv
