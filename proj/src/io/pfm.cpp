#include "arealight/image_io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <memory>
#include <stdexcept>

namespace arealight {

namespace {

struct FileCloser {
    void operator()(FILE* f) const { if (f) std::fclose(f); }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

std::string next_token(FILE* f) {
    std::string tok;
    int c;
    while ((c = std::fgetc(f)) != EOF) {
        if (std::isspace(c)) {
            if (!tok.empty()) break;
        } else {
            tok.push_back(char(c));
        }
    }
    return tok;
}

void swap_floats(float* data, size_t n) {
    auto* bytes = reinterpret_cast<unsigned char*>(data);
    for (size_t i = 0; i < n; ++i) {
        std::swap(bytes[i * 4 + 0], bytes[i * 4 + 3]);
        std::swap(bytes[i * 4 + 1], bytes[i * 4 + 2]);
    }
}

constexpr bool host_is_little_endian() { return std::endian::native == std::endian::little; }

} // namespace

ImageRGB load_pfm(const std::string& path) {
    FilePtr f(std::fopen(path.c_str(), "rb"));
    if (!f) throw std::runtime_error("cannot open " + path);
    std::string magic = next_token(f.get());
    if (magic != "PF" && magic != "Pf") throw std::runtime_error(path + ": not a PFM file");
    const int channels = magic == "PF" ? 3 : 1;
    int w = std::atoi(next_token(f.get()).c_str());
    int h = std::atoi(next_token(f.get()).c_str());
    double scale = std::atof(next_token(f.get()).c_str());
    if (w <= 0 || h <= 0 || scale == 0.0) throw std::runtime_error(path + ": bad PFM header");
    const bool file_little = scale < 0.0;
    const double mag = std::fabs(scale);

    std::vector<float> row(size_t(w) * channels);
    ImageRGB img(w, h);
    // PFM scanlines are stored bottom-to-top.
    for (int y = h - 1; y >= 0; --y) {
        if (std::fread(row.data(), 4, row.size(), f.get()) != row.size())
            throw std::runtime_error(path + ": truncated PFM data");
        if (file_little != host_is_little_endian()) swap_floats(row.data(), row.size());
        for (int x = 0; x < w; ++x) {
            if (channels == 3)
                img.at(x, y) = Vec3(row[x * 3 + 0], row[x * 3 + 1], row[x * 3 + 2]) * mag;
            else
                img.at(x, y) = Vec3(row[x] * mag);
        }
    }
    return img;
}

void save_pfm(const std::string& path, const ImageRGB& img) {
    FilePtr f(std::fopen(path.c_str(), "wb"));
    if (!f) throw std::runtime_error("cannot write " + path);
    std::fprintf(f.get(), "PF\n%d %d\n%.1f\n", img.width, img.height, host_is_little_endian() ? -1.0 : 1.0);
    std::vector<float> row(size_t(img.width) * 3);
    for (int y = img.height - 1; y >= 0; --y) {
        for (int x = 0; x < img.width; ++x) {
            const Vec3& c = img.at(x, y);
            row[x * 3 + 0] = float(c.x);
            row[x * 3 + 1] = float(c.y);
            row[x * 3 + 2] = float(c.z);
        }
        if (std::fwrite(row.data(), 4, row.size(), f.get()) != row.size())
            throw std::runtime_error("short write to " + path);
    }
}

} // namespace arealight
