#include "arealight/image_io.hpp"

#include <cmath>
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

void rgbe_encode(const Vec3& c, unsigned char out[4]) {
    double m = max_component(c);
    if (m < 1e-32) {
        out[0] = out[1] = out[2] = out[3] = 0;
        return;
    }
    int e;
    double scale = std::frexp(m, &e) * 256.0 / m;
    out[0] = (unsigned char)std::fmin(255.0, c.x * scale);
    out[1] = (unsigned char)std::fmin(255.0, c.y * scale);
    out[2] = (unsigned char)std::fmin(255.0, c.z * scale);
    out[3] = (unsigned char)(e + 128);
}

Vec3 rgbe_decode(const unsigned char p[4]) {
    if (p[3] == 0) return Vec3(0.0);
    double f = std::ldexp(1.0, int(p[3]) - (128 + 8));
    return {p[0] * f, p[1] * f, p[2] * f};
}

bool read_line(FILE* f, std::string& line) {
    line.clear();
    int c;
    while ((c = std::fgetc(f)) != EOF) {
        if (c == '\n') return true;
        line.push_back(char(c));
    }
    return !line.empty();
}

// New-style RLE scanline: two-byte 0x02 0x02 marker, then each of the
// four components run-length encoded separately.
bool read_rle_scanline(FILE* f, unsigned char* scan, int width) {
    unsigned char head[4];
    if (std::fread(head, 1, 4, f) != 4) return false;
    if (head[0] != 2 || head[1] != 2 || ((head[2] << 8) | head[3]) != width) {
        // Old-style flat scanline; un-read the four bytes worth of data.
        std::memcpy(scan, head, 4);
        size_t rest = size_t(width) * 4 - 4;
        return std::fread(scan + 4, 1, rest, f) == rest;
    }
    for (int comp = 0; comp < 4; ++comp) {
        int x = 0;
        while (x < width) {
            int code = std::fgetc(f);
            if (code == EOF) return false;
            if (code > 128) { // run
                int count = code - 128;
                int value = std::fgetc(f);
                if (value == EOF || x + count > width) return false;
                for (int i = 0; i < count; ++i) scan[(x + i) * 4 + comp] = (unsigned char)value;
                x += count;
            } else { // literal
                int count = code;
                if (count == 0 || x + count > width) return false;
                for (int i = 0; i < count; ++i) {
                    int value = std::fgetc(f);
                    if (value == EOF) return false;
                    scan[(x + i) * 4 + comp] = (unsigned char)value;
                }
                x += count;
            }
        }
    }
    return true;
}

} // namespace

ImageRGB load_hdr(const std::string& path) {
    FilePtr f(std::fopen(path.c_str(), "rb"));
    if (!f) throw std::runtime_error("cannot open " + path);

    std::string line;
    if (!read_line(f.get(), line) || (line.rfind("#?", 0) != 0))
        throw std::runtime_error(path + ": not a Radiance HDR file");
    bool format_ok = false;
    while (read_line(f.get(), line)) {
        if (line.empty()) break; // end of header
        if (line.rfind("FORMAT=", 0) == 0) {
            if (line != "FORMAT=32-bit_rle_rgbe")
                throw std::runtime_error(path + ": unsupported Radiance format");
            format_ok = true;
        }
    }
    if (!format_ok) throw std::runtime_error(path + ": missing FORMAT in HDR header");
    if (!read_line(f.get(), line)) throw std::runtime_error(path + ": truncated HDR header");
    int w = 0, h = 0;
    if (std::sscanf(line.c_str(), "-Y %d +X %d", &h, &w) != 2 || w <= 0 || h <= 0)
        throw std::runtime_error(path + ": unsupported HDR scanline order");

    ImageRGB img(w, h);
    std::vector<unsigned char> scan(size_t(w) * 4);
    for (int y = 0; y < h; ++y) {
        if (!read_rle_scanline(f.get(), scan.data(), w))
            throw std::runtime_error(path + ": truncated HDR pixel data");
        for (int x = 0; x < w; ++x) img.at(x, y) = rgbe_decode(&scan[size_t(x) * 4]);
    }
    return img;
}

void save_hdr(const std::string& path, const ImageRGB& img) {
    FilePtr f(std::fopen(path.c_str(), "wb"));
    if (!f) throw std::runtime_error("cannot write " + path);
    std::fprintf(f.get(), "#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n-Y %d +X %d\n", img.height, img.width);
    // Flat (non-RLE) scanlines: valid Radiance, simple and deterministic.
    std::vector<unsigned char> scan(size_t(img.width) * 4);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) rgbe_encode(img.at(x, y), &scan[size_t(x) * 4]);
        if (std::fwrite(scan.data(), 1, scan.size(), f.get()) != scan.size())
            throw std::runtime_error("short write to " + path);
    }
}

} // namespace arealight
