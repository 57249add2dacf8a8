#include "arealight/image_io.hpp"

#include <png.h>

#include <cstdio>
#include <memory>
#include <stdexcept>
#include <vector>

namespace arealight {

namespace {

struct FileCloser {
    void operator()(FILE* f) const { if (f) std::fclose(f); }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

struct PngReader {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngReader() { if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr); }
};

struct PngWriter {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngWriter() { if (png) png_destroy_write_struct(&png, info ? &info : nullptr); }
};

void read_png_rows(const std::string& path, int& w, int& h, int& bit_depth, int& channels,
                   std::vector<std::vector<png_byte>>& rows) {
    FilePtr f(std::fopen(path.c_str(), "rb"));
    if (!f) throw std::runtime_error("cannot open " + path);
    png_byte sig[8];
    if (std::fread(sig, 1, 8, f.get()) != 8 || png_sig_cmp(sig, 0, 8))
        throw std::runtime_error(path + ": not a PNG file");

    PngReader ctx;
    ctx.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    ctx.info = png_create_info_struct(ctx.png);
    if (!ctx.png || !ctx.info) throw std::runtime_error("libpng init failed");
    if (setjmp(png_jmpbuf(ctx.png))) throw std::runtime_error(path + ": PNG decode error");

    png_init_io(ctx.png, f.get());
    png_set_sig_bytes(ctx.png, 8);
    png_read_info(ctx.png, ctx.info);

    png_set_palette_to_rgb(ctx.png);
    png_set_expand_gray_1_2_4_to_8(ctx.png);
    png_set_strip_alpha(ctx.png);
    png_read_update_info(ctx.png, ctx.info);

    w = png_get_image_width(ctx.png, ctx.info);
    h = png_get_image_height(ctx.png, ctx.info);
    bit_depth = png_get_bit_depth(ctx.png, ctx.info);
    channels = png_get_channels(ctx.png, ctx.info);

    rows.assign(h, std::vector<png_byte>(png_get_rowbytes(ctx.png, ctx.info)));
    std::vector<png_bytep> ptrs(h);
    for (int y = 0; y < h; ++y) ptrs[y] = rows[y].data();
    png_read_image(ctx.png, ptrs.data());
    png_read_end(ctx.png, nullptr);
}

void write_png_rows(const std::string& path, int w, int h, int bit_depth, int color_type,
                    std::vector<std::vector<png_byte>>& rows) {
    FilePtr f(std::fopen(path.c_str(), "wb"));
    if (!f) throw std::runtime_error("cannot write " + path);
    PngWriter ctx;
    ctx.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    ctx.info = png_create_info_struct(ctx.png);
    if (!ctx.png || !ctx.info) throw std::runtime_error("libpng init failed");
    if (setjmp(png_jmpbuf(ctx.png))) throw std::runtime_error(path + ": PNG encode error");

    png_init_io(ctx.png, f.get());
    png_set_IHDR(ctx.png, ctx.info, w, h, bit_depth, color_type, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(ctx.png, ctx.info);
    std::vector<png_bytep> ptrs(h);
    for (int y = 0; y < h; ++y) ptrs[y] = rows[y].data();
    png_write_image(ctx.png, ptrs.data());
    png_write_end(ctx.png, nullptr);
}

} // namespace

ImageRGB load_png(const std::string& path) {
    int w, h, depth, channels;
    std::vector<std::vector<png_byte>> rows;
    read_png_rows(path, w, h, depth, channels, rows);

    ImageRGB img(w, h);
    const double scale = depth == 16 ? 65535.0 : 255.0;
    for (int y = 0; y < h; ++y) {
        const png_byte* row = rows[y].data();
        for (int x = 0; x < w; ++x) {
            double c[3];
            for (int k = 0; k < 3; ++k) {
                int ch = channels >= 3 ? k : 0;
                double u;
                if (depth == 16) {
                    const png_byte* p = row + (size_t(x) * channels + ch) * 2;
                    u = ((p[0] << 8) | p[1]) / scale; // PNG is big-endian
                } else {
                    u = row[size_t(x) * channels + ch] / scale;
                }
                c[k] = srgb_to_linear(u);
            }
            img.at(x, y) = Vec3(c[0], c[1], c[2]);
        }
    }
    return img;
}

void save_png(const std::string& path, const ImageRGB& img) {
    std::vector<std::vector<png_byte>> rows(img.height, std::vector<png_byte>(size_t(img.width) * 3));
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const Vec3& c = img.at(x, y);
            rows[y][size_t(x) * 3 + 0] = png_byte(std::lround(linear_to_srgb(c.x) * 255.0));
            rows[y][size_t(x) * 3 + 1] = png_byte(std::lround(linear_to_srgb(c.y) * 255.0));
            rows[y][size_t(x) * 3 + 2] = png_byte(std::lround(linear_to_srgb(c.z) * 255.0));
        }
    }
    write_png_rows(path, img.width, img.height, 8, PNG_COLOR_TYPE_RGB, rows);
}

ImageScalar load_png_gray16(const std::string& path) {
    int w, h, depth, channels;
    std::vector<std::vector<png_byte>> rows;
    read_png_rows(path, w, h, depth, channels, rows);

    ImageScalar img(w, h);
    const double scale = depth == 16 ? 65535.0 : 255.0;
    for (int y = 0; y < h; ++y) {
        const png_byte* row = rows[y].data();
        for (int x = 0; x < w; ++x) {
            if (depth == 16) {
                const png_byte* p = row + size_t(x) * channels * 2;
                img.at(x, y) = ((p[0] << 8) | p[1]) / scale;
            } else {
                img.at(x, y) = row[size_t(x) * channels] / scale;
            }
        }
    }
    return img;
}

void save_png_gray16(const std::string& path, const ImageScalar& img) {
    std::vector<std::vector<png_byte>> rows(img.height, std::vector<png_byte>(size_t(img.width) * 2));
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            auto q = (unsigned)std::lround(clamp01(img.at(x, y)) * 65535.0);
            rows[y][size_t(x) * 2 + 0] = png_byte(q >> 8);
            rows[y][size_t(x) * 2 + 1] = png_byte(q & 0xff);
        }
    }
    write_png_rows(path, img.width, img.height, 16, PNG_COLOR_TYPE_GRAY, rows);
}

} // namespace arealight
