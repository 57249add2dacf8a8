#include "arealight/image_io.hpp"

#include <OpenEXR/ImfChannelList.h>
#include <OpenEXR/ImfFrameBuffer.h>
#include <OpenEXR/ImfHeader.h>
#include <OpenEXR/ImfInputFile.h>
#include <OpenEXR/ImfOutputFile.h>
#include <OpenEXR/ImathBox.h>

#include <stdexcept>
#include <vector>

namespace arealight {

namespace {

namespace Exr = OPENEXR_IMF_NAMESPACE;

struct ExrPlanes {
    int width = 0, height = 0;
    std::vector<float> r, g, b;
    bool has_rgb = false;
};

// Reads R/G/B channels, or a single channel (Y/Z/R, whichever exists)
// replicated to gray. Half channels convert to float in the framebuffer.
ExrPlanes read_planes(const std::string& path) {
    Exr::InputFile file(path.c_str());
    const Imath::Box2i dw = file.header().dataWindow();
    ExrPlanes out;
    out.width = dw.max.x - dw.min.x + 1;
    out.height = dw.max.y - dw.min.y + 1;
    const size_t n = size_t(out.width) * out.height;
    const Exr::ChannelList& channels = file.header().channels();

    auto slice = [&](std::vector<float>& dst) {
        dst.assign(n, 0.f);
        return Exr::Slice(Exr::FLOAT,
                          (char*)(dst.data() - (size_t(dw.min.y) * out.width + dw.min.x)),
                          sizeof(float), sizeof(float) * out.width);
    };

    Exr::FrameBuffer fb;
    if (channels.findChannel("R") && channels.findChannel("G") && channels.findChannel("B")) {
        out.has_rgb = true;
        fb.insert("R", slice(out.r));
        fb.insert("G", slice(out.g));
        fb.insert("B", slice(out.b));
    } else {
        const char* gray = nullptr;
        for (const char* name : {"Y", "Z", "R"})
            if (channels.findChannel(name)) { gray = name; break; }
        if (!gray) throw std::runtime_error(path + ": no readable EXR channels");
        fb.insert(gray, slice(out.r));
    }
    file.setFrameBuffer(fb);
    file.readPixels(dw.min.y, dw.max.y);
    return out;
}

void write_planes(const std::string& path, int width, int height,
                  const std::vector<float>* r, const std::vector<float>* g,
                  const std::vector<float>* b) {
    Exr::Header header(width, height);
    header.compression() = Exr::ZIP_COMPRESSION;
    Exr::FrameBuffer fb;
    auto add = [&](const char* name, const std::vector<float>& data) {
        header.channels().insert(name, Exr::Channel(Exr::FLOAT));
        fb.insert(name, Exr::Slice(Exr::FLOAT, (char*)data.data(), sizeof(float), sizeof(float) * width));
    };
    if (g && b) {
        add("R", *r);
        add("G", *g);
        add("B", *b);
    } else {
        add("Y", *r);
    }
    Exr::OutputFile file(path.c_str(), header);
    file.setFrameBuffer(fb);
    file.writePixels(height);
}

} // namespace

ImageRGB load_exr(const std::string& path) {
    ExrPlanes p = read_planes(path);
    ImageRGB img(p.width, p.height);
    for (size_t i = 0; i < img.count(); ++i) {
        img.v[i] = p.has_rgb ? Vec3(p.r[i], p.g[i], p.b[i]) : Vec3(p.r[i]);
    }
    return img;
}

void save_exr(const std::string& path, const ImageRGB& img) {
    const size_t n = img.count();
    std::vector<float> r(n), g(n), b(n);
    for (size_t i = 0; i < n; ++i) {
        r[i] = float(img.v[i].x);
        g[i] = float(img.v[i].y);
        b[i] = float(img.v[i].z);
    }
    write_planes(path, img.width, img.height, &r, &g, &b);
}

ImageScalar load_exr_scalar(const std::string& path) {
    ExrPlanes p = read_planes(path);
    ImageScalar img(p.width, p.height);
    for (size_t i = 0; i < img.count(); ++i) img.v[i] = p.r[i];
    return img;
}

void save_exr_scalar(const std::string& path, const ImageScalar& img) {
    std::vector<float> y(img.count());
    for (size_t i = 0; i < img.count(); ++i) y[i] = float(img.v[i]);
    write_planes(path, img.width, img.height, &y, nullptr, nullptr);
}

} // namespace arealight
