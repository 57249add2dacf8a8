#include "arealight/image_io.hpp"

#include <algorithm>
#include <stdexcept>

namespace arealight {

namespace {

std::string extension_of(const std::string& path) {
    auto pos = path.find_last_of('.');
    if (pos == std::string::npos) return {};
    std::string ext = path.substr(pos + 1);
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return char(std::tolower(c)); });
    return ext;
}

} // namespace

ImageRGB load_image(const std::string& path) {
    const std::string ext = extension_of(path);
    if (ext == "hdr") return load_hdr(path);
    if (ext == "pfm") return load_pfm(path);
    if (ext == "exr") return load_exr(path);
    if (ext == "png") return load_png(path);
    throw std::runtime_error(path + ": unsupported image format ." + ext);
}

void save_image(const std::string& path, const ImageRGB& img) {
    const std::string ext = extension_of(path);
    if (ext == "hdr") return save_hdr(path, img);
    if (ext == "pfm") return save_pfm(path, img);
    if (ext == "exr") return save_exr(path, img);
    if (ext == "png") return save_png(path, img);
    throw std::runtime_error(path + ": unsupported image format ." + ext);
}

ImageScalar load_scalar_map(const std::string& path) {
    const std::string ext = extension_of(path);
    if (ext == "exr") return load_exr_scalar(path);
    if (ext == "png") return load_png_gray16(path);
    if (ext == "pfm") {
        ImageRGB rgb = load_pfm(path);
        ImageScalar out(rgb.width, rgb.height);
        for (size_t i = 0; i < rgb.count(); ++i) out.v[i] = rgb.v[i].x;
        return out;
    }
    throw std::runtime_error(path + ": unsupported scalar-map format ." + ext);
}

void save_scalar_map(const std::string& path, const ImageScalar& img) {
    const std::string ext = extension_of(path);
    if (ext == "exr") return save_exr_scalar(path, img);
    if (ext == "png") return save_png_gray16(path, img);
    if (ext == "pfm") {
        ImageRGB rgb(img.width, img.height);
        for (size_t i = 0; i < img.count(); ++i) rgb.v[i] = Vec3(img.v[i]);
        return save_pfm(path, rgb);
    }
    throw std::runtime_error(path + ": unsupported scalar-map format ." + ext);
}

EnvironmentMap load_env_map(const std::string& path) {
    const std::string ext = extension_of(path);
    if (ext != "hdr" && ext != "pfm" && ext != "exr")
        throw std::runtime_error(path + ": environment maps must be .hdr, .pfm, or .exr");
    ImageRGB img = load_image(path);
    if (img.width != 2 * img.height)
        throw std::runtime_error(path + ": environment map aspect must be 2:1 (got " +
                                 std::to_string(img.width) + "x" + std::to_string(img.height) + ")");
    return EnvironmentMap(std::move(img));
}

} // namespace arealight
