#include "arealight/gbuffer.hpp"

#include "arealight/image_io.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace arealight {

namespace fs = std::filesystem;
using nlohmann::json;

size_t GBuffer::mask_count() const {
    size_t n = 0;
    for (double m : mask.v) n += m > 0.5;
    return n;
}

void GBuffer::validate() const {
    const int w = width(), h = height();
    auto check_size = [&](int ow, int oh, const char* name) {
        if (ow != w || oh != h)
            throw std::invalid_argument(std::string("gbuffer map '") + name + "' resolution mismatch");
    };
    check_size(normal.width, normal.height, "normal");
    check_size(albedo.width, albedo.height, "albedo");
    check_size(specular.width, specular.height, "specular");
    check_size(roughness.width, roughness.height, "roughness");
    check_size(mask.width, mask.height, "mask");
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!masked(x, y)) continue;
            double d = depth.at(x, y);
            if (!(d >= 0.0 && d <= 1.0))
                throw std::invalid_argument("gbuffer depth out of [0,1] inside mask");
            double len = length(normal.at(x, y));
            if (std::fabs(len - 1.0) > 1e-4)
                throw std::invalid_argument("gbuffer normal is not unit length inside mask");
        }
    }
}

namespace {

std::string find_map(const fs::path& dir, const std::string& base) {
    for (const char* ext : {".exr", ".pfm", ".hdr", ".png"}) {
        fs::path p = dir / (base + ext);
        if (fs::exists(p)) return p.string();
    }
    throw std::runtime_error("missing gbuffer map '" + base + "' in " + dir.string());
}

ImageScalar load_scalar_any(const fs::path& dir, const std::string& base) {
    std::string p = find_map(dir, base);
    if (p.size() >= 4 && p.compare(p.size() - 4, 4, ".png") == 0) return load_png_gray16(p);
    if (p.size() >= 4 && p.compare(p.size() - 4, 4, ".exr") == 0) return load_exr_scalar(p);
    ImageRGB rgb = load_image(p);
    ImageScalar out(rgb.width, rgb.height);
    for (size_t i = 0; i < rgb.count(); ++i) out.v[i] = rgb.v[i].x;
    return out;
}

} // namespace

GBuffer load_gbuffer(const std::string& dir) {
    fs::path root(dir);
    GBuffer g;
    g.depth = load_scalar_any(root, "depth");
    g.specular = load_scalar_any(root, "specular");
    g.roughness = load_scalar_any(root, "roughness");
    g.mask = load_scalar_any(root, "mask");
    for (double& m : g.mask.v) m = m > 0.5 ? 1.0 : 0.0;

    std::string normal_path = find_map(root, "normal");
    g.normal = load_image(normal_path);
    if (normal_path.compare(normal_path.size() - 4, 4, ".png") == 0) {
        // PNG normals are stored as n = 2 rgb - 1 with a linear (not
        // sRGB) mapping of the byte values.
        ImageRGB raw = g.normal;
        for (size_t i = 0; i < raw.count(); ++i) {
            Vec3 c = {linear_to_srgb(raw.v[i].x), linear_to_srgb(raw.v[i].y), linear_to_srgb(raw.v[i].z)};
            Vec3 n = c * 2.0 - Vec3(1.0);
            g.normal.v[i] = length_squared(n) > 0.0 ? normalize(n) : Vec3(0, 0, 1);
        }
    }
    g.albedo = load_image(find_map(root, "albedo"));

    fs::path meta = root / "meta.json";
    if (fs::exists(meta)) {
        std::ifstream in(meta);
        json j = json::parse(in);
        g.depth_scale = j.value("depth_scale", 1.0);
    }
    g.validate();
    return g;
}

void save_gbuffer(const std::string& dir, const GBuffer& g) {
    fs::path root(dir);
    fs::create_directories(root);
    save_exr_scalar((root / "depth.exr").string(), g.depth);
    save_exr((root / "normal.exr").string(), g.normal);
    save_exr((root / "albedo.exr").string(), g.albedo);
    save_exr_scalar((root / "specular.exr").string(), g.specular);
    save_exr_scalar((root / "roughness.exr").string(), g.roughness);
    save_exr_scalar((root / "mask.exr").string(), g.mask);
    json j;
    j["depth_scale"] = g.depth_scale;
    std::ofstream out(root / "meta.json");
    out << j.dump(2) << "\n";
}

} // namespace arealight
