// Command-line surface for the area-light relighting engine.

#include "arealight/gbuffer.hpp"
#include "arealight/image_io.hpp"
#include "arealight/lightopt.hpp"
#include "arealight/lights.hpp"
#include "arealight/metrics.hpp"
#include "arealight/parallel.hpp"
#include "arealight/pipeline.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace arealight;

namespace {

constexpr const char* kToolVersion = "1.0.0";

uint64_t fnv1a_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot hash " + path);
    uint64_t h = 1469598103934665603ull;
    char buf[65536];
    while (in) {
        in.read(buf, sizeof(buf));
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= uint8_t(buf[i]);
            h *= 1099511628211ull;
        }
    }
    return h;
}

std::string hex64(uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", (unsigned long long)v);
    return buf;
}

/// Reproducibility record written next to each run's primary output.
struct Manifest {
    std::string subcommand;
    json config = json::object();
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

    void write(const std::string& primary_output) const {
        json j;
        j["tool"] = "arealight";
        j["version"] = kToolVersion;
        j["subcommand"] = subcommand;
        j["config"] = config;
        json in = json::object();
        for (const std::string& p : inputs) {
            if (fs::is_directory(p)) {
                json dir = json::object();
                std::vector<fs::path> files;
                for (const auto& e : fs::directory_iterator(p))
                    if (e.is_regular_file()) files.push_back(e.path());
                std::sort(files.begin(), files.end());
                for (const auto& f : files) dir[f.filename().string()] = hex64(fnv1a_file(f.string()));
                in[p] = dir;
            } else {
                in[p] = hex64(fnv1a_file(p));
            }
        }
        j["inputs"] = in;
        j["outputs"] = outputs;
        j["wall_clock_sec"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::ofstream out(primary_output + ".manifest.json");
        out << j.dump(2) << "\n";
    }
};

/// Key-value config file: one `key = value` per line, '#' comments.
std::map<std::string, std::string> parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            size_t a = s.find_first_not_of(" \t\r");
            size_t b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
        if (!key.empty()) kv[key] = value;
    }
    return kv;
}

void apply_config_file(OptConfig& cfg, const std::string& path, int& threads) {
    for (const auto& [key, value] : parse_config_file(path)) {
        if (key == "n_lights") cfg.n_lights = std::stoi(value);
        else if (key == "iters_step2") cfg.iters_step2 = std::stoi(value);
        else if (key == "iters_step3") cfg.iters_step3 = std::stoi(value);
        else if (key == "lr_max") cfg.lr_max = std::stod(value);
        else if (key == "lr_min") cfg.lr_min = std::stod(value);
        else if (key == "cosine_cycle") cfg.cosine_cycle = std::stoi(value);
        else if (key == "tau") cfg.tau = std::stod(value);
        else if (key == "repulsion_weight") cfg.repulsion_weight = std::stod(value);
        else if (key == "shadow_resolution") cfg.shadow_resolution = std::stoi(value);
        else if (key == "scene_resolution") cfg.scene_resolution = std::stoi(value);
        else if (key == "env_width") cfg.env_width = std::stoi(value);
        else if (key == "env_height") cfg.env_height = std::stoi(value);
        else if (key == "sigma0") cfg.sigma0 = std::stod(value);
        else if (key == "bias") cfg.bias = std::stod(value);
        else if (key == "threads") threads = std::stoi(value);
        else throw std::runtime_error("unknown config key '" + key + "' in " + path);
    }
}

json config_to_json(const OptConfig& cfg) {
    json j;
    j["n_lights"] = cfg.n_lights;
    j["iters_step2"] = cfg.iters_step2;
    j["iters_step3"] = cfg.iters_step3;
    j["betas"] = {cfg.beta1, cfg.beta2};
    j["lr"] = {cfg.lr_max, cfg.lr_min};
    j["cosine_cycle"] = cfg.cosine_cycle;
    j["tau"] = cfg.tau;
    j["repulsion_weight"] = cfg.repulsion_weight;
    j["laplacian_kernels"] = cfg.laplacian_kernels;
    j["shadow_resolution"] = cfg.shadow_resolution;
    j["scene_resolution"] = cfg.scene_resolution;
    j["env_size"] = {cfg.env_width, cfg.env_height};
    j["sigma0"] = cfg.sigma0 < 0 ? 10.0 : cfg.sigma0;
    j["bias"] = cfg.bias;
    return j;
}

ShadowMode parse_mode(const std::string& s) {
    if (s == "none") return ShadowMode::None;
    if (s == "hard") return ShadowMode::Hard;
    if (s == "csm") return ShadowMode::Csm;
    if (s == "min") return ShadowMode::MinHardCsm;
    throw CLI::ValidationError("--shadow", "must be one of none|hard|csm|min");
}

std::vector<std::string> list_frames(const std::string& dir) {
    std::vector<std::string> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        std::string ext = e.path().extension().string();
        if (ext == ".png" || ext == ".exr" || ext == ".hdr" || ext == ".pfm")
            files.push_back(e.path().string());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw std::runtime_error("no frames found in " + dir);
    return files;
}

// --- subcommand bodies -----------------------------------------------------

int run_approx_lights(const std::string& env_path, const std::string& out_path,
                      const std::string& trace_path, const std::string& viz_path,
                      const OptConfig& cfg, Manifest& man) {
    EnvironmentMap env = load_env_map(env_path);
    auto [lights, trace] = optimize_lights(env, cfg);
    if (trace.diverged) throw std::runtime_error("optimization diverged (non-finite loss)");
    save_lights(out_path, lights);
    man.outputs.push_back(out_path);
    if (!trace_path.empty()) {
        std::ofstream csv(trace_path);
        csv << "step,iteration,loss\n";
        for (size_t i = 0; i < trace.step2_loss.size(); ++i)
            csv << "2," << i << "," << std::setprecision(17) << trace.step2_loss[i] << "\n";
        for (size_t i = 0; i < trace.step3_loss.size(); ++i)
            csv << "3," << i << "," << std::setprecision(17) << trace.step3_loss[i] << "\n";
        man.outputs.push_back(trace_path);
    }
    if (!viz_path.empty()) {
        save_png(viz_path, visualize(lights, env));
        man.outputs.push_back(viz_path);
    }
    std::fprintf(stderr, "approx-lights: %d lights in %.1f s (step2 %.6g -> %.6g)\n",
                 lights.n_lights(), trace.wall_clock_sec,
                 trace.step2_loss.empty() ? 0.0 : trace.step2_loss.front(),
                 trace.step2_loss.empty() ? 0.0 : trace.step2_loss.back());
    return 0;
}

int run_relight(const std::string& gbuffer_dir, const std::string& lights_path,
                const std::string& mode_str, const std::string& out_path,
                const std::string& dump_dir, int shadow_res, double bias, Manifest& man) {
    GBuffer g = load_gbuffer(gbuffer_dir);
    LightSet lights = load_lights(lights_path);
    RelightRequest req;
    req.mode = parse_mode(mode_str);
    req.shadow_resolution = shadow_res;
    req.bias = bias;
    req.keep_per_light = !dump_dir.empty();
    RelightResult res = relight(g, lights, req);
    save_image(out_path, res.image);
    man.outputs.push_back(out_path);
    if (!dump_dir.empty()) {
        fs::create_directories(dump_dir);
        char name[64];
        for (int l = 0; l < lights.n_lights(); ++l) {
            std::snprintf(name, sizeof(name), "diffuse_%02d.exr", l);
            save_exr((fs::path(dump_dir) / name).string(), res.diffuse[l].radiance);
            std::snprintf(name, sizeof(name), "specular_%02d.exr", l);
            save_exr((fs::path(dump_dir) / name).string(), res.specular[l].radiance);
            if (req.mode != ShadowMode::None) {
                std::snprintf(name, sizeof(name), "shadow_%02d.png", l);
                save_png_gray16((fs::path(dump_dir) / name).string(), res.shadows[l].visibility);
            }
        }
        man.outputs.push_back(dump_dir);
    }
    return 0;
}

int run_shadow(const std::string& gbuffer_dir, const std::string& lights_path, int light_index,
               std::vector<double> dir, const std::string& mode_str, double sigma,
               const std::string& out_path, int shadow_res, double bias, Manifest& man) {
    GBuffer g = load_gbuffer(gbuffer_dir);
    AreaLight light;
    if (!lights_path.empty()) {
        LightSet set = load_lights(lights_path);
        if (light_index < 0 || light_index >= set.n_lights())
            throw std::runtime_error("--index out of range");
        light = set.lights[light_index];
    } else if (dir.size() == 3) {
        light.direction = normalize(Vec3(dir[0], dir[1], dir[2]));
    } else {
        throw CLI::ValidationError("shadow", "give either --lights/--index or --dir x,y,z");
    }
    if (sigma > 0) light.sigma = sigma;
    TriangleMesh mesh = depth_to_mesh(g.depth, g.mask, kMeshGapThreshold, g.depth_scale);
    ShadowMap sm = render_shadow(g, mesh, light, parse_mode(mode_str), shadow_res, bias);
    save_scalar_map(out_path, sm.visibility);
    man.outputs.push_back(out_path);
    return 0;
}

int run_render_gt(const std::string& env_path, const std::string& out_dir, int res, int env_w,
                  int env_h, Manifest& man) {
    EnvironmentMap env = downsample_env(load_env_map(env_path), env_w, env_h);
    SphereScene scene{res};
    GBuffer g = render_gbuffer(scene);
    save_gbuffer(out_dir, g);
    save_exr((fs::path(out_dir) / "diffuse.exr").string(),
             render_reference(scene, env, ReferenceComponent::Diffuse));
    save_exr((fs::path(out_dir) / "specular.exr").string(),
             render_reference(scene, env, ReferenceComponent::Specular));
    save_exr((fs::path(out_dir) / "shadowed_diffuse.exr").string(),
             render_reference(scene, env, ReferenceComponent::ShadowedDiffuse));
    man.outputs.push_back(out_dir);
    return 0;
}

int run_metrics(const std::string& gt_dir, const std::string& pred_dir,
                const std::string& out_path, Manifest& man) {
    std::vector<std::string> gt_files = list_frames(gt_dir);
    std::vector<std::string> pred_files = list_frames(pred_dir);
    if (gt_files.size() != pred_files.size())
        throw std::runtime_error("metrics: frame counts differ");
    FrameSequence gt, pred;
    for (const auto& f : gt_files) gt.frames.push_back(load_image(f));
    for (const auto& f : pred_files) pred.frames.push_back(load_image(f));

    double mean_rmse = 0.0, mean_ssim = 0.0;
    for (int i = 0; i < gt.count(); ++i) {
        mean_rmse += rmse(gt.frames[i], pred.frames[i]);
        mean_ssim += ssim(gt.frames[i], pred.frames[i]);
    }
    mean_rmse /= gt.count();
    mean_ssim /= gt.count();

    json j;
    j["frames"] = gt.count();
    j["rmse"] = mean_rmse;
    j["ssim"] = mean_ssim;
    if (gt.count() >= 5) {
        j["partial_rmse_1"] = partial_rmse_t(gt, pred, 1);
        j["partial_rmse_2"] = partial_rmse_t(gt, pred, 2);
        j["partial_rmse_4"] = partial_rmse_t(gt, pred, 4);
        j["partial_rmse"] = partial_rmse(gt, pred);
    }
    std::ofstream out(out_path);
    out << j.dump(2) << "\n";
    man.outputs.push_back(out_path);
    std::printf("%s\n", j.dump(2).c_str());
    return 0;
}

int run_visualize(const std::string& lights_path, const std::string& env_path,
                  const std::string& out_path, Manifest& man) {
    save_png(out_path, visualize(load_lights(lights_path), load_env_map(env_path)));
    man.outputs.push_back(out_path);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"arealight: environment-light approximation and relighting with area lights"};
    app.require_subcommand(1);
    int threads = 0; // 0 = AREALIGHT_THREADS env or hardware default
    app.add_option("--threads", threads, "worker thread cap (default: AREALIGHT_THREADS or all cores)");

    // approx-lights
    auto* sc_approx = app.add_subcommand("approx-lights", "fit N area lights to an HDR env map");
    std::string env_path, out_path = "lights.json", trace_path, viz_path, config_path;
    OptConfig cfg;
    bool desk = false;
    sc_approx->add_option("env", env_path, "equirectangular .hdr/.pfm/.exr")->required();
    sc_approx->add_option("-o,--out", out_path, "output light-set JSON");
    sc_approx->add_option("--trace", trace_path, "per-iteration loss CSV");
    sc_approx->add_option("--viz", viz_path, "light visualization PNG");
    sc_approx->add_option("--config", config_path, "key-value config file");
    sc_approx->add_option("--n-lights", cfg.n_lights);
    sc_approx->add_option("--iters2", cfg.iters_step2);
    sc_approx->add_option("--iters3", cfg.iters_step3);
    sc_approx->add_option("--shadow-res", cfg.shadow_resolution);
    sc_approx->add_option("--scene-res", cfg.scene_resolution);
    sc_approx->add_option("--env-width", cfg.env_width);
    sc_approx->add_option("--env-height", cfg.env_height);
    sc_approx->add_flag("--desk-scale", desk, "small fast configuration");

    // relight
    auto* sc_relight = app.add_subcommand("relight", "relight a G-buffer under a light set");
    std::string gbuffer_dir, lights_path, mode_str = "csm", relight_out = "relit.png", dump_dir;
    int shadow_res = kShadowMapResolution;
    double bias = kShadowBias;
    sc_relight->add_option("--gbuffer", gbuffer_dir)->required();
    sc_relight->add_option("--lights", lights_path)->required();
    sc_relight->add_option("--shadow", mode_str, "none|hard|csm|min");
    sc_relight->add_option("--out", relight_out);
    sc_relight->add_option("--dump-per-light", dump_dir);
    sc_relight->add_option("--shadow-res", shadow_res);
    sc_relight->add_option("--bias", bias);

    // shadow
    auto* sc_shadow = app.add_subcommand("shadow", "single-light shadow map");
    std::string sh_gbuffer, sh_lights, sh_mode = "csm", sh_out = "shadow.png";
    std::vector<double> sh_dir;
    int sh_index = 0, sh_res = kShadowMapResolution;
    double sh_sigma = -1.0, sh_bias = kShadowBias;
    sc_shadow->add_option("--gbuffer", sh_gbuffer)->required();
    sc_shadow->add_option("--lights", sh_lights);
    sc_shadow->add_option("--index", sh_index);
    sc_shadow->add_option("--dir", sh_dir)->expected(3);
    sc_shadow->add_option("--mode", sh_mode, "hard|csm|min");
    sc_shadow->add_option("--sigma", sh_sigma, "override sigma (256-map pixels)");
    sc_shadow->add_option("--out", sh_out);
    sc_shadow->add_option("--shadow-res", sh_res);
    sc_shadow->add_option("--bias", sh_bias);

    // render-gt
    auto* sc_gt = app.add_subcommand("render-gt", "hemisphere-scene ground truth renders");
    std::string gt_env, gt_out = "gt";
    int gt_res = 256, gt_env_w = 128, gt_env_h = 64;
    sc_gt->add_option("env", gt_env)->required();
    sc_gt->add_option("--out", gt_out, "output directory");
    sc_gt->add_option("--res", gt_res);
    sc_gt->add_option("--env-width", gt_env_w);
    sc_gt->add_option("--env-height", gt_env_h);

    // metrics
    auto* sc_metrics = app.add_subcommand("metrics", "frame-directory quality report");
    std::string m_gt, m_pred, m_out = "metrics.json";
    sc_metrics->add_option("--gt", m_gt)->required();
    sc_metrics->add_option("--pred", m_pred)->required();
    sc_metrics->add_option("--out", m_out);

    // visualize-lights
    auto* sc_viz = app.add_subcommand("visualize-lights", "draw a light set over its env map");
    std::string v_lights, v_env, v_out = "lights.png";
    sc_viz->add_option("--lights", v_lights)->required();
    sc_viz->add_option("--env", v_env)->required();
    sc_viz->add_option("--out", v_out);

    CLI11_PARSE(app, argc, argv);

    try {
        Manifest man;
        if (sc_approx->parsed()) {
            // precedence: defaults < --desk-scale preset < config file < flags
            OptConfig base = desk ? OptConfig::desk_scale() : OptConfig{};
            if (!config_path.empty()) apply_config_file(base, config_path, threads);
            if (sc_approx->count("--n-lights")) base.n_lights = cfg.n_lights;
            if (sc_approx->count("--iters2")) base.iters_step2 = cfg.iters_step2;
            if (sc_approx->count("--iters3")) base.iters_step3 = cfg.iters_step3;
            if (sc_approx->count("--shadow-res")) base.shadow_resolution = cfg.shadow_resolution;
            if (sc_approx->count("--scene-res")) base.scene_resolution = cfg.scene_resolution;
            if (sc_approx->count("--env-width")) base.env_width = cfg.env_width;
            if (sc_approx->count("--env-height")) base.env_height = cfg.env_height;
            cfg = base;
            if (threads > 0) set_thread_count(threads);
            man.subcommand = "approx-lights";
            man.config = config_to_json(cfg);
            man.inputs = {env_path};
            int rc = run_approx_lights(env_path, out_path, trace_path, viz_path, cfg, man);
            man.write(out_path);
            return rc;
        }
        if (threads > 0) set_thread_count(threads);
        if (sc_relight->parsed()) {
            man.subcommand = "relight";
            man.config = {{"shadow", mode_str}, {"shadow_resolution", shadow_res}, {"bias", bias}};
            man.inputs = {gbuffer_dir, lights_path};
            int rc = run_relight(gbuffer_dir, lights_path, mode_str, relight_out, dump_dir,
                                 shadow_res, bias, man);
            man.write(relight_out);
            return rc;
        }
        if (sc_shadow->parsed()) {
            man.subcommand = "shadow";
            man.config = {{"mode", sh_mode}, {"shadow_resolution", sh_res}, {"bias", sh_bias}};
            man.inputs = {sh_gbuffer};
            if (!sh_lights.empty()) man.inputs.push_back(sh_lights);
            int rc = run_shadow(sh_gbuffer, sh_lights, sh_index, sh_dir, sh_mode, sh_sigma, sh_out,
                                sh_res, sh_bias, man);
            man.write(sh_out);
            return rc;
        }
        if (sc_gt->parsed()) {
            man.subcommand = "render-gt";
            man.config = {{"resolution", gt_res}, {"env_size", {gt_env_w, gt_env_h}}};
            man.inputs = {gt_env};
            int rc = run_render_gt(gt_env, gt_out, gt_res, gt_env_w, gt_env_h, man);
            man.write((fs::path(gt_out) / "gt").string());
            return rc;
        }
        if (sc_metrics->parsed()) {
            man.subcommand = "metrics";
            man.inputs = {m_gt, m_pred};
            int rc = run_metrics(m_gt, m_pred, m_out, man);
            man.write(m_out);
            return rc;
        }
        if (sc_viz->parsed()) {
            man.subcommand = "visualize-lights";
            man.inputs = {v_lights, v_env};
            int rc = run_visualize(v_lights, v_env, v_out, man);
            man.write(v_out);
            return rc;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 1;
}
