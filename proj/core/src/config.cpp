#include "grrecon/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace grrecon {
namespace {

using nlohmann::json;

std::array<double, 3> triple(const json& j, const char* key) {
    const auto& v = j.at(key);
    if (!v.is_array() || v.size() != 3)
        throw std::invalid_argument(std::string("config: ") + key + " must be a 3-array");
    return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
}

Grid parse_grid(const json& j) {
    Grid g;
    const auto& dims = j.at("dims");
    if (!dims.is_array() || dims.size() != 3)
        throw std::invalid_argument("config: grid dims must be a 3-array");
    for (int a = 0; a < 3; ++a) g.dims[a] = dims[a].get<int>();
    if (j.contains("voxel_size_mm")) g.voxel_size = triple(j, "voxel_size_mm");
    if (j.contains("origin_mm")) g.origin = triple(j, "origin_mm");
    g.validate();
    return g;
}

void parse_phantom(const json& j, PhantomSpec& spec) {
    spec.grid = parse_grid(j.at("grid"));
    spec.background = j.value("background", 0.0);
    spec.shapes.clear();
    if (j.contains("shapes")) {
        for (const auto& s : j.at("shapes")) {
            Ellipsoid e;
            e.center = triple(s, "center_mm");
            e.semi_axes = triple(s, "semi_axes_mm");
            e.intensity = s.value("intensity", 1.0);
            spec.shapes.push_back(e);
        }
    }
}

void parse_gr(const json& j, PipelineConfig& cfg) {
    cfg.loss.lambda1 = j.value("lambda1", cfg.loss.lambda1);
    cfg.loss.lambda2 = j.value("lambda2", cfg.loss.lambda2);
    if (j.contains("data_mode")) {
        const std::string mode = j.at("data_mode").get<std::string>();
        if (mode == "poisson")
            cfg.loss.data_mode = DataMode::poisson_nll;
        else if (mode == "wls")
            cfg.loss.data_mode = DataMode::wls;
        else
            throw std::invalid_argument("config: data_mode must be 'poisson' or 'wls'");
    }
    cfg.loss.poisson_floor = j.value("poisson_floor", cfg.loss.poisson_floor);
    cfg.loss.tv_epsilon = j.value("tv_epsilon", cfg.loss.tv_epsilon);

    cfg.density.tau_prune = j.value("tau_prune", cfg.density.tau_prune);
    cfg.density.tau_clone = j.value("tau_clone", cfg.density.tau_clone);
    cfg.density.tau_split = j.value("tau_split", cfg.density.tau_split);
    cfg.density.interval = j.value("interval", cfg.density.interval);
    cfg.density.persistence = j.value("persistence", cfg.density.persistence);
    cfg.density.max_gaussians = j.value("max_gaussians", cfg.density.max_gaussians);
    cfg.density.split_sigma_factor = j.value("split_sigma_factor", cfg.density.split_sigma_factor);

    cfg.fit.iterations = j.value("iterations", cfg.fit.iterations);
    cfg.fit.init_count = j.value("init_count", cfg.fit.init_count);
    cfg.fit.init_sigma = j.value("init_sigma", cfg.fit.init_sigma);
    cfg.fit.init_intensity_min = j.value("init_intensity_min", cfg.fit.init_intensity_min);
    cfg.fit.support_k = j.value("support_k", cfg.fit.support_k);
    cfg.fit.lr_mu = j.value("lr_mu", cfg.fit.lr_mu);
    cfg.fit.lr_log_sigma = j.value("lr_log_sigma", cfg.fit.lr_log_sigma);
    cfg.fit.lr_intensity = j.value("lr_intensity", cfg.fit.lr_intensity);
    cfg.fit.adam_beta1 = j.value("adam_beta1", cfg.fit.adam_beta1);
    cfg.fit.adam_beta2 = j.value("adam_beta2", cfg.fit.adam_beta2);
    cfg.fit.adam_eps = j.value("adam_eps", cfg.fit.adam_eps);
    cfg.fit.normalize_loss = j.value("normalize_loss", cfg.fit.normalize_loss);
    cfg.fit.deterministic = j.value("deterministic", cfg.fit.deterministic);
}

void parse_guidance(const json& j, GuidanceConfig& g) {
    g.eta = j.value("eta", g.eta);
    g.omega = j.value("omega", g.omega);
    if (j.contains("kernel_sigmas"))
        g.kernel_sigmas = j.at("kernel_sigmas").get<std::vector<double>>();
    g.kernel_size = j.value("kernel_size", g.kernel_size);
    if (j.contains("delta_weights") && !j.at("delta_weights").is_null())
        g.delta_weights = j.at("delta_weights").get<std::vector<double>>();
    if (j.contains("window")) {
        const auto& w = j.at("window");
        if (!w.is_array() || w.size() != 2)
            throw std::invalid_argument("config: guidance window must be [start, end]");
        g.window_start = w[0].get<double>();
        g.window_end = w[1].get<double>();
    }
    if (j.contains("xi") && !j.at("xi").is_null()) g.xi = j.at("xi").get<double>();
    g.scale_with_beta = j.value("scale_with_beta", g.scale_with_beta);
}

}  // namespace

void PipelineConfig::validate() const {
    if (input_volume.empty()) phantom.validate();
    if (!(drf >= 1.0)) throw std::invalid_argument("config: drf must be >= 1");
    loss.validate();
    density.validate();
    fit.validate();
    if (diffusion.steps < 1) throw std::invalid_argument("config: diffusion steps must be >= 1");
    if (!(diffusion.prior_variance > 0.0))
        throw std::invalid_argument("config: prior_variance must be > 0");
    if (diffusion.prior_mean_source != "x_gr" && diffusion.prior_mean_source != "ground_truth" &&
        diffusion.prior_mean_source != "zero")
        throw std::invalid_argument(
            "config: prior_mean_source must be 'x_gr', 'ground_truth', or 'zero'");
    if (!diffusion.external_denoiser.empty())
        throw std::invalid_argument(
            "config: external_denoiser is a reserved field; no loader is implemented");
    guidance.validate();
    if (chunking.chunk_len < 1 || chunking.overlap < 0 ||
        chunking.overlap >= chunking.chunk_len)
        throw std::invalid_argument("config: need chunk_len > overlap >= 0");
    if (output_dir.empty()) throw std::invalid_argument("config: output_dir must be set");
}

PipelineConfig parse_pipeline_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("config: invalid JSON: ") + e.what());
    }
    PipelineConfig cfg;
    cfg.seed = j.value("seed", cfg.seed);
    cfg.drf = j.value("drf", cfg.drf);
    cfg.apply_noise = j.value("apply_noise", cfg.apply_noise);
    cfg.output_dir = j.value("output_dir", cfg.output_dir);
    cfg.input_volume = j.value("input_volume", cfg.input_volume);
    if (j.contains("phantom")) parse_phantom(j.at("phantom"), cfg.phantom);
    if (cfg.input_volume.empty() && !j.contains("phantom"))
        throw std::invalid_argument("config: needs either a phantom block or input_volume");
    if (j.contains("geometry")) {
        const auto& g = j.at("geometry");
        cfg.geometry.n_angles = g.value("n_angles", cfg.geometry.n_angles);
        cfg.geometry.n_det = g.value("n_det", cfg.geometry.n_det);
        cfg.geometry.det_spacing_mm = g.value("det_spacing_mm", cfg.geometry.det_spacing_mm);
        cfg.geometry.randoms = g.value("randoms", cfg.geometry.randoms);
        cfg.geometry.scatter = g.value("scatter", cfg.geometry.scatter);
    }
    if (j.contains("gr")) parse_gr(j.at("gr"), cfg);
    if (j.contains("diffusion")) {
        const auto& d = j.at("diffusion");
        cfg.diffusion.steps = d.value("steps", cfg.diffusion.steps);
        cfg.diffusion.beta_start = d.value("beta_start", cfg.diffusion.beta_start);
        cfg.diffusion.beta_end = d.value("beta_end", cfg.diffusion.beta_end);
        cfg.diffusion.prior_variance = d.value("prior_variance", cfg.diffusion.prior_variance);
        cfg.diffusion.prior_mean_source =
            d.value("prior_mean_source", cfg.diffusion.prior_mean_source);
        cfg.diffusion.prior_mean_scalar =
            d.value("prior_mean_scalar", cfg.diffusion.prior_mean_scalar);
        if (d.contains("external_denoiser") && !d.at("external_denoiser").is_null())
            cfg.diffusion.external_denoiser = d.at("external_denoiser").get<std::string>();
    }
    if (j.contains("guidance")) parse_guidance(j.at("guidance"), cfg.guidance);
    if (j.contains("chunking")) {
        const auto& c = j.at("chunking");
        cfg.chunking.chunk_len = c.value("chunk_len", cfg.chunking.chunk_len);
        cfg.chunking.overlap = c.value("overlap", cfg.chunking.overlap);
    }
    cfg.validate();
    return cfg;
}

PipelineConfig load_pipeline_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_pipeline_config(ss.str());
}

}  // namespace grrecon
