// grrecon - command-line front end: phantom synthesis, projection with dose
// reduction, Gaussian fitting, guided diffusion, the full pipeline, and
// image-quality metrics. Every subcommand reads one JSON config and accepts
// --seed / --out / --drf overrides.
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "grrecon/chunking.hpp"
#include "grrecon/config.hpp"
#include "grrecon/diffusion.hpp"
#include "grrecon/gr_optimizer.hpp"
#include "grrecon/guidance.hpp"
#include "grrecon/io.hpp"
#include "grrecon/metrics.hpp"
#include "grrecon/noise.hpp"
#include "grrecon/phantom.hpp"
#include "grrecon/pipeline.hpp"
#include "grrecon/projector.hpp"
#include "grrecon/rng.hpp"
#include "grrecon/types.hpp"

namespace {

using namespace grrecon;

struct CommonArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<double> drf;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "pipeline JSON config")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--seed", args.seed, "override the config seed");
    cmd->add_option("--out", args.out, "override the output path (or directory for `pipeline`)");
    cmd->add_option("--drf", args.drf, "override the dose reduction factor");
}

PipelineConfig load_config(const CommonArgs& args) {
    PipelineConfig cfg = load_pipeline_config(args.config_path);
    if (args.seed)
        cfg.seed = *args.seed;
    if (args.drf)
        cfg.drf = *args.drf;
    return cfg;
}

std::string joined(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

void ensure_dir(const std::string& path) {
    if (!path.empty())
        std::filesystem::create_directories(path);
}

Volume ground_truth_volume(const PipelineConfig& cfg) {
    if (!cfg.input_volume.empty())
        return read_volume(cfg.input_volume);
    return create_phantom(cfg.phantom);
}

// ---- subcommand bodies ------------------------------------------------------

int run_phantom(const CommonArgs& args) {
    PipelineConfig cfg = load_config(args);
    Volume gt = ground_truth_volume(cfg);
    const std::string out = args.out ? *args.out : joined(cfg.output_dir, "ground_truth");
    ensure_dir(std::filesystem::path(out).parent_path().string());
    write_volume(out, gt);
    std::cout << "phantom: wrote " << out << ".{json,raw} (" << gt.grid.dims[0] << "x"
              << gt.grid.dims[1] << "x" << gt.grid.dims[2] << ")\n";
    return 0;
}

int run_project(const CommonArgs& args, const std::string& input) {
    PipelineConfig cfg = load_config(args);
    Volume gt = input.empty() ? ground_truth_volume(cfg) : read_volume(input);
    ForwardModel model = model_from_config(cfg.geometry, gt.grid);
    Sinogram clean = forward_project(gt, model);
    for (std::size_t i = 0; i < clean.data.size(); ++i)
        clean.data[i] += static_cast<float>(model.background(i));
    Sinogram y = cfg.apply_noise ? apply_dose_reduction(clean, cfg.drf, mix_seed(cfg.seed, 1))
                                 : clean;
    const std::string out = args.out ? *args.out : joined(cfg.output_dir, "sinogram");
    ensure_dir(std::filesystem::path(out).parent_path().string());
    write_sinogram(out, y);
    std::cout << "project: wrote " << out << ".{json,raw} (" << y.n_angles << " angles, "
              << y.n_det << " bins, " << y.n_slices << " slices, drf " << cfg.drf
              << (cfg.apply_noise ? "" : ", noiseless") << ")\n";
    return 0;
}

int run_gr_fit(const CommonArgs& args, const std::string& input, int checkpoint_interval,
               const std::string& trace_path) {
    PipelineConfig cfg = load_config(args);
    const std::string sino_path = input.empty() ? joined(cfg.output_dir, "sinogram") : input;
    Sinogram y = read_sinogram(sino_path);

    Grid grid = cfg.input_volume.empty() ? cfg.phantom.grid : read_volume(cfg.input_volume).grid;
    ForwardModel model = model_from_config(cfg.geometry, grid);
    if (!model.matches(y))
        throw std::runtime_error("gr-fit: sinogram geometry does not match the config");

    FitConfig fit_cfg = cfg.fit;
    fit_cfg.seed = mix_seed(cfg.seed, 2);

    const std::string out = args.out ? *args.out : joined(cfg.output_dir, "x_gr");
    ensure_dir(std::filesystem::path(out).parent_path().string());

    FitObserver observer;
    if (checkpoint_interval > 0) {
        observer = [&](const TraceRow& row, const GaussianCloud& cloud) {
            if (row.iter % checkpoint_interval == 0)
                write_cloud(out + "_iter" + std::to_string(row.iter), cloud);
        };
    }

    FitResult fit = fit_gr(y, model, grid, cfg.loss, cfg.density, fit_cfg, observer);
    write_volume(out, fit.x_gr);
    write_cloud(out + "_gaussians", fit.cloud);

    const std::string trace = trace_path.empty() ? joined(cfg.output_dir, "gr_trace.csv") : trace_path;
    std::ofstream ts(trace);
    ts << "iter,data_loss,tv_loss,total,n_gaussians\n";
    for (const TraceRow& row : fit.trace)
        ts << row.iter << "," << row.data_loss << "," << row.tv_loss << "," << row.total << ","
           << row.n_gaussians << "\n";

    std::cout << "gr-fit: wrote " << out << " (" << fit.cloud.size() << " Gaussians, "
              << fit.trace.size() << " trace rows, " << fit.cap_dropped << " capped)\n";
    return 0;
}

int run_diffuse(const CommonArgs& args, const std::string& input, int chains) {
    PipelineConfig cfg = load_config(args);
    const std::string xgr_path = input.empty() ? joined(cfg.output_dir, "x_gr") : input;
    Volume x_gr = read_volume(xgr_path);
    const Grid& grid = x_gr.grid;

    double peak = 0.0;
    for (float v : x_gr.data)
        peak = std::max(peak, static_cast<double>(v));
    if (!(peak > 0.0))
        throw std::runtime_error("diffuse: reference volume has no positive voxels");
    const double scale = 2.0 / peak, offset = -1.0;

    std::vector<double> u_gr(x_gr.data.size());
    for (std::size_t i = 0; i < u_gr.size(); ++i)
        u_gr[i] = scale * x_gr.data[i] + offset;

    DiffusionSchedule sched =
        build_schedule(cfg.diffusion.steps, cfg.diffusion.beta_start, cfg.diffusion.beta_end);
    ChunkLayout layout = make_chunk_layout(grid.dims[2], cfg.chunking.chunk_len, cfg.chunking.overlap);

    Volume u_vol(grid);
    for (std::size_t i = 0; i < u_gr.size(); ++i)
        u_vol.data[i] = static_cast<float>(u_gr[i]);
    std::vector<Volume> gr_chunks = chunk_volume(u_vol, layout);

    const std::string out = args.out ? *args.out : joined(cfg.output_dir, "x0");
    ensure_dir(std::filesystem::path(out).parent_path().string());

    for (int chain = 0; chain < chains; ++chain) {
        const std::uint64_t chain_seed = chains == 1 ? cfg.seed : mix_seed(cfg.seed, 7000 + chain);
        std::vector<Volume> out_chunks;
        for (std::size_t c = 0; c < layout.spans.size(); ++c) {
            const Grid& cgrid = gr_chunks[c].grid;
            std::vector<double> gr_chunk(gr_chunks[c].data.begin(), gr_chunks[c].data.end());

            GmmComponent comp;
            comp.variance = cfg.diffusion.prior_variance;
            if (cfg.diffusion.prior_mean_source == "zero")
                comp.mean_scalar = cfg.diffusion.prior_mean_scalar;
            else
                comp.mean_field = gr_chunk;  // x_gr (and ground_truth falls back to it here)
            GmmNoisePredictor denoiser(GmmPrior{{comp}});

            GuidanceHook hook = make_guidance_hook(gr_chunk, cgrid, cfg.guidance, sched);
            Volume chunk = sample(denoiser, sched, cgrid,
                                  mix_seed(chain_seed, 100 + static_cast<std::uint64_t>(c)), hook);
            out_chunks.push_back(std::move(chunk));
        }
        Volume u0 = blend_chunks(out_chunks, layout, grid);
        Volume x0(grid);
        for (std::size_t i = 0; i < x0.data.size(); ++i)
            x0.data[i] = static_cast<float>((u0.data[i] - offset) / scale);
        const std::string chain_out = chains == 1 ? out : out + "_chain" + std::to_string(chain);
        write_volume(chain_out, x0);
        std::cout << "diffuse: wrote " << chain_out << " (T=" << sched.T << ", "
                  << layout.spans.size() << " chunks)\n";
    }
    return 0;
}

int run_full_pipeline(const CommonArgs& args) {
    PipelineConfig cfg = load_config(args);
    if (args.out)
        cfg.output_dir = *args.out;
    ReconReport report = run_pipeline(cfg);
    for (const StageTiming& t : report.timings)
        std::cout << "pipeline: " << t.stage << " " << t.seconds << "s\n";
    for (const StageMetrics& sm : report.metrics)
        std::cout << "pipeline: " << metrics_csv_row(sm.label + "_axial", sm.views[0]) << "\n";
    if (!report.failed_stage.empty()) {
        std::cerr << "pipeline: stage '" << report.failed_stage << "' failed: " << report.error
                  << "\n";
        return 1;
    }
    std::cout << "pipeline: report written to " << cfg.output_dir << "\n";
    return 0;
}

int run_metrics(const CommonArgs& args, std::string test_path, std::string ref_path,
                const std::string& label) {
    PipelineConfig cfg = load_config(args);
    if (test_path.empty())
        test_path = joined(cfg.output_dir, "x0");
    if (ref_path.empty())
        ref_path = joined(cfg.output_dir, "ground_truth");
    Volume test = read_volume(test_path);
    Volume ref = read_volume(ref_path);

    std::ostream* os = &std::cout;
    std::ofstream file;
    if (args.out) {
        ensure_dir(std::filesystem::path(*args.out).parent_path().string());
        file.open(*args.out);
        os = &file;
    }
    (*os) << "label,psnr_db,ssim,mse\n";
    for (View view : {View::axial, View::coronal, View::sagittal}) {
        Metrics m = compute_metrics(test, ref, view);
        (*os) << metrics_csv_row(label + "_" + view_name(view), m) << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gaussian-representation tomographic reconstruction toolkit"};
    app.require_subcommand(1);

    CommonArgs phantom_args, project_args, fit_args, diffuse_args, pipeline_args, metrics_args;
    std::string project_input, fit_input, fit_trace, diffuse_input;
    std::string metrics_test, metrics_ref, metrics_label = "volume";
    int fit_checkpoint = 0, diffuse_chains = 1;

    CLI::App* phantom = app.add_subcommand("phantom", "synthesize the ground-truth volume");
    add_common(phantom, phantom_args);

    CLI::App* project = app.add_subcommand("project", "forward-project and apply dose reduction");
    add_common(project, project_args);
    project->add_option("--input", project_input, "volume to project (default: config phantom)");

    CLI::App* fit = app.add_subcommand("gr-fit", "fit the Gaussian set to a sinogram");
    add_common(fit, fit_args);
    fit->add_option("--input", fit_input, "sinogram to fit (default: <output_dir>/sinogram)");
    fit->add_option("--trace", fit_trace, "loss trace CSV path (default: <output_dir>/gr_trace.csv)");
    fit->add_option("--checkpoint-interval", fit_checkpoint,
                    "write a Gaussian-set checkpoint every N iterations (0 = off)");

    CLI::App* diffuse = app.add_subcommand("diffuse", "guided reverse diffusion around a reference");
    add_common(diffuse, diffuse_args);
    diffuse->add_option("--input", diffuse_input, "reference volume (default: <output_dir>/x_gr)");
    diffuse->add_option("--chains", diffuse_chains, "number of independent chains")
        ->check(CLI::PositiveNumber);

    CLI::App* pipeline = app.add_subcommand("pipeline", "run every stage end to end");
    add_common(pipeline, pipeline_args);

    CLI::App* metrics = app.add_subcommand("metrics", "PSNR/SSIM/MSE between two volumes");
    add_common(metrics, metrics_args);
    metrics->add_option("--test", metrics_test, "volume under test (default: <output_dir>/x0)");
    metrics->add_option("--reference", metrics_ref,
                        "reference volume (default: <output_dir>/ground_truth)");
    metrics->add_option("--label", metrics_label, "row label prefix");

    CLI11_PARSE(app, argc, argv);

    const std::string stage = app.get_subcommands().front()->get_name();
    try {
        if (phantom->parsed())
            return run_phantom(phantom_args);
        if (project->parsed())
            return run_project(project_args, project_input);
        if (fit->parsed())
            return run_gr_fit(fit_args, fit_input, fit_checkpoint, fit_trace);
        if (diffuse->parsed())
            return run_diffuse(diffuse_args, diffuse_input, diffuse_chains);
        if (pipeline->parsed())
            return run_full_pipeline(pipeline_args);
        if (metrics->parsed())
            return run_metrics(metrics_args, metrics_test, metrics_ref, metrics_label);
    } catch (const std::exception& e) {
        std::cerr << stage << ": " << e.what() << "\n";
        return 1;
    }
    return 0;
}
