#include "grrecon/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "grrecon/chunking.hpp"
#include "grrecon/diffusion.hpp"
#include "grrecon/io.hpp"
#include "grrecon/noise.hpp"
#include "grrecon/phantom.hpp"
#include "grrecon/projector.hpp"
#include "grrecon/rng.hpp"

#include "json.hpp"

namespace grrecon {
namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

// Seed streams derived from the master seed: 1 = dose reduction, 2 = fit
// initialization, 100 + c = diffusion chain of chunk c.
constexpr std::uint64_t kStreamNoise = 1;
constexpr std::uint64_t kStreamFit = 2;
constexpr std::uint64_t kStreamChunkBase = 100;

template <typename F>
bool run_stage(ReconReport& rep, const std::string& name, F&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
        fn();
    } catch (const std::exception& e) {
        rep.failed_stage = name;
        rep.error = e.what();
        return false;
    }
    const auto t1 = std::chrono::steady_clock::now();
    rep.timings.push_back({name, std::chrono::duration<double>(t1 - t0).count()});
    rep.completed.push_back(name);
    return true;
}

std::vector<float> center_slice(const Volume& v, View view, int& w, int& h) {
    const int nx = v.grid.dims[0], ny = v.grid.dims[1], nz = v.grid.dims[2];
    std::vector<float> out;
    if (view == View::axial) {
        w = nx; h = ny;
        const int z = nz / 2;
        out.resize(static_cast<std::size_t>(w) * h);
        for (int y = 0; y < ny; ++y)
            for (int x = 0; x < nx; ++x) out[x + static_cast<std::size_t>(w) * y] = v.at(x, y, z);
    } else if (view == View::coronal) {
        w = nx; h = nz;
        const int y = ny / 2;
        out.resize(static_cast<std::size_t>(w) * h);
        for (int z = 0; z < nz; ++z)
            for (int x = 0; x < nx; ++x) out[x + static_cast<std::size_t>(w) * z] = v.at(x, y, z);
    } else {
        w = ny; h = nz;
        const int x = nx / 2;
        out.resize(static_cast<std::size_t>(w) * h);
        for (int z = 0; z < nz; ++z)
            for (int y = 0; y < ny; ++y) out[y + static_cast<std::size_t>(w) * z] = v.at(x, y, z);
    }
    return out;
}

void write_slices(const fs::path& dir, const std::string& label, const Volume& v) {
    for (View view : {View::axial, View::coronal, View::sagittal}) {
        int w = 0, h = 0;
        const std::vector<float> px = center_slice(v, view, w, h);
        write_pgm((dir / (label + "_" + view_name(view) + ".pgm")).string(), px, w, h);
    }
}

StageMetrics metrics_for(const std::string& label, const Volume& test, const Volume& ref) {
    StageMetrics sm;
    sm.label = label;
    sm.views[0] = compute_metrics(test, ref, View::axial);
    sm.views[1] = compute_metrics(test, ref, View::coronal);
    sm.views[2] = compute_metrics(test, ref, View::sagittal);
    return sm;
}

Volume volume_from_field(const Grid& grid, const std::vector<double>& field) {
    Volume v(grid);
    for (std::size_t i = 0; i < field.size(); ++i) v.data[i] = static_cast<float>(field[i]);
    return v;
}

}  // namespace

Volume scaled_backprojection(const Sinogram& y, const ForwardModel& model, const Grid& grid,
                             const Volume& reference) {
    Volume bp = back_project(y, model, grid);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < bp.data.size(); ++i) {
        num += static_cast<double>(bp.data[i]) * reference.data[i];
        den += static_cast<double>(bp.data[i]) * bp.data[i];
    }
    const double a = den > 0.0 ? num / den : 0.0;
    for (float& v : bp.data) v = static_cast<float>(a * v);
    return bp;
}

ForwardModel model_from_config(const GeometryBlock& geometry, const Grid& grid) {
    ForwardModel m = ForwardModel::for_grid(grid, geometry.n_angles, geometry.n_det,
                                            geometry.det_spacing_mm);
    m.randoms = geometry.randoms;
    m.scatter = geometry.scatter;
    m.validate();
    return m;
}

ReconReport run_pipeline(const PipelineConfig& cfg) {
    cfg.validate();
    ReconReport rep;

    Grid grid;
    ForwardModel model;
    DiffusionSchedule sched;
    ChunkLayout layout;
    std::vector<double> u_gt, u_xgr;       // normalized ground truth / reference
    std::vector<Volume> sampled_chunks;    // diffusion-unit chunk results
    std::vector<Volume> snapshot_chunks;   // pre-guidance state at the first guided step
    bool have_snapshot = false;
    Volume u0;                             // blended diffusion-unit volume

    bool ok = run_stage(rep, "phantom", [&] {
        rep.ground_truth =
            cfg.input_volume.empty() ? create_phantom(cfg.phantom) : read_volume(cfg.input_volume);
        grid = rep.ground_truth.grid;
    });

    if (ok) ok = run_stage(rep, "project", [&] {
        model = model_from_config(cfg.geometry, grid);
        rep.y_clean = forward_project(rep.ground_truth, model);
        Sinogram expected = rep.y_clean;
        for (std::size_t i = 0; i < expected.data.size(); ++i)
            expected.data[i] = static_cast<float>(expected.data[i] + model.background(i));
        rep.y = cfg.apply_noise
                    ? apply_dose_reduction(expected, cfg.drf, mix_seed(cfg.seed, kStreamNoise))
                    : expected;
    });

    if (ok) ok = run_stage(rep, "gr-fit", [&] {
        FitConfig fit_cfg = cfg.fit;
        fit_cfg.seed = mix_seed(cfg.seed, kStreamFit);
        FitResult fit = fit_gr(rep.y, model, grid, cfg.loss, cfg.density, fit_cfg);
        rep.x_gr = std::move(fit.x_gr);
        rep.cloud = std::move(fit.cloud);
        rep.trace = std::move(fit.trace);
        rep.cap_dropped = fit.cap_dropped;
        rep.n_gaussians_final = rep.cloud.size();
        rep.has_fit = true;
    });

    if (ok) ok = run_stage(rep, "normalize", [&] {
        float ref_max = 0.0f;
        for (float v : rep.x_gr.data) ref_max = std::max(ref_max, v);
        if (ref_max > 0.0f) {
            rep.norm_scale = 2.0 / static_cast<double>(ref_max);
            rep.norm_offset = -1.0;
        } else {
            rep.norm_scale = 1.0;
            rep.norm_offset = 0.0;
        }
        const std::size_t n = grid.voxel_count();
        u_gt.resize(n);
        u_xgr.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            u_gt[i] = rep.norm_scale * rep.ground_truth.data[i] + rep.norm_offset;
            u_xgr[i] = rep.norm_scale * rep.x_gr.data[i] + rep.norm_offset;
        }
    });

    if (ok) ok = run_stage(rep, "diffuse", [&] {
        sched = build_schedule(cfg.diffusion.steps, cfg.diffusion.beta_start,
                               cfg.diffusion.beta_end);
        rep.window_lo = static_cast<int>(std::lround(cfg.guidance.window_start * sched.T));
        rep.window_hi = static_cast<int>(std::lround(cfg.guidance.window_end * sched.T));
        for (int t = 1; t <= sched.T; ++t)
            if (in_window(t, sched.T, cfg.guidance)) ++rep.guided_steps;
        const int t_snap = std::min(rep.window_hi, sched.T);
        const bool window_active = rep.guided_steps > 0;

        layout = make_chunk_layout(grid.dims[2], cfg.chunking.chunk_len, cfg.chunking.overlap);
        Volume u_xgr_vol = volume_from_field(grid, u_xgr);
        std::vector<Volume> xgr_chunks = chunk_volume(u_xgr_vol, layout);
        std::vector<Volume> prior_chunks;
        if (cfg.diffusion.prior_mean_source == "ground_truth")
            prior_chunks = chunk_volume(volume_from_field(grid, u_gt), layout);
        else if (cfg.diffusion.prior_mean_source == "x_gr")
            prior_chunks = xgr_chunks;

        for (std::size_t c = 0; c < layout.spans.size(); ++c) {
            const Grid& cgrid = xgr_chunks[c].grid;
            const std::size_t n = cgrid.voxel_count();
            GmmPrior prior;
            GmmComponent comp;
            comp.weight = 1.0;
            comp.variance = cfg.diffusion.prior_variance;
            if (prior_chunks.empty())
                comp.mean_scalar = cfg.diffusion.prior_mean_scalar;
            else
                comp.mean_field.assign(prior_chunks[c].data.begin(), prior_chunks[c].data.end());
            prior.components.push_back(std::move(comp));
            GmmNoisePredictor denoiser(std::move(prior));

            std::vector<double> xgr_field(xgr_chunks[c].data.begin(), xgr_chunks[c].data.end());
            GuidanceHook guide = make_guidance_hook(std::move(xgr_field), cgrid, cfg.guidance, sched);
            Volume snap(cgrid);
            bool captured = false;
            GuidanceHook hook = [&](std::vector<double>& x, int t) {
                if (window_active && t == t_snap && !captured) {
                    for (std::size_t i = 0; i < n; ++i) snap.data[i] = static_cast<float>(x[i]);
                    captured = true;
                }
                guide(x, t);
            };
            std::vector<double> x0 = sample_raw(denoiser, sched, n, mix_seed(cfg.seed, kStreamChunkBase + c), hook);
            sampled_chunks.push_back(volume_from_field(cgrid, x0));
            if (captured) snapshot_chunks.push_back(std::move(snap));
        }
        have_snapshot = !snapshot_chunks.empty() &&
                        snapshot_chunks.size() == layout.spans.size();
        rep.has_diffusion = true;
    });

    if (ok) ok = run_stage(rep, "blend", [&] {
        u0 = blend_chunks(sampled_chunks, layout, grid);
        rep.x0 = Volume(grid);
        for (std::size_t i = 0; i < u0.data.size(); ++i)
            rep.x0.data[i] =
                static_cast<float>((static_cast<double>(u0.data[i]) - rep.norm_offset) /
                                   rep.norm_scale);
    });

    if (ok) ok = run_stage(rep, "metrics", [&] {
        rep.baseline = scaled_backprojection(rep.y, model, grid, rep.ground_truth);
        rep.metrics.push_back(metrics_for("lowdose_baseline", rep.baseline, rep.ground_truth));
        rep.metrics.push_back(metrics_for("x_gr", rep.x_gr, rep.ground_truth));
        rep.metrics.push_back(metrics_for("x0", rep.x0, rep.ground_truth));

        if (have_snapshot) {
            Volume snap_full = blend_chunks(snapshot_chunks, layout, grid);
            double d_inf = 0.0;
            for (std::size_t i = 0; i < u_gt.size(); ++i)
                d_inf = std::max(d_inf, std::abs(u_gt[i] - u_xgr[i]));
            const double xi = cfg.guidance.xi > 0.0 ? cfg.guidance.xi
                                                    : (d_inf > 0.0 ? 2.0 * d_inf : 1e-3);
            rep.surrogate = surrogate_check(snap_full, volume_from_field(grid, u_xgr),
                                            volume_from_field(grid, u_gt), xi);
            rep.surrogate_present = true;
        }
    });

    if (ok) {
        run_stage(rep, "report", [&] { emit_report(rep, cfg.output_dir); });
    } else {
        try {
            emit_report(rep, cfg.output_dir);  // partial report for completed stages
        } catch (...) {
        }
    }
    return rep;
}

void emit_report(const ReconReport& rep, const std::string& outdir) {
    const fs::path dir(outdir);
    fs::create_directories(dir);

    auto have = [](const Volume& v) { return !v.data.empty(); };

    if (have(rep.ground_truth)) {
        write_volume((dir / "ground_truth").string(), rep.ground_truth);
        write_slices(dir, "ground_truth", rep.ground_truth);
    }
    if (!rep.y_clean.data.empty()) write_sinogram((dir / "sinogram_clean").string(), rep.y_clean);
    if (!rep.y.data.empty()) write_sinogram((dir / "sinogram_lowdose").string(), rep.y);
    if (have(rep.baseline)) {
        write_volume((dir / "lowdose_baseline").string(), rep.baseline);
        write_slices(dir, "lowdose_baseline", rep.baseline);
    }
    if (rep.has_fit) {
        write_volume((dir / "x_gr").string(), rep.x_gr);
        write_slices(dir, "x_gr", rep.x_gr);
        write_cloud((dir / "gaussians").string(), rep.cloud);
        std::ofstream trace(dir / "gr_trace.csv");
        trace << "iter,data_loss,tv_loss,total,n_gaussians\n";
        trace.precision(12);
        for (const TraceRow& r : rep.trace)
            trace << r.iter << ',' << r.data_loss << ',' << r.tv_loss << ',' << r.total << ','
                  << r.n_gaussians << '\n';
    }
    if (have(rep.x0)) {
        write_volume((dir / "x0").string(), rep.x0);
        write_slices(dir, "x0", rep.x0);
    }
    if (!rep.metrics.empty()) {
        std::ofstream csv(dir / "metrics.csv");
        csv << "label,psnr_db,ssim,mse\n";
        for (const StageMetrics& sm : rep.metrics)
            for (int v = 0; v < 3; ++v)
                csv << metrics_csv_row(sm.label + "_" + view_name(static_cast<View>(v)),
                                       sm.views[v])
                    << '\n';
    }

    ordered_json j;
    j["completed_stages"] = rep.completed;
    j["failed_stage"] = rep.failed_stage;
    j["error"] = rep.error;
    j["geometry_stand_in"] = rep.geometry_stand_in;
    j["normalization"] = {{"scale", rep.norm_scale}, {"offset", rep.norm_offset}};
    j["guidance_window"] = {{"first_step", rep.window_lo},
                            {"last_step", rep.window_hi},
                            {"guided_steps", rep.guided_steps}};
    j["gr"] = {{"n_gaussians_final", rep.n_gaussians_final},
               {"cap_dropped", rep.cap_dropped},
               {"iterations_run", rep.trace.size()}};
    ordered_json jm = ordered_json::array();
    for (const StageMetrics& sm : rep.metrics)
        for (int v = 0; v < 3; ++v) {
            const Metrics& m = sm.views[v];
            jm.push_back({{"label", sm.label},
                          {"view", view_name(static_cast<View>(v))},
                          {"psnr_db", std::isfinite(m.psnr) ? ordered_json(m.psnr)
                                                            : ordered_json("inf")},
                          {"ssim", m.ssim},
                          {"mse", m.mse}});
        }
    j["metrics"] = jm;
    if (rep.surrogate_present) {
        j["surrogate"] = {{"precondition_met", rep.surrogate.precondition_met},
                          {"applicable", rep.surrogate.applicable},
                          {"n_qualifying", rep.surrogate.n_qualifying},
                          {"qualifying_fraction", rep.surrogate.qualifying_fraction},
                          {"sign_agreement", rep.surrogate.sign_agreement},
                          {"grad_cosine", rep.surrogate.grad_cosine}};
    } else {
        j["surrogate"] = nullptr;
    }
    ordered_json jt = ordered_json::array();
    for (const StageTiming& t : rep.timings)
        jt.push_back({{"stage", t.stage}, {"seconds", t.seconds}});
    j["timings_sec"] = jt;

    std::ofstream out(dir / "report.json");
    if (!out) throw std::runtime_error("emit_report: cannot write report.json");
    out << j.dump(2) << '\n';
}

}  // namespace grrecon
