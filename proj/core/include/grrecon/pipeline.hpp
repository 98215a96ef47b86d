// pipeline.hpp - end-to-end orchestration: phantom -> projection with dose
// reduction -> Gaussian fit -> normalized, chunked, guided diffusion ->
// blending -> metrics and report emission.
#pragma once

#include <array>
#include <string>
#include <vector>

#include "grrecon/config.hpp"
#include "grrecon/gr_optimizer.hpp"
#include "grrecon/guidance.hpp"
#include "grrecon/metrics.hpp"
#include "grrecon/types.hpp"

namespace grrecon {

struct StageMetrics {
    std::string label;
    std::array<Metrics, 3> views;  // indexed by View order: axial, coronal, sagittal
};

struct StageTiming {
    std::string stage;
    double seconds = 0.0;
};

struct ReconReport {
    std::vector<std::string> completed;  // stage names in execution order
    std::string failed_stage;            // empty on success
    std::string error;

    // Affine map to diffusion units: u = scale * x + offset, inverted exactly
    // on the way back.
    double norm_scale = 1.0;
    double norm_offset = 0.0;

    int window_lo = 0;  // first guided step index
    int window_hi = 0;  // last guided step index
    int guided_steps = 0;
    std::size_t cap_dropped = 0;
    std::size_t n_gaussians_final = 0;
    // The acquisition geometry is a synthetic stand-in, not a scanner model;
    // surfaced in the report so downstream readers do not over-interpret.
    bool geometry_stand_in = true;

    std::vector<TraceRow> trace;
    std::vector<StageMetrics> metrics;

    bool surrogate_present = false;
    SurrogateReport surrogate;

    std::vector<StageTiming> timings;

    Volume ground_truth, baseline, x_gr, x0;
    Sinogram y_clean, y;
    GaussianCloud cloud;
    bool has_fit = false;
    bool has_diffusion = false;
};

// Back-projection scaled by the least-squares factor <bp, ref>/<bp, bp>; the
// reference rendition of the raw measurements used as the report baseline.
Volume scaled_backprojection(const Sinogram& y, const ForwardModel& model, const Grid& grid,
                             const Volume& reference);

ForwardModel model_from_config(const GeometryBlock& geometry, const Grid& grid);

// Runs every stage, stopping at the first failure: the report then carries
// the failing stage's name and the results of all completed stages. Artifacts
// (volumes, CSVs, slice images, report.json) are written to cfg.output_dir.
ReconReport run_pipeline(const PipelineConfig& cfg);

// Writes report.json, metrics.csv, gr_trace.csv, volume/sinogram files, and
// center-slice graymaps for whatever stages the report contains.
void emit_report(const ReconReport& report, const std::string& outdir);

}  // namespace grrecon
