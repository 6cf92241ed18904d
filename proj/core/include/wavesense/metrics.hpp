#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "wavesense/geo.hpp"
#include "wavesense/lihfp.hpp"
#include "wavesense/swe.hpp"

namespace wavesense {

/// Normalized masked reconstruction error for one frame. value is absent
/// when no pixel passes the mask.
struct FrameError {
    double time = 0.0;  // seconds
    std::optional<double> value;
    int masked_pixel_count = 0;
};

/// Mean over pixels with |truth| > mask_threshold (land excluded) of
/// |truth - pred| / max|truth| over the frame.
FrameError recon_error_frame(const Field& truth, const Field& pred, const BathymetryGrid& bathy,
                             double time, double mask_threshold = 1e-4);

/// Earliest frame time (minutes) after which every defined error stays
/// below level; absent if the final frame still exceeds it.
std::optional<double> trigger_time(const std::vector<FrameError>& errors, double level = 0.1);

/// First sample time (minutes) with |eta| >= threshold; absent if never.
std::optional<double> arrival_time(const WaveformSeries& w, double threshold = 0.03);

/// max |eta| over samples. Throws on an empty series.
double max_amplitude(const WaveformSeries& w);

/// Sliding-window median with replicate edge padding; kernel must be odd.
WaveformSeries median_filter(const WaveformSeries& w, int kernel = 13);

/// Mean |a.eta - b.eta|; series must share a time axis.
double waveform_mae(const WaveformSeries& a, const WaveformSeries& b);

/// Unnormalized continuity residual dh/dt + div(u h) for interior frame k,
/// central differences in time and space. Pixels whose stencil touches
/// land or the boundary are NaN.
Field continuity_residual_field(const FrameSeries& series, int k, const BathymetryGrid& bathy);

/// Per interior frame (1 .. n-2): mean |residual| over wave pixels
/// (|eta| > mask_threshold) divided by max |dh/dt| over the frame; 0 when
/// the frame is at rest.
std::vector<double> continuity_residual(const FrameSeries& series, const BathymetryGrid& bathy,
                                        double mask_threshold = 1e-4);

struct ComparisonRow {
    std::string epicenter_id;
    std::string virtual_id;
    std::string method;  // "senseiver" or "lihfp"
    std::optional<double> arrival_mae_min;
    double maxamp_mae_m = 0.0;
    double waveform_mae_m = 0.0;
};

struct EvalReport {
    std::vector<FrameError> frame_errors;
    std::optional<double> mean_error;
    std::optional<double> trigger_time_min;
    std::vector<ComparisonRow> rows;
};

void save_frame_errors_csv(const std::vector<FrameError>& errors,
                           const std::filesystem::path& path);
void save_report_csv(const EvalReport& report, const std::filesystem::path& path);
void save_report_json(const EvalReport& report, const std::filesystem::path& path);

void save_waveform_csv(const WaveformSeries& w, const std::string& id,
                       const std::filesystem::path& csv_path);

}  // namespace wavesense
