#include "wavesense/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "wavesense/error.hpp"

namespace wavesense {

using json = nlohmann::json;

FrameError recon_error_frame(const Field& truth, const Field& pred, const BathymetryGrid& bathy,
                             double time, double mask_threshold) {
    if (truth.rows() != pred.rows() || truth.cols() != pred.cols())
        throw Error("shape-mismatch", "truth/pred frames differ in shape");

    double max_abs = 0.0;
    for (int j = 0; j < bathy.spec.nlat; ++j)
        for (int i = 0; i < bathy.spec.nlon; ++i)
            if (!bathy.is_land(j, i)) max_abs = std::max(max_abs, std::abs(truth(j, i)));

    FrameError fe;
    fe.time = time;
    if (max_abs == 0.0) return fe;

    double sum = 0.0;
    int count = 0;
    for (int j = 0; j < bathy.spec.nlat; ++j)
        for (int i = 0; i < bathy.spec.nlon; ++i) {
            if (bathy.is_land(j, i)) continue;
            if (std::abs(truth(j, i)) <= mask_threshold) continue;
            sum += std::abs(truth(j, i) - pred(j, i)) / max_abs;
            ++count;
        }
    fe.masked_pixel_count = count;
    if (count > 0) fe.value = sum / count;
    return fe;
}

std::optional<double> trigger_time(const std::vector<FrameError>& errors, double level) {
    if (errors.empty()) return std::nullopt;
    // Scan from the end for the last defined exceedance.
    int last_exceed = -1;
    for (int k = static_cast<int>(errors.size()) - 1; k >= 0; --k) {
        const auto& e = errors[static_cast<std::size_t>(k)];
        if (e.value && *e.value >= level) {
            last_exceed = k;
            break;
        }
    }
    if (last_exceed < 0) return errors.front().time / 60.0;
    if (last_exceed == static_cast<int>(errors.size()) - 1) return std::nullopt;
    return errors[static_cast<std::size_t>(last_exceed) + 1].time / 60.0;
}

std::optional<double> arrival_time(const WaveformSeries& w, double threshold) {
    for (std::size_t k = 0; k < w.eta.size(); ++k)
        if (std::abs(w.eta[k]) >= threshold) return w.times[k] / 60.0;
    return std::nullopt;
}

double max_amplitude(const WaveformSeries& w) {
    if (w.eta.empty()) throw Error("empty-waveform", "max_amplitude of an empty series");
    double m = 0.0;
    for (double e : w.eta) m = std::max(m, std::abs(e));
    return m;
}

WaveformSeries median_filter(const WaveformSeries& w, int kernel) {
    if (kernel < 1 || kernel % 2 == 0)
        throw Error("bad-kernel", "median filter kernel must be odd and >= 1");
    WaveformSeries out = w;
    if (kernel == 1 || w.eta.empty()) return out;
    const int n = static_cast<int>(w.eta.size());
    const int half = kernel / 2;
    std::vector<double> window(static_cast<std::size_t>(kernel));
    for (int k = 0; k < n; ++k) {
        for (int o = -half; o <= half; ++o) {
            const int idx = std::clamp(k + o, 0, n - 1);  // replicate padding
            window[static_cast<std::size_t>(o + half)] = w.eta[static_cast<std::size_t>(idx)];
        }
        auto mid = window.begin() + half;
        std::nth_element(window.begin(), mid, window.end());
        out.eta[static_cast<std::size_t>(k)] = *mid;
    }
    return out;
}

double waveform_mae(const WaveformSeries& a, const WaveformSeries& b) {
    if (a.eta.size() != b.eta.size())
        throw Error("shape-mismatch", "waveform length mismatch");
    if (a.eta.empty()) throw Error("empty-waveform", "MAE of empty series");
    double sum = 0.0;
    for (std::size_t k = 0; k < a.eta.size(); ++k) sum += std::abs(a.eta[k] - b.eta[k]);
    return sum / static_cast<double>(a.eta.size());
}

Field continuity_residual_field(const FrameSeries& series, int k, const BathymetryGrid& bathy) {
    if (!series.has_uv()) throw Error("missing-velocities", "frame series has no velocity frames");
    if (k < 1 || k > series.frame_count() - 2)
        throw Error("bad-argument", "residual frame index must be interior");
    const GridSpec& spec = series.spec;
    const double dt2 = series.times[static_cast<std::size_t>(k) + 1] -
                       series.times[static_cast<std::size_t>(k) - 1];
    const double dy = kEarthRadiusM * deg2rad(spec.dlat());

    // Thickness h = eta - z_b; z_b is static so dh/dt = deta/dt.
    auto h_at = [&](int frame, int j, int i) {
        return series.eta[static_cast<std::size_t>(frame)](j, i) - bathy.z_b(j, i);
    };
    const Field& u = series.u_c[static_cast<std::size_t>(k)];
    const Field& v = series.v_c[static_cast<std::size_t>(k)];

    Field r = Field::Constant(spec.nlat, spec.nlon, std::numeric_limits<double>::quiet_NaN());
    for (int j = 1; j < spec.nlat - 1; ++j) {
        const double cos_c = std::cos(deg2rad(spec.lat_center(j)));
        const double cos_n = std::cos(deg2rad(spec.lat_center(j + 1)));
        const double cos_s = std::cos(deg2rad(spec.lat_center(j - 1)));
        const double dx = kEarthRadiusM * deg2rad(spec.dlon()) * cos_c;
        for (int i = 1; i < spec.nlon - 1; ++i) {
            if (bathy.is_land(j, i) || bathy.is_land(j, i - 1) || bathy.is_land(j, i + 1) ||
                bathy.is_land(j - 1, i) || bathy.is_land(j + 1, i))
                continue;
            const double dhdt =
                (series.eta[static_cast<std::size_t>(k) + 1](j, i) -
                 series.eta[static_cast<std::size_t>(k) - 1](j, i)) /
                dt2;
            const double dfx = (u(j, i + 1) * h_at(k, j, i + 1) - u(j, i - 1) * h_at(k, j, i - 1)) /
                               (2.0 * dx);
            const double dfy = (v(j + 1, i) * h_at(k, j + 1, i) * cos_n -
                                v(j - 1, i) * h_at(k, j - 1, i) * cos_s) /
                               (2.0 * dy * cos_c);
            r(j, i) = dhdt + dfx + dfy;
        }
    }
    return r;
}

std::vector<double> continuity_residual(const FrameSeries& series, const BathymetryGrid& bathy,
                                        double mask_threshold) {
    if (!series.has_uv()) throw Error("missing-velocities", "frame series has no velocity frames");
    if (series.frame_count() < 3)
        throw Error("bad-argument", "continuity residual needs at least 3 frames");

    std::vector<double> out;
    for (int k = 1; k <= series.frame_count() - 2; ++k) {
        const Field r = continuity_residual_field(series, k, bathy);
        const Field& eta = series.eta[static_cast<std::size_t>(k)];
        const double dt2 = series.times[static_cast<std::size_t>(k) + 1] -
                           series.times[static_cast<std::size_t>(k) - 1];
        double max_dhdt = 0.0, sum = 0.0;
        int count = 0;
        for (int j = 1; j < series.spec.nlat - 1; ++j)
            for (int i = 1; i < series.spec.nlon - 1; ++i) {
                if (std::isnan(r(j, i))) continue;
                const double dhdt = (series.eta[static_cast<std::size_t>(k) + 1](j, i) -
                                     series.eta[static_cast<std::size_t>(k) - 1](j, i)) /
                                    dt2;
                max_dhdt = std::max(max_dhdt, std::abs(dhdt));
                if (std::abs(eta(j, i)) > mask_threshold) {
                    sum += std::abs(r(j, i));
                    ++count;
                }
            }
        out.push_back(max_dhdt == 0.0 || count == 0 ? 0.0 : sum / count / max_dhdt);
    }
    return out;
}

// --- serialization ------------------------------------------------------

namespace {

std::string opt_str(const std::optional<double>& v) {
    return v ? std::to_string(*v) : std::string();
}

}  // namespace

void save_frame_errors_csv(const std::vector<FrameError>& errors,
                           const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("io-open", "cannot write " + path.string());
    out << "time_s,error,masked_pixels\n";
    for (const auto& e : errors)
        out << e.time << "," << opt_str(e.value) << "," << e.masked_pixel_count << "\n";
}

void save_report_csv(const EvalReport& report, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("io-open", "cannot write " + path.string());
    out << "epicenter_id,virtual_id,method,arrival_mae_min,maxamp_mae_m,waveform_mae_m\n";
    for (const auto& r : report.rows)
        out << r.epicenter_id << "," << r.virtual_id << "," << r.method << ","
            << opt_str(r.arrival_mae_min) << "," << r.maxamp_mae_m << "," << r.waveform_mae_m
            << "\n";
}

void save_report_json(const EvalReport& report, const std::filesystem::path& path) {
    json j;
    j["mean_error"] = report.mean_error ? json(*report.mean_error) : json(nullptr);
    j["trigger_time_min"] =
        report.trigger_time_min ? json(*report.trigger_time_min) : json(nullptr);
    j["frame_errors"] = json::array();
    for (const auto& e : report.frame_errors)
        j["frame_errors"].push_back({{"time_s", e.time},
                                     {"error", e.value ? json(*e.value) : json(nullptr)},
                                     {"masked_pixels", e.masked_pixel_count}});
    j["comparisons"] = json::array();
    for (const auto& r : report.rows)
        j["comparisons"].push_back(
            {{"epicenter_id", r.epicenter_id},
             {"virtual_id", r.virtual_id},
             {"method", r.method},
             {"arrival_mae_min", r.arrival_mae_min ? json(*r.arrival_mae_min) : json(nullptr)},
             {"maxamp_mae_m", r.maxamp_mae_m},
             {"waveform_mae_m", r.waveform_mae_m}});
    std::ofstream out(path);
    if (!out) throw Error("io-open", "cannot write " + path.string());
    out << j.dump(2) << "\n";
}

void save_waveform_csv(const WaveformSeries& w, const std::string& id,
                       const std::filesystem::path& csv_path) {
    std::ofstream out(csv_path);
    if (!out) throw Error("io-open", "cannot write " + csv_path.string());
    out << "time_s,eta_m\n";
    for (std::size_t k = 0; k < w.times.size(); ++k)
        out << w.times[k] << "," << w.eta[k] << "\n";

    json sidecar = {{"id", id}, {"lon", w.location.lon}, {"lat", w.location.lat}};
    auto json_path = csv_path;
    json_path.replace_extension(".json");
    std::ofstream side(json_path);
    if (!side) throw Error("io-open", "cannot write " + json_path.string());
    side << sidecar.dump(2) << "\n";
}

}  // namespace wavesense
