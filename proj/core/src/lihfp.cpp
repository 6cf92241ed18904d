#include "wavesense/lihfp.hpp"

#include <cmath>
#include <optional>

#include "wavesense/error.hpp"

namespace wavesense {

GeoPoint midpoint(const GeoPoint& a, const GeoPoint& b) { return gc_midpoint(a, b); }

namespace {

std::optional<std::size_t> first_arrival_index(const WaveformSeries& w, double threshold) {
    for (std::size_t k = 0; k < w.eta.size(); ++k)
        if (std::abs(w.eta[k]) >= threshold) return k;
    return std::nullopt;
}

double cell_diagonal_m(const BathymetryGrid& bathy) {
    const GridSpec& s = bathy.spec;
    const double mid_lat = 0.5 * (s.lat_min + s.lat_max);
    const double dx = kEarthRadiusM * deg2rad(s.dlon()) * std::cos(deg2rad(mid_lat));
    const double dy = kEarthRadiusM * deg2rad(s.dlat());
    return std::hypot(dx, dy);
}

}  // namespace

WaveformSeries lihfp_virtual_waveform(const std::vector<WaveformSeries>& stations,
                                      const VirtualPointSpec& v, const BathymetryGrid& bathy,
                                      double arrival_threshold) {
    if (stations.empty()) throw Error("no-signal", "no contributing stations");
    if (bathy.is_land_at(v.location))
        throw Error("virtual-on-land", "virtual point falls on a land cell");
    const auto& times = stations.front().times;
    for (const auto& s : stations)
        if (s.times != times)
            throw Error("time-axis-mismatch", "station series must share one time axis");
    const double dt = stations.front().dt();
    if (dt <= 0.0) throw Error("bad-waveform", "station series needs >= 2 samples");

    const double h_v = bathy.depth_at(v.location);
    const double d_floor = cell_diagonal_m(bathy);

    struct Active {
        const WaveformSeries* w;
        double arrival_s;
        double dist_m;
        double green;
    };
    std::vector<Active> active;
    for (const auto& s : stations) {
        const auto idx = first_arrival_index(s, arrival_threshold);
        if (!idx) continue;  // silent stations drop out of the weighted sum
        const double d = haversine_distance(s.location, v.location);
        const double green = std::pow(bathy.depth_at(s.location) / h_v, 0.25);
        // Coincident station: its record is the virtual record.
        if (d < 1e-6) {
            WaveformSeries out = s;
            out.location = v.location;
            for (auto& e : out.eta) e *= green;
            return out;
        }
        active.push_back({&s, times[*idx], d, green});
    }
    if (active.empty()) throw Error("no-signal", "no station detected an arrival");

    double wsum = 0.0, t_v = 0.0;
    for (const auto& a : active) {
        const double w = 1.0 / std::max(a.dist_m, d_floor);
        wsum += w;
        t_v += w * a.arrival_s;
    }
    t_v /= wsum;

    WaveformSeries out;
    out.times = times;
    out.location = v.location;
    out.eta.assign(times.size(), 0.0);
    const auto n = static_cast<long>(times.size());
    for (const auto& a : active) {
        const double w = (1.0 / std::max(a.dist_m, d_floor)) / wsum;
        const long shift = std::lround((t_v - a.arrival_s) / dt);
        for (long k = 0; k < n; ++k) {
            const long src = k - shift;
            if (src < 0 || src >= n) continue;  // zero fill outside the record
            out.eta[static_cast<std::size_t>(k)] +=
                w * a.green * a.w->eta[static_cast<std::size_t>(src)];
        }
    }
    return out;
}

}  // namespace wavesense
