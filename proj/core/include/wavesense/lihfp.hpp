#pragma once

#include <string>
#include <vector>

#include "wavesense/geo.hpp"

namespace wavesense {

/// Wave height time series at a fixed point, uniform sample spacing.
struct WaveformSeries {
    std::vector<double> times;  // seconds
    std::vector<double> eta;    // meters
    GeoPoint location;

    double dt() const { return times.size() > 1 ? times[1] - times[0] : 0.0; }
};

struct VirtualPointSpec {
    GeoPoint location;
    std::vector<std::string> station_ids;  // typically the two midpoint stations
};

/// Great-circle midpoint of two station locations.
GeoPoint midpoint(const GeoPoint& a, const GeoPoint& b);

/// Time-aligned, depth-corrected interpolation of station waveforms at an
/// unsensed point:
///   1. per-station arrival time at arrival_threshold (stations that never
///      arrive are dropped; "no-signal" if all drop);
///   2. virtual arrival = inverse-distance-weighted mean of station arrivals;
///   3. shift each station series by (T_v - T_i), whole samples, zero fill;
///   4. scale by the Green's-law shoaling factor (H_i / H_v)^(1/4);
///   5. inverse-distance-weighted average, w_i = 1/max(d_i, d_floor) with
///      d_floor one grid cell diagonal. A station coincident with the
///      virtual point short-circuits to its own (depth-corrected) waveform.
WaveformSeries lihfp_virtual_waveform(const std::vector<WaveformSeries>& stations,
                                      const VirtualPointSpec& v, const BathymetryGrid& bathy,
                                      double arrival_threshold = 0.03);

}  // namespace wavesense
