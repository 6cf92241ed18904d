#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

namespace wavesense {

inline constexpr double kEarthRadiusM = 6'371'000.0;
inline constexpr double kGravity = 9.80665;

/// Cells with seafloor shallower than this are treated as land; wave-speed
/// and drag denominators are clamped to it.
inline constexpr double kMinDepthClampM = 10.0;

inline constexpr double deg2rad(double d) { return d * M_PI / 180.0; }
inline constexpr double rad2deg(double r) { return r * 180.0 / M_PI; }

/// Longitude/latitude pair in degrees. Longitude is normalized to
/// [-180, 180) at construction; latitude outside [-90, 90] throws.
struct GeoPoint {
    GeoPoint() = default;
    GeoPoint(double lon_deg, double lat_deg);

    double lon = 0.0;
    double lat = 0.0;

    bool operator==(const GeoPoint&) const = default;
};

/// Uniform lat-lon grid. Scalar fields live at cell centers; the field
/// layout is Eigen (nlat rows, nlon cols) with row j = latitude index.
struct GridSpec {
    double lon_min = 0.0, lon_max = 0.0;
    double lat_min = 0.0, lat_max = 0.0;
    int nlon = 0, nlat = 0;

    void validate() const;

    double dlon() const { return (lon_max - lon_min) / nlon; }
    double dlat() const { return (lat_max - lat_min) / nlat; }
    double lon_center(int i) const { return lon_min + (i + 0.5) * dlon(); }
    double lat_center(int j) const { return lat_min + (j + 0.5) * dlat(); }
    bool contains(const GeoPoint& p) const;

    bool operator==(const GridSpec&) const = default;
};

using Field = Eigen::ArrayXXd;        // (nlat, nlon)
using MaskField = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Seafloor height raster: z_b negative below sea level, land mask derived
/// as z_b >= -kMinDepthClampM.
struct BathymetryGrid {
    GridSpec spec;
    Field z_b;
    MaskField land;

    static BathymetryGrid from_heights(const GridSpec& spec, Field z_b);

    bool is_land(int j, int i) const { return land(j, i); }
    /// Clamped water column depth, meters (positive).
    double depth(int j, int i) const { return std::max(-z_b(j, i), kMinDepthClampM); }
    int ocean_cell_count() const;
    /// Depth at an arbitrary point, nearest-cell lookup (clamped to bounds).
    double depth_at(const GeoPoint& p) const;
    bool is_land_at(const GeoPoint& p) const;
};

struct Sensor {
    std::string id;
    GeoPoint location;
};

struct SensorNetwork {
    std::vector<Sensor> sensors;

    const Sensor& by_id(const std::string& id) const;
};

enum class BathyProfile { flat, shelf, seamount };

double haversine_distance(const GeoPoint& a, const GeoPoint& b);

/// Long-wave travel time along the great circle from a to b, midpoint-rule
/// sampling of ds / sqrt(g H) with H clamped below by kMinDepthClampM on
/// land samples. Throws "no-wet-path" if every sample is land.
double travel_time(const GeoPoint& a, const GeoPoint& b,
                   const BathymetryGrid& bathy, int nsamples = 256);

BathymetryGrid synth_bathymetry(const GridSpec& spec, BathyProfile profile);

/// Bilinear sample over the 4 surrounding cell centers with land cells
/// dropped from the stencil (weights renormalized). Throws
/// "sensor-on-land" when the whole stencil is land.
double sample_field(const Field& field, const BathymetryGrid& bathy, const GeoPoint& p);

/// Great-circle midpoint. Throws on antipodal inputs.
GeoPoint gc_midpoint(const GeoPoint& a, const GeoPoint& b);

/// Nearest ocean cell center; used to snap configured sensor locations.
GeoPoint snap_to_ocean(const BathymetryGrid& bathy, const GeoPoint& p);

// -- file formats -----------------------------------------------------------
// Bathymetry raster: JSON header {nlon, nlat, lon_min, lon_max, lat_min,
// lat_max} plus a sibling .bin of little-endian f32, row-major with latitude
// as the slow index. Sensor network: JSON list of {id, lon, lat}.

void save_bathymetry(const BathymetryGrid& bathy, const std::filesystem::path& json_path);
BathymetryGrid load_bathymetry(const std::filesystem::path& json_path);

void save_sensors(const SensorNetwork& net, const std::filesystem::path& path);
SensorNetwork load_sensors(const std::filesystem::path& path);

}  // namespace wavesense
