#include "wavesense/geo.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>

#include <json.hpp>

#include "wavesense/error.hpp"
#include "wavesense/io.hpp"

namespace wavesense {

using json = nlohmann::json;

GeoPoint::GeoPoint(double lon_deg, double lat_deg) : lon(lon_deg), lat(lat_deg) {
    if (!(lat >= -90.0 && lat <= 90.0))
        throw Error("bad-latitude", "latitude out of [-90, 90]: " + std::to_string(lat_deg));
    // Wrap to [-180, 180).
    lon = std::fmod(lon + 180.0, 360.0);
    if (lon < 0.0) lon += 360.0;
    lon -= 180.0;
}

void GridSpec::validate() const {
    if (nlon < 8 || nlat < 8)
        throw Error("bad-grid", "nlon and nlat must be >= 8");
    if (!(lon_max > lon_min) || !(lat_max > lat_min))
        throw Error("bad-grid", "grid bounds must be increasing");
    if (lat_min < -90.0 || lat_max > 90.0)
        throw Error("bad-grid", "latitude bounds out of range");
}

bool GridSpec::contains(const GeoPoint& p) const {
    return p.lon >= lon_min && p.lon <= lon_max && p.lat >= lat_min && p.lat <= lat_max;
}

BathymetryGrid BathymetryGrid::from_heights(const GridSpec& spec, Field z_b) {
    spec.validate();
    if (z_b.rows() != spec.nlat || z_b.cols() != spec.nlon)
        throw Error("bad-grid", "bathymetry shape does not match spec");
    BathymetryGrid b;
    b.spec = spec;
    b.land = z_b >= -kMinDepthClampM;
    b.z_b = std::move(z_b);
    return b;
}

int BathymetryGrid::ocean_cell_count() const {
    return static_cast<int>((!land).count());
}

namespace {

// Nearest cell index, clamped into the grid.
std::pair<int, int> nearest_cell(const GridSpec& spec, const GeoPoint& p) {
    int i = static_cast<int>(std::floor((p.lon - spec.lon_min) / spec.dlon()));
    int j = static_cast<int>(std::floor((p.lat - spec.lat_min) / spec.dlat()));
    i = std::clamp(i, 0, spec.nlon - 1);
    j = std::clamp(j, 0, spec.nlat - 1);
    return {j, i};
}

std::array<double, 3> unit_vector(const GeoPoint& p) {
    const double lon = deg2rad(p.lon), lat = deg2rad(p.lat);
    return {std::cos(lat) * std::cos(lon), std::cos(lat) * std::sin(lon), std::sin(lat)};
}

GeoPoint from_unit_vector(const std::array<double, 3>& v) {
    return GeoPoint(rad2deg(std::atan2(v[1], v[0])),
                    rad2deg(std::atan2(v[2], std::hypot(v[0], v[1]))));
}

}  // namespace

double BathymetryGrid::depth_at(const GeoPoint& p) const {
    auto [j, i] = nearest_cell(spec, p);
    return depth(j, i);
}

bool BathymetryGrid::is_land_at(const GeoPoint& p) const {
    auto [j, i] = nearest_cell(spec, p);
    return land(j, i);
}

const Sensor& SensorNetwork::by_id(const std::string& id) const {
    for (const auto& s : sensors)
        if (s.id == id) return s;
    throw Error("unknown-sensor", "no sensor with id " + id);
}

double haversine_distance(const GeoPoint& a, const GeoPoint& b) {
    const double phi1 = deg2rad(a.lat), phi2 = deg2rad(b.lat);
    const double dphi = phi2 - phi1;
    const double dlam = deg2rad(b.lon - a.lon);
    const double s1 = std::sin(dphi / 2.0), s2 = std::sin(dlam / 2.0);
    const double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
    return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(h)));
}

double travel_time(const GeoPoint& a, const GeoPoint& b,
                   const BathymetryGrid& bathy, int nsamples) {
    if (nsamples < 1) throw Error("bad-argument", "nsamples must be >= 1");
    const double dist = haversine_distance(a, b);
    if (dist == 0.0) return 0.0;

    // Slerp between the endpoint unit vectors; midpoint-rule sample points.
    const auto va = unit_vector(a);
    const auto vb = unit_vector(b);
    double dot = va[0] * vb[0] + va[1] * vb[1] + va[2] * vb[2];
    dot = std::clamp(dot, -1.0, 1.0);
    const double omega = std::acos(dot);
    const double ds = dist / nsamples;

    double total = 0.0;
    int wet = 0;
    for (int k = 0; k < nsamples; ++k) {
        const double f = (k + 0.5) / nsamples;
        std::array<double, 3> v;
        if (omega < 1e-12) {
            v = va;
        } else {
            const double w0 = std::sin((1.0 - f) * omega) / std::sin(omega);
            const double w1 = std::sin(f * omega) / std::sin(omega);
            v = {w0 * va[0] + w1 * vb[0], w0 * va[1] + w1 * vb[1], w0 * va[2] + w1 * vb[2]};
        }
        const GeoPoint p = from_unit_vector(v);
        if (!bathy.is_land_at(p)) ++wet;
        // Land samples fall back to the clamped depth.
        total += ds / std::sqrt(kGravity * bathy.depth_at(p));
    }
    if (wet == 0) throw Error("no-wet-path", "great-circle path crosses only land");
    return total;
}

BathymetryGrid synth_bathymetry(const GridSpec& spec, BathyProfile profile) {
    spec.validate();
    Field z = Field::Constant(spec.nlat, spec.nlon, -4000.0);
    switch (profile) {
        case BathyProfile::flat:
            break;
        case BathyProfile::shelf:
            // Linear ramp -4000 m .. +50 m toward the eastern boundary.
            for (int i = 0; i < spec.nlon; ++i) {
                const double f = (i + 0.5) / spec.nlon;
                z.col(i) = -4000.0 + f * 4050.0;
            }
            break;
        case BathyProfile::seamount: {
            const double lon_c = 0.5 * (spec.lon_min + spec.lon_max);
            const double lat_c = 0.5 * (spec.lat_min + spec.lat_max);
            const double sigma = 0.1 * std::min(spec.lon_max - spec.lon_min,
                                                spec.lat_max - spec.lat_min);
            for (int j = 0; j < spec.nlat; ++j)
                for (int i = 0; i < spec.nlon; ++i) {
                    const double dx = spec.lon_center(i) - lon_c;
                    const double dy = spec.lat_center(j) - lat_c;
                    z(j, i) += 3500.0 * std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
                }
            break;
        }
    }
    return BathymetryGrid::from_heights(spec, std::move(z));
}

double sample_field(const Field& field, const BathymetryGrid& bathy, const GeoPoint& p) {
    const GridSpec& spec = bathy.spec;
    if (!spec.contains(p))
        throw Error("off-grid", "point outside grid bounds");

    // Fractional index into cell-center space.
    const double fi = (p.lon - spec.lon_min) / spec.dlon() - 0.5;
    const double fj = (p.lat - spec.lat_min) / spec.dlat() - 0.5;
    const int i0 = std::clamp(static_cast<int>(std::floor(fi)), 0, spec.nlon - 2);
    const int j0 = std::clamp(static_cast<int>(std::floor(fj)), 0, spec.nlat - 2);
    const double tx = std::clamp(fi - i0, 0.0, 1.0);
    const double ty = std::clamp(fj - j0, 0.0, 1.0);

    const double w[4] = {(1 - tx) * (1 - ty), tx * (1 - ty), (1 - tx) * ty, tx * ty};
    const int jj[4] = {j0, j0, j0 + 1, j0 + 1};
    const int ii[4] = {i0, i0 + 1, i0, i0 + 1};

    double num = 0.0, den = 0.0;
    for (int k = 0; k < 4; ++k) {
        if (bathy.is_land(jj[k], ii[k])) continue;
        num += w[k] * field(jj[k], ii[k]);
        den += w[k];
    }
    if (den == 0.0) throw Error("sensor-on-land", "all stencil cells are land");
    return num / den;
}

GeoPoint gc_midpoint(const GeoPoint& a, const GeoPoint& b) {
    const auto va = unit_vector(a);
    const auto vb = unit_vector(b);
    std::array<double, 3> m = {va[0] + vb[0], va[1] + vb[1], va[2] + vb[2]};
    const double n = std::sqrt(m[0] * m[0] + m[1] * m[1] + m[2] * m[2]);
    if (n < 1e-9) throw Error("antipodal", "midpoint of antipodal points is undefined");
    for (auto& c : m) c /= n;
    return from_unit_vector(m);
}

GeoPoint snap_to_ocean(const BathymetryGrid& bathy, const GeoPoint& p) {
    double best = std::numeric_limits<double>::infinity();
    GeoPoint best_p = p;
    for (int j = 0; j < bathy.spec.nlat; ++j)
        for (int i = 0; i < bathy.spec.nlon; ++i) {
            if (bathy.is_land(j, i)) continue;
            const GeoPoint c(bathy.spec.lon_center(i), bathy.spec.lat_center(j));
            const double d = haversine_distance(p, c);
            if (d < best) {
                best = d;
                best_p = c;
            }
        }
    if (!std::isfinite(best)) throw Error("no-ocean", "grid has no ocean cells");
    return best_p;
}

namespace {

std::filesystem::path sibling_bin(const std::filesystem::path& json_path) {
    auto p = json_path;
    p.replace_extension(".bin");
    return p;
}

}  // namespace

void save_bathymetry(const BathymetryGrid& bathy, const std::filesystem::path& json_path) {
    const GridSpec& s = bathy.spec;
    json header = {{"nlon", s.nlon},       {"nlat", s.nlat},       {"lon_min", s.lon_min},
                   {"lon_max", s.lon_max}, {"lat_min", s.lat_min}, {"lat_max", s.lat_max}};
    std::ofstream out(json_path);
    if (!out) throw Error("io-open", "cannot write " + json_path.string());
    out << header.dump(2) << "\n";

    std::vector<float> flat(static_cast<std::size_t>(s.nlat) * s.nlon);
    for (int j = 0; j < s.nlat; ++j)
        for (int i = 0; i < s.nlon; ++i)
            flat[static_cast<std::size_t>(j) * s.nlon + i] = static_cast<float>(bathy.z_b(j, i));
    io::write_f32(sibling_bin(json_path), flat);
}

BathymetryGrid load_bathymetry(const std::filesystem::path& json_path) {
    std::ifstream in(json_path);
    if (!in) throw Error("io-open", "cannot read " + json_path.string());
    json header = json::parse(in);
    GridSpec s;
    s.nlon = header.at("nlon");
    s.nlat = header.at("nlat");
    s.lon_min = header.at("lon_min");
    s.lon_max = header.at("lon_max");
    s.lat_min = header.at("lat_min");
    s.lat_max = header.at("lat_max");
    s.validate();

    const auto flat = io::read_f32(sibling_bin(json_path),
                                   static_cast<std::size_t>(s.nlat) * s.nlon);
    Field z(s.nlat, s.nlon);
    for (int j = 0; j < s.nlat; ++j)
        for (int i = 0; i < s.nlon; ++i)
            z(j, i) = flat[static_cast<std::size_t>(j) * s.nlon + i];
    return BathymetryGrid::from_heights(s, std::move(z));
}

void save_sensors(const SensorNetwork& net, const std::filesystem::path& path) {
    json arr = json::array();
    for (const auto& s : net.sensors)
        arr.push_back({{"id", s.id}, {"lon", s.location.lon}, {"lat", s.location.lat}});
    std::ofstream out(path);
    if (!out) throw Error("io-open", "cannot write " + path.string());
    out << arr.dump(2) << "\n";
}

SensorNetwork load_sensors(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("io-open", "cannot read " + path.string());
    json arr = json::parse(in);
    SensorNetwork net;
    for (const auto& e : arr)
        net.sensors.push_back({e.at("id").get<std::string>(),
                               GeoPoint(e.at("lon").get<double>(), e.at("lat").get<double>())});
    for (std::size_t i = 0; i < net.sensors.size(); ++i)
        for (std::size_t k = i + 1; k < net.sensors.size(); ++k)
            if (net.sensors[i].id == net.sensors[k].id)
                throw Error("duplicate-sensor", "duplicate sensor id " + net.sensors[i].id);
    return net;
}

}  // namespace wavesense
