#include "wavesense/swe.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "wavesense/error.hpp"
#include "wavesense/io.hpp"

namespace wavesense {

using json = nlohmann::json;

void PhysicalConstants::validate() const {
    // omega = 0 is allowed: rotation-free runs are used by dispersion checks.
    if (g <= 0.0 || omega < 0.0) throw Error("bad-constants", "g must be positive, omega >= 0");
    if (beta < 0.0 || beta >= 1.0) throw Error("bad-constants", "beta must be in [0, 1)");
    if (c_d < 0.0) throw Error("bad-constants", "c_d must be >= 0");
}

double coriolis_parameter(double lat_deg, const PhysicalConstants& consts) {
    if (lat_deg < -90.0 || lat_deg > 90.0)
        throw Error("bad-latitude", "latitude out of [-90, 90]");
    return 2.0 * consts.omega * std::sin(deg2rad(lat_deg));
}

namespace {

// Per-row metric factors of the C-grid on the sphere.
struct Geometry {
    explicit Geometry(const GridSpec& spec) {
        nlat = spec.nlat;
        nlon = spec.nlon;
        const double dlam = deg2rad(spec.dlon());
        const double dphi = deg2rad(spec.dlat());
        dy = kEarthRadiusM * dphi;
        dx.resize(nlat);
        area.resize(nlat);
        lx_edge.resize(nlat + 1);
        min_dx = std::numeric_limits<double>::infinity();
        for (int j = 0; j < nlat; ++j) {
            dx[j] = kEarthRadiusM * dlam * std::cos(deg2rad(spec.lat_center(j)));
            area[j] = dx[j] * dy;
            min_dx = std::min({min_dx, dx[j], dy});
        }
        for (int j = 0; j <= nlat; ++j)
            lx_edge[j] = kEarthRadiusM * dlam *
                         std::cos(deg2rad(spec.lat_min + j * spec.dlat()));
    }

    int nlat, nlon;
    double dy, min_dx;
    std::vector<double> dx, area, lx_edge;
};

// Wet masks for the staggered velocity points. A face is wet when both
// adjacent cells are ocean; domain-boundary faces are always dry (no flow).
struct FaceMasks {
    explicit FaceMasks(const BathymetryGrid& bathy) {
        const int nlat = bathy.spec.nlat, nlon = bathy.spec.nlon;
        u_wet = MaskField::Constant(nlat, nlon + 1, false);
        v_wet = MaskField::Constant(nlat + 1, nlon, false);
        for (int j = 0; j < nlat; ++j)
            for (int i = 1; i < nlon; ++i)
                u_wet(j, i) = !bathy.is_land(j, i - 1) && !bathy.is_land(j, i);
        for (int j = 1; j < nlat; ++j)
            for (int i = 0; i < nlon; ++i)
                v_wet(j, i) = !bathy.is_land(j - 1, i) && !bathy.is_land(j, i);
    }
    MaskField u_wet, v_wet;
};

// Five-point Laplacian on a staggered field; dry or out-of-range neighbors
// contribute zero gradient.
Field laplacian(const Field& f, const MaskField& wet, const std::vector<double>& dx_row,
                double dy, bool row_is_center) {
    const int rows = static_cast<int>(f.rows()), cols = static_cast<int>(f.cols());
    Field out = Field::Zero(rows, cols);
    for (int j = 0; j < rows; ++j) {
        // v lives on latitude edges; average the two adjacent center row
        // spacings (clamped at the walls) so the stencil mirrors N-S.
        const int last = static_cast<int>(dx_row.size()) - 1;
        const double dxj =
            row_is_center
                ? dx_row[std::min(j, last)]
                : 0.5 * (dx_row[std::clamp(j - 1, 0, last)] + dx_row[std::clamp(j, 0, last)]);
        for (int i = 0; i < cols; ++i) {
            if (!wet(j, i)) continue;
            const double c = f(j, i);
            const double fw = (i > 0 && wet(j, i - 1)) ? f(j, i - 1) : c;
            const double fe = (i < cols - 1 && wet(j, i + 1)) ? f(j, i + 1) : c;
            const double fs = (j > 0 && wet(j - 1, i)) ? f(j - 1, i) : c;
            const double fn = (j < rows - 1 && wet(j + 1, i)) ? f(j + 1, i) : c;
            out(j, i) = (fe - 2.0 * c + fw) / (dxj * dxj) + (fn - 2.0 * c + fs) / (dy * dy);
        }
    }
    return out;
}

double resolve_nu4(const PhysicalConstants& consts, double min_dx, double dt) {
    if (consts.nu4 >= 0.0) return consts.nu4;
    return 0.01 * std::pow(min_dx, 4) / dt;
}

void apply_sponge(SWEState& s, const BathymetryGrid& bathy, double dt) {
    constexpr int kRampCells = 10;
    constexpr double kMaxRate = 1.0 / 300.0;  // 1/s at the wall
    const int nlat = bathy.spec.nlat, nlon = bathy.spec.nlon;
    auto rate = [&](int j, int i) {
        const int d = std::min({i, j, nlon - 1 - i, nlat - 1 - j});
        return d >= kRampCells ? 0.0 : kMaxRate * (1.0 - static_cast<double>(d) / kRampCells);
    };
    for (int j = 0; j < nlat; ++j)
        for (int i = 0; i < nlon; ++i) {
            if (bathy.is_land(j, i)) continue;
            const double r = rate(j, i);
            if (r == 0.0) continue;
            const double k = std::exp(-r * dt);
            const double eta = s.h(j, i) + bathy.z_b(j, i);
            s.h(j, i) = -bathy.z_b(j, i) + k * eta;
        }
    for (int j = 0; j < nlat; ++j)
        for (int i = 0; i <= nlon; ++i) {
            const double r = rate(j, std::min(i, nlon - 1));
            if (r > 0.0) s.u(j, i) *= std::exp(-r * dt);
        }
    for (int j = 0; j <= nlat; ++j)
        for (int i = 0; i < nlon; ++i) {
            const double r = rate(std::min(j, nlat - 1), i);
            if (r > 0.0) s.v(j, i) *= std::exp(-r * dt);
        }
}

void check_finite(const SWEState& s, const BathymetryGrid& bathy) {
    for (int j = 0; j < bathy.spec.nlat; ++j)
        for (int i = 0; i < bathy.spec.nlon; ++i)
            if (!bathy.is_land(j, i) && !std::isfinite(s.h(j, i)))
                throw Error("blow-up", "non-finite thickness at cell (lat " + std::to_string(j) +
                                           ", lon " + std::to_string(i) + "), t = " +
                                           std::to_string(s.t) + " s");
    if (!s.u.isFinite().all() || !s.v.isFinite().all())
        throw Error("blow-up", "non-finite velocity at t = " + std::to_string(s.t) + " s");
}

}  // namespace

SWEState initial_condition(const EpicenterSource& src, const BathymetryGrid& bathy) {
    if (bathy.is_land_at(src.x0))
        throw Error("epicenter-on-land", "source location falls on a land cell");
    if (src.amplitude <= 0.0 || src.width_param <= 0.0)
        throw Error("bad-source", "amplitude and width_param must be positive");

    const GridSpec& spec = bathy.spec;
    SWEState s;
    s.h = Field::Zero(spec.nlat, spec.nlon);
    s.u = Field::Zero(spec.nlat, spec.nlon + 1);
    s.v = Field::Zero(spec.nlat + 1, spec.nlon);
    s.t = 0.0;
    for (int j = 0; j < spec.nlat; ++j)
        for (int i = 0; i < spec.nlon; ++i) {
            if (bathy.is_land(j, i)) continue;
            const GeoPoint c(spec.lon_center(i), spec.lat_center(j));
            const double r = haversine_distance(c, src.x0) / kEarthRadiusM;  // radians
            const double arg = std::pow(src.width_param * r * r, 4);
            const double eta = arg > 700.0 ? 0.0 : src.amplitude * std::exp(-arg);
            s.h(j, i) = -bathy.z_b(j, i) + eta;
        }
    return s;
}

SWEState step(const SWEState& state, const BathymetryGrid& bathy,
              const PhysicalConstants& consts, double dt, BoundaryCondition bc) {
    consts.validate();
    const GridSpec& spec = bathy.spec;
    const Geometry geo(spec);
    const FaceMasks masks(bathy);
    const int nlat = spec.nlat, nlon = spec.nlon;
    const double nu4 = resolve_nu4(consts, geo.min_dx, dt);

    SWEState out;
    out.t = state.t + dt;

    // Continuity, flux form: dh/dt = -div(u h). Face thickness is the
    // centered average; closed/land faces carry zero velocity so the
    // global sum telescopes exactly.
    Field flux_e = Field::Zero(nlat, nlon + 1);
    Field flux_n = Field::Zero(nlat + 1, nlon);
    for (int j = 0; j < nlat; ++j)
        for (int i = 1; i < nlon; ++i)
            if (masks.u_wet(j, i))
                flux_e(j, i) = state.u(j, i) * 0.5 * (state.h(j, i - 1) + state.h(j, i)) * geo.dy;
    for (int j = 1; j < nlat; ++j)
        for (int i = 0; i < nlon; ++i)
            if (masks.v_wet(j, i))
                flux_n(j, i) =
                    state.v(j, i) * 0.5 * (state.h(j - 1, i) + state.h(j, i)) * geo.lx_edge[j];

    out.h = Field::Zero(nlat, nlon);
    for (int j = 0; j < nlat; ++j)
        for (int i = 0; i < nlon; ++i) {
            if (bathy.is_land(j, i)) continue;
            const double div = flux_e(j, i + 1) - flux_e(j, i) + flux_n(j + 1, i) - flux_n(j, i);
            out.h(j, i) = state.h(j, i) - dt * div / geo.area[j];
        }

    Field eta = Field::Zero(nlat, nlon);
    for (int j = 0; j < nlat; ++j)
        for (int i = 0; i < nlon; ++i)
            if (!bathy.is_land(j, i)) eta(j, i) = out.h(j, i) + bathy.z_b(j, i);

    // Momentum, forward-backward: the pressure gradient sees the updated h.
    const double pg_coef = (1.0 - consts.beta) * consts.g;
    Field lap2_u, lap2_v;
    if (nu4 > 0.0) {
        lap2_u = laplacian(laplacian(state.u, masks.u_wet, geo.dx, geo.dy, true),
                           masks.u_wet, geo.dx, geo.dy, true);
        lap2_v = laplacian(laplacian(state.v, masks.v_wet, geo.dx, geo.dy, false),
                           masks.v_wet, geo.dx, geo.dy, false);
    }

    out.u = Field::Zero(nlat, nlon + 1);
    for (int j = 0; j < nlat; ++j) {
        const double f = coriolis_parameter(spec.lat_center(j), consts);
        for (int i = 1; i < nlon; ++i) {
            if (!masks.u_wet(j, i)) continue;
            const double uc = state.u(j, i);
            const double vbar = 0.25 * (state.v(j, i - 1) + state.v(j, i) +
                                        state.v(j + 1, i - 1) + state.v(j + 1, i));
            const double pg = -pg_coef * (eta(j, i) - eta(j, i - 1)) / geo.dx[j];

            // First-order upwind advection.
            double dudx, dudy;
            if (uc >= 0.0)
                dudx = (uc - ((i > 1 && masks.u_wet(j, i - 1)) ? state.u(j, i - 1) : uc)) / geo.dx[j];
            else
                dudx = ((((i < nlon - 1) && masks.u_wet(j, i + 1)) ? state.u(j, i + 1) : uc) - uc) /
                       geo.dx[j];
            if (vbar >= 0.0)
                dudy = (uc - ((j > 0 && masks.u_wet(j - 1, i)) ? state.u(j - 1, i) : uc)) / geo.dy;
            else
                dudy = ((((j < nlat - 1) && masks.u_wet(j + 1, i)) ? state.u(j + 1, i) : uc) - uc) /
                       geo.dy;
            const double adv = uc * dudx + vbar * dudy;

            const double h_face =
                std::max(0.5 * (out.h(j, i - 1) + out.h(j, i)), kMinDepthClampM);
            const double speed = std::hypot(uc, vbar);
            double tend = pg + f * vbar - adv;
            if (nu4 > 0.0) tend -= nu4 * lap2_u(j, i);
            // Drag applied implicitly: unconditionally dissipative.
            out.u(j, i) = (uc + dt * tend) / (1.0 + dt * consts.c_d * speed / h_face);
        }
    }

    out.v = Field::Zero(nlat + 1, nlon);
    for (int j = 1; j < nlat; ++j) {
        const double f = coriolis_parameter(spec.lat_min + j * spec.dlat(), consts);
        const double dxe = geo.lx_edge[j];
        for (int i = 0; i < nlon; ++i) {
            if (!masks.v_wet(j, i)) continue;
            const double vc = state.v(j, i);
            const double ubar = 0.25 * (state.u(j - 1, i) + state.u(j - 1, i + 1) +
                                        state.u(j, i) + state.u(j, i + 1));
            const double pg = -pg_coef * (eta(j, i) - eta(j - 1, i)) / geo.dy;

            double dvdx, dvdy;
            if (ubar >= 0.0)
                dvdx = (vc - ((i > 0 && masks.v_wet(j, i - 1)) ? state.v(j, i - 1) : vc)) / dxe;
            else
                dvdx = ((((i < nlon - 1) && masks.v_wet(j, i + 1)) ? state.v(j, i + 1) : vc) - vc) /
                       dxe;
            if (vc >= 0.0)
                dvdy = (vc - ((j > 1 && masks.v_wet(j - 1, i)) ? state.v(j - 1, i) : vc)) / geo.dy;
            else
                dvdy = ((((j < nlat - 1) && masks.v_wet(j + 1, i)) ? state.v(j + 1, i) : vc) - vc) /
                       geo.dy;
            const double adv = ubar * dvdx + vc * dvdy;

            const double h_face =
                std::max(0.5 * (out.h(j - 1, i) + out.h(j, i)), kMinDepthClampM);
            const double speed = std::hypot(ubar, vc);
            double tend = pg - f * ubar - adv;
            if (nu4 > 0.0) tend -= nu4 * lap2_v(j, i);
            out.v(j, i) = (vc + dt * tend) / (1.0 + dt * consts.c_d * speed / h_face);
        }
    }

    if (bc == BoundaryCondition::sponge) apply_sponge(out, bathy, dt);
    check_finite(out, bathy);
    return out;
}

FrameSeries simulate(const EpicenterSource& src, const BathymetryGrid& bathy,
                     const PhysicalConstants& consts, double duration,
                     double out_interval, BoundaryCondition bc, bool store_uv) {
    if (out_interval <= 0.0) throw Error("bad-argument", "out_interval must be positive");
    if (duration < 0.0) throw Error("bad-argument", "duration must be >= 0");
    const int n_out = static_cast<int>(std::llround(duration / out_interval));
    if (std::abs(n_out * out_interval - duration) > 1e-9 * std::max(1.0, duration))
        throw Error("bad-argument", "duration must be an integer multiple of out_interval");

    const GridSpec& spec = bathy.spec;
    const Geometry geo(spec);
    double h_max = kMinDepthClampM;
    for (int j = 0; j < spec.nlat; ++j)
        for (int i = 0; i < spec.nlon; ++i)
            if (!bathy.is_land(j, i)) h_max = std::max(h_max, bathy.depth(j, i));
    const double dt_cfl = 0.5 * geo.min_dx / std::sqrt(consts.g * h_max);
    const int n_sub = std::max(1, static_cast<int>(std::ceil(out_interval / dt_cfl)));
    const double dt = out_interval / n_sub;

    SWEState state = initial_condition(src, bathy);

    FrameSeries series;
    series.spec = spec;
    auto emit = [&](const SWEState& s) {
        series.times.push_back(s.t);
        Field eta = Field::Zero(spec.nlat, spec.nlon);
        for (int j = 0; j < spec.nlat; ++j)
            for (int i = 0; i < spec.nlon; ++i)
                if (!bathy.is_land(j, i)) eta(j, i) = s.h(j, i) + bathy.z_b(j, i);
        series.eta.push_back(std::move(eta));
        if (store_uv) {
            Field uc = Field::Zero(spec.nlat, spec.nlon);
            Field vc = Field::Zero(spec.nlat, spec.nlon);
            for (int j = 0; j < spec.nlat; ++j)
                for (int i = 0; i < spec.nlon; ++i) {
                    if (bathy.is_land(j, i)) continue;
                    uc(j, i) = 0.5 * (s.u(j, i) + s.u(j, i + 1));
                    vc(j, i) = 0.5 * (s.v(j, i) + s.v(j + 1, i));
                }
            series.u_c.push_back(std::move(uc));
            series.v_c.push_back(std::move(vc));
        }
    };

    emit(state);
    for (int frame = 1; frame <= n_out; ++frame) {
        for (int k = 0; k < n_sub; ++k) state = step(state, bathy, consts, dt, bc);
        state.t = frame * out_interval;  // avoid accumulated rounding in timestamps
        emit(state);
    }
    return series;
}

double total_volume(const SWEState& state, const BathymetryGrid& bathy) {
    const Geometry geo(bathy.spec);
    double sum = 0.0;
    for (int j = 0; j < bathy.spec.nlat; ++j)
        for (int i = 0; i < bathy.spec.nlon; ++i)
            if (!bathy.is_land(j, i)) sum += state.h(j, i) * geo.area[j];
    return sum;
}

double total_energy(const SWEState& state, const BathymetryGrid& bathy,
                    const PhysicalConstants& consts) {
    const Geometry geo(bathy.spec);
    double kinetic = 0.0, potential = 0.0;
    for (int j = 0; j < bathy.spec.nlat; ++j)
        for (int i = 0; i < bathy.spec.nlon; ++i) {
            if (bathy.is_land(j, i)) continue;
            const double uc = 0.5 * (state.u(j, i) + state.u(j, i + 1));
            const double vc = 0.5 * (state.v(j, i) + state.v(j + 1, i));
            const double eta = state.h(j, i) + bathy.z_b(j, i);
            kinetic += 0.5 * state.h(j, i) * (uc * uc + vc * vc) * geo.area[j];
            potential += 0.5 * (1.0 - consts.beta) * consts.g * eta * eta * geo.area[j];
        }
    return kinetic + potential;
}

namespace {

json spec_to_json(const GridSpec& s) {
    return {{"nlon", s.nlon},       {"nlat", s.nlat},       {"lon_min", s.lon_min},
            {"lon_max", s.lon_max}, {"lat_min", s.lat_min}, {"lat_max", s.lat_max}};
}

GridSpec spec_from_json(const json& j) {
    GridSpec s;
    s.nlon = j.at("nlon");
    s.nlat = j.at("nlat");
    s.lon_min = j.at("lon_min");
    s.lon_max = j.at("lon_max");
    s.lat_min = j.at("lat_min");
    s.lat_max = j.at("lat_max");
    return s;
}

void write_field_f32(std::ofstream& out, const Field& f) {
    std::vector<float> row(f.cols());
    for (int j = 0; j < f.rows(); ++j) {
        for (int i = 0; i < f.cols(); ++i) row[i] = static_cast<float>(f(j, i));
        io::append_f32(out, row.data(), row.size());
    }
}

}  // namespace

void save_frames(const FrameSeries& series, const EpicenterSource& src,
                 const PhysicalConstants& consts, const std::filesystem::path& dir,
                 const std::string& tool_version) {
    std::filesystem::create_directories(dir);
    json meta = {
        {"spec", spec_to_json(series.spec)},
        {"times", series.times},
        {"epicenter",
         {{"lon", src.x0.lon},
          {"lat", src.x0.lat},
          {"amplitude", src.amplitude},
          {"width_param", src.width_param}}},
        {"constants",
         {{"g", consts.g},
          {"omega", consts.omega},
          {"beta", consts.beta},
          {"c_d", consts.c_d},
          {"nu4", consts.nu4}}},
        {"tool_version", tool_version},
        {"has_uv", series.has_uv()},
    };
    std::ofstream meta_out(dir / "meta.json");
    if (!meta_out) throw Error("io-open", "cannot write " + (dir / "meta.json").string());
    meta_out << meta.dump(2) << "\n";

    std::ofstream bin(dir / "frames.bin", std::ios::binary);
    if (!bin) throw Error("io-open", "cannot write " + (dir / "frames.bin").string());
    for (const auto& f : series.eta) write_field_f32(bin, f);

    if (series.has_uv()) {
        std::ofstream uv(dir / "uv.bin", std::ios::binary);
        if (!uv) throw Error("io-open", "cannot write " + (dir / "uv.bin").string());
        for (std::size_t k = 0; k < series.u_c.size(); ++k) {
            write_field_f32(uv, series.u_c[k]);
            write_field_f32(uv, series.v_c[k]);
        }
    }
}

FrameSeries load_frames(const std::filesystem::path& dir) {
    std::ifstream meta_in(dir / "meta.json");
    if (!meta_in) throw Error("io-open", "cannot read " + (dir / "meta.json").string());
    json meta = json::parse(meta_in);

    FrameSeries series;
    series.spec = spec_from_json(meta.at("spec"));
    series.spec.validate();
    series.times = meta.at("times").get<std::vector<double>>();
    const bool has_uv = meta.value("has_uv", false);

    const std::size_t cells =
        static_cast<std::size_t>(series.spec.nlat) * series.spec.nlon;
    const auto flat = io::read_f32(dir / "frames.bin", cells * series.times.size());
    auto unpack = [&](const float* src) {
        Field f(series.spec.nlat, series.spec.nlon);
        for (int j = 0; j < series.spec.nlat; ++j)
            for (int i = 0; i < series.spec.nlon; ++i)
                f(j, i) = src[static_cast<std::size_t>(j) * series.spec.nlon + i];
        return f;
    };
    for (std::size_t k = 0; k < series.times.size(); ++k)
        series.eta.push_back(unpack(flat.data() + k * cells));

    if (has_uv) {
        const auto uv = io::read_f32(dir / "uv.bin", 2 * cells * series.times.size());
        for (std::size_t k = 0; k < series.times.size(); ++k) {
            series.u_c.push_back(unpack(uv.data() + 2 * k * cells));
            series.v_c.push_back(unpack(uv.data() + (2 * k + 1) * cells));
        }
    }
    return series;
}

}  // namespace wavesense
