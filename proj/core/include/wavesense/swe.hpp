#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "wavesense/geo.hpp"

namespace wavesense {

struct PhysicalConstants {
    double g = kGravity;        // m/s^2
    double omega = 7.292e-5;    // rad/s
    double beta = 0.015;        // reduced-gravity correction
    double c_d = 2.5e-3;        // quadratic drag coefficient
    double nu4 = -1.0;          // biharmonic viscosity, m^4/s; < 0 means 0.01*dx^4/dt

    void validate() const;
};

enum class BoundaryCondition { closed, sponge };

/// Flat-topped solitary initial displacement parameterized by the epicenter.
/// width_param has units 1/rad^2; the radial argument is great-circle angle.
struct EpicenterSource {
    GeoPoint x0;
    double amplitude = 5.0;      // meters
    double width_param = 250.0;  // 1/rad^2
};

/// Prognostic state on an Arakawa C-grid: thickness h at centers,
/// u on east-west faces (nlat x nlon+1), v on north-south faces
/// (nlat+1 x nlon). Land cells carry h = 0 and zero adjacent face velocity.
struct SWEState {
    Field h;
    Field u;
    Field v;
    double t = 0.0;
};

struct FrameSeries {
    GridSpec spec;
    std::vector<double> times;      // seconds, uniform spacing
    std::vector<Field> eta;         // surface elevation h + z_b, land cells 0
    std::vector<Field> u_c, v_c;    // optional cell-center velocities

    bool has_uv() const { return !u_c.empty(); }
    int frame_count() const { return static_cast<int>(times.size()); }
    double frame_interval() const { return times.size() > 1 ? times[1] - times[0] : 0.0; }
};

double coriolis_parameter(double lat_deg, const PhysicalConstants& consts);

SWEState initial_condition(const EpicenterSource& src, const BathymetryGrid& bathy);

/// One forward-backward step: flux-form continuity, then momentum with
/// pressure gradient, Coriolis, upwind advection, quadratic drag and
/// biharmonic damping. Throws "blow-up" naming the cell on non-finite state.
SWEState step(const SWEState& state, const BathymetryGrid& bathy,
              const PhysicalConstants& consts, double dt,
              BoundaryCondition bc = BoundaryCondition::closed);

/// Internal dt = out_interval / ceil(out_interval / (cfl*min_dx/sqrt(g*H_max)))
/// with cfl = 0.5; frames at t = 0, out_interval, ..., duration inclusive.
FrameSeries simulate(const EpicenterSource& src, const BathymetryGrid& bathy,
                     const PhysicalConstants& consts, double duration,
                     double out_interval,
                     BoundaryCondition bc = BoundaryCondition::closed,
                     bool store_uv = false);

/// Total volume sum(h * cell_area) over ocean cells.
double total_volume(const SWEState& state, const BathymetryGrid& bathy);

/// 0.5*sum(h*|u|^2*A) + 0.5*(1-beta)*g*sum(eta^2*A).
double total_energy(const SWEState& state, const BathymetryGrid& bathy,
                    const PhysicalConstants& consts);

// -- file format --------------------------------------------------------
// meta.json {grid spec, times, epicenter, constants, tool version} plus
// frames.bin of little-endian f32, frame-major then row-major (lat outer).
// A uv.bin sidecar (u then v per frame) is written when velocities are kept.

void save_frames(const FrameSeries& series, const EpicenterSource& src,
                 const PhysicalConstants& consts, const std::filesystem::path& dir,
                 const std::string& tool_version);
FrameSeries load_frames(const std::filesystem::path& dir);

}  // namespace wavesense
