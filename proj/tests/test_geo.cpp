#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "wavesense/error.hpp"
#include "wavesense/geo.hpp"
#include "wavesense/rng.hpp"

using namespace wavesense;

namespace {

BathymetryGrid uniform_ocean(double depth_m, const GridSpec& spec) {
    return BathymetryGrid::from_heights(spec, Field::Constant(spec.nlat, spec.nlon, -depth_m));
}

GridSpec equatorial_box() { return {-20.0, 20.0, -20.0, 20.0, 64, 64}; }

}  // namespace

TEST_CASE("GeoPoint normalization and validation") {
    CHECK(GeoPoint(190.0, 0.0).lon == doctest::Approx(-170.0));
    CHECK(GeoPoint(-180.0, 0.0).lon == doctest::Approx(-180.0));
    CHECK(GeoPoint(360.0, 0.0).lon == doctest::Approx(0.0));
    CHECK_THROWS_AS(GeoPoint(0.0, 91.0), Error);
    CHECK_THROWS_AS(GeoPoint(0.0, -90.5), Error);
}

TEST_CASE("haversine_distance oracles") {
    CHECK(haversine_distance({0, 0}, {0, 0}) == 0.0);
    CHECK(std::abs(haversine_distance({0, 0}, {1, 0}) - 111194.9) < 0.1);
    CHECK(std::abs(haversine_distance({0, 0}, {0, 90}) - 10007543.0) < 1.0);
}

TEST_CASE("haversine_distance symmetry property") {
    Rng rng(42);
    for (int k = 0; k < 200; ++k) {
        GeoPoint a(rng.uniform(-180.0, 180.0), rng.uniform(-89.0, 89.0));
        GeoPoint b(rng.uniform(-180.0, 180.0), rng.uniform(-89.0, 89.0));
        CHECK(haversine_distance(a, b) == haversine_distance(b, a));
    }
}

TEST_CASE("travel_time on uniform depth matches the closed form") {
    const GeoPoint a(0.0, 0.0);

    SUBCASE("zero-length path") {
        const auto bathy = uniform_ocean(4000.0, equatorial_box());
        CHECK(travel_time(a, a, bathy) == 0.0);
    }
    SUBCASE("depth 4000 m, c = 198.045 m/s") {
        const auto bathy = uniform_ocean(4000.0, equatorial_box());
        const double lon = rad2deg(198045.0 / kEarthRadiusM);  // 198,045 m along the equator
        const GeoPoint b(lon, 0.0);
        CHECK(std::abs(haversine_distance(a, b) - 198045.0) < 0.5);
        CHECK(std::abs(travel_time(a, b, bathy) - 1000.0) < 0.5);
    }
    SUBCASE("depth 1000 m, c = 99.02 m/s") {
        const auto bathy = uniform_ocean(1000.0, equatorial_box());
        const GeoPoint b(rad2deg(99022.0 / kEarthRadiusM), 0.0);
        CHECK(std::abs(travel_time(a, b, bathy) - 1000.0) < 0.5);
    }
}

TEST_CASE("travel_time symmetry and lower bound") {
    const GridSpec spec = equatorial_box();
    BathymetryGrid bathy = synth_bathymetry(spec, BathyProfile::seamount);
    Rng rng(7);
    for (int k = 0; k < 50; ++k) {
        GeoPoint a(rng.uniform(-18.0, 18.0), rng.uniform(-18.0, 18.0));
        GeoPoint b(rng.uniform(-18.0, 18.0), rng.uniform(-18.0, 18.0));
        const double tab = travel_time(a, b, bathy);
        const double tba = travel_time(b, a, bathy);
        CHECK(std::abs(tab - tba) <= 1e-12 * std::max(tab, 1.0));
        const double h_max = 4000.0;
        CHECK(tab >= haversine_distance(a, b) / std::sqrt(kGravity * h_max) - 1e-9);
    }
}

TEST_CASE("travel_time over all-land path") {
    GridSpec spec = equatorial_box();
    BathymetryGrid land = BathymetryGrid::from_heights(
        spec, Field::Constant(spec.nlat, spec.nlon, 100.0));
    CHECK_THROWS_WITH_AS(travel_time({0, 0}, {5, 0}, land), doctest::Contains("only land"),
                         Error);
}

TEST_CASE("synth_bathymetry profiles") {
    const GridSpec spec = equatorial_box();

    SUBCASE("flat") {
        const auto b = synth_bathymetry(spec, BathyProfile::flat);
        CHECK((b.z_b == -4000.0).all());
        CHECK(b.ocean_cell_count() == spec.nlon * spec.nlat);
    }
    SUBCASE("shelf flags shallow cells as land") {
        const auto b = synth_bathymetry(spec, BathyProfile::shelf);
        bool any_land = false, any_ocean = false;
        for (int j = 0; j < spec.nlat; ++j)
            for (int i = 0; i < spec.nlon; ++i) {
                if (b.is_land(j, i)) any_land = true;
                else any_ocean = true;
                CHECK(b.is_land(j, i) == (b.z_b(j, i) >= -kMinDepthClampM));
            }
        CHECK(any_land);
        CHECK(any_ocean);
    }
    SUBCASE("seamount peak near -500 m") {
        const auto b = synth_bathymetry(spec, BathyProfile::seamount);
        CHECK(std::abs(b.z_b.maxCoeff() - (-500.0)) < 50.0);
        CHECK(b.ocean_cell_count() == spec.nlon * spec.nlat);
    }
}

TEST_CASE("sample_field") {
    const GridSpec spec = equatorial_box();
    const auto bathy = uniform_ocean(4000.0, spec);

    SUBCASE("cell-center identity") {
        Field f = Field::Random(spec.nlat, spec.nlon);
        const GeoPoint p(spec.lon_center(10), spec.lat_center(20));
        CHECK(sample_field(f, bathy, p) == doctest::Approx(f(20, 10)).epsilon(1e-14));
    }
    SUBCASE("exact on globally linear fields") {
        Field f(spec.nlat, spec.nlon);
        for (int j = 0; j < spec.nlat; ++j)
            for (int i = 0; i < spec.nlon; ++i)
                f(j, i) = 3.0 * spec.lon_center(i) - 2.0 * spec.lat_center(j) + 1.0;
        Rng rng(3);
        for (int k = 0; k < 100; ++k) {
            const GeoPoint p(rng.uniform(-19.0, 19.0), rng.uniform(-19.0, 19.0));
            const double expect = 3.0 * p.lon - 2.0 * p.lat + 1.0;
            CHECK(std::abs(sample_field(f, bathy, p) - expect) <=
                  1e-12 * std::max(std::abs(expect), 1.0));
        }
    }
    SUBCASE("midpoint of two centers on a linear-in-lon field") {
        Field f(spec.nlat, spec.nlon);
        for (int j = 0; j < spec.nlat; ++j)
            for (int i = 0; i < spec.nlon; ++i) f(j, i) = spec.lon_center(i);
        const GeoPoint p(0.5 * (spec.lon_center(5) + spec.lon_center(6)), spec.lat_center(8));
        CHECK(sample_field(f, bathy, p) ==
              doctest::Approx(0.5 * (f(8, 5) + f(8, 6))).epsilon(1e-12));
    }
    SUBCASE("land interior raises") {
        BathymetryGrid land = BathymetryGrid::from_heights(
            spec, Field::Constant(spec.nlat, spec.nlon, 100.0));
        Field f = Field::Zero(spec.nlat, spec.nlon);
        CHECK_THROWS_AS(sample_field(f, land, {0, 0}), Error);
    }
}

TEST_CASE("gc_midpoint oracles") {
    const GeoPoint a(0, 0);
    CHECK(gc_midpoint(a, a) == a);
    const GeoPoint m1 = gc_midpoint({0, 0}, {10, 0});
    CHECK(m1.lon == doctest::Approx(5.0).epsilon(1e-9));
    CHECK(m1.lat == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
    const GeoPoint m2 = gc_midpoint({0, 0}, {0, 10});
    CHECK(m2.lon == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
    CHECK(m2.lat == doctest::Approx(5.0).epsilon(1e-9));
    CHECK_THROWS_AS(gc_midpoint({0, 0}, {180, 0}), Error);
}

TEST_CASE("snap_to_ocean returns the nearest ocean cell center") {
    const GridSpec spec = equatorial_box();
    const auto b = synth_bathymetry(spec, BathyProfile::shelf);
    // A point on the eastern (shallow, land) side snaps westward onto ocean.
    const GeoPoint snapped = snap_to_ocean(b, {19.0, 0.0});
    CHECK_FALSE(b.is_land_at(snapped));
}

TEST_CASE("bathymetry and sensor file round-trips") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "wavesense_geo_test";
    fs::create_directories(dir);

    const GridSpec spec = equatorial_box();
    const auto b = synth_bathymetry(spec, BathyProfile::seamount);
    save_bathymetry(b, dir / "bathy.json");
    const auto b2 = load_bathymetry(dir / "bathy.json");
    CHECK(b2.spec == b.spec);
    CHECK((b2.z_b - b.z_b).abs().maxCoeff() < 1e-3);  // f32 storage

    SensorNetwork net;
    net.sensors = {{"a", GeoPoint(1.0, 2.0)}, {"b", GeoPoint(-3.0, 4.0)}};
    save_sensors(net, dir / "sensors.json");
    const auto net2 = load_sensors(dir / "sensors.json");
    REQUIRE(net2.sensors.size() == 2);
    CHECK(net2.by_id("a").location == net.by_id("a").location);

    SensorNetwork dup;
    dup.sensors = {{"x", GeoPoint(0, 0)}, {"x", GeoPoint(1, 1)}};
    save_sensors(dup, dir / "dup.json");
    CHECK_THROWS_AS(load_sensors(dir / "dup.json"), Error);

    fs::remove_all(dir);
}
