#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "wavesense/error.hpp"
#include "wavesense/pipeline.hpp"

using namespace wavesense;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// A configuration small enough for end-to-end runs inside a unit test.
ExperimentConfig tiny_config(const fs::path& out) {
    ExperimentConfig c = default_desk_config();
    c.grid.nlon = 48;
    c.grid.nlat = 48;
    c.duration_s = 3000.0;
    c.out_interval_s = 100.0;
    c.train_epicenters = {GeoPoint(140.8, 37.0), GeoPoint(142.0, 40.0)};
    c.test_epicenters = {GeoPoint(141.2, 37.5)};
    c.virtual_pairs = {{"d01", "d02"}, {"d03", "d04"}};
    c.model.num_freq_bands = 3;
    c.model.latent_rows = 4;
    c.model.latent_dim = 8;
    c.model.num_heads = 2;
    c.model.mlp_hidden = 16;
    c.model.num_encoder_blocks = 1;
    c.schedule.steps = 10;
    c.schedule.batch_frames = 2;
    c.schedule.queries_per_frame = 24;
    c.out_dir = out;
    c.master_seed = 7;
    c.apply_master_seed();
    return c;
}

}  // namespace

TEST_CASE("config validation") {
    ExperimentConfig c = default_desk_config();
    CHECK_NOTHROW(c.validate());

    SUBCASE("test epicenter colliding with a training one") {
        c.test_epicenters.push_back(c.train_epicenters.front());
        CHECK_THROWS_AS(c.validate(), Error);
    }
    SUBCASE("virtual pair naming an unknown sensor") {
        c.virtual_pairs.emplace_back("d01", "nope");
        CHECK_THROWS_AS(c.validate(), Error);
    }
}

TEST_CASE("config file round-trip") {
    const fs::path dir = fs::temp_directory_path() / "wavesense_cfg_test";
    fs::create_directories(dir);
    ExperimentConfig c = default_desk_config();
    c.master_seed = 1234;
    c.apply_master_seed();
    save_config(c, dir / "cfg.json");
    const ExperimentConfig back = load_config(dir / "cfg.json");
    CHECK(back.grid == c.grid);
    CHECK(back.master_seed == c.master_seed);
    CHECK(back.model.seed == c.model.seed);
    CHECK(back.train_epicenters == c.train_epicenters);
    CHECK(back.virtual_pairs == c.virtual_pairs);
    REQUIRE(back.sensors.sensors.size() == c.sensors.sensors.size());
    for (std::size_t k = 0; k < c.sensors.sensors.size(); ++k)
        CHECK(back.sensors.sensors[k].location == c.sensors.sensors[k].location);
    fs::remove_all(dir);
}

TEST_CASE("epicenter id naming") {
    const ExperimentConfig c = default_desk_config();
    const auto tr = train_ids(c);
    REQUIRE(tr.size() == 6);
    CHECK(tr.front() == "train_00");
    CHECK(tr.back() == "train_05");
    const auto te = test_ids(c);
    REQUIRE(te.size() == 2);
    CHECK(te.front() == "test_00");
}

TEST_CASE("sensors resolve onto ocean") {
    const ExperimentConfig c = default_desk_config();
    const BathymetryGrid bathy = make_bathymetry(c);
    const SensorNetwork net = resolve_sensors(c, bathy);
    for (const auto& s : net.sensors) CHECK_FALSE(bathy.is_land_at(s.location));
}

TEST_CASE("simulate stage writes a deterministic dataset") {
    const fs::path out = fs::temp_directory_path() / "wavesense_sim_stage";
    fs::remove_all(out);
    ExperimentConfig c = tiny_config(out);

    const fs::path dir = cmd_simulate(c);
    CHECK(fs::exists(dir / "manifest.json"));
    CHECK(fs::exists(out / "manifest.json"));
    for (const auto& id : {"train_00", "train_01", "test_00"}) {
        CHECK(fs::exists(dir / id / "meta.json"));
        CHECK(fs::exists(dir / id / "frames.bin"));
    }
    const std::string first = slurp(dir / "train_00" / "frames.bin");

    fs::remove_all(out);
    cmd_simulate(c);
    CHECK(slurp(dir / "train_00" / "frames.bin") == first);

    SUBCASE("no epicenters still writes a manifest") {
        fs::remove_all(out);
        ExperimentConfig empty = c;
        empty.train_epicenters.clear();
        empty.test_epicenters.clear();
        const fs::path d2 = cmd_simulate(empty);
        CHECK(fs::exists(d2 / "manifest.json"));
    }
    fs::remove_all(out);
}

TEST_CASE("end-to-end tiny pipeline") {
    const fs::path out = fs::temp_directory_path() / "wavesense_e2e";
    fs::remove_all(out);
    ExperimentConfig c = tiny_config(out);

    cmd_simulate(c);
    const fs::path ckpt = cmd_train(c);
    CHECK(fs::exists(ckpt));
    CHECK(fs::exists(out / "loss.csv"));

    cmd_reconstruct(c);
    const FrameSeries truth = load_frames(out / "dataset" / "test_00");
    const FrameSeries recon = load_frames(out / "recon" / "test_00");
    CHECK(recon.frame_count() == truth.frame_count());
    CHECK(fs::exists(out / "recon" / "test_00_errors.csv"));
    // Error CSV rows == frames (plus header).
    std::ifstream csv(out / "recon" / "test_00_errors.csv");
    int lines = 0;
    for (std::string line; std::getline(csv, line);) ++lines;
    CHECK(lines == truth.frame_count() + 1);

    const EvalReport rep = cmd_compare(c);
    // 1 test epicenter x 2 virtual points x 2 methods.
    REQUIRE(rep.rows.size() == 4);
    for (const auto& row : rep.rows) {
        CHECK((row.method == "senseiver" || row.method == "lihfp"));
        CHECK(row.waveform_mae_m >= 0.0);
    }
    CHECK(fs::exists(out / "compare" / "report.csv"));
    CHECK(fs::exists(out / "compare" / "report.json"));

    SUBCASE("swapping a virtual pair leaves its report row unchanged") {
        ExperimentConfig swapped = c;
        std::swap(swapped.virtual_pairs[0].first, swapped.virtual_pairs[0].second);
        const EvalReport rep2 = cmd_compare(swapped);
        REQUIRE(rep2.rows.size() == rep.rows.size());
        for (std::size_t k = 0; k < rep.rows.size(); ++k) {
            CHECK(rep2.rows[k].virtual_id == rep.rows[k].virtual_id);
            CHECK(rep2.rows[k].waveform_mae_m == rep.rows[k].waveform_mae_m);
            CHECK(rep2.rows[k].maxamp_mae_m == rep.rows[k].maxamp_mae_m);
        }
    }

    SUBCASE("render emits rasters of the right shape") {
        cmd_render(out / "recon" / "test_00", {0, 5});
        for (const char* name : {"truth_0000.pgm", "recon_0000.pgm", "diff_0005.pgm"}) {
            const fs::path p = out / "recon" / "test_00" / name;
            REQUIRE(fs::exists(p));
            std::ifstream pgm(p, std::ios::binary);
            std::string magic;
            int w = 0, h = 0, maxv = 0;
            pgm >> magic >> w >> h >> maxv;
            CHECK(magic == "P5");
            CHECK(w == c.grid.nlon);
            CHECK(h == c.grid.nlat);
            CHECK(maxv == 255);
        }
        // The north-west corner is far from the source at frame 0: mid-gray.
        std::ifstream pgm(out / "recon" / "test_00" / "truth_0000.pgm", std::ios::binary);
        std::string magic;
        int w, h, maxv;
        pgm >> magic >> w >> h >> maxv;
        pgm.get();
        bool topleft_ok = false;
        char px;
        pgm.get(px);
        topleft_ok = (static_cast<unsigned char>(px) == 127 ||
                      static_cast<unsigned char>(px) == 128);
        CHECK(topleft_ok);
    }
    fs::remove_all(out);
}
