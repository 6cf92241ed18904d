#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "wavesense/geo.hpp"
#include "wavesense/metrics.hpp"
#include "wavesense/senseiver.hpp"
#include "wavesense/swe.hpp"

namespace wavesense {

/// Full experiment description. Serialized as a single JSON file; see
/// load_config for the schema.
struct ExperimentConfig {
    GridSpec grid;
    BathyProfile bathy_profile = BathyProfile::seamount;
    std::filesystem::path bathy_raster;  // non-empty overrides the profile
    PhysicalConstants constants;
    BoundaryCondition boundary = BoundaryCondition::sponge;
    double duration_s = 14400.0;
    double out_interval_s = 50.0;
    double source_amplitude = 5.0;
    double source_width = 250.0;  // 1/rad^2
    std::vector<GeoPoint> train_epicenters;
    std::vector<GeoPoint> test_epicenters;
    SensorNetwork sensors;                // inline, or loaded from sensors_path
    std::filesystem::path sensors_path;
    std::vector<std::pair<std::string, std::string>> virtual_pairs;
    ModelConfig model;
    TrainSchedule schedule;
    std::filesystem::path out_dir = "out";
    std::uint64_t master_seed = 0;

    void validate() const;
    /// master_seed drives both the parameter init and the frame split.
    void apply_master_seed();
};

ExperimentConfig load_config(const std::filesystem::path& path);
void save_config(const ExperimentConfig& cfg, const std::filesystem::path& path);

/// The 96x96, 30-degree box desk configuration: seamount bathymetry,
/// 8 sensors, 6 training + 2 test epicenters, 4 midpoint virtual pairs.
ExperimentConfig default_desk_config();

BathymetryGrid make_bathymetry(const ExperimentConfig& cfg);
/// Sensor set with every location snapped to the nearest ocean cell center.
SensorNetwork resolve_sensors(const ExperimentConfig& cfg, const BathymetryGrid& bathy);

std::string tool_version();

/// Epicenter ids are "train_NN" / "test_NN" in config order.
std::vector<std::string> train_ids(const ExperimentConfig& cfg);
std::vector<std::string> test_ids(const ExperimentConfig& cfg);

// Each stage writes its artifacts under out_dir and records them in
// out_dir/manifest.json. Stages throw wavesense::Error on failure.

/// One FrameSeries per epicenter under out/dataset/<id>/.
std::filesystem::path cmd_simulate(const ExperimentConfig& cfg);

/// Trains on the train_* series; writes out/checkpoint.json(.bin) and
/// out/loss.csv. Returns the checkpoint path.
std::filesystem::path cmd_train(const ExperimentConfig& cfg);

/// Full-field reconstruction with per-frame error CSV and trigger time for
/// each listed epicenter (default: all test ids).
void cmd_reconstruct(const ExperimentConfig& cfg, std::vector<std::string> ids = {});

/// Senseiver (median filtered, kernel 13) vs LIHFP virtual waveforms at
/// every test epicenter x midpoint; writes report CSV/JSON + waveform CSVs.
EvalReport cmd_compare(const ExperimentConfig& cfg);

/// Truth / reconstruction / |difference| PGM rasters for selected frames
/// of one reconstruction directory (default: quartile frames).
void cmd_render(const std::filesystem::path& recon_dir, std::vector<int> frames = {});

}  // namespace wavesense
