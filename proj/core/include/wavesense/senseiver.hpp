#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "wavesense/geo.hpp"
#include "wavesense/swe.hpp"

namespace wavesense {

using Matrix = Eigen::MatrixXd;

/// Architecture hyperparameters. Defaults are desk-scale: they train in
/// minutes and keep finite-difference checks tractable on shrunk variants.
struct ModelConfig {
    int num_freq_bands = 32;
    double max_freq = 64.0;  // cycles per normalized domain
    int latent_rows = 32;
    int latent_dim = 64;
    int num_encoder_blocks = 2;
    int num_heads = 4;
    int mlp_hidden = 128;
    std::uint64_t seed = 0;

    void validate() const;
    /// Per-location encoding width: 3 coords x (raw + sin/cos per band).
    int enc_dim() const { return 3 * (2 * num_freq_bands + 1); }
    /// Sensor token = wave height value prepended to its position encoding.
    int token_dim() const { return enc_dim() + 1; }
};

struct ParamBlock {
    std::string name;
    Matrix value;
};

/// All trainable weights plus the dataset-level wave-height scale.
/// Blocks are ordered; the checkpoint format serializes them in order.
struct ModelParams {
    ModelConfig cfg;
    double scale = 1.0;
    std::vector<ParamBlock> blocks;

    Matrix& block(const std::string& name);
    const Matrix& block(const std::string& name) const;
    std::size_t parameter_count() const;
};

ModelParams init_params(const ModelConfig& cfg);
/// Same block layout as `like`, all zeros. Gradients use this shape.
ModelParams zeros_like(const ModelParams& like);

struct SensorReadings {
    std::vector<double> values;       // meters, aligned with locations
    std::vector<GeoPoint> locations;  // x^s
    double t = 0.0;
};

/// Trigonometric position encoding: per location, for each of
/// (lon, lat, normalized bathymetry) in [-1, 1], concatenate
/// [raw, sin(pi f_k c), cos(pi f_k c)] over geometrically spaced f_k in
/// [1, max_freq]. Rows = locations.
Matrix encode_positions(const std::vector<GeoPoint>& points, const BathymetryGrid& bathy,
                        const ModelConfig& cfg);

/// Cross-attend the learned latent array over sensor tokens, then
/// num_encoder_blocks of pre-norm (self-attention + MLP) residual blocks.
Matrix encode(const SensorReadings& readings, const Matrix& a_s, const ModelParams& params);

/// Each query encoding cross-attends over Z, then an MLP head emits one
/// wave height (meters) per query. Queries do not interact.
Eigen::VectorXd decode(const Matrix& z, const Matrix& a_q, const ModelParams& params);

/// Mean squared error.
double loss(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth);

struct TrainingSample {
    SensorReadings readings;
    std::vector<GeoPoint> queries;
    Eigen::VectorXd truths;  // meters
};

/// Exact reverse-mode gradients of the mean per-sample loss over the batch.
/// Returns the batch loss (in scaled units); grads has the params layout.
double gradients(const ModelParams& params, const std::vector<TrainingSample>& batch,
                 const BathymetryGrid& bathy, ModelParams& grads);

struct AdamState {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long step_count = 0;
    std::vector<Matrix> m, v;  // aligned with ModelParams::blocks
};

AdamState init_adam(const ModelParams& params, double lr);
void adam_step(ModelParams& params, const ModelParams& grads, AdamState& opt);

struct TrainSchedule {
    int steps = 2000;
    int batch_frames = 4;
    int queries_per_frame = 256;
    double lr = 1e-3;
    std::uint64_t frame_split_seed = 0;
};

struct TrainResult {
    ModelParams params;
    std::vector<double> loss_history;  // scaled-unit loss per step
};

/// Trains on a uniform-random 80% split of all frames across the dataset.
/// Queries per frame: half uniform over ocean cells, half from cells with
/// |eta| > 1e-4 m when any exist. Fully reproducible from cfg.seed and
/// schedule.frame_split_seed.
TrainResult train(const std::vector<FrameSeries>& dataset, const SensorNetwork& sensors,
                  const BathymetryGrid& bathy, const ModelConfig& cfg,
                  const TrainSchedule& schedule);

/// Decode every ocean cell center; land cells hold NaN.
Field reconstruct_field(const ModelParams& params, const SensorReadings& readings,
                        const BathymetryGrid& bathy);

/// Position encodings for all ocean cell centers, row order matching
/// ocean_cells(); cached by callers that decode many frames.
std::vector<std::pair<int, int>> ocean_cells(const BathymetryGrid& bathy);
Matrix ocean_query_encodings(const BathymetryGrid& bathy, const ModelConfig& cfg);

// Checkpoint: JSON manifest {config, scale, block names and shapes} plus a
// sibling .bin of little-endian f32 blocks in manifest order (row-major).
void save_checkpoint(const ModelParams& params, const std::filesystem::path& json_path);
ModelParams load_checkpoint(const std::filesystem::path& json_path);

}  // namespace wavesense
