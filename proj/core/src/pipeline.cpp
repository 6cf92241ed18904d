#include "wavesense/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "wavesense/error.hpp"
#include "wavesense/lihfp.hpp"

namespace wavesense {

using json = nlohmann::json;
namespace fs = std::filesystem;

std::string tool_version() { return "wavesense 0.1.0"; }

// --- config ------------------------------------------------------------

void ExperimentConfig::validate() const {
    grid.validate();
    constants.validate();
    if (duration_s < 0.0 || out_interval_s <= 0.0)
        throw Error("bad-config", "duration/out_interval invalid");
    for (const auto& t : test_epicenters)
        for (const auto& tr : train_epicenters)
            if (t == tr)
                throw Error("bad-config", "test epicenters must be distinct from training ones");
    for (const auto& [a, b] : virtual_pairs) {
        sensors.by_id(a);
        sensors.by_id(b);
    }
    model.validate();
}

void ExperimentConfig::apply_master_seed() {
    model.seed = master_seed;
    schedule.frame_split_seed = master_seed + 1;
}

namespace {

json point_to_json(const GeoPoint& p) { return {{"lon", p.lon}, {"lat", p.lat}}; }
GeoPoint point_from_json(const json& j) {
    return GeoPoint(j.at("lon").get<double>(), j.at("lat").get<double>());
}

std::string profile_name(BathyProfile p) {
    switch (p) {
        case BathyProfile::flat: return "flat";
        case BathyProfile::shelf: return "shelf";
        case BathyProfile::seamount: return "seamount";
    }
    throw Error("bad-config", "unknown bathymetry profile");
}

BathyProfile profile_from_name(const std::string& s) {
    if (s == "flat") return BathyProfile::flat;
    if (s == "shelf") return BathyProfile::shelf;
    if (s == "seamount") return BathyProfile::seamount;
    throw Error("bad-config", "unknown bathymetry profile: " + s);
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

json config_to_json(const ExperimentConfig& c) {
    json j;
    j["grid"] = {{"nlon", c.grid.nlon},       {"nlat", c.grid.nlat},
                 {"lon_min", c.grid.lon_min}, {"lon_max", c.grid.lon_max},
                 {"lat_min", c.grid.lat_min}, {"lat_max", c.grid.lat_max}};
    if (!c.bathy_raster.empty())
        j["bathymetry"] = {{"raster", c.bathy_raster.string()}};
    else
        j["bathymetry"] = {{"profile", profile_name(c.bathy_profile)}};
    j["constants"] = {{"g", c.constants.g},
                      {"omega", c.constants.omega},
                      {"beta", c.constants.beta},
                      {"c_d", c.constants.c_d},
                      {"nu4", c.constants.nu4}};
    j["boundary"] = c.boundary == BoundaryCondition::closed ? "closed" : "sponge";
    j["duration_s"] = c.duration_s;
    j["out_interval_s"] = c.out_interval_s;
    j["source"] = {{"amplitude", c.source_amplitude}, {"width_param", c.source_width}};
    j["train_epicenters"] = json::array();
    for (const auto& p : c.train_epicenters) j["train_epicenters"].push_back(point_to_json(p));
    j["test_epicenters"] = json::array();
    for (const auto& p : c.test_epicenters) j["test_epicenters"].push_back(point_to_json(p));
    if (!c.sensors_path.empty()) {
        j["sensors"] = c.sensors_path.string();
    } else {
        j["sensors"] = json::array();
        for (const auto& s : c.sensors.sensors)
            j["sensors"].push_back(
                {{"id", s.id}, {"lon", s.location.lon}, {"lat", s.location.lat}});
    }
    j["virtual_pairs"] = json::array();
    for (const auto& [a, b] : c.virtual_pairs) j["virtual_pairs"].push_back({a, b});
    j["model"] = {{"num_freq_bands", c.model.num_freq_bands},
                  {"max_freq", c.model.max_freq},
                  {"latent_rows", c.model.latent_rows},
                  {"latent_dim", c.model.latent_dim},
                  {"num_encoder_blocks", c.model.num_encoder_blocks},
                  {"num_heads", c.model.num_heads},
                  {"mlp_hidden", c.model.mlp_hidden}};
    j["schedule"] = {{"steps", c.schedule.steps},
                     {"batch_frames", c.schedule.batch_frames},
                     {"queries_per_frame", c.schedule.queries_per_frame},
                     {"lr", c.schedule.lr}};
    j["out_dir"] = c.out_dir.string();
    j["master_seed"] = c.master_seed;
    return j;
}

ExperimentConfig config_from_json(const json& j, const fs::path& base_dir) {
    ExperimentConfig c;
    const auto& g = j.at("grid");
    c.grid.nlon = g.at("nlon");
    c.grid.nlat = g.at("nlat");
    c.grid.lon_min = g.at("lon_min");
    c.grid.lon_max = g.at("lon_max");
    c.grid.lat_min = g.at("lat_min");
    c.grid.lat_max = g.at("lat_max");
    if (j.contains("bathymetry")) {
        const auto& b = j.at("bathymetry");
        if (b.contains("raster")) {
            fs::path p = b.at("raster").get<std::string>();
            c.bathy_raster = p.is_absolute() ? p : base_dir / p;
        } else {
            c.bathy_profile = profile_from_name(b.at("profile"));
        }
    }
    if (j.contains("constants")) {
        const auto& k = j.at("constants");
        c.constants.g = k.value("g", c.constants.g);
        c.constants.omega = k.value("omega", c.constants.omega);
        c.constants.beta = k.value("beta", c.constants.beta);
        c.constants.c_d = k.value("c_d", c.constants.c_d);
        c.constants.nu4 = k.value("nu4", c.constants.nu4);
    }
    if (j.contains("boundary"))
        c.boundary = j.at("boundary") == "closed" ? BoundaryCondition::closed
                                                  : BoundaryCondition::sponge;
    c.duration_s = j.value("duration_s", c.duration_s);
    c.out_interval_s = j.value("out_interval_s", c.out_interval_s);
    if (j.contains("source")) {
        c.source_amplitude = j.at("source").value("amplitude", c.source_amplitude);
        c.source_width = j.at("source").value("width_param", c.source_width);
    }
    for (const auto& p : j.value("train_epicenters", json::array()))
        c.train_epicenters.push_back(point_from_json(p));
    for (const auto& p : j.value("test_epicenters", json::array()))
        c.test_epicenters.push_back(point_from_json(p));
    if (j.contains("sensors")) {
        if (j.at("sensors").is_string()) {
            fs::path p = j.at("sensors").get<std::string>();
            c.sensors_path = p.is_absolute() ? p : base_dir / p;
            c.sensors = load_sensors(c.sensors_path);
        } else {
            for (const auto& e : j.at("sensors"))
                c.sensors.sensors.push_back(
                    {e.at("id").get<std::string>(),
                     GeoPoint(e.at("lon").get<double>(), e.at("lat").get<double>())});
        }
    }
    for (const auto& p : j.value("virtual_pairs", json::array()))
        c.virtual_pairs.emplace_back(p.at(0).get<std::string>(), p.at(1).get<std::string>());
    if (j.contains("model")) {
        const auto& m = j.at("model");
        c.model.num_freq_bands = m.value("num_freq_bands", c.model.num_freq_bands);
        c.model.max_freq = m.value("max_freq", c.model.max_freq);
        c.model.latent_rows = m.value("latent_rows", c.model.latent_rows);
        c.model.latent_dim = m.value("latent_dim", c.model.latent_dim);
        c.model.num_encoder_blocks = m.value("num_encoder_blocks", c.model.num_encoder_blocks);
        c.model.num_heads = m.value("num_heads", c.model.num_heads);
        c.model.mlp_hidden = m.value("mlp_hidden", c.model.mlp_hidden);
    }
    if (j.contains("schedule")) {
        const auto& s = j.at("schedule");
        c.schedule.steps = s.value("steps", c.schedule.steps);
        c.schedule.batch_frames = s.value("batch_frames", c.schedule.batch_frames);
        c.schedule.queries_per_frame = s.value("queries_per_frame", c.schedule.queries_per_frame);
        c.schedule.lr = s.value("lr", c.schedule.lr);
    }
    if (j.contains("out_dir")) {
        fs::path p = j.at("out_dir").get<std::string>();
        c.out_dir = p.is_absolute() ? p : base_dir / p;
    }
    c.master_seed = j.value("master_seed", std::uint64_t{0});
    c.apply_master_seed();
    return c;
}

std::string config_hash(const ExperimentConfig& cfg) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a(config_to_json(cfg).dump())));
    return buf;
}

// Append artifacts for one stage to out/manifest.json.
void record_stage(const ExperimentConfig& cfg, const std::string& stage,
                  const std::vector<fs::path>& artifacts) {
    for (const auto& a : artifacts)
        if (!fs::exists(a))
            throw Error("missing-artifact", "manifest references missing path " + a.string());

    const fs::path path = cfg.out_dir / "manifest.json";
    json m;
    if (fs::exists(path)) {
        std::ifstream in(path);
        m = json::parse(in);
    } else {
        m = {{"config_hash", config_hash(cfg)}, {"tool_version", tool_version()},
             {"stages", json::object()}};
    }
    json arr = json::array();
    for (const auto& a : artifacts) arr.push_back(fs::relative(a, cfg.out_dir).string());
    const auto now = std::chrono::system_clock::now().time_since_epoch();
    m["stages"][stage] = {
        {"artifacts", arr},
        {"timestamp_s", std::chrono::duration_cast<std::chrono::seconds>(now).count()}};
    std::ofstream out(path);
    out << m.dump(2) << "\n";
}

}  // namespace

ExperimentConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("io-open", "cannot read config " + path.string());
    return config_from_json(json::parse(in), path.has_parent_path() ? path.parent_path() : ".");
}

void save_config(const ExperimentConfig& cfg, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("io-open", "cannot write config " + path.string());
    out << config_to_json(cfg).dump(2) << "\n";
}

ExperimentConfig default_desk_config() {
    ExperimentConfig c;
    c.grid = {130.0, 160.0, 20.0, 50.0, 96, 96};
    c.bathy_profile = BathyProfile::seamount;
    c.boundary = BoundaryCondition::sponge;
    c.train_epicenters = {GeoPoint(140.8, 37.0), GeoPoint(142.0, 40.0), GeoPoint(138.5, 34.5),
                          GeoPoint(143.5, 38.5), GeoPoint(137.5, 36.5), GeoPoint(141.5, 33.8)};
    // Test events sit 0.5-1.5 degrees from their nearest training source.
    c.test_epicenters = {GeoPoint(141.6, 37.6), GeoPoint(138.9, 35.2)};
    // The array surrounds the source region so the field near the virtual
    // points is well constrained by the instantaneous readings; the long
    // baselines make the paired waveforms genuinely dissimilar.
    c.sensors.sensors = {
        {"d01", GeoPoint(136.0, 34.0)}, {"d02", GeoPoint(136.0, 40.0)},
        {"d03", GeoPoint(140.5, 31.0)}, {"d04", GeoPoint(140.5, 43.0)},
        {"d05", GeoPoint(145.0, 34.0)}, {"d06", GeoPoint(145.0, 40.0)},
        {"d07", GeoPoint(140.5, 37.0)}, {"d08", GeoPoint(149.0, 37.0)},
    };
    c.virtual_pairs = {{"d03", "d04"}, {"d02", "d05"}, {"d01", "d06"}, {"d05", "d06"}};
    c.schedule.steps = 6000;
    c.schedule.lr = 2e-3;
    return c;
}

BathymetryGrid make_bathymetry(const ExperimentConfig& cfg) {
    if (!cfg.bathy_raster.empty()) {
        BathymetryGrid b = load_bathymetry(cfg.bathy_raster);
        if (!(b.spec == cfg.grid))
            throw Error("grid-mismatch", "bathymetry raster grid differs from config grid");
        return b;
    }
    return synth_bathymetry(cfg.grid, cfg.bathy_profile);
}

SensorNetwork resolve_sensors(const ExperimentConfig& cfg, const BathymetryGrid& bathy) {
    SensorNetwork net = cfg.sensors;
    for (auto& s : net.sensors) {
        const GeoPoint snapped = snap_to_ocean(bathy, s.location);
        if (!(snapped == s.location)) {
            if (bathy.is_land_at(s.location))
                std::cerr << "warning: sensor " << s.id << " snapped off land to ("
                          << snapped.lon << ", " << snapped.lat << ")\n";
            s.location = snapped;
        }
    }
    return net;
}

std::vector<std::string> train_ids(const ExperimentConfig& cfg) {
    std::vector<std::string> ids;
    for (std::size_t k = 0; k < cfg.train_epicenters.size(); ++k) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "train_%02zu", k);
        ids.emplace_back(buf);
    }
    return ids;
}

std::vector<std::string> test_ids(const ExperimentConfig& cfg) {
    std::vector<std::string> ids;
    for (std::size_t k = 0; k < cfg.test_epicenters.size(); ++k) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "test_%02zu", k);
        ids.emplace_back(buf);
    }
    return ids;
}

namespace {

GeoPoint epicenter_by_id(const ExperimentConfig& cfg, const std::string& id) {
    const auto idx = static_cast<std::size_t>(std::stoul(id.substr(id.find('_') + 1)));
    if (id.starts_with("train_") && idx < cfg.train_epicenters.size())
        return cfg.train_epicenters[idx];
    if (id.starts_with("test_") && idx < cfg.test_epicenters.size())
        return cfg.test_epicenters[idx];
    throw Error("unknown-epicenter", id);
}

SensorReadings frame_readings(const Field& eta, const BathymetryGrid& bathy,
                              const SensorNetwork& net, double t) {
    SensorReadings r;
    r.t = t;
    for (const auto& s : net.sensors) {
        r.locations.push_back(s.location);
        r.values.push_back(sample_field(eta, bathy, s.location));
    }
    return r;
}

}  // namespace

fs::path cmd_simulate(const ExperimentConfig& cfg) {
    cfg.validate();
    const BathymetryGrid bathy = make_bathymetry(cfg);
    const fs::path dataset_dir = cfg.out_dir / "dataset";
    fs::create_directories(dataset_dir);

    std::vector<std::string> ids = train_ids(cfg);
    for (const auto& id : test_ids(cfg)) ids.push_back(id);

    std::vector<fs::path> artifacts;
    for (const auto& id : ids) {
        EpicenterSource src{epicenter_by_id(cfg, id), cfg.source_amplitude, cfg.source_width};
        FrameSeries series;
        try {
            series = simulate(src, bathy, cfg.constants, cfg.duration_s, cfg.out_interval_s,
                              cfg.boundary);
        } catch (const Error& e) {
            throw Error(e.code(), "epicenter " + id + ": " + e.detail());
        }
        save_frames(series, src, cfg.constants, dataset_dir / id, tool_version());
        artifacts.push_back(dataset_dir / id / "meta.json");
        artifacts.push_back(dataset_dir / id / "frames.bin");
    }

    json manifest = {{"ids", ids}, {"config_hash", config_hash(cfg)},
                     {"tool_version", tool_version()}};
    std::ofstream out(dataset_dir / "manifest.json");
    out << manifest.dump(2) << "\n";
    artifacts.push_back(dataset_dir / "manifest.json");
    record_stage(cfg, "simulate", artifacts);
    return dataset_dir;
}

fs::path cmd_train(const ExperimentConfig& cfg) {
    cfg.validate();
    const BathymetryGrid bathy = make_bathymetry(cfg);
    const SensorNetwork net = resolve_sensors(cfg, bathy);
    const fs::path dataset_dir = cfg.out_dir / "dataset";

    std::vector<FrameSeries> dataset;
    for (const auto& id : train_ids(cfg)) {
        FrameSeries s = load_frames(dataset_dir / id);
        if (!(s.spec == cfg.grid))
            throw Error("grid-mismatch", "dataset " + id + " grid differs from config grid");
        dataset.push_back(std::move(s));
    }

    const TrainResult result = train(dataset, net, bathy, cfg.model, cfg.schedule);

    const fs::path ckpt = cfg.out_dir / "checkpoint.json";
    save_checkpoint(result.params, ckpt);
    const fs::path loss_csv = cfg.out_dir / "loss.csv";
    std::ofstream out(loss_csv);
    out << "step,loss\n";
    for (std::size_t k = 0; k < result.loss_history.size(); ++k)
        out << k << "," << result.loss_history[k] << "\n";
    out.close();

    fs::path ckpt_bin = ckpt;
    ckpt_bin.replace_extension(".bin");
    record_stage(cfg, "train", {ckpt, ckpt_bin, loss_csv});
    return ckpt;
}

void cmd_reconstruct(const ExperimentConfig& cfg, std::vector<std::string> ids) {
    cfg.validate();
    const BathymetryGrid bathy = make_bathymetry(cfg);
    const SensorNetwork net = resolve_sensors(cfg, bathy);
    const ModelParams params = load_checkpoint(cfg.out_dir / "checkpoint.json");
    if (ids.empty()) ids = test_ids(cfg);

    const Matrix a_q = ocean_query_encodings(bathy, params.cfg);
    const Matrix a_s_net = [&] {
        std::vector<GeoPoint> pts;
        for (const auto& s : net.sensors) pts.push_back(s.location);
        return encode_positions(pts, bathy, params.cfg);
    }();
    const auto cells = ocean_cells(bathy);

    std::vector<fs::path> artifacts;
    for (const auto& id : ids) {
        const FrameSeries truth = load_frames(cfg.out_dir / "dataset" / id);
        if (!(truth.spec == cfg.grid))
            throw Error("grid-mismatch", "dataset " + id + " grid differs from config grid");

        FrameSeries recon;
        recon.spec = truth.spec;
        recon.times = truth.times;
        std::vector<FrameError> errors;
        for (int f = 0; f < truth.frame_count(); ++f) {
            const Field& eta = truth.eta[static_cast<std::size_t>(f)];
            const SensorReadings readings =
                frame_readings(eta, bathy, net, truth.times[static_cast<std::size_t>(f)]);
            const Matrix z = encode(readings, a_s_net, params);
            const Eigen::VectorXd values = decode(z, a_q, params);
            Field pred = Field::Zero(cfg.grid.nlat, cfg.grid.nlon);
            for (std::size_t k = 0; k < cells.size(); ++k)
                pred(cells[k].first, cells[k].second) = values(static_cast<Eigen::Index>(k));
            errors.push_back(recon_error_frame(eta, pred, bathy,
                                               truth.times[static_cast<std::size_t>(f)]));
            recon.eta.push_back(std::move(pred));
        }

        const fs::path recon_dir = cfg.out_dir / "recon" / id;
        EpicenterSource src{epicenter_by_id(cfg, id), cfg.source_amplitude, cfg.source_width};
        save_frames(recon, src, cfg.constants, recon_dir, tool_version());
        // Pointer back to the truth frames, used by the render stage.
        {
            json r = {{"truth_dir", fs::relative(cfg.out_dir / "dataset" / id, recon_dir).string()}};
            std::ofstream rout(recon_dir / "render.json");
            rout << r.dump(2) << "\n";
        }
        save_frame_errors_csv(errors, cfg.out_dir / "recon" / (id + "_errors.csv"));

        EvalReport report;
        report.frame_errors = errors;
        double sum = 0.0;
        int n = 0;
        for (const auto& e : errors)
            if (e.value) {
                sum += *e.value;
                ++n;
            }
        if (n > 0) report.mean_error = sum / n;
        report.trigger_time_min = trigger_time(errors);
        save_report_json(report, cfg.out_dir / "recon" / (id + "_report.json"));

        artifacts.push_back(recon_dir / "frames.bin");
        artifacts.push_back(cfg.out_dir / "recon" / (id + "_errors.csv"));
        artifacts.push_back(cfg.out_dir / "recon" / (id + "_report.json"));
    }
    record_stage(cfg, "reconstruct", artifacts);
}

EvalReport cmd_compare(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.virtual_pairs.empty())
        throw Error("bad-config", "compare requires virtual pairs");
    const BathymetryGrid bathy = make_bathymetry(cfg);
    const SensorNetwork net = resolve_sensors(cfg, bathy);
    const ModelParams params = load_checkpoint(cfg.out_dir / "checkpoint.json");

    const Matrix a_s_net = [&] {
        std::vector<GeoPoint> pts;
        for (const auto& s : net.sensors) pts.push_back(s.location);
        return encode_positions(pts, bathy, params.cfg);
    }();

    struct VirtualPoint {
        std::string id;
        VirtualPointSpec spec;
        Matrix a_q;
    };
    std::vector<VirtualPoint> vpoints;
    for (const auto& [a, b] : cfg.virtual_pairs) {
        GeoPoint mid = midpoint(net.by_id(a).location, net.by_id(b).location);
        if (bathy.is_land_at(mid)) mid = snap_to_ocean(bathy, mid);
        const std::string vid = a < b ? a + "-" + b : b + "-" + a;
        VirtualPointSpec spec{mid, {a, b}};
        vpoints.push_back({vid, spec, encode_positions({mid}, bathy, params.cfg)});
    }

    const fs::path cmp_dir = cfg.out_dir / "compare";
    fs::create_directories(cmp_dir);

    EvalReport report;
    std::vector<fs::path> artifacts;
    for (const auto& id : test_ids(cfg)) {
        const FrameSeries truth = load_frames(cfg.out_dir / "dataset" / id);
        if (!(truth.spec == cfg.grid))
            throw Error("grid-mismatch", "dataset " + id + " grid differs from config grid");

        // Station waveforms and per-frame latents are shared by all points.
        std::vector<WaveformSeries> station_waves;
        for (const auto& s : net.sensors) {
            WaveformSeries w;
            w.times = truth.times;
            w.location = s.location;
            for (const auto& eta : truth.eta) w.eta.push_back(sample_field(eta, bathy, s.location));
            station_waves.push_back(std::move(w));
        }
        std::vector<Matrix> latents;
        for (int f = 0; f < truth.frame_count(); ++f) {
            const SensorReadings readings =
                frame_readings(truth.eta[static_cast<std::size_t>(f)], bathy, net,
                               truth.times[static_cast<std::size_t>(f)]);
            latents.push_back(encode(readings, a_s_net, params));
        }

        for (const auto& vp : vpoints) {
            WaveformSeries truth_wave;
            truth_wave.times = truth.times;
            truth_wave.location = vp.spec.location;
            for (const auto& eta : truth.eta)
                truth_wave.eta.push_back(sample_field(eta, bathy, vp.spec.location));

            WaveformSeries sens_wave;
            sens_wave.times = truth.times;
            sens_wave.location = vp.spec.location;
            for (const auto& z : latents)
                sens_wave.eta.push_back(decode(z, vp.a_q, params)(0));
            sens_wave = median_filter(sens_wave, 13);

            std::vector<WaveformSeries> contrib;
            for (const auto& sid : vp.spec.station_ids)
                for (std::size_t s = 0; s < net.sensors.size(); ++s)
                    if (net.sensors[s].id == sid) contrib.push_back(station_waves[s]);
            const WaveformSeries lihfp_wave =
                lihfp_virtual_waveform(contrib, vp.spec, bathy);

            auto make_row = [&](const std::string& method, const WaveformSeries& w) {
                ComparisonRow row;
                row.epicenter_id = id;
                row.virtual_id = vp.id;
                row.method = method;
                const auto at = arrival_time(truth_wave);
                const auto ap = arrival_time(w);
                if (at && ap) row.arrival_mae_min = std::abs(*at - *ap);
                row.maxamp_mae_m = std::abs(max_amplitude(truth_wave) - max_amplitude(w));
                row.waveform_mae_m = waveform_mae(truth_wave, w);
                return row;
            };
            report.rows.push_back(make_row("senseiver", sens_wave));
            report.rows.push_back(make_row("lihfp", lihfp_wave));

            const std::string stem = id + "_" + vp.id;
            save_waveform_csv(truth_wave, stem + "_truth", cmp_dir / (stem + "_truth.csv"));
            save_waveform_csv(sens_wave, stem + "_senseiver", cmp_dir / (stem + "_senseiver.csv"));
            save_waveform_csv(lihfp_wave, stem + "_lihfp", cmp_dir / (stem + "_lihfp.csv"));
            artifacts.push_back(cmp_dir / (stem + "_truth.csv"));
            artifacts.push_back(cmp_dir / (stem + "_senseiver.csv"));
            artifacts.push_back(cmp_dir / (stem + "_lihfp.csv"));
        }
    }

    save_report_csv(report, cmp_dir / "report.csv");
    save_report_json(report, cmp_dir / "report.json");
    artifacts.push_back(cmp_dir / "report.csv");
    artifacts.push_back(cmp_dir / "report.json");
    record_stage(cfg, "compare", artifacts);
    return report;
}

namespace {

void write_pgm(const fs::path& path, const Field& values, const MaskField& land) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("io-open", "cannot write " + path.string());
    out << "P5\n" << values.cols() << " " << values.rows() << "\n255\n";
    // Row 0 of the raster is the northernmost latitude.
    for (int j = static_cast<int>(values.rows()) - 1; j >= 0; --j)
        for (int i = 0; i < values.cols(); ++i) {
            const unsigned char px =
                land(j, i) ? 0
                           : static_cast<unsigned char>(
                                 std::clamp(std::lround(values(j, i)), 0L, 255L));
            out.write(reinterpret_cast<const char*>(&px), 1);
        }
}

}  // namespace

void cmd_render(const fs::path& recon_dir, std::vector<int> frames) {
    const FrameSeries recon = load_frames(recon_dir);
    std::ifstream rin(recon_dir / "render.json");
    if (!rin) throw Error("io-open", "no render.json in " + recon_dir.string());
    const json rj = json::parse(rin);
    const FrameSeries truth = load_frames(recon_dir / rj.at("truth_dir").get<std::string>());
    if (truth.frame_count() != recon.frame_count())
        throw Error("grid-mismatch", "truth/reconstruction frame count differs");

    if (frames.empty()) {
        const int n = recon.frame_count();
        frames = {n / 4, n / 2, (3 * n) / 4};
    }

    // Land is wherever the truth run left zero through all frames and the
    // bathymetry marked it; the recon meta has no mask, so derive from NaN
    // or fall back to no-land.
    MaskField land = MaskField::Constant(recon.spec.nlat, recon.spec.nlon, false);

    double range = 0.0;
    for (const auto& eta : truth.eta) range = std::max(range, eta.abs().maxCoeff());
    if (range <= 0.0) range = 1.0;

    json meta = {{"eta_range_m", range}, {"frames", frames}};
    std::ofstream mout(recon_dir / "render_meta.json");
    mout << meta.dump(2) << "\n";

    for (int f : frames) {
        if (f < 0 || f >= recon.frame_count())
            throw Error("bad-argument", "render frame index out of range");
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%04d", f);
        const Field& t = truth.eta[static_cast<std::size_t>(f)];
        const Field& r = recon.eta[static_cast<std::size_t>(f)];
        // eta in [-range, range] maps to [0, 255]; zero is mid-gray.
        write_pgm(recon_dir / ("truth_" + std::string(buf) + ".pgm"),
                  127.5 + 127.5 * t / range, land);
        write_pgm(recon_dir / ("recon_" + std::string(buf) + ".pgm"),
                  127.5 + 127.5 * r / range, land);
        write_pgm(recon_dir / ("diff_" + std::string(buf) + ".pgm"),
                  255.0 * (t - r).abs() / range, land);
    }
}

}  // namespace wavesense
