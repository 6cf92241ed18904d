#include <CLI11.hpp>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "wavesense/error.hpp"
#include "wavesense/pipeline.hpp"

namespace {

struct CommonOpts {
    std::string config;
    std::string out;
    long long seed = -1;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool config_required = true) {
    auto* c = cmd->add_option("--config", opts.config, "experiment config JSON");
    if (config_required) c->required();
    cmd->add_option("--out", opts.out, "output directory (overrides config)");
    cmd->add_option("--seed", opts.seed, "master seed (overrides config)");
}

wavesense::ExperimentConfig resolve(const CommonOpts& opts) {
    wavesense::ExperimentConfig cfg = opts.config.empty()
                                          ? wavesense::default_desk_config()
                                          : wavesense::load_config(opts.config);
    if (!opts.out.empty()) cfg.out_dir = opts.out;
    if (opts.seed >= 0) {
        cfg.master_seed = static_cast<std::uint64_t>(opts.seed);
        cfg.apply_master_seed();
    }
    std::filesystem::create_directories(cfg.out_dir);
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"wavesense: tsunami wavefield simulation, sparse-sensor "
                 "reconstruction and virtual-station comparison"};
    app.set_version_flag("--version", wavesense::tool_version());
    app.require_subcommand(1);

    CommonOpts sim_o, train_o, rec_o, cmp_o;
    std::vector<std::string> rec_ids;
    std::string render_dir;
    std::vector<int> render_frames;
    std::string init_path;

    auto* sim = app.add_subcommand("simulate", "run the solver for every epicenter");
    add_common(sim, sim_o);
    auto* tr = app.add_subcommand("train", "fit the reconstruction model on train epicenters");
    add_common(tr, train_o);
    auto* rec = app.add_subcommand("reconstruct", "full-field reconstruction from sensors");
    add_common(rec, rec_o);
    rec->add_option("--id", rec_ids, "epicenter ids (default: all test ids)");
    auto* cmp = app.add_subcommand("compare", "model vs interpolation at virtual stations");
    add_common(cmp, cmp_o);
    auto* ren = app.add_subcommand("render", "write truth/recon/diff PGM rasters");
    ren->add_option("--recon-dir", render_dir, "reconstruction directory")->required();
    ren->add_option("--frame", render_frames, "frame indices (default: quartiles)");
    auto* init = app.add_subcommand("init", "write the default desk config");
    init->add_option("--out", init_path, "config path")->required();

    std::string stage = "cli";
    try {
        app.parse(argc, argv);
        if (*sim) {
            stage = "simulate";
            wavesense::cmd_simulate(resolve(sim_o));
        } else if (*tr) {
            stage = "train";
            wavesense::cmd_train(resolve(train_o));
        } else if (*rec) {
            stage = "reconstruct";
            wavesense::cmd_reconstruct(resolve(rec_o), rec_ids);
        } else if (*cmp) {
            stage = "compare";
            const auto report = wavesense::cmd_compare(resolve(cmp_o));
            for (const auto& r : report.rows)
                std::cout << r.epicenter_id << " " << r.virtual_id << " " << r.method
                          << " waveform_mae_m=" << r.waveform_mae_m << "\n";
        } else if (*ren) {
            stage = "render";
            wavesense::cmd_render(render_dir, render_frames);
        } else if (*init) {
            stage = "init";
            wavesense::save_config(wavesense::default_desk_config(), init_path);
        }
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const wavesense::Error& e) {
        std::cerr << "stage=" << stage << " code=" << e.code() << " detail=" << e.detail()
                  << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "stage=" << stage << " code=internal detail=" << e.what() << "\n";
        return 2;
    }
    return 0;
}
