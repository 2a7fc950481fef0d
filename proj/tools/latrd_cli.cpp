// latrd command-line front end.
//
// Subcommands: rd-curve, slb, fbl, lattice-entropy, simulate, dc.
// Each one takes a JSON config file; a few fields can be overridden with
// flags. Exit codes: 0 ok, 2 config error, 3 numeric failure, 4 every
// requested bound came out vacuous.

#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "latrd/config.hpp"

namespace {

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> samples;
    std::optional<std::string> unit;
    std::optional<std::string> output;
};

int run_command(const std::string& config_path, const Overrides& ov,
                const std::function<int(const latrd::ExperimentConfig&, std::ostream&)>& fn) {
    latrd::ExperimentConfig cfg;
    try {
        std::ifstream in(config_path);
        if (!in) {
            std::cerr << "config: cannot open " << config_path << "\n";
            return latrd::kExitConfig;
        }
        latrd::json j = latrd::json::parse(in);
        cfg = latrd::parse_config(j);
        if (ov.seed) cfg.seed = *ov.seed;
        if (ov.samples) cfg.samples = *ov.samples;
        if (ov.unit) cfg.unit = *ov.unit;
        if (ov.output) cfg.output = *ov.output;
        if (cfg.unit != "nats" && cfg.unit != "bits") {
            std::cerr << "unit: must be nats or bits\n";
            return latrd::kExitConfig;
        }
    } catch (const latrd::ConfigError& e) {
        std::cerr << "config: " << e.what() << "\n";
        return latrd::kExitConfig;
    } catch (const latrd::json::exception& e) {
        std::cerr << "config: " << e.what() << "\n";
        return latrd::kExitConfig;
    }

    try {
        if (cfg.output.empty()) return fn(cfg, std::cout);
        std::ofstream out(cfg.output);
        if (!out) {
            std::cerr << "output: cannot open " << cfg.output << "\n";
            return latrd::kExitConfig;
        }
        return fn(cfg, out);
    } catch (const latrd::ConfigError& e) {
        std::cerr << "config: " << e.what() << "\n";
        return latrd::kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return latrd::kExitNumeric;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"rate-distortion, Shannon-lower-bound and lattice quantization bounds"};
    app.require_subcommand(1);

    std::string config_path;
    Overrides ov;
    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("config", config_path, "JSON config file")->required();
        cmd->add_option("--seed", ov.seed, "override config seed");
        cmd->add_option("--samples", ov.samples, "override sample budget");
        cmd->add_option("--unit", ov.unit, "override output unit (nats|bits)");
        cmd->add_option("--output", ov.output, "override output path");
    };

    CLI::App* rd = app.add_subcommand("rd-curve", "rate-distortion curve with equality flags");
    CLI::App* slb = app.add_subcommand("slb", "Shannon lower bound records");
    CLI::App* fbl = app.add_subcommand("fbl", "finite-blocklength bound curves");
    CLI::App* lent = app.add_subcommand("lattice-entropy", "quantizer output entropy study");
    CLI::App* sim = app.add_subcommand("simulate", "lattice + lossless codec simulation");
    CLI::App* dc = app.add_subcommand("dc", "critical distortion of a finite source");
    for (CLI::App* cmd : {rd, slb, fbl, lent, sim, dc}) add_common(cmd);

    CLI11_PARSE(app, argc, argv);

    if (rd->parsed()) return run_command(config_path, ov, latrd::run_rd_curve);
    if (slb->parsed()) return run_command(config_path, ov, latrd::run_slb);
    if (fbl->parsed()) return run_command(config_path, ov, latrd::run_fbl);
    if (lent->parsed()) return run_command(config_path, ov, latrd::run_lattice_entropy);
    if (sim->parsed())
        return run_command(config_path, ov, [](const latrd::ExperimentConfig& cfg,
                                               std::ostream& os) {
            if (cfg.cell_csv.empty()) return latrd::run_simulate(cfg, os);
            std::ofstream cells(cfg.cell_csv);
            if (!cells) throw latrd::ConfigError("cell_csv: cannot open " + cfg.cell_csv);
            return latrd::run_simulate(cfg, os, &cells);
        });
    if (dc->parsed()) return run_command(config_path, ov, latrd::run_dc);
    return latrd::kExitConfig;
}
