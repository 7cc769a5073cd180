#include "cli.h"

#include <fstream>
#include <iostream>
#include <map>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "sicert/detector.h"
#include "sicert/errors.h"
#include "sicert/harness.h"

namespace sicert {

namespace {

void add_sweep_options(CLI::App &cmd, RunConfig &cfg, std::string &tail, std::string &spacing,
                       std::string &config_path) {
    cmd.add_option("--config", config_path, "Key-value config file (RunConfig field names); flags override it")
        ->check(CLI::ExistingFile);
    cmd.add_option("--cutoff", cfg.cutoff, "Photon-number cutoff N")->capture_default_str();
    cmd.add_option("--outcomes,--m", cfg.outcomes, "Number of detector outcomes m")->capture_default_str();
    cmd.add_option("--modes,--n_modes", cfg.modes, "Temporal modes of the detector")->capture_default_str();
    cmd.add_option("--mu-start,--mu_start", cfg.mu_start, "First mean photon number")->capture_default_str();
    cmd.add_option("--mu-stop,--mu_stop", cfg.mu_stop, "Last mean photon number")->capture_default_str();
    cmd.add_option("--mu-count,--mu_count", cfg.mu_count, "Number of grid points")->capture_default_str();
    cmd.add_option("--mu-spacing,--mu_spacing", spacing, "Grid spacing")
        ->check(CLI::IsMember({"linear", "log"}))
        ->capture_default_str();
    cmd.add_option("--tail,--tail_mode", tail, "Tail norm mode")
        ->check(CLI::IsMember({"conservative", "refined"}))
        ->capture_default_str();
    cmd.add_option("--probe-horizon,--probe_horizon", cfg.probe_horizon, "Largest n probed by refined tails")
        ->capture_default_str();
    cmd.add_option("--source-tail-tolerance,--source_tail_tolerance", cfg.source_tail_tolerance,
                   "Largest source mass allowed past the simulation cutoff")
        ->capture_default_str();
    cmd.add_option("--gap-alarm,--gap_alarm", cfg.gap_alarm, "Duality gap that raises a warning")
        ->capture_default_str();
    cmd.add_option("--threads", cfg.threads, "Worker threads (0 = hardware concurrency)");
    cmd.add_option("--out,--output", cfg.output, "CSV output path (default: stdout)");
    cmd.add_option("--dump-certificates,--dump_certificates", cfg.dump_certificates,
                   "Directory receiving one certificate file per verified row");
}

// Applies `key = value` lines to options that were not given on the command
// line. Keys use the RunConfig field names (or any long option name).
void apply_config_file(CLI::App &cmd, const std::string &path) {
    std::vector<CLI::ConfigItem> items = CLI::ConfigTOML().from_file(path);
    for (const auto &item : items) {
        if (item.name == "++" || item.name == "--") {
            continue;
        }
        if (!item.parents.empty()) {
            throw CLI::ConversionError(fmt::format("sections are not supported in '{}'", path));
        }
        std::string name = "--" + item.name;
        CLI::Option *opt = cmd.get_option_no_throw(name);
        if (opt == nullptr || name == "--config") {
            throw CLI::ConversionError(fmt::format("unknown key '{}' in '{}'", item.name, path));
        }
        if (opt->count() > 0) {
            continue;
        }
        for (const auto &value : item.inputs) {
            opt->add_result(value);
        }
        opt->run_callback();
    }
}

int do_sweep(RunConfig cfg, const std::string &tail, const std::string &spacing, std::ostream &out,
             std::ostream &err) {
    cfg.tail_mode = parse_tail_mode(tail);
    cfg.mu_spacing = spacing == "log" ? GridSpacing::log : GridSpacing::linear;
    cfg.validate();

    SweepReport report = run_sweep(cfg);
    if (cfg.output.empty()) {
        emit_csv(report, out);
    } else {
        write_csv(report, cfg.output);
    }
    if (!cfg.dump_certificates.empty()) {
        dump_certificates(report, cfg.dump_certificates);
    }
    for (const auto &r : report.records) {
        if (!r.verified()) {
            fmt::print(err, "row {} (mean photon {:.6g}): {}: {}\n", r.index, r.mean_photon, r.status_name(),
                       r.message);
        } else if (r.gap_alarm) {
            fmt::print(err, "row {} (mean photon {:.6g}): duality gap {:.3g} above alarm\n", r.index,
                       r.mean_photon, r.result->duality_gap);
        }
    }
    fmt::print(err, "{} of {} rows verified; max certified min-entropy {:.6g} bits per sample\n",
               std::count_if(report.records.begin(), report.records.end(),
                             [](const SweepRecord &r) { return r.verified(); }),
               report.records.size(), report.max_min_entropy());
    return report.all_verified() ? 0 : 1;
}

}  // namespace

int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
    CLI::App app{"Certified min-entropy bounds for source-independent QRNGs read by a single "
                 "phase-insensitive detector"};
    app.require_subcommand(1);

    RunConfig cfg;
    std::string tail = tail_mode_name(cfg.tail_mode);
    std::string spacing = "linear";
    std::string config_path;
    CLI::App *sweep = app.add_subcommand("sweep", "Certify a grid of coherent-source mean photon numbers");
    add_sweep_options(*sweep, cfg, tail, spacing, config_path);

    TmdConfig tmd{32, 10, 20};
    std::string povm_out;
    CLI::App *export_povm = app.add_subcommand("export-povm", "Write the detector POVM as text");
    export_povm->add_option("--modes", tmd.n_modes, "Temporal modes")->capture_default_str();
    export_povm->add_option("--outcomes", tmd.n_outcomes, "Number of outcomes")->capture_default_str();
    export_povm->add_option("--store", tmd.n_store, "Fock entries per element")->capture_default_str();
    export_povm->add_option("--out", povm_out, "Output path (default: stdout)");

    try {
        app.parse(argc, argv);
        if (sweep->parsed() && !config_path.empty()) {
            apply_config_file(*sweep, config_path);
        }
    } catch (const CLI::ParseError &e) {
        // --help and friends exit cleanly; every usage error maps to 2.
        return app.exit(e, out, err) == 0 ? 0 : 2;
    }

    try {
        if (sweep->parsed()) {
            return do_sweep(cfg, tail, spacing, out, err);
        }
        PhaseInsensitivePOVM povm = build_tmd_povm(tmd);
        if (povm_out.empty()) {
            write_povm(out, povm);
        } else {
            std::ofstream file(povm_out, std::ios::binary | std::ios::trunc);
            if (!file) {
                throw IoError(fmt::format("cannot open '{}' for writing", povm_out));
            }
            write_povm(file, povm);
        }
        return 0;
    } catch (const std::exception &e) {
        fmt::print(err, "error: {}\n", e.what());
        return 2;
    }
}

}  // namespace sicert
