#include "sicert/harness.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "gtest/gtest.h"

#include "cli.h"
#include "sicert/errors.h"

using namespace sicert;
namespace fs = std::filesystem;

namespace {

RunConfig small_config(int count) {
    RunConfig cfg;
    cfg.mu_start = 0.2;
    cfg.mu_stop = 0.8;
    cfg.mu_count = count;
    cfg.threads = 1;
    return cfg;
}

std::string csv_of(const SweepReport &report) {
    std::ostringstream out;
    emit_csv(report, out);
    return out.str();
}

std::vector<std::string> lines_of(const std::string &text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) {
        out.push_back(line);
    }
    return out;
}

fs::path scratch_dir(const std::string &name) {
    fs::path dir = fs::temp_directory_path() / ("sicert_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path &path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

int run(std::vector<std::string> args, std::string *out_text = nullptr, std::string *err_text = nullptr) {
    args.insert(args.begin(), "certify");
    std::vector<const char *> argv;
    for (const auto &a : args) {
        argv.push_back(a.c_str());
    }
    std::ostringstream out;
    std::ostringstream err;
    int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    if (out_text) {
        *out_text = out.str();
    }
    if (err_text) {
        *err_text = err.str();
    }
    return code;
}

}  // namespace

TEST(harness, grid) {
    RunConfig cfg;
    auto grid = cfg.grid();
    ASSERT_EQ(grid.size(), 20u);
    EXPECT_EQ(grid.front(), 0.04);
    EXPECT_EQ(grid.back(), 0.99);
    EXPECT_NEAR(grid[1], 0.09, 1e-15);

    cfg.mu_spacing = GridSpacing::log;
    cfg.mu_start = 0.01;
    cfg.mu_stop = 1.0;
    cfg.mu_count = 3;
    grid = cfg.grid();
    EXPECT_NEAR(grid[1], 0.1, 1e-15);

    cfg = RunConfig{};
    cfg.mu_count = 1;
    EXPECT_EQ(cfg.grid(), std::vector<double>{0.04});
}

TEST(harness, config_validation) {
    RunConfig cfg;
    EXPECT_NO_THROW(cfg.validate());
    cfg.cutoff = 0;
    EXPECT_THROW(cfg.validate(), InvalidParameter);
    cfg = RunConfig{};
    cfg.outcomes = 40;
    EXPECT_THROW(cfg.validate(), InvalidParameter);
    cfg = RunConfig{};
    cfg.mu_start = -0.1;
    EXPECT_THROW(cfg.validate(), InvalidParameter);
    cfg = RunConfig{};
    cfg.mu_spacing = GridSpacing::log;
    cfg.mu_start = 0.0;
    EXPECT_THROW(cfg.validate(), InvalidParameter);
    cfg = RunConfig{};
    cfg.probe_horizon = 10;
    EXPECT_THROW(cfg.validate(), InvalidParameter);
    cfg = RunConfig{};
    cfg.threads = -2;
    EXPECT_THROW(cfg.validate(), InvalidParameter);
}

TEST(harness, csv_shape) {
    for (int count : {1, 3}) {
        SweepReport report = run_sweep(small_config(count));
        auto lines = lines_of(csv_of(report));
        ASSERT_EQ(static_cast<int>(lines.size()), count + 1);
        EXPECT_EQ(lines[0], "mean_photon,cutoff,m,n_modes,tail_mode,p_guess_bound,min_entropy_bits,"
                            "duality_gap,weight_bound,status");
        for (int i = 1; i <= count; i++) {
            EXPECT_NE(lines[i].find(",20,10,32,refined,"), std::string::npos) << lines[i];
            EXPECT_TRUE(lines[i].ends_with(",verified")) << lines[i];
        }
        EXPECT_TRUE(report.all_verified());
    }
}

TEST(harness, csv_is_deterministic_across_threads) {
    RunConfig cfg = small_config(6);
    std::string a = csv_of(run_sweep(cfg));
    std::string b = csv_of(run_sweep(cfg));
    cfg.threads = 4;
    std::string c = csv_of(run_sweep(cfg));
    EXPECT_EQ(a, b);
    EXPECT_EQ(a, c);
}

TEST(harness, vacuum_gives_nothing) {
    RunConfig cfg = small_config(1);
    cfg.mu_start = 0.0;
    cfg.mu_stop = 0.0;
    SweepReport report = run_sweep(cfg);
    ASSERT_TRUE(report.records[0].verified());
    EXPECT_EQ(report.records[0].result->min_entropy_bits, 0.0);
    EXPECT_EQ(report.max_min_entropy(), 0.0);
}

TEST(harness, failed_rows_leave_numbers_blank) {
    SweepReport report;
    report.config = small_config(2);
    SweepRecord bad;
    bad.mean_photon = 0.5;
    bad.status = CertificationStatus::verify_failed;
    SweepRecord broken;
    broken.mean_photon = 0.75;
    broken.setup_failed = true;
    report.records = {bad, broken};
    auto lines = lines_of(csv_of(report));
    EXPECT_EQ(lines[1], "0.5,20,10,32,refined,,,,,verify_failed");
    EXPECT_EQ(lines[2], "0.75,20,10,32,refined,,,,,error");
    EXPECT_FALSE(report.all_verified());
}

TEST(harness, write_errors_name_the_path) {
    SweepReport report = run_sweep(small_config(1));
    try {
        write_csv(report, "/nonexistent-dir/out.csv");
        FAIL() << "expected IoError";
    } catch (const IoError &e) {
        EXPECT_NE(std::string(e.what()).find("/nonexistent-dir/out.csv"), std::string::npos);
    }
}

TEST(harness, certificates_round_trip_and_reverify) {
    RunConfig cfg = small_config(3);
    SweepReport report = run_sweep(cfg);
    fs::path dir = scratch_dir("certs");
    dump_certificates(report, dir.string());
    PhaseInsensitivePOVM povm = sweep_povm(cfg);
    for (const auto &rec : report.records) {
        fs::path file = dir / ("certificate_" + std::to_string(rec.index) + ".txt");
        ASSERT_TRUE(fs::exists(file));
        std::ifstream in(file);
        CertificateDump dump = read_certificate(in);
        EXPECT_EQ(dump.index, rec.index);
        EXPECT_EQ(dump.mean_photon, rec.mean_photon);
        EXPECT_EQ(dump.certificate.lambda, rec.certificate->lambda);
        EXPECT_EQ(dump.certificate.eta, rec.certificate->eta);
        EXPECT_EQ(dump.certificate.xi, rec.certificate->xi);
        PointSetup setup = prepare_point(cfg, povm, dump.mean_photon);
        EXPECT_TRUE(verify_certificate(dump.certificate, setup.ctx, setup.stats).passed);
    }
    fs::remove_all(dir);

    std::istringstream garbage("index 0\n");
    EXPECT_THROW(read_certificate(garbage), InvalidParameter);
}

TEST(harness, povm_round_trip) {
    PhaseInsensitivePOVM povm = build_tmd_povm({8, 4, 12});
    std::stringstream buf;
    write_povm(buf, povm);
    PhaseInsensitivePOVM back = read_povm(buf);
    ASSERT_EQ(back.size(), 4);
    for (int j = 0; j < 4; j++) {
        ASSERT_EQ(back[j].n_store(), 12);
        for (int n = 0; n < 12; n++) {
            EXPECT_EQ(back[j].stored()[n], povm[j].stored()[n]);
        }
    }
    EXPECT_EQ(back[0].tail_kind(), TailKind::zero);
    EXPECT_EQ(back[1].tail_kind(), TailKind::conservative_unit);

    std::istringstream bad("outcomes 2\nelement 0 tail weird stored 1\n1\n");
    EXPECT_THROW(read_povm(bad), InvalidParameter);
}

TEST(cli, sweep_writes_csv) {
    fs::path dir = scratch_dir("cli");
    fs::path csv = dir / "out.csv";
    std::string err;
    int code = run({"sweep", "--mu-count", "2", "--out", csv.string()}, nullptr, &err);
    EXPECT_EQ(code, 0) << err;
    EXPECT_EQ(lines_of(slurp(csv)).size(), 3u);
    fs::remove_all(dir);
}

TEST(cli, config_file_with_overrides) {
    fs::path dir = scratch_dir("cfg");
    fs::path cfg_path = dir / "run.toml";
    {
        std::ofstream cfg(cfg_path);
        cfg << "cutoff = 12\ntail_mode = \"conservative\"\nmu_count = 3\n";
    }
    std::string out;
    std::string err;
    int code = run({"sweep", "--config", cfg_path.string(), "--mu-count", "2"}, &out, &err);
    EXPECT_EQ(code, 0) << err;
    auto lines = lines_of(out);
    ASSERT_EQ(lines.size(), 3u);
    EXPECT_NE(lines[1].find(",12,10,32,conservative,"), std::string::npos) << lines[1];

    {
        std::ofstream cfg(cfg_path);
        cfg << "bogus_key = 4\n";
    }
    EXPECT_EQ(run({"sweep", "--config", cfg_path.string()}, nullptr, &err), 2);
    EXPECT_NE(err.find("bogus_key"), std::string::npos) << err;
    fs::remove_all(dir);
}

TEST(cli, rejects_bad_arguments) {
    std::string err;
    EXPECT_EQ(run({"sweep", "--tail", "loose"}, nullptr, &err), 2);
    EXPECT_EQ(run({"sweep", "--help"}), 0);
    EXPECT_NE(run({"sweep", "--outcomes", "40"}, nullptr, &err), 0);
    EXPECT_NE(run({"sweep", "--out", "/nonexistent-dir/x.csv", "--mu-count", "1"}, nullptr, &err), 0);
    EXPECT_NE(err.find("/nonexistent-dir/x.csv"), std::string::npos) << err;
}

TEST(cli, export_povm) {
    std::string out;
    std::string err;
    int code = run({"export-povm", "--modes", "4", "--outcomes", "3", "--store", "6"}, &out, &err);
    ASSERT_EQ(code, 0) << err;
    std::istringstream in(out);
    PhaseInsensitivePOVM povm = read_povm(in);
    EXPECT_EQ(povm.size(), 3);
    EXPECT_TRUE(povm_completeness_check(povm, 5, 1e-12));
}
