#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sicert/certify.h"
#include "sicert/detector.h"
#include "sicert/fock.h"
#include "sicert/reduction.h"

namespace sicert {

enum class GridSpacing { linear, log };

/// Sweep parameters. Defaults reproduce the reference simulation: cutoff 20,
/// ten outcomes, 2^5 temporal modes, weak coherent light below one photon.
struct RunConfig {
    int cutoff = 20;
    int outcomes = 10;
    int modes = 32;
    double mu_start = 0.04;
    double mu_stop = 0.99;
    int mu_count = 20;
    GridSpacing mu_spacing = GridSpacing::linear;
    TailMode tail_mode = TailMode::refined;
    int probe_horizon = kDefaultProbeHorizon;
    double source_tail_tolerance = kDefaultSourceTailTolerance;
    double gap_alarm = 1e-5;
    /// Worker threads; 0 picks the hardware concurrency.
    int threads = 0;
    std::string output;
    std::string dump_certificates;

    void validate() const;
    std::vector<double> grid() const;
};

/// Photon-number cutoff for simulating outcome statistics at mean mu.
int evaluation_horizon(double mu);

/// TMD measurement sized for every point of the grid.
PhaseInsensitivePOVM sweep_povm(const RunConfig &cfg);

struct PointSetup {
    MeasurementStatistics stats;
    TruncationContext ctx;
};

/// Statistics and truncation context for a coherent source of mean mu.
PointSetup prepare_point(const RunConfig &cfg, const PhaseInsensitivePOVM &povm, double mu);

struct SweepRecord {
    int index = 0;
    double mean_photon = 0.0;
    CertificationStatus status = CertificationStatus::solver_failed;
    /// Set when the point failed before reaching the solver.
    bool setup_failed = false;
    double weight_bound = 0.0;
    double source_residual = 0.0;
    std::optional<RandomnessResult> result;
    std::optional<DualCertificate> certificate;
    bool gap_alarm = false;
    std::string message;

    bool verified() const {
        return !setup_failed && status == CertificationStatus::verified && result.has_value();
    }
    const char *status_name() const;
};

struct SweepReport {
    RunConfig config;
    std::vector<SweepRecord> records;

    bool all_verified() const;
    /// Largest certified min-entropy over verified rows (0 if none).
    double max_min_entropy() const;
};

/// Runs every grid point (concurrently) and returns records in grid order.
SweepReport run_sweep(const RunConfig &cfg);

inline constexpr const char *kCsvHeader =
    "mean_photon,cutoff,m,n_modes,tail_mode,p_guess_bound,min_entropy_bits,duality_gap,"
    "weight_bound,status";

void emit_csv(const SweepReport &report, std::ostream &out);
/// Throws IoError naming the path when it cannot be written.
void write_csv(const SweepReport &report, const std::string &path);

struct CertificateDump {
    int index = 0;
    double mean_photon = 0.0;
    int cutoff = 0;
    int outcomes = 0;
    int modes = 0;
    TailMode tail_mode = TailMode::conservative;
    DualCertificate certificate;
};

void write_certificate(std::ostream &out, const CertificateDump &dump);
CertificateDump read_certificate(std::istream &in);

/// One file per verified row, named certificate_<index>.txt.
void dump_certificates(const SweepReport &report, const std::string &dir);

void write_povm(std::ostream &out, const PhaseInsensitivePOVM &povm);
/// Reads the stored entries back. Closed-form tails cannot be serialized, so
/// explicit tails come back as conservative_unit.
PhaseInsensitivePOVM read_povm(std::istream &in);

}  // namespace sicert
