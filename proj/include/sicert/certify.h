#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sicert/fock.h"
#include "sicert/lp.h"
#include "sicert/reduction.h"

namespace sicert {

// Guessing-probability program restricted to photon numbers below the cutoff.
//
// Primal variables are the diagonals rho_k(n), k < m, n < N (index k * N + n):
//
//   max  sum_k sum_n rho_k(n) theta_k(n) + 1 - sum_k sum_n rho_k(n)
//   s.t. p^L_j <= sum_k sum_n theta_j(n) rho_k(n) <= p_j     for every j
//        sum_k sum_n rho_k(n) <= 1,   rho >= 0.
//
// Every operator involved is diagonal, so dephasing any feasible set of
// density matrices leaves both feasibility and the objective unchanged; the
// linear program therefore has the same optimum as the semidefinite one.
//
// Dual variables: lambda_j >= 0 on the lower bracket, eta_j >= 0 on the upper
// bracket, xi >= 0 on normalization:
//
//   min  1 + sum_j eta_j p_j - sum_j lambda_j p^L_j + xi
//   s.t. theta_k(n) + sum_j (lambda_j - eta_j) theta_j(n) - (xi + 1) <= 0
//        for every k and every n < N.

/// Primal program: m*N nonnegative variables, 2m+1 one-sided rows
/// (m upper brackets, m lower brackets, normalization).
LinearProgram build_primal(const TruncationContext &ctx, const MeasurementStatistics &stats);

/// Dual program over (lambda_0..lambda_{m-1}, eta_0..eta_{m-1}, xi), with one
/// row per (k, n).
LinearProgram build_dual(const TruncationContext &ctx, const MeasurementStatistics &stats);

struct DualCertificate {
    std::vector<double> lambda;
    std::vector<double> eta;
    double xi = 0.0;
    /// Upper bound on the guessing probability carried by this dual point.
    double objective_value = 0.0;
    /// max over (k, n) of the constraint left-hand side; <= 0 when feasible.
    double feasibility_margin = 0.0;
};

/// Reads (lambda, eta, xi) out of a solution of build_dual. No cleanup.
DualCertificate certificate_from_dual_solution(const LpSolution &solution, int num_outcomes);

/// Constraint margin, evaluated in extended precision from the context alone.
double constraint_margin(const DualCertificate &cert, const TruncationContext &ctx);

/// Dual objective, evaluated in extended precision from the context and stats.
double dual_objective(const DualCertificate &cert, const TruncationContext &ctx,
                      const MeasurementStatistics &stats);

/// Clamps negative multipliers to zero, then raises xi by whatever margin is
/// left so the certificate is feasible. The bound can only get looser.
DualCertificate repair_dual_certificate(DualCertificate raw, const TruncationContext &ctx,
                                        const MeasurementStatistics &stats);

inline constexpr double kObjectiveMatchTolerance = 1e-12;

struct VerificationReport {
    bool passed = false;
    std::vector<std::string> violations;
    double margin = 0.0;
    double objective = 0.0;
};

/// Independent re-check of a certificate: dual signs, every (k, n)
/// constraint, and the claimed objective value.
VerificationReport verify_certificate(const DualCertificate &cert, const TruncationContext &ctx,
                                      const MeasurementStatistics &stats);

struct RandomnessResult {
    double guessing_bound = 1.0;
    double min_entropy_bits = 0.0;
    // Diagnostics.
    double primal_value = 0.0;
    double duality_gap = 0.0;
    TailMode tail_mode = TailMode::conservative;
};

/// -log2 of the (clamped) certified guessing probability. Throws
/// InvalidParameter if the objective is not a positive finite number.
RandomnessResult min_entropy(const DualCertificate &cert);

struct BruteForceOptions {
    /// Maximum number of candidate bases for vertex enumeration.
    std::uint64_t basis_budget = 500'000;
    int samples = 2000;
    int ascent_steps = 20;
    std::uint64_t seed = 12345;
    double feasibility_tolerance = 1e-9;
};

/// Largest primal objective found by enumerating every basic solution of the
/// primal polytope and by hit-and-run sampling with local ascent from its
/// vertex centroid. Independent of solve_lp. Throws BudgetExceeded when the
/// enumeration is too large; returns NaN when no feasible vertex exists.
double brute_force_guessing_bound(const TruncationContext &ctx, const MeasurementStatistics &stats,
                                  const BruteForceOptions &options = {});

enum class CertificationStatus { verified, solver_failed, verify_failed };

const char *certification_status_name(CertificationStatus status);

struct CertifyOptions {
    SimplexOptions simplex;
    bool solve_primal = true;
    double gap_alarm = 1e-5;
};

struct CertificationOutcome {
    CertificationStatus status = CertificationStatus::solver_failed;
    LpStatus dual_status = LpStatus::numerical_difficulty;
    LpStatus primal_status = LpStatus::numerical_difficulty;
    std::optional<DualCertificate> certificate;
    VerificationReport report;
    /// Present only when status == verified.
    std::optional<RandomnessResult> result;
    bool gap_alarm = false;
    std::string message;
};

/// Dual solve, repair, verification and min-entropy in one pass. The primal
/// is solved only to report the duality gap.
CertificationOutcome certify(const TruncationContext &ctx, const MeasurementStatistics &stats,
                             const CertifyOptions &options = {});

}  // namespace sicert
