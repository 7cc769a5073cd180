#pragma once

#include <string>
#include <vector>

#include "sicert/fock.h"

namespace sicert {

enum class TailMode { conservative, refined };

const char *tail_mode_name(TailMode mode);
/// Parses "conservative" or "refined"; throws InvalidParameter otherwise.
TailMode parse_tail_mode(const std::string &text);

struct TailNorm {
    /// Upper bound on sup_{n >= cutoff} theta(n), in [0, 1].
    double value = 1.0;
    /// Set when refined mode was requested but no sound tightening existed.
    bool fell_back = false;
};

/// Everything the finite program needs about the photon-number < N block:
/// the restricted elements, per-element tail norms and the weight that may
/// sit outside the block.
struct TruncationContext {
    int cutoff = 0;
    TailMode mode = TailMode::conservative;
    /// truncated_elements[j][n] = theta_j(n) for n < cutoff.
    std::vector<std::vector<double>> truncated_elements;
    std::vector<double> tail_norms;
    std::vector<bool> tail_fell_back;
    double weight_bound = 0.0;

    int num_outcomes() const {
        return static_cast<int>(truncated_elements.size());
    }
    double theta(int j, int n) const {
        return truncated_elements[j][n];
    }
};

/// theta(0..cutoff-1). Diagonal operators commute with the projector, so this
/// restriction is exactly P M P.
std::vector<double> truncate_operator(const FockDiagonalOperator &op, int cutoff);

inline constexpr int kDefaultProbeHorizon = 60;

/// Upper bound on the operator norm of the part of `op` past the cutoff.
///
/// Conservative: 1, or the largest stored entry past the cutoff for a zero
/// tail. Refined: the largest entry on [cutoff, probe_horizon] combined with
/// the analytic cap beyond the horizon; elements without a cap fall back to
/// the conservative value and set `fell_back`.
TailNorm tail_infinity_norm(const FockDiagonalOperator &op, int cutoff, TailMode mode,
                            int probe_horizon = kDefaultProbeHorizon);

/// min(mean_photon / cutoff, 1): Markov bound on the mass at n >= cutoff.
double weight_bound(double mean_photon, int cutoff);

TruncationContext make_truncation_context(const PhaseInsensitivePOVM &povm, double mean_photon,
                                          int cutoff, TailMode mode,
                                          int probe_horizon = kDefaultProbeHorizon);

/// p_j^L = max(0, p_j - weight_bound * tail_norm_j).
std::vector<double> lower_probabilities(const MeasurementStatistics &stats,
                                        const TruncationContext &ctx);

}  // namespace sicert
