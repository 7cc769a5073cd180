#pragma once

#include <limits>
#include <span>
#include <string>
#include <vector>

namespace sicert {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Sense { maximize, minimize };

/// lower <= coefficients . x <= upper. Either side may be infinite.
struct LpRow {
    std::vector<double> coefficients;
    double lower = -kInf;
    double upper = kInf;
    std::string label;
};

/// Dense linear program: optimize objective . x + objective_offset over rows.
struct LinearProgram {
    Sense sense = Sense::maximize;
    std::vector<double> objective;
    double objective_offset = 0.0;
    /// Per-variable sign restriction. Empty means every variable is >= 0.
    std::vector<bool> nonnegative;
    std::vector<LpRow> rows;

    int num_variables() const {
        return static_cast<int>(objective.size());
    }
    int num_rows() const {
        return static_cast<int>(rows.size());
    }
    bool is_nonnegative(int i) const {
        return nonnegative.empty() || nonnegative[i];
    }

    double evaluate_objective(std::span<const double> x) const;
    /// Largest violation of any row bound or sign restriction at x (0 if feasible).
    double max_violation(std::span<const double> x) const;
    /// Throws InvalidParameter on inconsistent dimensions or NaN data.
    void validate() const;
};

enum class LpStatus { optimal, infeasible, unbounded, numerical_difficulty };

const char *lp_status_name(LpStatus status);

struct LpSolution {
    LpStatus status = LpStatus::numerical_difficulty;
    std::vector<double> values;
    double objective = 0.0;
    int iterations = 0;
};

struct SimplexOptions {
    double pivot_tolerance = 1e-11;
    double feasibility_tolerance = 1e-9;
    double optimality_tolerance = 1e-11;
    int max_iterations = 200000;
    /// Consecutive degenerate pivots before switching to Bland's rule.
    int degenerate_switch = 50;
};

/// Two-phase dense tableau simplex. Deterministic: ties always resolve to the
/// lowest index. Infeasible and unbounded programs are reported through
/// `status`; `values` is only meaningful when the status is optimal.
LpSolution solve_lp(const LinearProgram &lp, const SimplexOptions &options = {});

}  // namespace sicert
