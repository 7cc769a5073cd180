#include "sicert/lp.h"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "sicert/errors.h"

namespace sicert {

double LinearProgram::evaluate_objective(std::span<const double> x) const {
    long double acc = objective_offset;
    for (int i = 0; i < num_variables(); i++) {
        acc += static_cast<long double>(objective[i]) * x[i];
    }
    return static_cast<double>(acc);
}

double LinearProgram::max_violation(std::span<const double> x) const {
    double worst = 0.0;
    for (int i = 0; i < num_variables(); i++) {
        if (is_nonnegative(i)) {
            worst = std::max(worst, -x[i]);
        }
    }
    for (const auto &row : rows) {
        long double acc = 0.0L;
        for (int i = 0; i < num_variables(); i++) {
            acc += static_cast<long double>(row.coefficients[i]) * x[i];
        }
        double ax = static_cast<double>(acc);
        worst = std::max({worst, row.lower - ax, ax - row.upper});
    }
    return worst;
}

void LinearProgram::validate() const {
    int n = num_variables();
    if (!nonnegative.empty() && static_cast<int>(nonnegative.size()) != n) {
        throw InvalidParameter("sign restriction vector does not match the variable count");
    }
    for (double c : objective) {
        if (!std::isfinite(c)) {
            throw InvalidParameter("objective coefficients must be finite");
        }
    }
    for (const auto &row : rows) {
        if (static_cast<int>(row.coefficients.size()) != n) {
            throw InvalidParameter(fmt::format("row '{}' has {} coefficients, expected {}",
                                               row.label, row.coefficients.size(), n));
        }
        for (double a : row.coefficients) {
            if (!std::isfinite(a)) {
                throw InvalidParameter(fmt::format("row '{}' has a non-finite coefficient", row.label));
            }
        }
        if (std::isnan(row.lower) || std::isnan(row.upper)) {
            throw InvalidParameter(fmt::format("row '{}' has a NaN bound", row.label));
        }
    }
}

const char *lp_status_name(LpStatus status) {
    switch (status) {
        case LpStatus::optimal:
            return "optimal";
        case LpStatus::infeasible:
            return "infeasible";
        case LpStatus::unbounded:
            return "unbounded";
        case LpStatus::numerical_difficulty:
            return "numerical_difficulty";
    }
    return "unknown";
}

namespace {

enum class RowKind { le, ge, eq };

struct StandardRow {
    std::vector<double> a;
    double b;
    RowKind kind;
};

/// Tableau over the standard form  A x = b, x >= 0  (b >= 0).
class Tableau {
   public:
    Tableau(int rows, int cols) : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * (cols + 1), 0.0) {
    }

    double &at(int r, int c) {
        return data_[static_cast<size_t>(r) * (cols_ + 1) + c];
    }
    double &rhs(int r) {
        return at(r, cols_);
    }
    int rows() const {
        return rows_;
    }
    int cols() const {
        return cols_;
    }

    /// Pivot on (r, c), updating the reduced-cost row `d` and objective `z`.
    void pivot(int r, int c, std::vector<double> &d, double &z) {
        double inv = 1.0 / at(r, c);
        double *pr = &at(r, 0);
        for (int j = 0; j <= cols_; j++) {
            pr[j] *= inv;
        }
        pr[c] = 1.0;
        for (int i = 0; i < rows_; i++) {
            if (i == r) {
                continue;
            }
            double *pi = &at(i, 0);
            double f = pi[c];
            if (f == 0.0) {
                continue;
            }
            for (int j = 0; j <= cols_; j++) {
                pi[j] -= f * pr[j];
            }
            pi[c] = 0.0;
        }
        double f = d[c];
        if (f != 0.0) {
            for (int j = 0; j < cols_; j++) {
                d[j] -= f * pr[j];
            }
            z += f * pr[cols_];
            d[c] = 0.0;
        }
    }

   private:
    int rows_;
    int cols_;
    std::vector<double> data_;
};

enum class PhaseResult { optimal, unbounded, iteration_limit };

struct SimplexState {
    Tableau tab;
    std::vector<int> basis;
    std::vector<bool> banned;
    int iterations = 0;
};

// Sets d = c - c_B B^-1 A and z = c_B x_B for the current basis.
void price(SimplexState &s, const std::vector<double> &cost, std::vector<double> &d, double &z) {
    int cols = s.tab.cols();
    d = cost;
    z = 0.0;
    for (int r = 0; r < s.tab.rows(); r++) {
        double cb = cost[s.basis[r]];
        if (cb == 0.0) {
            continue;
        }
        for (int j = 0; j < cols; j++) {
            d[j] -= cb * s.tab.at(r, j);
        }
        z += cb * s.tab.rhs(r);
    }
    for (int r = 0; r < s.tab.rows(); r++) {
        d[s.basis[r]] = 0.0;
    }
}

PhaseResult run_phase(SimplexState &s, const std::vector<double> &cost, const SimplexOptions &opt) {
    std::vector<double> d;
    double z = 0.0;
    price(s, cost, d, z);
    std::vector<bool> is_basic(s.tab.cols(), false);
    for (int b : s.basis) {
        is_basic[b] = true;
    }
    bool bland = false;
    int degenerate_run = 0;
    int since_reprice = 0;
    while (true) {
        if (s.iterations >= opt.max_iterations) {
            return PhaseResult::iteration_limit;
        }
        if (++since_reprice >= 100) {
            price(s, cost, d, z);
            since_reprice = 0;
        }
        int enter = -1;
        double best = -opt.optimality_tolerance;
        for (int j = 0; j < s.tab.cols(); j++) {
            if (is_basic[j] || s.banned[j]) {
                continue;
            }
            if (d[j] < best) {
                enter = j;
                if (bland) {
                    break;
                }
                best = d[j];
            }
        }
        if (enter < 0) {
            return PhaseResult::optimal;
        }
        int leave = -1;
        double best_ratio = kInf;
        for (int r = 0; r < s.tab.rows(); r++) {
            double a = s.tab.at(r, enter);
            if (a <= opt.pivot_tolerance) {
                continue;
            }
            double ratio = std::max(s.tab.rhs(r), 0.0) / a;
            double slack = 1e-12 * std::max(1.0, best_ratio == kInf ? 1.0 : best_ratio);
            if (ratio < best_ratio - slack ||
                (ratio <= best_ratio + slack && s.basis[r] < s.basis[leave])) {
                best_ratio = ratio;
                leave = r;
            }
        }
        if (leave < 0) {
            return PhaseResult::unbounded;
        }
        if (best_ratio <= 1e-14) {
            if (++degenerate_run > opt.degenerate_switch) {
                bland = true;
            }
        } else {
            degenerate_run = 0;
        }
        is_basic[s.basis[leave]] = false;
        is_basic[enter] = true;
        s.basis[leave] = enter;
        s.tab.pivot(leave, enter, d, z);
        for (int r = 0; r < s.tab.rows(); r++) {
            if (s.tab.rhs(r) < 0.0 && s.tab.rhs(r) > -opt.feasibility_tolerance) {
                s.tab.rhs(r) = 0.0;
            }
        }
        s.iterations++;
    }
}

// Solves B x = b by Gaussian elimination with partial pivoting in extended
// precision. Returns false when B is numerically singular.
bool solve_dense(std::vector<long double> mat, std::vector<long double> rhs, int n,
                 std::vector<long double> &out) {
    for (int col = 0; col < n; col++) {
        int piv = col;
        for (int r = col + 1; r < n; r++) {
            if (std::fabs(mat[r * n + col]) > std::fabs(mat[piv * n + col])) {
                piv = r;
            }
        }
        if (std::fabs(mat[piv * n + col]) < 1e-14L) {
            return false;
        }
        if (piv != col) {
            for (int j = 0; j < n; j++) {
                std::swap(mat[piv * n + j], mat[col * n + j]);
            }
            std::swap(rhs[piv], rhs[col]);
        }
        for (int r = col + 1; r < n; r++) {
            long double f = mat[r * n + col] / mat[col * n + col];
            if (f == 0.0L) {
                continue;
            }
            for (int j = col; j < n; j++) {
                mat[r * n + j] -= f * mat[col * n + j];
            }
            rhs[r] -= f * rhs[col];
        }
    }
    out.assign(n, 0.0L);
    for (int r = n - 1; r >= 0; r--) {
        long double acc = rhs[r];
        for (int j = r + 1; j < n; j++) {
            acc -= mat[r * n + j] * out[j];
        }
        out[r] = acc / mat[r * n + r];
    }
    return true;
}

}  // namespace

LpSolution solve_lp(const LinearProgram &lp, const SimplexOptions &opt) {
    lp.validate();
    const int n = lp.num_variables();

    // Structural columns: one per nonnegative variable, two per free variable.
    std::vector<int> plus_col(n), minus_col(n, -1);
    int n_struct = 0;
    for (int i = 0; i < n; i++) {
        plus_col[i] = n_struct++;
        if (!lp.is_nonnegative(i)) {
            minus_col[i] = n_struct++;
        }
    }
    auto expand = [&](const std::vector<double> &coeffs) {
        std::vector<double> a(n_struct, 0.0);
        for (int i = 0; i < n; i++) {
            a[plus_col[i]] = coeffs[i];
            if (minus_col[i] >= 0) {
                a[minus_col[i]] = -coeffs[i];
            }
        }
        return a;
    };

    std::vector<StandardRow> std_rows;
    for (const auto &row : lp.rows) {
        bool has_lo = std::isfinite(row.lower);
        bool has_hi = std::isfinite(row.upper);
        if (has_lo && has_hi && row.lower > row.upper) {
            LpSolution out;
            out.status = LpStatus::infeasible;
            return out;
        }
        if (has_lo && has_hi && row.lower == row.upper) {
            std_rows.push_back({expand(row.coefficients), row.upper, RowKind::eq});
            continue;
        }
        if (has_hi) {
            std_rows.push_back({expand(row.coefficients), row.upper, RowKind::le});
        }
        if (has_lo) {
            std_rows.push_back({expand(row.coefficients), row.lower, RowKind::ge});
        }
    }
    for (auto &row : std_rows) {
        if (row.b < 0.0) {
            for (double &a : row.a) {
                a = -a;
            }
            row.b = -row.b;
            if (row.kind == RowKind::le) {
                row.kind = RowKind::ge;
            } else if (row.kind == RowKind::ge) {
                row.kind = RowKind::le;
            }
        }
    }

    const int R = static_cast<int>(std_rows.size());
    int n_slack = 0;
    int n_art = 0;
    for (const auto &row : std_rows) {
        if (row.kind != RowKind::eq) {
            n_slack++;
        }
        if (row.kind != RowKind::le) {
            n_art++;
        }
    }
    const int C = n_struct + n_slack + n_art;
    const int first_art = n_struct + n_slack;

    SimplexState s{Tableau(R, C), std::vector<int>(R), std::vector<bool>(C, false)};
    // Original standard-form matrix, kept for the final basis re-solve.
    std::vector<double> a_std(static_cast<size_t>(R) * C, 0.0);
    std::vector<double> b_std(R);
    int next_slack = n_struct;
    int next_art = first_art;
    for (int r = 0; r < R; r++) {
        const auto &row = std_rows[r];
        for (int j = 0; j < n_struct; j++) {
            s.tab.at(r, j) = row.a[j];
        }
        if (row.kind == RowKind::le) {
            s.tab.at(r, next_slack) = 1.0;
            s.basis[r] = next_slack++;
        } else {
            if (row.kind == RowKind::ge) {
                s.tab.at(r, next_slack++) = -1.0;
            }
            s.tab.at(r, next_art) = 1.0;
            s.basis[r] = next_art++;
        }
        s.tab.rhs(r) = row.b;
        b_std[r] = row.b;
        for (int j = 0; j < C; j++) {
            a_std[static_cast<size_t>(r) * C + j] = s.tab.at(r, j);
        }
    }

    LpSolution out;
    if (n_art > 0) {
        std::vector<double> phase1(C, 0.0);
        for (int j = first_art; j < C; j++) {
            phase1[j] = 1.0;
        }
        PhaseResult res = run_phase(s, phase1, opt);
        if (res == PhaseResult::iteration_limit) {
            out.status = LpStatus::numerical_difficulty;
            out.iterations = s.iterations;
            return out;
        }
        double infeas = 0.0;
        double scale = 1.0;
        for (int r = 0; r < R; r++) {
            if (s.basis[r] >= first_art) {
                infeas += s.tab.rhs(r);
            }
            scale = std::max(scale, b_std[r]);
        }
        if (infeas > opt.feasibility_tolerance * scale) {
            out.status = LpStatus::infeasible;
            out.iterations = s.iterations;
            return out;
        }
        // Drive remaining (zero-level) artificials out of the basis. Rows
        // where that is impossible are redundant and keep their artificial.
        std::vector<double> dummy_d(C, 0.0);
        double dummy_z = 0.0;
        for (int r = 0; r < R; r++) {
            if (s.basis[r] < first_art) {
                continue;
            }
            int best = -1;
            double best_mag = opt.pivot_tolerance;
            for (int j = 0; j < first_art; j++) {
                if (std::find(s.basis.begin(), s.basis.end(), j) != s.basis.end()) {
                    continue;
                }
                double mag = std::abs(s.tab.at(r, j));
                if (mag > best_mag) {
                    best_mag = mag;
                    best = j;
                }
            }
            if (best >= 0) {
                s.basis[r] = best;
                s.tab.pivot(r, best, dummy_d, dummy_z);
            }
        }
        for (int j = first_art; j < C; j++) {
            s.banned[j] = true;
        }
    }

    std::vector<double> cost(C, 0.0);
    double sign = lp.sense == Sense::maximize ? -1.0 : 1.0;
    for (int i = 0; i < n; i++) {
        cost[plus_col[i]] = sign * lp.objective[i];
        if (minus_col[i] >= 0) {
            cost[minus_col[i]] = -sign * lp.objective[i];
        }
    }
    PhaseResult res = run_phase(s, cost, opt);
    out.iterations = s.iterations;
    if (res == PhaseResult::iteration_limit) {
        out.status = LpStatus::numerical_difficulty;
        return out;
    }
    if (res == PhaseResult::unbounded) {
        out.status = LpStatus::unbounded;
        return out;
    }

    auto to_variables = [&](const std::vector<double> &x_std) {
        std::vector<double> x(n);
        for (int i = 0; i < n; i++) {
            x[i] = x_std[plus_col[i]] - (minus_col[i] >= 0 ? x_std[minus_col[i]] : 0.0);
        }
        return x;
    };

    std::vector<double> x_tab(C, 0.0);
    for (int r = 0; r < R; r++) {
        x_tab[s.basis[r]] = std::max(0.0, s.tab.rhs(r));
    }
    std::vector<double> x = to_variables(x_tab);

    // Re-solve the final basis from the original data to shed the error
    // accumulated over the pivots.
    if (R > 0) {
        std::vector<long double> bmat(static_cast<size_t>(R) * R);
        std::vector<long double> brhs(b_std.begin(), b_std.end());
        for (int r = 0; r < R; r++) {
            for (int k = 0; k < R; k++) {
                bmat[static_cast<size_t>(r) * R + k] = a_std[static_cast<size_t>(r) * C + s.basis[k]];
            }
        }
        std::vector<long double> xb;
        if (solve_dense(std::move(bmat), std::move(brhs), R, xb)) {
            std::vector<double> x_ref(C, 0.0);
            for (int r = 0; r < R; r++) {
                x_ref[s.basis[r]] = std::max(0.0, static_cast<double>(xb[r]));
            }
            std::vector<double> refined = to_variables(x_ref);
            if (lp.max_violation(refined) <= lp.max_violation(x)) {
                x = std::move(refined);
            }
        }
    }

    if (lp.max_violation(x) > opt.feasibility_tolerance * 10) {
        out.status = LpStatus::numerical_difficulty;
    } else {
        out.status = LpStatus::optimal;
    }
    out.objective = lp.evaluate_objective(x);
    out.values = std::move(x);
    return out;
}

}  // namespace sicert
