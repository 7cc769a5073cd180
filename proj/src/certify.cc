#include "sicert/certify.h"

#include <algorithm>
#include <cmath>
#include <random>

#include <boost/multiprecision/cpp_int.hpp>

#include <fmt/format.h>

#include "sicert/errors.h"

namespace sicert {

namespace {

void check_dimensions(const TruncationContext &ctx, const MeasurementStatistics &stats) {
    int m = ctx.num_outcomes();
    if (m < 2) {
        throw InvalidParameter("the truncation context needs at least two outcomes");
    }
    if (stats.size() != m || static_cast<int>(ctx.tail_norms.size()) != m) {
        throw InvalidParameter(fmt::format(
            "dimension mismatch: {} outcomes in the context, {} tail norms, {} probabilities", m,
            ctx.tail_norms.size(), stats.size()));
    }
    for (const auto &row : ctx.truncated_elements) {
        if (static_cast<int>(row.size()) != ctx.cutoff) {
            throw InvalidParameter("truncated element length differs from the cutoff");
        }
    }
}

}  // namespace

LinearProgram build_primal(const TruncationContext &ctx, const MeasurementStatistics &stats) {
    check_dimensions(ctx, stats);
    const int m = ctx.num_outcomes();
    const int N = ctx.cutoff;
    std::vector<double> lower = lower_probabilities(stats, ctx);

    LinearProgram lp;
    lp.sense = Sense::maximize;
    lp.objective_offset = 1.0;
    lp.objective.resize(static_cast<size_t>(m) * N);
    for (int k = 0; k < m; k++) {
        for (int n = 0; n < N; n++) {
            lp.objective[k * N + n] = ctx.theta(k, n) - 1.0;
        }
    }
    auto bracket_row = [&](int j) {
        std::vector<double> row(static_cast<size_t>(m) * N);
        for (int k = 0; k < m; k++) {
            for (int n = 0; n < N; n++) {
                row[k * N + n] = ctx.theta(j, n);
            }
        }
        return row;
    };
    for (int j = 0; j < m; j++) {
        if (lower[j] > stats.probabilities[j]) {
            throw InvalidParameter(fmt::format("empty bracket for outcome {}: {} > {}", j, lower[j],
                                               stats.probabilities[j]));
        }
        lp.rows.push_back({bracket_row(j), -kInf, stats.probabilities[j], fmt::format("upper[{}]", j)});
    }
    for (int j = 0; j < m; j++) {
        lp.rows.push_back({bracket_row(j), lower[j], kInf, fmt::format("lower[{}]", j)});
    }
    lp.rows.push_back({std::vector<double>(static_cast<size_t>(m) * N, 1.0), -kInf, 1.0, "normalization"});
    return lp;
}

LinearProgram build_dual(const TruncationContext &ctx, const MeasurementStatistics &stats) {
    check_dimensions(ctx, stats);
    const int m = ctx.num_outcomes();
    const int N = ctx.cutoff;
    std::vector<double> lower = lower_probabilities(stats, ctx);

    LinearProgram lp;
    lp.sense = Sense::minimize;
    lp.objective_offset = 1.0;
    lp.objective.assign(2 * m + 1, 0.0);
    for (int j = 0; j < m; j++) {
        lp.objective[j] = -lower[j];
        lp.objective[m + j] = stats.probabilities[j];
    }
    lp.objective[2 * m] = 1.0;
    for (int k = 0; k < m; k++) {
        for (int n = 0; n < N; n++) {
            std::vector<double> row(2 * m + 1);
            for (int j = 0; j < m; j++) {
                row[j] = ctx.theta(j, n);
                row[m + j] = -ctx.theta(j, n);
            }
            row[2 * m] = -1.0;
            lp.rows.push_back({std::move(row), -kInf, 1.0 - ctx.theta(k, n), fmt::format("k={},n={}", k, n)});
        }
    }
    return lp;
}

DualCertificate certificate_from_dual_solution(const LpSolution &solution, int num_outcomes) {
    if (static_cast<int>(solution.values.size()) != 2 * num_outcomes + 1) {
        throw InvalidParameter(fmt::format("dual solution has {} entries, expected {}",
                                           solution.values.size(), 2 * num_outcomes + 1));
    }
    DualCertificate cert;
    cert.lambda.assign(solution.values.begin(), solution.values.begin() + num_outcomes);
    cert.eta.assign(solution.values.begin() + num_outcomes, solution.values.begin() + 2 * num_outcomes);
    cert.xi = solution.values[2 * num_outcomes];
    cert.objective_value = solution.objective;
    return cert;
}

namespace {

using boost::multiprecision::cpp_rational;

void check_certificate_size(const DualCertificate &cert, const TruncationContext &ctx) {
    const int m = ctx.num_outcomes();
    if (static_cast<int>(cert.lambda.size()) != m || static_cast<int>(cert.eta.size()) != m) {
        throw InvalidParameter("certificate size does not match the context");
    }
}

// Exact value of max_{k,n} theta_k(n) + sum_j (lambda_j - eta_j) theta_j(n) - xi - 1
// for the double-valued inputs. Every double is a dyadic rational, so this is
// free of rounding.
cpp_rational exact_margin(const DualCertificate &cert, const TruncationContext &ctx) {
    const int m = ctx.num_outcomes();
    std::vector<cpp_rational> coeff(m);
    for (int j = 0; j < m; j++) {
        coeff[j] = cpp_rational(cert.lambda[j]) - cpp_rational(cert.eta[j]);
    }
    const cpp_rational offset = cpp_rational(cert.xi) + 1;
    cpp_rational worst;
    bool first = true;
    for (int n = 0; n < ctx.cutoff; n++) {
        cpp_rational shift = 0;
        double top = 0.0;
        for (int j = 0; j < m; j++) {
            double theta = ctx.theta(j, n);
            if (theta != 0.0) {
                shift += coeff[j] * cpp_rational(theta);
            }
            top = std::max(top, theta);
        }
        cpp_rational lhs = cpp_rational(top) + shift - offset;
        if (first || lhs > worst) {
            worst = lhs;
            first = false;
        }
    }
    return worst;
}

cpp_rational exact_objective(const DualCertificate &cert, const TruncationContext &ctx,
                             const MeasurementStatistics &stats) {
    std::vector<double> lower = lower_probabilities(stats, ctx);
    cpp_rational acc = cpp_rational(cert.xi) + 1;
    for (int j = 0; j < stats.size(); j++) {
        acc += cpp_rational(cert.eta[j]) * cpp_rational(stats.probabilities[j]);
        acc -= cpp_rational(cert.lambda[j]) * cpp_rational(lower[j]);
    }
    return acc;
}

double round_up(const cpp_rational &value) {
    double d = value.convert_to<double>();
    if (cpp_rational(d) < value) {
        d = std::nextafter(d, INFINITY);
    }
    return d;
}

}  // namespace

double constraint_margin(const DualCertificate &cert, const TruncationContext &ctx) {
    check_certificate_size(cert, ctx);
    return round_up(exact_margin(cert, ctx));
}

double dual_objective(const DualCertificate &cert, const TruncationContext &ctx,
                      const MeasurementStatistics &stats) {
    check_certificate_size(cert, ctx);
    return round_up(exact_objective(cert, ctx, stats));
}

DualCertificate repair_dual_certificate(DualCertificate raw, const TruncationContext &ctx,
                                        const MeasurementStatistics &stats) {
    check_dimensions(ctx, stats);
    check_certificate_size(raw, ctx);
    auto clean = [](double v) { return std::isfinite(v) && v > 0.0 ? v : 0.0; };
    for (double &v : raw.lambda) {
        v = clean(v);
    }
    for (double &v : raw.eta) {
        v = clean(v);
    }
    raw.xi = clean(raw.xi);

    // Raising xi lowers every constraint by the same amount and raises the
    // objective by exactly that amount.
    cpp_rational margin = exact_margin(raw, ctx);
    while (margin > 0) {
        raw.xi = round_up(cpp_rational(raw.xi) + margin);
        margin = exact_margin(raw, ctx);
    }
    raw.feasibility_margin = round_up(margin);
    raw.objective_value = dual_objective(raw, ctx, stats);
    return raw;
}

VerificationReport verify_certificate(const DualCertificate &cert, const TruncationContext &ctx,
                                      const MeasurementStatistics &stats) {
    VerificationReport report;
    const int m = ctx.num_outcomes();
    if (static_cast<int>(cert.lambda.size()) != m || static_cast<int>(cert.eta.size()) != m ||
        stats.size() != m) {
        report.violations.push_back("dimension mismatch between certificate, context and statistics");
        return report;
    }
    for (int j = 0; j < m; j++) {
        if (!(cert.lambda[j] >= 0.0) || !std::isfinite(cert.lambda[j])) {
            report.violations.push_back(fmt::format("lambda[{}] = {} is not a nonnegative number", j, cert.lambda[j]));
        }
        if (!(cert.eta[j] >= 0.0) || !std::isfinite(cert.eta[j])) {
            report.violations.push_back(fmt::format("eta[{}] = {} is not a nonnegative number", j, cert.eta[j]));
        }
    }
    if (!(cert.xi >= 0.0) || !std::isfinite(cert.xi)) {
        report.violations.push_back(fmt::format("xi = {} is not a nonnegative number", cert.xi));
    }

    auto finite = [](const std::vector<double> &v) {
        return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
    };
    if (!finite(cert.lambda) || !finite(cert.eta) || !std::isfinite(cert.xi)) {
        return report;
    }
    cpp_rational margin = exact_margin(cert, ctx);
    report.margin = round_up(margin);
    if (margin > 0) {
        report.violations.push_back(fmt::format("dual constraint violated by {:.6g}", report.margin));
    }
    report.objective = dual_objective(cert, ctx, stats);
    if (!(std::abs(report.objective - cert.objective_value) <= kObjectiveMatchTolerance)) {
        report.violations.push_back(fmt::format("claimed objective {:.17g} but recomputed {:.17g}",
                                                cert.objective_value, report.objective));
    }
    report.passed = report.violations.empty();
    return report;
}

RandomnessResult min_entropy(const DualCertificate &cert) {
    double d = cert.objective_value;
    if (!(d > 0.0) || !std::isfinite(d)) {
        throw InvalidParameter(fmt::format("certificate objective {} is not a positive number", d));
    }
    RandomnessResult out;
    out.guessing_bound = std::min(d, 1.0);
    out.min_entropy_bits = out.guessing_bound >= 1.0 ? 0.0 : -std::log2(out.guessing_bound);
    return out;
}

namespace {

// Primal in inequality form: G x <= h, x >= 0, objective c . x + 1.
struct InequalityForm {
    int dim = 0;
    int rows = 0;
    std::vector<double> g;  // rows x dim
    std::vector<double> h;
    std::vector<double> c;
};

InequalityForm inequality_form(const TruncationContext &ctx, const MeasurementStatistics &stats) {
    const int m = ctx.num_outcomes();
    const int N = ctx.cutoff;
    std::vector<double> lower = lower_probabilities(stats, ctx);
    InequalityForm f;
    f.dim = m * N;
    f.rows = 2 * m + 1;
    f.g.assign(static_cast<size_t>(f.rows) * f.dim, 0.0);
    f.h.assign(f.rows, 0.0);
    f.c.assign(f.dim, 0.0);
    for (int k = 0; k < m; k++) {
        for (int n = 0; n < N; n++) {
            int v = k * N + n;
            f.c[v] = ctx.theta(k, n) - 1.0;
            for (int j = 0; j < m; j++) {
                f.g[static_cast<size_t>(j) * f.dim + v] = ctx.theta(j, n);
                f.g[static_cast<size_t>(m + j) * f.dim + v] = -ctx.theta(j, n);
            }
            f.g[static_cast<size_t>(2 * m) * f.dim + v] = 1.0;
        }
    }
    for (int j = 0; j < m; j++) {
        f.h[j] = stats.probabilities[j];
        f.h[m + j] = -lower[j];
    }
    f.h[2 * m] = 1.0;
    return f;
}

std::uint64_t binomial_u64(int n, int k, std::uint64_t cap) {
    if (k < 0 || k > n) {
        return 0;
    }
    k = std::min(k, n - k);
    long double acc = 1.0L;
    for (int i = 1; i <= k; i++) {
        acc = acc * (n - k + i) / i;
        if (acc > static_cast<long double>(cap)) {
            return cap + 1;
        }
    }
    return static_cast<std::uint64_t>(std::llround(acc));
}

bool solve_small(std::vector<double> a, std::vector<double> b, int n, std::vector<double> &x) {
    for (int col = 0; col < n; col++) {
        int piv = col;
        for (int r = col + 1; r < n; r++) {
            if (std::abs(a[r * n + col]) > std::abs(a[piv * n + col])) {
                piv = r;
            }
        }
        if (std::abs(a[piv * n + col]) < 1e-12) {
            return false;
        }
        if (piv != col) {
            for (int j = 0; j < n; j++) {
                std::swap(a[piv * n + j], a[col * n + j]);
            }
            std::swap(b[piv], b[col]);
        }
        for (int r = col + 1; r < n; r++) {
            double f = a[r * n + col] / a[col * n + col];
            for (int j = col; j < n; j++) {
                a[r * n + j] -= f * a[col * n + j];
            }
            b[r] -= f * b[col];
        }
    }
    x.assign(n, 0.0);
    for (int r = n - 1; r >= 0; r--) {
        double acc = b[r];
        for (int j = r + 1; j < n; j++) {
            acc -= a[r * n + j] * x[j];
        }
        x[r] = acc / a[r * n + r];
    }
    return true;
}

double objective_at(const InequalityForm &f, const std::vector<double> &x) {
    double acc = 1.0;
    for (int i = 0; i < f.dim; i++) {
        acc += f.c[i] * x[i];
    }
    return acc;
}

// Feasible step interval [lo, hi] for x + t u.
std::pair<double, double> step_interval(const InequalityForm &f, const std::vector<double> &x,
                                        const std::vector<double> &u) {
    double lo = -INFINITY;
    double hi = INFINITY;
    for (int i = 0; i < f.dim; i++) {
        if (u[i] > 0.0) {
            lo = std::max(lo, -x[i] / u[i]);
        } else if (u[i] < 0.0) {
            hi = std::min(hi, -x[i] / u[i]);
        }
    }
    for (int r = 0; r < f.rows; r++) {
        double gx = 0.0;
        double gu = 0.0;
        for (int i = 0; i < f.dim; i++) {
            gx += f.g[static_cast<size_t>(r) * f.dim + i] * x[i];
            gu += f.g[static_cast<size_t>(r) * f.dim + i] * u[i];
        }
        double room = std::max(0.0, f.h[r] - gx);
        if (gu > 0.0) {
            hi = std::min(hi, room / gu);
        } else if (gu < 0.0) {
            lo = std::max(lo, room / gu);
        }
    }
    return {std::min(lo, 0.0), std::max(hi, 0.0)};
}

}  // namespace

double brute_force_guessing_bound(const TruncationContext &ctx, const MeasurementStatistics &stats,
                                  const BruteForceOptions &options) {
    check_dimensions(ctx, stats);
    InequalityForm f = inequality_form(ctx, stats);
    const int total_cols = f.dim + f.rows;
    std::uint64_t bases = binomial_u64(total_cols, f.rows, options.basis_budget);
    if (bases > options.basis_budget) {
        throw BudgetExceeded(fmt::format("{} candidate bases exceed the budget of {}",
                                         bases, options.basis_budget));
    }

    // Standard form [G I] (x, s) = h; a basic solution picks `rows` columns.
    auto column = [&](int c, int r) {
        if (c < f.dim) {
            return f.g[static_cast<size_t>(r) * f.dim + c];
        }
        return c - f.dim == r ? 1.0 : 0.0;
    };
    const double tol = options.feasibility_tolerance;
    double best = NAN;
    std::vector<double> centroid(f.dim, 0.0);
    int vertex_count = 0;
    std::vector<int> pick(f.rows);
    for (int i = 0; i < f.rows; i++) {
        pick[i] = i;
    }
    std::vector<double> a(static_cast<size_t>(f.rows) * f.rows);
    std::vector<double> sol;
    std::vector<double> x(f.dim);
    while (true) {
        for (int r = 0; r < f.rows; r++) {
            for (int i = 0; i < f.rows; i++) {
                a[r * f.rows + i] = column(pick[i], r);
            }
        }
        if (solve_small(a, f.h, f.rows, sol)) {
            bool feasible = std::all_of(sol.begin(), sol.end(), [tol](double v) { return v >= -tol; });
            if (feasible) {
                std::fill(x.begin(), x.end(), 0.0);
                for (int i = 0; i < f.rows; i++) {
                    if (pick[i] < f.dim) {
                        x[pick[i]] = std::max(0.0, sol[i]);
                    }
                }
                double value = objective_at(f, x);
                best = std::isnan(best) ? value : std::max(best, value);
                for (int i = 0; i < f.dim; i++) {
                    centroid[i] += x[i];
                }
                vertex_count++;
            }
        }
        // Next combination in lexicographic order.
        int i = f.rows - 1;
        while (i >= 0 && pick[i] == total_cols - f.rows + i) {
            i--;
        }
        if (i < 0) {
            break;
        }
        pick[i]++;
        for (int k = i + 1; k < f.rows; k++) {
            pick[k] = pick[k - 1] + 1;
        }
    }
    if (vertex_count == 0) {
        return best;
    }
    for (double &v : centroid) {
        v /= vertex_count;
    }

    // Hit-and-run from the centroid, with a short ascent after each sample.
    std::mt19937_64 rng(options.seed);
    std::normal_distribution<double> gauss;
    std::uniform_real_distribution<double> unit;
    std::vector<double> point = centroid;
    std::vector<double> u(f.dim);
    for (int s = 0; s < options.samples; s++) {
        for (double &v : u) {
            v = gauss(rng);
        }
        auto [lo, hi] = step_interval(f, point, u);
        double t = lo + (hi - lo) * unit(rng);
        for (int i = 0; i < f.dim; i++) {
            point[i] = std::max(0.0, point[i] + t * u[i]);
        }
        std::vector<double> climb = point;
        for (int step = 0; step < options.ascent_steps; step++) {
            for (double &v : u) {
                v = gauss(rng);
            }
            double slope = 0.0;
            for (int i = 0; i < f.dim; i++) {
                slope += f.c[i] * u[i];
            }
            auto [clo, chi] = step_interval(f, climb, u);
            double tt = slope >= 0.0 ? chi : clo;
            for (int i = 0; i < f.dim; i++) {
                climb[i] = std::max(0.0, climb[i] + tt * u[i]);
            }
        }
        for (const auto *candidate : {&point, &climb}) {
            double worst = 0.0;
            for (int r = 0; r < f.rows; r++) {
                double gx = 0.0;
                for (int i = 0; i < f.dim; i++) {
                    gx += f.g[static_cast<size_t>(r) * f.dim + i] * (*candidate)[i];
                }
                worst = std::max(worst, gx - f.h[r]);
            }
            if (worst <= tol) {
                best = std::max(best, objective_at(f, *candidate));
            }
        }
    }
    return best;
}

const char *certification_status_name(CertificationStatus status) {
    switch (status) {
        case CertificationStatus::verified:
            return "verified";
        case CertificationStatus::solver_failed:
            return "solver_failed";
        case CertificationStatus::verify_failed:
            return "verify_failed";
    }
    return "unknown";
}

CertificationOutcome certify(const TruncationContext &ctx, const MeasurementStatistics &stats,
                             const CertifyOptions &options) {
    CertificationOutcome out;
    LpSolution dual = solve_lp(build_dual(ctx, stats), options.simplex);
    out.dual_status = dual.status;
    if (dual.status != LpStatus::optimal) {
        out.status = CertificationStatus::solver_failed;
        out.message = fmt::format("dual solve ended with status {}", lp_status_name(dual.status));
        return out;
    }
    DualCertificate cert = repair_dual_certificate(
        certificate_from_dual_solution(dual, ctx.num_outcomes()), ctx, stats);
    out.report = verify_certificate(cert, ctx, stats);
    out.certificate = cert;
    if (!out.report.passed) {
        out.status = CertificationStatus::verify_failed;
        out.message = out.report.violations.front();
        return out;
    }

    RandomnessResult result = min_entropy(cert);
    result.tail_mode = ctx.mode;
    result.primal_value = NAN;
    result.duality_gap = NAN;
    if (options.solve_primal) {
        LpSolution primal = solve_lp(build_primal(ctx, stats), options.simplex);
        out.primal_status = primal.status;
        if (primal.status == LpStatus::optimal) {
            result.primal_value = primal.objective;
            result.duality_gap = cert.objective_value - primal.objective;
            out.gap_alarm = std::abs(result.duality_gap) > options.gap_alarm;
        }
    }
    out.result = result;
    out.status = CertificationStatus::verified;
    return out;
}

}  // namespace sicert
