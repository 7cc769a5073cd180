#include "sicert/fock.h"

#include <cmath>
#include <memory>
#include <string>

#include <fmt/format.h>

#include "sicert/errors.h"

namespace sicert {

const char *tail_kind_name(TailKind kind) {
    switch (kind) {
        case TailKind::explicit_formula:
            return "explicit";
        case TailKind::conservative_unit:
            return "conservative_unit";
        case TailKind::zero:
            return "zero";
    }
    return "unknown";
}

FockDiagonalOperator::FockDiagonalOperator(std::vector<double> diag, TailDescriptor tail)
    : diag_(std::move(diag)), tail_(std::move(tail)) {
    for (size_t n = 0; n < diag_.size(); n++) {
        double v = diag_[n];
        if (!(v >= 0.0 && v <= 1.0)) {
            throw InvalidParameter(fmt::format("diagonal entry {} = {} is outside [0, 1]", n, v));
        }
    }
    if (const auto *t = std::get_if<ExplicitTail>(&tail_); t != nullptr && !t->evaluate) {
        throw InvalidParameter("explicit tail needs an evaluator");
    }
}

FockDiagonalOperator FockDiagonalOperator::constant(double value, int n_store) {
    if (n_store < 0) {
        throw InvalidParameter("n_store must be nonnegative");
    }
    return FockDiagonalOperator(
        std::vector<double>(n_store, value),
        ExplicitTail{[value](int) { return value; }, [value](int) { return value; }});
}

TailKind FockDiagonalOperator::tail_kind() const {
    if (std::holds_alternative<ExplicitTail>(tail_)) {
        return TailKind::explicit_formula;
    }
    if (std::holds_alternative<ZeroTail>(tail_)) {
        return TailKind::zero;
    }
    return TailKind::conservative_unit;
}

bool FockDiagonalOperator::covers(int n) const {
    return n >= 0 && (n < n_store() || tail_kind() != TailKind::conservative_unit);
}

std::optional<double> FockDiagonalOperator::at(int n) const {
    if (n < 0) {
        return std::nullopt;
    }
    if (n < n_store()) {
        return diag_[n];
    }
    if (const auto *t = std::get_if<ExplicitTail>(&tail_)) {
        return t->evaluate(n);
    }
    if (std::holds_alternative<ZeroTail>(tail_)) {
        return 0.0;
    }
    return std::nullopt;
}

PhaseInsensitivePOVM::PhaseInsensitivePOVM(std::vector<FockDiagonalOperator> elements)
    : elements_(std::move(elements)) {
    if (elements_.size() < 2) {
        throw InvalidParameter("a POVM needs at least two elements");
    }
}

PhotonSource::PhotonSource(std::function<double(int)> pmf, double mean_photon,
                           std::function<double(int)> tail_bound)
    : pmf_(std::move(pmf)), mean_photon_(mean_photon), tail_bound_(std::move(tail_bound)) {
    if (!pmf_) {
        throw InvalidParameter("photon source needs a mass function");
    }
    if (!(mean_photon_ >= 0.0) || !std::isfinite(mean_photon_)) {
        throw InvalidParameter("mean photon number must be finite and nonnegative");
    }
}

double PhotonSource::residual_mass(int n_eval) const {
    if (tail_bound_) {
        double bound = tail_bound_(n_eval);
        if (bound >= 0.0) {
            return bound;
        }
    }
    // Neumaier summation keeps the residual meaningful down to ~1e-16.
    double sum = 0.0;
    double comp = 0.0;
    for (int n = 0; n <= n_eval; n++) {
        double v = pmf_(n);
        double t = sum + v;
        if (std::abs(sum) >= std::abs(v)) {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    return std::max(0.0, 1.0 - (sum + comp));
}

void MeasurementStatistics::validate(double tol) const {
    if (!(mean_photon >= 0.0) || !std::isfinite(mean_photon)) {
        throw InvalidParameter("mean photon number must be finite and nonnegative");
    }
    double total = 0.0;
    for (size_t j = 0; j < probabilities.size(); j++) {
        if (!(probabilities[j] >= 0.0)) {
            throw InvalidParameter(fmt::format("outcome probability p[{}] = {} is negative", j,
                                               probabilities[j]));
        }
        total += probabilities[j];
    }
    if (std::abs(total - 1.0) > tol) {
        throw InvalidParameter(fmt::format("outcome probabilities sum to {}, not 1", total));
    }
}

double poisson_log_pmf(double mean, int n) {
    if (mean == 0.0) {
        return n == 0 ? 0.0 : -INFINITY;
    }
    double log_mean = std::log(mean);
    double log_p = -mean;
    for (int i = 1; i <= n; i++) {
        log_p += log_mean - std::log(static_cast<double>(i));
    }
    return log_p;
}

PhotonSource coherent_source(double mean_photon) {
    if (!(mean_photon >= 0.0) || !std::isfinite(mean_photon)) {
        throw InvalidParameter(fmt::format("mean photon number {} must be >= 0", mean_photon));
    }
    auto pmf = [mean_photon](int n) { return std::exp(poisson_log_pmf(mean_photon, n)); };
    // Ratio test: p(n+1)/p(n) = mu/(n+1) <= mu/(h+2) for n > h, so the tail is
    // dominated by a geometric series once h + 2 > mu.
    auto tail = [mean_photon, pmf](int h) {
        if (mean_photon == 0.0) {
            return 0.0;
        }
        double ratio = mean_photon / (h + 2.0);
        if (ratio >= 1.0) {
            return -1.0;
        }
        return pmf(h + 1) / (1.0 - ratio);
    };
    return PhotonSource(pmf, mean_photon, tail);
}

PhotonSource fock_source(int n) {
    if (n < 0) {
        throw InvalidParameter("Fock state index must be nonnegative");
    }
    return PhotonSource([n](int k) { return k == n ? 1.0 : 0.0; }, static_cast<double>(n),
                        [n](int h) { return h >= n ? 0.0 : 1.0; });
}

PhotonSource custom_source(std::vector<double> pmf) {
    double total = 0.0;
    double mean = 0.0;
    for (size_t n = 0; n < pmf.size(); n++) {
        if (!(pmf[n] >= 0.0)) {
            throw InvalidParameter(fmt::format("probability p({}) = {} is negative", n, pmf[n]));
        }
        total += pmf[n];
        mean += static_cast<double>(n) * pmf[n];
    }
    if (std::abs(total - 1.0) > 1e-12) {
        throw InvalidParameter(fmt::format("distribution sums to {}, not 1", total));
    }
    int support = static_cast<int>(pmf.size());
    auto shared = std::make_shared<const std::vector<double>>(std::move(pmf));
    return PhotonSource([shared](int n) { return n < static_cast<int>(shared->size()) ? (*shared)[n] : 0.0; },
                        mean, [support](int h) { return h + 1 >= support ? 0.0 : -1.0; });
}

MeasurementStatistics expected_outcome_probabilities(const PhotonSource &source,
                                                     const PhaseInsensitivePOVM &povm, int n_eval,
                                                     double tail_tolerance) {
    if (n_eval < 0) {
        throw InvalidParameter("n_eval must be nonnegative");
    }
    double residual = source.residual_mass(n_eval);
    if (residual > tail_tolerance) {
        throw TruncationInsufficient(fmt::format(
            "source mass beyond n = {} is {:.3g}, above tolerance {:.3g}", n_eval, residual,
            tail_tolerance));
    }
    int m = povm.size();
    std::vector<double> p(m, 0.0);
    for (int j = 0; j < m; j++) {
        const auto &element = povm[j];
        double acc = 0.0;
        for (int n = 0; n <= n_eval; n++) {
            double weight = source.pmf(n);
            if (weight == 0.0) {
                continue;
            }
            auto theta = element.at(n);
            if (!theta) {
                throw InvalidParameter(fmt::format(
                    "POVM element {} has no entry for n = {} (stores {}, conservative tail)", j, n,
                    element.n_store()));
            }
            acc += weight * *theta;
        }
        p[j] = acc;
    }
    double total = 0.0;
    for (double v : p) {
        total += v;
    }
    if (!(total > 0.0)) {
        throw TruncationInsufficient("outcome probabilities vanish; cannot normalize");
    }
    for (double &v : p) {
        v /= total;
    }
    MeasurementStatistics stats;
    stats.probabilities = std::move(p);
    stats.mean_photon = source.mean_photon();
    stats.truncation_residual = residual;
    return stats;
}

bool povm_completeness_check(const PhaseInsensitivePOVM &povm, int n_max, double tol) {
    for (int n = 0; n <= n_max; n++) {
        double total = 0.0;
        for (const auto &element : povm.elements()) {
            auto theta = element.at(n);
            if (!theta || *theta < -tol || *theta > 1.0 + tol) {
                return false;
            }
            total += *theta;
        }
        if (std::abs(total - 1.0) > tol) {
            return false;
        }
    }
    return true;
}

}  // namespace sicert
