#include "sicert/reduction.h"

#include <algorithm>
#include <string>

#include <fmt/format.h>

#include "sicert/errors.h"

namespace sicert {

const char *tail_mode_name(TailMode mode) {
    return mode == TailMode::refined ? "refined" : "conservative";
}

TailMode parse_tail_mode(const std::string &text) {
    if (text == "refined") {
        return TailMode::refined;
    }
    if (text == "conservative") {
        return TailMode::conservative;
    }
    throw InvalidParameter(fmt::format("unknown tail mode '{}'", text));
}

std::vector<double> truncate_operator(const FockDiagonalOperator &op, int cutoff) {
    if (cutoff < 1) {
        throw InvalidParameter("cutoff must be at least 1");
    }
    std::vector<double> out(cutoff);
    for (int n = 0; n < cutoff; n++) {
        auto v = op.at(n);
        if (!v) {
            throw InvalidParameter(fmt::format(
                "operator stores {} entries and has no tail formula; cutoff {} is out of reach",
                op.n_store(), cutoff));
        }
        out[n] = *v;
    }
    return out;
}

namespace {

double max_stored_from(const FockDiagonalOperator &op, int from) {
    double best = 0.0;
    auto stored = op.stored();
    for (int n = std::max(from, 0); n < op.n_store(); n++) {
        best = std::max(best, stored[n]);
    }
    return best;
}

}  // namespace

TailNorm tail_infinity_norm(const FockDiagonalOperator &op, int cutoff, TailMode mode,
                            int probe_horizon) {
    if (cutoff < 1) {
        throw InvalidParameter("cutoff must be at least 1");
    }
    if (op.tail_kind() == TailKind::zero) {
        return {max_stored_from(op, cutoff), false};
    }
    if (mode == TailMode::conservative) {
        return {1.0, false};
    }
    if (probe_horizon < cutoff) {
        throw InvalidParameter(
            fmt::format("probe horizon {} is below the cutoff {}", probe_horizon, cutoff));
    }
    const auto *tail = std::get_if<ExplicitTail>(&op.tail());
    if (tail == nullptr || !tail->cap_beyond) {
        return {1.0, true};
    }
    double best = tail->cap_beyond(probe_horizon);
    for (int n = cutoff; n <= probe_horizon; n++) {
        best = std::max(best, *op.at(n));
    }
    return {std::clamp(best, 0.0, 1.0), false};
}

double weight_bound(double mean_photon, int cutoff) {
    if (!(mean_photon >= 0.0)) {
        throw InvalidParameter("mean photon number must be nonnegative");
    }
    if (cutoff < 1) {
        throw InvalidParameter("cutoff must be at least 1");
    }
    return std::min(mean_photon / cutoff, 1.0);
}

TruncationContext make_truncation_context(const PhaseInsensitivePOVM &povm, double mean_photon,
                                          int cutoff, TailMode mode, int probe_horizon) {
    TruncationContext ctx;
    ctx.cutoff = cutoff;
    ctx.mode = mode;
    ctx.weight_bound = weight_bound(mean_photon, cutoff);
    for (const auto &element : povm.elements()) {
        ctx.truncated_elements.push_back(truncate_operator(element, cutoff));
        TailNorm norm = tail_infinity_norm(element, cutoff, mode, probe_horizon);
        ctx.tail_norms.push_back(norm.value);
        ctx.tail_fell_back.push_back(norm.fell_back);
    }
    return ctx;
}

std::vector<double> lower_probabilities(const MeasurementStatistics &stats,
                                        const TruncationContext &ctx) {
    if (stats.size() != static_cast<int>(ctx.tail_norms.size())) {
        throw InvalidParameter(fmt::format("statistics have {} outcomes but the context has {}",
                                           stats.size(), ctx.tail_norms.size()));
    }
    std::vector<double> out(stats.size());
    for (int j = 0; j < stats.size(); j++) {
        out[j] = std::max(0.0, stats.probabilities[j] - ctx.weight_bound * ctx.tail_norms[j]);
    }
    return out;
}

}  // namespace sicert
