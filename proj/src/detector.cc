#include "sicert/detector.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <fmt/format.h>

#include "sicert/errors.h"

namespace sicert {

namespace {

void check_occupancy_args(int n, int j, int n_modes) {
    if (n < 0 || j < 0) {
        throw InvalidParameter("photon number and click count must be nonnegative");
    }
    if (n_modes < 1) {
        throw InvalidParameter("a detector needs at least one temporal mode");
    }
    if (j > n_modes) {
        throw InvalidParameter(
            fmt::format("cannot occupy {} bins out of {} temporal modes", j, n_modes));
    }
}

// Row n of the Stirling triangle, entries 0..max_j.
std::vector<BigInt> stirling_row(int n, int max_j) {
    std::vector<BigInt> row(max_j + 1, 0);
    row[0] = 1;
    for (int r = 1; r <= n; r++) {
        for (int k = std::min(r, max_j); k >= 1; k--) {
            row[k] = k * row[k] + row[k - 1];
        }
        row[0] = 0;
    }
    return row;
}

BigInt falling_factorial(int n, int k) {
    BigInt out = 1;
    for (int i = 0; i < k; i++) {
        out *= n - i;
    }
    return out;
}

BigInt power(int base, int exponent) {
    return boost::multiprecision::pow(BigInt(base), static_cast<unsigned>(exponent));
}

double to_double(const BigInt &num, const BigInt &den) {
    return Rational(num, den).convert_to<double>();
}

}  // namespace

void TmdConfig::validate() const {
    if (n_modes < 1) {
        throw InvalidParameter("n_modes must be at least 1");
    }
    if (n_outcomes < 2) {
        throw InvalidParameter("n_outcomes must be at least 2");
    }
    if (n_outcomes > n_modes + 1) {
        throw InvalidParameter(fmt::format(
            "{} outcomes requested but click counts only range over 0..{}", n_outcomes, n_modes));
    }
    if (n_store < 1) {
        throw InvalidParameter("n_store must be at least 1");
    }
}

BigInt stirling2(int n, int j) {
    if (n < 0 || j < 0) {
        throw InvalidParameter("Stirling arguments must be nonnegative");
    }
    if (j > n) {
        return 0;
    }
    return stirling_row(n, j)[j];
}

std::uint64_t stirling2_u64(int n, int j) {
    BigInt value = stirling2(n, j);
    if (value > std::numeric_limits<std::uint64_t>::max()) {
        throw OverflowError(fmt::format("S({}, {}) does not fit in 64 bits", n, j));
    }
    return value.convert_to<std::uint64_t>();
}

Rational occupancy_probability_exact(int n, int j, int n_modes) {
    check_occupancy_args(n, j, n_modes);
    return Rational(falling_factorial(n_modes, j) * stirling2(n, j), power(n_modes, n));
}

double occupancy_probability(int n, int j, int n_modes) {
    check_occupancy_args(n, j, n_modes);
    return to_double(falling_factorial(n_modes, j) * stirling2(n, j), power(n_modes, n));
}

Rational brute_force_occupancy(int n, int j, int n_modes, std::uint64_t budget) {
    check_occupancy_args(n, j, n_modes);
    std::uint64_t total = 1;
    for (int i = 0; i < n; i++) {
        if (total > budget / static_cast<std::uint64_t>(n_modes)) {
            throw BudgetExceeded(
                fmt::format("{}^{} assignments exceed the budget of {}", n_modes, n, budget));
        }
        total *= static_cast<std::uint64_t>(n_modes);
    }
    if (total > budget) {
        throw BudgetExceeded(fmt::format("{}^{} assignments exceed the budget of {}", n_modes, n, budget));
    }

    std::vector<int> assignment(n, 0);
    std::vector<int> load(n_modes, 0);
    load[0] = n;
    std::uint64_t hits = 0;
    for (std::uint64_t step = 0; step < total; step++) {
        int occupied = static_cast<int>(std::count_if(load.begin(), load.end(), [](int c) { return c > 0; }));
        if (occupied == j) {
            hits++;
        }
        // Odometer increment over ball -> bin assignments.
        for (int ball = 0; ball < n; ball++) {
            load[assignment[ball]]--;
            if (++assignment[ball] < n_modes) {
                load[assignment[ball]]++;
                break;
            }
            assignment[ball] = 0;
            load[0]++;
        }
    }
    return Rational(BigInt(hits), BigInt(total));
}

double occupancy_geometric_bound(int n, int j, int n_modes) {
    check_occupancy_args(n, j, n_modes);
    BigInt exact = falling_factorial(n_modes, j);
    for (int i = 2; i <= j; i++) {
        exact /= i;
    }
    // Round up at each step so the result stays an upper bound.
    double binom = std::nextafter(exact.convert_to<double>(), INFINITY);
    return binom * std::pow(static_cast<double>(j) / n_modes, n) * (1.0 + 1e-14);
}

PhaseInsensitivePOVM build_tmd_povm(const TmdConfig &cfg) {
    cfg.validate();
    const int m = cfg.n_outcomes;
    const int k_modes = cfg.n_modes;
    const int last = m - 1;

    std::vector<std::vector<double>> diag(m, std::vector<double>(cfg.n_store, 0.0));
    std::vector<BigInt> falling(last);
    for (int j = 0; j < last; j++) {
        falling[j] = falling_factorial(k_modes, j);
    }
    std::vector<BigInt> row(last, 0);
    for (int n = 0; n < cfg.n_store; n++) {
        if (n == 0) {
            row[0] = 1;
        } else {
            for (int k = std::min(n, last - 1); k >= 1; k--) {
                row[k] = k * row[k] + row[k - 1];
            }
            row[0] = 0;
        }
        BigInt den = power(k_modes, n);
        BigInt rest = den;
        for (int j = 0; j < last; j++) {
            BigInt num = falling[j] * row[j];
            rest -= num;
            diag[j][n] = to_double(num, den);
        }
        diag[last][n] = to_double(rest, den);
    }

    std::vector<FockDiagonalOperator> elements;
    elements.reserve(m);
    for (int j = 0; j < last; j++) {
        if (j == 0) {
            // No photons is the only way to see no clicks.
            elements.emplace_back(std::move(diag[j]), ZeroTail{});
            continue;
        }
        ExplicitTail tail{
            [j, k_modes](int n) { return occupancy_probability(n, j, k_modes); },
            [j, k_modes](int horizon) {
                return std::min(1.0, occupancy_geometric_bound(horizon + 1, j, k_modes));
            }};
        elements.emplace_back(std::move(diag[j]), std::move(tail));
    }
    elements.emplace_back(std::move(diag[last]), ConservativeUnitTail{});
    return PhaseInsensitivePOVM(std::move(elements));
}

}  // namespace sicert
