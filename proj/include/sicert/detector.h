#pragma once

#include <cstdint>

#include <boost/multiprecision/cpp_int.hpp>

#include "sicert/fock.h"

namespace sicert {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

/// Time-multiplexed detector: a pulse is split evenly over `n_modes` temporal
/// bins, each read by a click/no-click detector.
struct TmdConfig {
    int n_modes = 32;
    /// Click counts 0..n_outcomes-2 are reported individually; counts
    /// >= n_outcomes-1 share the last outcome.
    int n_outcomes = 10;
    /// Fock entries stored per element. Must be at least the certifier cutoff.
    int n_store = 20;

    /// Throws InvalidParameter on an unusable configuration.
    void validate() const;
};

/// Stirling number of the second kind, S(n, j), by the triangular recurrence
/// S(n, j) = j S(n-1, j) + S(n-1, j-1). Exact.
BigInt stirling2(int n, int j);

/// Same as stirling2 but in 64 bits; throws OverflowError instead of wrapping.
std::uint64_t stirling2_u64(int n, int j);

/// Probability that n balls thrown uniformly into `n_modes` bins occupy
/// exactly j of them: binom(n_modes, j) j! S(n, j) / n_modes^n.
Rational occupancy_probability_exact(int n, int j, int n_modes);

/// Floating-point value of occupancy_probability_exact.
double occupancy_probability(int n, int j, int n_modes);

inline constexpr std::uint64_t kDefaultEnumerationBudget = 10'000'000;

/// Reference value for occupancy_probability: walks all n_modes^n
/// assignments. Throws BudgetExceeded when n_modes^n > budget.
Rational brute_force_occupancy(int n, int j, int n_modes,
                               std::uint64_t budget = kDefaultEnumerationBudget);

/// binom(n_modes, j) (j / n_modes)^n, an upper bound on the occupancy
/// probability for j >= 1 that is nonincreasing in n.
double occupancy_geometric_bound(int n, int j, int n_modes);

/// The TMD measurement: one element per individual click count 0..m-2 and a
/// final element aggregating all higher counts.
PhaseInsensitivePOVM build_tmd_povm(const TmdConfig &cfg);

}  // namespace sicert
