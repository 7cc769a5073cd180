#include "sicert/fock.h"

#include <cmath>

#include "gtest/gtest.h"

#include "sicert/detector.h"
#include "sicert/errors.h"

using namespace sicert;

namespace {

PhaseInsensitivePOVM half_half() {
    return PhaseInsensitivePOVM({FockDiagonalOperator::constant(0.5, 4), FockDiagonalOperator::constant(0.5, 4)});
}

}  // namespace

TEST(fock, coherent_source_masses) {
    EXPECT_NEAR(coherent_source(1.0).pmf(0), 0.36787944117144233, 1e-15);
    EXPECT_NEAR(coherent_source(0.5).pmf(1), 0.5 * std::exp(-0.5), 1e-15);
    EXPECT_NEAR(coherent_source(0.5).pmf(1), 0.3032653, 1e-7);

    PhotonSource vacuum = coherent_source(0.0);
    EXPECT_EQ(vacuum.pmf(0), 1.0);
    for (int n = 1; n < 10; n++) {
        EXPECT_EQ(vacuum.pmf(n), 0.0);
    }
    EXPECT_EQ(vacuum.mean_photon(), 0.0);
    EXPECT_EQ(coherent_source(0.7).mean_photon(), 0.7);
}

TEST(fock, coherent_source_rejects_negative_mean) {
    EXPECT_THROW(coherent_source(-0.1), InvalidParameter);
    EXPECT_THROW(coherent_source(NAN), InvalidParameter);
}

TEST(fock, poisson_recurrence_survives_large_n) {
    // 100! overflows nothing here; compare against lgamma.
    double mu = 3.5;
    for (int n : {0, 1, 10, 50, 100, 150}) {
        double expected = -mu + n * std::log(mu) - std::lgamma(n + 1.0);
        EXPECT_NEAR(poisson_log_pmf(mu, n), expected, 1e-10 * std::max(1.0, std::abs(expected)));
    }
}

TEST(fock, coherent_mean_converges) {
    for (double mu : {0.1, 0.5, 1.0, 4.0, 12.0}) {
        PhotonSource src = coherent_source(mu);
        int n_eval = static_cast<int>(mu + 40 * std::sqrt(mu) + 40);
        double mean = 0.0;
        double mass = 0.0;
        for (int n = 0; n <= n_eval; n++) {
            mean += n * src.pmf(n);
            mass += src.pmf(n);
        }
        EXPECT_NEAR(mean, mu, 1e-9) << mu;
        EXPECT_NEAR(mass, 1.0, 1e-12) << mu;
    }
}

TEST(fock, residual_mass_bounds_the_true_tail) {
    for (double mu : {0.2, 1.0, 5.0}) {
        PhotonSource src = coherent_source(mu);
        for (int h : {2, 5, 10, 20}) {
            double tail = 0.0;
            for (int n = h + 1; n < 400; n++) {
                tail += src.pmf(n);
            }
            EXPECT_GE(src.residual_mass(h), tail * (1 - 1e-12)) << mu << " " << h;
        }
    }
}

TEST(fock, fock_and_custom_sources) {
    PhotonSource three = fock_source(3);
    EXPECT_EQ(three.pmf(3), 1.0);
    EXPECT_EQ(three.pmf(2), 0.0);
    EXPECT_EQ(three.mean_photon(), 3.0);
    EXPECT_EQ(three.residual_mass(3), 0.0);

    PhotonSource custom = custom_source({0.25, 0.5, 0.25});
    EXPECT_DOUBLE_EQ(custom.mean_photon(), 1.0);
    EXPECT_EQ(custom.pmf(7), 0.0);
    EXPECT_EQ(custom.residual_mass(2), 0.0);
    EXPECT_THROW(custom_source({0.5, 0.6}), InvalidParameter);
    EXPECT_THROW(custom_source({1.5, -0.5}), InvalidParameter);
}

TEST(fock, operator_entries_must_be_probabilities) {
    EXPECT_THROW(FockDiagonalOperator({0.5, 1.5}, ZeroTail{}), InvalidParameter);
    EXPECT_THROW(FockDiagonalOperator({-1e-3}, ZeroTail{}), InvalidParameter);
    EXPECT_THROW(FockDiagonalOperator({NAN}, ZeroTail{}), InvalidParameter);

    FockDiagonalOperator zero({0.25, 0.5}, ZeroTail{});
    EXPECT_EQ(zero.tail_kind(), TailKind::zero);
    EXPECT_EQ(zero.at(1), 0.5);
    EXPECT_EQ(zero.at(2), 0.0);
    EXPECT_EQ(zero.at(1000), 0.0);

    FockDiagonalOperator unit({0.25, 0.5}, ConservativeUnitTail{});
    EXPECT_TRUE(unit.covers(1));
    EXPECT_FALSE(unit.covers(2));
    EXPECT_FALSE(unit.at(2).has_value());
}

TEST(fock, povm_needs_two_elements) {
    EXPECT_THROW(PhaseInsensitivePOVM({FockDiagonalOperator::constant(1.0, 3)}), InvalidParameter);
}

TEST(fock, completeness_check) {
    PhaseInsensitivePOVM tmd = build_tmd_povm({32, 10, 31});
    EXPECT_TRUE(povm_completeness_check(tmd, 30, 1e-12));
    EXPECT_TRUE(povm_completeness_check(build_tmd_povm({2, 3, 31}), 30, 1e-12));

    PhaseInsensitivePOVM bad({FockDiagonalOperator::constant(0.5, 4), FockDiagonalOperator::constant(1.0 / 3, 4)});
    EXPECT_FALSE(povm_completeness_check(bad, 3, 1e-12));

    // Conservative tails cannot vouch for entries past storage.
    EXPECT_FALSE(povm_completeness_check(build_tmd_povm({4, 3, 5}), 5, 1e-12));
}

TEST(fock, expected_probabilities_vacuum) {
    PhaseInsensitivePOVM tmd = build_tmd_povm({32, 10, 45});
    MeasurementStatistics stats = expected_outcome_probabilities(coherent_source(0.0), tmd, 40);
    ASSERT_EQ(stats.size(), 10);
    EXPECT_EQ(stats.probabilities[0], 1.0);
    for (int j = 1; j < 10; j++) {
        EXPECT_EQ(stats.probabilities[j], 0.0);
    }
    EXPECT_EQ(stats.mean_photon, 0.0);
}

TEST(fock, expected_probabilities_constant_elements) {
    MeasurementStatistics stats = expected_outcome_probabilities(coherent_source(1.0), half_half(), 60);
    EXPECT_NEAR(stats.probabilities[0], 0.5, 1e-15);
    EXPECT_NEAR(stats.probabilities[1], 0.5, 1e-15);
    EXPECT_EQ(stats.mean_photon, 1.0);
}

TEST(fock, expected_probabilities_match_enumeration) {
    // Oracle: Poisson mass from the closed form times brute-force occupancy.
    const double mu = 0.5;
    const int n_eval = 45;
    PhaseInsensitivePOVM tmd = build_tmd_povm({2, 3, n_eval + 1});
    MeasurementStatistics stats = expected_outcome_probabilities(coherent_source(mu), tmd, n_eval);

    std::vector<double> oracle(3, 0.0);
    for (int n = 0; n <= 20; n++) {
        double mass = std::exp(-mu) * std::pow(mu, n) / std::tgamma(n + 1.0);
        for (int j = 0; j <= 2; j++) {
            double theta = brute_force_occupancy(n, j, 2).convert_to<double>();
            oracle[j] += mass * theta;
        }
    }
    for (int j = 0; j < 3; j++) {
        EXPECT_NEAR(stats.probabilities[j], oracle[j], 1e-12) << j;
    }
}

TEST(fock, expected_probabilities_sum_to_one) {
    PhaseInsensitivePOVM tmd = build_tmd_povm({32, 10, 120});
    for (double mu : {0.01, 0.3, 0.99, 3.0, 10.0}) {
        MeasurementStatistics stats = expected_outcome_probabilities(coherent_source(mu), tmd, 110);
        double total = 0.0;
        for (double p : stats.probabilities) {
            EXPECT_GE(p, 0.0);
            total += p;
        }
        EXPECT_NEAR(total, 1.0, 4e-16) << mu;
        EXPECT_NO_THROW(stats.validate());
    }
}

TEST(fock, raising_the_horizon_moves_each_probability_by_less_than_the_residual) {
    const double mu = 6.0;
    PhaseInsensitivePOVM tmd = build_tmd_povm({8, 6, 80});
    PhotonSource src = coherent_source(mu);
    MeasurementStatistics reference = expected_outcome_probabilities(src, tmd, 79, 1e-12);
    for (int n_eval : {14, 18, 24, 30}) {
        MeasurementStatistics coarse = expected_outcome_probabilities(src, tmd, n_eval, 1.0);
        double residual = src.residual_mass(n_eval);
        for (int j = 0; j < tmd.size(); j++) {
            EXPECT_LE(std::abs(coarse.probabilities[j] - reference.probabilities[j]), residual) << n_eval << " " << j;
        }
    }
}

TEST(fock, truncation_insufficient) {
    PhaseInsensitivePOVM tmd = build_tmd_povm({8, 6, 80});
    EXPECT_THROW(expected_outcome_probabilities(coherent_source(5.0), tmd, 10), TruncationInsufficient);
    // Elements that stop before n_eval are refused rather than guessed.
    PhaseInsensitivePOVM short_store = build_tmd_povm({8, 6, 10});
    EXPECT_THROW(expected_outcome_probabilities(coherent_source(1.0), short_store, 40), InvalidParameter);
}

TEST(fock, statistics_validation) {
    MeasurementStatistics stats;
    stats.probabilities = {0.5, 0.6};
    EXPECT_THROW(stats.validate(), InvalidParameter);
    stats.probabilities = {1.1, -0.1};
    EXPECT_THROW(stats.validate(), InvalidParameter);
    stats.probabilities = {0.4, 0.6};
    stats.mean_photon = -1.0;
    EXPECT_THROW(stats.validate(), InvalidParameter);
    stats.mean_photon = 0.3;
    EXPECT_NO_THROW(stats.validate());
}
