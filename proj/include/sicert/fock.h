#pragma once

#include <functional>
#include <optional>
#include <span>
#include <variant>
#include <vector>

namespace sicert {

/// Tail beyond the stored entries given by a closed form.
///
/// `cap_beyond(h)` is optional; when present it must return an upper bound on
/// sup_{n > h} of the entry, which lets tail norms be tightened soundly.
struct ExplicitTail {
    std::function<double(int)> evaluate;
    std::function<double(int)> cap_beyond;
};

/// Tail entries are only known to lie in [0, 1].
struct ConservativeUnitTail {};

/// Tail entries are exactly zero.
struct ZeroTail {};

using TailDescriptor = std::variant<ExplicitTail, ConservativeUnitTail, ZeroTail>;

enum class TailKind { explicit_formula, conservative_unit, zero };

const char *tail_kind_name(TailKind kind);

/// An operator diagonal in the photon-number basis, sum_n theta(n) |n><n|.
///
/// The first `n_store()` diagonal entries are held explicitly; entries past
/// that are described by the tail.
class FockDiagonalOperator {
   public:
    /// Throws InvalidParameter if any stored entry is outside [0, 1].
    FockDiagonalOperator(std::vector<double> diag, TailDescriptor tail);

    /// The operator c * I, with a closed-form tail.
    static FockDiagonalOperator constant(double value, int n_store);

    int n_store() const {
        return static_cast<int>(diag_.size());
    }
    std::span<const double> stored() const {
        return diag_;
    }
    const TailDescriptor &tail() const {
        return tail_;
    }
    TailKind tail_kind() const;

    /// Whether entry n is known (stored, or produced by an explicit/zero tail).
    bool covers(int n) const;

    /// Entry n, or nullopt when it is past storage and the tail is conservative.
    std::optional<double> at(int n) const;

   private:
    std::vector<double> diag_;
    TailDescriptor tail_;
};

/// A measurement whose elements are all diagonal in the photon-number basis.
class PhaseInsensitivePOVM {
   public:
    /// Throws InvalidParameter when fewer than two elements are given.
    explicit PhaseInsensitivePOVM(std::vector<FockDiagonalOperator> elements);

    int size() const {
        return static_cast<int>(elements_.size());
    }
    const FockDiagonalOperator &operator[](int j) const {
        return elements_[j];
    }
    const std::vector<FockDiagonalOperator> &elements() const {
        return elements_;
    }

   private:
    std::vector<FockDiagonalOperator> elements_;
};

/// Photon-number distribution of a source. Phase is irrelevant for diagonal
/// measurements, so only the number statistics are kept.
class PhotonSource {
   public:
    PhotonSource(std::function<double(int)> pmf, double mean_photon,
                 std::function<double(int)> tail_bound = {});

    double pmf(int n) const {
        return n < 0 ? 0.0 : pmf_(n);
    }
    double mean_photon() const {
        return mean_photon_;
    }

    /// Upper bound on sum_{n > n_eval} p(n). Uses the analytic bound when the
    /// source provides one, otherwise 1 minus the compensated partial sum.
    double residual_mass(int n_eval) const;

   private:
    std::function<double(int)> pmf_;
    double mean_photon_;
    std::function<double(int)> tail_bound_;
};

/// Outcome probabilities p_j plus the (trusted) mean photon number.
struct MeasurementStatistics {
    std::vector<double> probabilities;
    double mean_photon = 0.0;
    /// Source mass dropped when the outcome sums were cut off; 0 for
    /// statistics not produced by simulation.
    double truncation_residual = 0.0;

    int size() const {
        return static_cast<int>(probabilities.size());
    }

    /// Throws InvalidParameter unless every p_j >= 0, sum p_j = 1 within
    /// `tol`, and mean_photon >= 0.
    void validate(double tol = 1e-9) const;
};

/// Coherent state |alpha> with |alpha|^2 = mean_photon: Poisson number
/// statistics.
PhotonSource coherent_source(double mean_photon);

/// Fock state |n>.
PhotonSource fock_source(int n);

/// Arbitrary finite-support distribution. Must be nonnegative and sum to 1
/// within 1e-12.
PhotonSource custom_source(std::vector<double> pmf);

/// log p(n) for Poisson(mean), via the running-sum recurrence.
double poisson_log_pmf(double mean, int n);

inline constexpr double kDefaultSourceTailTolerance = 1e-12;

/// p_j = sum_{n <= n_eval} p(n) theta_j(n), renormalized to sum to one.
///
/// Throws TruncationInsufficient if the source mass past n_eval exceeds
/// `tail_tolerance`, and InvalidParameter if some element does not cover
/// every n <= n_eval.
MeasurementStatistics expected_outcome_probabilities(
    const PhotonSource &source, const PhaseInsensitivePOVM &povm, int n_eval,
    double tail_tolerance = kDefaultSourceTailTolerance);

/// True iff |sum_j theta_j(n) - 1| <= tol and every theta_j(n) lies in
/// [-tol, 1 + tol], for all n <= n_max. Entries that are not covered count as
/// a failure.
bool povm_completeness_check(const PhaseInsensitivePOVM &povm, int n_max, double tol);

}  // namespace sicert
