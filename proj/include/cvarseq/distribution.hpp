#pragma once

#include <string>
#include <utility>
#include <vector>

namespace cvarseq {

struct Atom {
    double value;
    double probability;
};

// Risk level alpha in (0, 1]. alpha = 0 is rejected; callers wanting the
// worst case should use the minimum atom value directly.
class RiskLevel {
  public:
    explicit RiskLevel(double alpha);
    double alpha() const { return alpha_; }

  private:
    double alpha_;
};

// Exact finite discrete distribution. Atoms are kept sorted ascending by
// value; values within kMergeTol (absolute) are merged with probabilities
// summed. Immutable after construction.
class DiscreteDistribution {
  public:
    static constexpr double kMergeTol = 1e-9;
    static constexpr double kProbSumTol = 1e-12;

    // Sorts, merges and validates. Throws std::domain_error if probabilities
    // do not sum to 1 within kProbSumTol or any probability is <= 0.
    explicit DiscreteDistribution(std::vector<Atom> atoms);

    static DiscreteDistribution delta(double value);

    const std::vector<Atom>& atoms() const { return atoms_; }
    std::size_t size() const { return atoms_.size(); }

    double mean() const;
    double min_value() const { return atoms_.front().value; }
    double max_value() const { return atoms_.back().value; }

    std::string to_json() const;
    static DiscreteDistribution from_json(const std::string& text);

  private:
    std::vector<Atom> atoms_;
};

// Lower-tail CVaR by direct tail averaging: accumulate atoms ascending until
// the cumulative probability reaches alpha, splitting the boundary atom
// fractionally, and divide by alpha.
double cvar_tail(const DiscreteDistribution& dist, RiskLevel alpha);

// Lower-tail CVaR via the dual form sup_nu { nu - E[(nu - Z)^+] / alpha }.
// The supremum is attained at an atom value.
double cvar_sup(const DiscreteDistribution& dist, RiskLevel alpha);

// Distribution of shift + scale * Z. scale must be > 0.
DiscreteDistribution shift_scale(const DiscreteDistribution& dist, double shift,
                                 double scale);

// Mixture with positive weights summing to 1 (within kProbSumTol).
DiscreteDistribution
mixture(const std::vector<std::pair<double, DiscreteDistribution>>& components);

// Exact distribution of the sum of n independent copies. n must be >= 1.
DiscreteDistribution convolve_iid(const DiscreteDistribution& dist, int n);

} // namespace cvarseq
