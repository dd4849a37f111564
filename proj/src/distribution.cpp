#include "cvarseq/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace cvarseq {

RiskLevel::RiskLevel(double alpha) : alpha_(alpha) {
    if (!(alpha > 0.0) || alpha > 1.0)
        throw std::domain_error("risk level alpha must lie in (0, 1], got " +
                                std::to_string(alpha));
}

DiscreteDistribution::DiscreteDistribution(std::vector<Atom> atoms)
    : atoms_(std::move(atoms)) {
    if (atoms_.empty())
        throw std::domain_error("distribution needs at least one atom");
    for (const Atom& a : atoms_) {
        if (!(a.probability > 0.0))
            throw std::domain_error("atom probabilities must be positive");
        if (!std::isfinite(a.value) || !std::isfinite(a.probability))
            throw std::domain_error("atom entries must be finite");
    }
    std::sort(atoms_.begin(), atoms_.end(),
              [](const Atom& a, const Atom& b) { return a.value < b.value; });

    std::vector<Atom> merged;
    merged.reserve(atoms_.size());
    for (const Atom& a : atoms_) {
        if (!merged.empty() && a.value - merged.back().value <= kMergeTol) {
            merged.back().probability += a.probability;
        } else {
            merged.push_back(a);
        }
    }
    atoms_ = std::move(merged);

    double sum = 0.0;
    for (const Atom& a : atoms_) sum += a.probability;
    if (std::abs(sum - 1.0) > kProbSumTol)
        throw std::domain_error("atom probabilities sum to " +
                                std::to_string(sum) + ", expected 1");
    // remove the residual rounding so it cannot accumulate over repeated
    // mixture/shift compositions
    for (Atom& a : atoms_) a.probability /= sum;
}

DiscreteDistribution DiscreteDistribution::delta(double value) {
    return DiscreteDistribution({{value, 1.0}});
}

double DiscreteDistribution::mean() const {
    double m = 0.0;
    for (const Atom& a : atoms_) m += a.value * a.probability;
    return m;
}

std::string DiscreteDistribution::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const Atom& a : atoms_) arr.push_back({a.value, a.probability});
    return arr.dump();
}

DiscreteDistribution DiscreteDistribution::from_json(const std::string& text) {
    nlohmann::json arr = nlohmann::json::parse(text);
    std::vector<Atom> atoms;
    for (const auto& pair : arr)
        atoms.push_back({pair.at(0).get<double>(), pair.at(1).get<double>()});
    return DiscreteDistribution(std::move(atoms));
}

double cvar_tail(const DiscreteDistribution& dist, RiskLevel alpha) {
    const double a = alpha.alpha();
    double cum = 0.0;
    double acc = 0.0;
    for (const Atom& atom : dist.atoms()) {
        const double take = std::min(atom.probability, a - cum);
        if (take <= 0.0) break;
        acc += take * atom.value;
        cum += take;
        if (cum >= a) break;
    }
    return acc / a;
}

double cvar_sup(const DiscreteDistribution& dist, RiskLevel alpha) {
    const double a = alpha.alpha();
    double best = -std::numeric_limits<double>::infinity();
    for (const Atom& cand : dist.atoms()) {
        const double nu = cand.value;
        double shortfall = 0.0;
        for (const Atom& atom : dist.atoms()) {
            if (atom.value >= nu) break;
            shortfall += atom.probability * (nu - atom.value);
        }
        best = std::max(best, nu - shortfall / a);
    }
    return best;
}

DiscreteDistribution shift_scale(const DiscreteDistribution& dist, double shift,
                                 double scale) {
    if (!(scale > 0.0))
        throw std::domain_error("shift_scale requires scale > 0");
    std::vector<Atom> atoms = dist.atoms();
    for (Atom& a : atoms) a.value = shift + scale * a.value;
    return DiscreteDistribution(std::move(atoms));
}

DiscreteDistribution
mixture(const std::vector<std::pair<double, DiscreteDistribution>>& components) {
    if (components.empty())
        throw std::domain_error("mixture needs at least one component");
    double wsum = 0.0;
    for (const auto& [w, d] : components) {
        if (!(w > 0.0)) throw std::domain_error("mixture weights must be positive");
        wsum += w;
    }
    if (std::abs(wsum - 1.0) > DiscreteDistribution::kProbSumTol)
        throw std::domain_error("mixture weights sum to " + std::to_string(wsum) +
                                ", expected 1");
    std::vector<Atom> atoms;
    for (const auto& [w, d] : components)
        for (const Atom& a : d.atoms())
            atoms.push_back({a.value, w * a.probability});
    return DiscreteDistribution(std::move(atoms));
}

DiscreteDistribution convolve_iid(const DiscreteDistribution& dist, int n) {
    if (n < 1) throw std::domain_error("convolve_iid requires n >= 1");
    DiscreteDistribution acc = dist;
    for (int i = 1; i < n; ++i) {
        std::vector<Atom> atoms;
        atoms.reserve(acc.size() * dist.size());
        for (const Atom& a : acc.atoms())
            for (const Atom& b : dist.atoms())
                atoms.push_back({a.value + b.value, a.probability * b.probability});
        acc = DiscreteDistribution(std::move(atoms));
    }
    return acc;
}

} // namespace cvarseq
