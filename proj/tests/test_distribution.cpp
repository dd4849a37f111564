#include <cmath>
#include <stdexcept>
#include <vector>

#include "cvarseq/distribution.hpp"
#include "cvarseq/rng.hpp"
#include "doctest.h"

using namespace cvarseq;

namespace {

DiscreteDistribution bernoulli_pm1(double p_loss = 0.1) {
    return DiscreteDistribution({{-1.0, p_loss}, {1.0, 1.0 - p_loss}});
}

DiscreteDistribution random_dist(Rng& rng) {
    const int n = 1 + static_cast<int>(rng.uniform() * 8);
    std::vector<Atom> atoms;
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        const double w = 0.05 + rng.uniform();
        atoms.push_back({rng.uniform() * 20.0 - 10.0, w});
        total += w;
    }
    for (Atom& a : atoms) a.probability /= total;
    return DiscreteDistribution(std::move(atoms));
}

} // namespace

TEST_CASE("construction sorts, merges and validates") {
    DiscreteDistribution d({{2.0, 0.25}, {1.0, 0.5}, {2.0, 0.25}});
    REQUIRE(d.size() == 2);
    CHECK(d.atoms()[0].value == 1.0);
    CHECK(d.atoms()[1].value == 2.0);
    CHECK(d.atoms()[1].probability == doctest::Approx(0.5).epsilon(1e-12));

    CHECK_THROWS_AS(DiscreteDistribution({{0.0, 0.9}}), std::domain_error);
    CHECK_THROWS_AS(DiscreteDistribution({{0.0, 1.5}, {1.0, -0.5}}),
                    std::domain_error);
}

TEST_CASE("risk level domain") {
    CHECK_THROWS_AS(RiskLevel(0.0), std::domain_error);
    CHECK_THROWS_AS(RiskLevel(-0.1), std::domain_error);
    CHECK_THROWS_AS(RiskLevel(1.1), std::domain_error);
    CHECK(RiskLevel(1.0).alpha() == 1.0);
}

TEST_CASE("cvar_tail hand values") {
    const DiscreteDistribution d = bernoulli_pm1();
    // alpha below the loss mass: tail is pure loss
    CHECK(cvar_tail(d, RiskLevel(0.05)) == doctest::Approx(-1.0).epsilon(1e-12));
    // boundary atom split: (0.1*(-1) + 0.01*1) / 0.11
    CHECK(cvar_tail(d, RiskLevel(0.11)) ==
          doctest::Approx(-0.09 / 0.11).epsilon(1e-12));
    // per-stage CVaR is exactly 0 when the tail boundary balances
    CHECK(cvar_tail(d, RiskLevel(0.2)) == doctest::Approx(0.0).epsilon(1e-12));
    // alpha = 1 is the mean
    CHECK(cvar_tail(d, RiskLevel(1.0)) == doctest::Approx(0.8).epsilon(1e-12));
    // degenerate distribution
    CHECK(cvar_tail(DiscreteDistribution::delta(3.5), RiskLevel(0.3)) ==
          doctest::Approx(3.5).epsilon(1e-12));
}

TEST_CASE("cvar_tail equals cvar_sup on random distributions") {
    Rng rng(12345);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const DiscreteDistribution d = random_dist(rng);
        for (int j = 0; j < 20; ++j) {
            const RiskLevel a(0.01 + 0.99 * rng.uniform());
            worst = std::max(worst, std::abs(cvar_tail(d, a) - cvar_sup(d, a)));
        }
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("cvar properties: bounds, monotonicity, equivariance") {
    Rng rng(777);
    for (int i = 0; i < 200; ++i) {
        const DiscreteDistribution d = random_dist(rng);
        const double a1 = 0.01 + 0.5 * rng.uniform();
        const double a2 = a1 + (1.0 - a1) * rng.uniform();
        const double c1 = cvar_tail(d, RiskLevel(a1));
        const double c2 = cvar_tail(d, RiskLevel(a2));
        CHECK(c1 <= c2 + 1e-12);
        CHECK(c1 >= d.min_value() - 1e-12);
        CHECK(c2 <= d.mean() + 1e-12);
        // translation equivariance and positive homogeneity
        const double shift = rng.uniform() * 4.0 - 2.0;
        const double scale = 0.1 + rng.uniform();
        CHECK(cvar_tail(shift_scale(d, shift, scale), RiskLevel(a1)) ==
              doctest::Approx(shift + scale * c1).epsilon(1e-12));
    }
}

TEST_CASE("shift_scale") {
    const DiscreteDistribution d = shift_scale(bernoulli_pm1(), 1.0, 1.0);
    REQUIRE(d.size() == 2);
    CHECK(d.atoms()[0].value == doctest::Approx(0.0));
    CHECK(d.atoms()[1].value == doctest::Approx(2.0));
    CHECK_THROWS_AS(shift_scale(bernoulli_pm1(), 0.0, 0.0), std::domain_error);
    CHECK_THROWS_AS(shift_scale(bernoulli_pm1(), 0.0, -1.0), std::domain_error);
}

TEST_CASE("mixture") {
    const DiscreteDistribution d = mixture(
        {{0.9, DiscreteDistribution::delta(1.0)},
         {0.1, DiscreteDistribution::delta(-1.0)}});
    REQUIRE(d.size() == 2);
    CHECK(d.atoms()[0].value == -1.0);
    CHECK(d.atoms()[0].probability == doctest::Approx(0.1).epsilon(1e-12));
    CHECK_THROWS_AS(mixture({{0.5, DiscreteDistribution::delta(0.0)}}),
                    std::domain_error);
}

TEST_CASE("convolve_iid") {
    const DiscreteDistribution d = bernoulli_pm1();
    const DiscreteDistribution d2 = convolve_iid(d, 2);
    REQUIRE(d2.size() == 3);
    CHECK(d2.atoms()[0].probability == doctest::Approx(0.01).epsilon(1e-12));
    CHECK(d2.atoms()[1].probability == doctest::Approx(0.18).epsilon(1e-12));
    CHECK(d2.atoms()[2].probability == doctest::Approx(0.81).epsilon(1e-12));
    const DiscreteDistribution d3 = convolve_iid(d, 3);
    REQUIRE(d3.size() == 4);
    CHECK(d3.atoms()[0].probability == doctest::Approx(0.001).epsilon(1e-12));
    CHECK(d3.atoms()[3].probability == doctest::Approx(0.729).epsilon(1e-12));
    CHECK(d3.mean() == doctest::Approx(3.0 * d.mean()).epsilon(1e-9));
    CHECK_THROWS_AS(convolve_iid(d, 0), std::domain_error);
}

TEST_CASE("json round trip") {
    const DiscreteDistribution d = convolve_iid(bernoulli_pm1(), 2);
    const DiscreteDistribution back = DiscreteDistribution::from_json(d.to_json());
    REQUIRE(back.size() == d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        CHECK(back.atoms()[i].value == d.atoms()[i].value);
        CHECK(back.atoms()[i].probability == d.atoms()[i].probability);
    }
}
