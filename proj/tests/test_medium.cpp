#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "pulsefront/medium.hpp"

using namespace pulsefront;
using Catch::Approx;

TEST_CASE("named families evaluate to their polynomials") {
    auto kpp = make_medium(oracles::kpp_spec());
    CHECK(kpp.f(0.3, 0.25) == Approx(0.25 * 0.75));
    CHECK(kpp.df_du(0.9, 0.0) == Approx(1.0));

    auto hr = make_medium(oracles::hr_spec(4.0));
    CHECK(hr.f(0.1, 0.5) == Approx(0.5 * 0.5 * 3.0));
    CHECK(hr.df_du(0.1, 0.0) == Approx(1.0));
    CHECK(hr.df_du(0.1, 1.0) == Approx(-5.0));

    auto phr = make_medium(oracles::phr_spec(4.0, 2.0));
    for (int i = 0; i <= 16; ++i) {
        const double x = i / 16.0;
        const double g = 4.0 + 2.0 * std::cos(2.0 * M_PI * x);
        CHECK(phr.f(x, 1.0) == 0.0);
        CHECK(phr.f(x, 0.5) == Approx(0.25 * (1.0 + 0.5 * g)));
    }
}

TEST_CASE("evaluators are pure and periodic") {
    auto med = make_medium(oracles::phr_spec());
    const double a = med.f(0.37, 0.41);
    const double b = med.f(0.37, 0.41);
    CHECK(std::memcmp(&a, &b, sizeof a) == 0);
    CHECK(med.f(0.37 + med.period(), 0.41) == Approx(med.f(0.37, 0.41)).epsilon(1e-15));
    CHECK(med.diffusivity(0.0) == Approx(med.diffusivity(med.period())).margin(1e-14));
}

TEST_CASE("validation errors") {
    MediumSpec bad = oracles::kpp_spec();
    bad.resolution = 8;
    CHECK_THROWS_AS(make_medium(bad), ConfigError);

    MediumSpec flat = oracles::kpp_spec();
    flat.diff0 = 0.4;
    flat.diff1 = 0.5; // min a = -0.1
    CHECK_THROWS_AS(make_medium(flat), EllipticityViolation);

    MediumSpec inverted = oracles::kpp_spec();
    inverted.rate0 = -1.0; // f_u(x,0) < 0
    auto med = make_medium(inverted);
    CHECK_THROWS_AS(holder_constants(med), NotMonostable);
}

TEST_CASE("holder constants against brute force") {
    SECTION("kpp: |f - u| = u^2 exactly") {
        auto med = make_medium(oracles::kpp_spec());
        auto h = holder_constants(med);
        CHECK(h.alpha == 1.0);
        CHECK(h.gamma == 1.0);
        CHECK(h.delta == Approx(1.1).epsilon(1e-9));
    }
    SECTION("hadeler_rothe(4): max |3 - 4u| on [0, 1/2] is 3") {
        auto med = make_medium(oracles::hr_spec(4.0));
        auto h = holder_constants(med);
        CHECK(h.gamma == 0.5);
        CHECK(h.delta == Approx(3.0 * 1.1).epsilon(1e-9));
    }
    SECTION("periodic family certified on the grid") {
        auto med = make_medium(oracles::phr_spec(4.0, 2.0));
        auto h = holder_constants(med);
        // Independent scan at 4x the validation resolution stays within the
        // certified constant.
        double worst = 0.0;
        for (int i = 0; i < 256; ++i) {
            const double x = i / 256.0;
            for (int j = 1; j <= 2048; ++j) {
                const double u = h.gamma * j / 2048.0;
                worst = std::max(worst,
                                 std::abs(med.f(x, u) - med.df_du(x, 0.0) * u) /
                                     std::pow(u, 1.0 + h.alpha));
            }
        }
        CHECK(worst <= 1.1 * h.delta);
        CHECK(h.delta >= worst / 1.1 * 0.999);
        // And the analytic maximum max_x (g(x) - 1) = 5.
        CHECK(h.delta == Approx(5.0 * 1.1).epsilon(1e-6));
    }
}
