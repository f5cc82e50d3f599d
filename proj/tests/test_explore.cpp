#include <cmath>

#include <catch2/catch_amalgamated.hpp>

#include <osa/explore.hpp>

using namespace osa;

TEST_CASE("constant and decaying exploration schedules") {
    REQUIRE(current_epsilon(ConstantEps{0.3}, 1) == 0.3);
    REQUIRE(current_epsilon(ConstantEps{0.3}, 1000) == 0.3);

    DecayEps d{0.5};
    REQUIRE(current_epsilon(d, 1) == Catch::Approx(1.0));
    REQUIRE(current_epsilon(d, 4) == Catch::Approx(0.5));
    REQUIRE(current_epsilon(d, 100) == Catch::Approx(0.1));
    REQUIRE_THROWS_AS(current_epsilon(d, 0), std::logic_error);
}

TEST_CASE("spsa parameter validation") {
    SpsaParams ok{};
    REQUIRE_NOTHROW(validate(ok));
    SpsaParams bad = ok;
    bad.a = 0.0;
    REQUIRE_THROWS_AS(validate(bad), std::runtime_error);
    bad = ok;
    bad.eps0 = 1.5;
    REQUIRE_THROWS_AS(validate(bad), std::runtime_error);
    bad = ok;
    bad.window = 0;
    REQUIRE_THROWS_AS(validate(bad), std::runtime_error);
}

TEST_CASE("one spsa iterate matches hand arithmetic") {
    // a_1 = 0.5, v_1 = 0.1, start 0.5, forced delta = +1, target 0.1.
    // Measurements g = 0.3 at 0.6 and g = 0.5 at 0.4 give losses 0.04 and
    // 0.16; the gradient estimate is -0.6 and the iterate moves to 0.8.
    SpsaParams p{0.5, 1.0, 0.1, 1.0, 0.5, 0.1, 25};
    Rng rng(41);
    SpsaState s(p, rng);
    s.delta = 1.0;
    s.active = clamp01(s.eps + s.gain_v() * s.delta);
    REQUIRE(s.active == Catch::Approx(0.6));

    spsa_update(s, 0.3, rng);
    REQUIRE(s.active == Catch::Approx(0.4));
    REQUIRE(s.eps == Catch::Approx(0.5));  // iterate moves only on the second phase

    spsa_update(s, 0.5, rng);
    REQUIRE(s.eps == Catch::Approx(0.8));
    REQUIRE(s.k == 2);
    double v2 = std::pow(0.1 / 2.0, 1.0);
    REQUIRE(s.active == Catch::Approx(clamp01(0.8 + v2 * s.delta)));
}

TEST_CASE("equal losses on both phases leave the iterate unchanged") {
    SpsaParams p{};
    Rng rng(42);
    SpsaState s(p, rng);
    double before = s.eps;
    spsa_update(s, 0.4, rng);
    spsa_update(s, 0.4, rng);
    REQUIRE(s.eps == Catch::Approx(before));
}

TEST_CASE("gain sequences decay with the iterate index") {
    SpsaParams p{};
    Rng rng(43);
    SpsaState s(p, rng);
    double a1 = s.gain_a(), v1 = s.gain_v();
    s.k = 5;
    double a5 = s.gain_a(), v5 = s.gain_v();
    s.k = 50;
    REQUIRE(a1 > a5);
    REQUIRE(a5 > s.gain_a());
    REQUIRE(v1 > v5);
    REQUIRE(v5 > s.gain_v());
}

TEST_CASE("spsa drives the iterate to the loss minimum") {
    // Synthetic plant: the measured collision fraction equals the applied
    // epsilon, so the loss (0.1 - g)^2 is minimized at epsilon = 0.1.
    SpsaParams p{5.0, 0.2, 0.1, 0.4, 0.9, 0.1, 25};
    Rng rng(44);
    SpsaState s(p, rng);
    for (int i = 0; i < 400; ++i) spsa_update(s, s.active, rng);
    REQUIRE(std::abs(s.eps - 0.1) <= 0.05);
}

TEST_CASE("epsilon stays in the unit interval under arbitrary feedback") {
    SpsaParams p{};
    Rng rng(45);
    SpsaState s(p, rng);
    std::uniform_real_distribution<double> g(0.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        spsa_update(s, g(rng), rng);
        REQUIRE(s.eps >= 0.0);
        REQUIRE(s.eps <= 1.0);
        REQUIRE(s.active >= 0.0);
        REQUIRE(s.active <= 1.0);
        REQUIRE(std::isfinite(s.eps));
    }
    REQUIRE_THROWS_AS(spsa_update(s, 1.2, rng), std::logic_error);
}

TEST_CASE("collision windows reduce to fractions, empty windows to nothing") {
    REQUIRE(record_collision_window(3, 30).value() == Catch::Approx(0.1));
    REQUIRE(record_collision_window(0, 50).value() == 0.0);
    REQUIRE(record_collision_window(25, 25).value() == 1.0);
    REQUIRE_FALSE(record_collision_window(0, 0).has_value());
    REQUIRE_THROWS_AS(record_collision_window(5, 3), std::logic_error);
    REQUIRE_THROWS_AS(record_collision_window(-1, 3), std::logic_error);
}
