#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "survbex/survival.hpp"

using namespace survbex;

namespace {

SurvivalDataset make(const std::vector<oracle::Rec>& rs) { return SurvivalDataset(oracle::to_records(rs)); }

}  // namespace

TEST_CASE("time grid validation and lookup") {
    CHECK_THROWS_AS(TimeGrid({1.0, 2.0}), std::domain_error);
    CHECK_THROWS_AS(TimeGrid({0.0, 2.0, 2.0}), std::domain_error);
    TimeGrid g({0.0, 1.0, 3.0});
    CHECK(g.locate(0.0) == 0);
    CHECK(g.locate(0.99) == 0);
    CHECK(g.locate(1.0) == 1);
    CHECK(g.locate(50.0) == 2);
    CHECK_THROWS(g.locate(-1.0));
    const std::vector<double> obs{3.0, 1.0, 3.0};
    CHECK(TimeGrid::from_observed(obs) == g);
}

TEST_CASE("step function evaluation and integral") {
    TimeGrid g({0.0, 1.0, 3.0});
    StepFunction f(g, {1.0, 0.5, 0.25});
    CHECK(f(0.5) == 1.0);
    CHECK(f(1.0) == 0.5);
    CHECK(f(100.0) == 0.25);
    CHECK(f.integral() == doctest::Approx(1.0 + 0.5 * 2.0));
    CHECK(f.is_survival_function());
    CHECK_FALSE(StepFunction(g, {1.0, 0.5, 0.6}).is_survival_function());
    CHECK_THROWS_AS(StepFunction(g, {1.0}), std::domain_error);
}

TEST_CASE("dataset validation") {
    CHECK_THROWS_AS(SurvivalDataset({{{0.1}, 0.0, 1}}), std::domain_error);
    CHECK_THROWS_AS(SurvivalDataset({{{0.1}, 1.0, 2}}), std::domain_error);
    CHECK_THROWS_AS(SurvivalDataset({{{NAN}, 1.0, 1}}), std::domain_error);
    CHECK_THROWS_AS(SurvivalDataset({{{0.1}, 1.0, 1}, {{0.1, 0.2}, 2.0, 1}}), std::domain_error);
}

TEST_CASE("canonical order puts events before censored records at tied times") {
    SurvivalDataset ds({{{1.0}, 2.0, 0}, {{2.0}, 1.0, 1}, {{3.0}, 2.0, 1}, {{4.0}, 2.0, 0}});
    REQUIRE(ds.size() == 4);
    CHECK(ds.time(0) == 1.0);
    CHECK(ds.event(1) == 1);
    CHECK(ds.features(1)[0] == 3.0);
    CHECK(ds.features(2)[0] == 1.0);  // stable among censored ties
    CHECK(ds.features(3)[0] == 4.0);
    CHECK(ds.original_index(1) == 2);
    CHECK(ds.grid().size() == 3);
    CHECK(ds.grid_index(3) == 2);
}

TEST_CASE("kaplan_meier examples") {
    SUBCASE("single event") {
        const auto s = kaplan_meier(make({{{0.0}, 1.0, 1}}));
        CHECK(s(0.5) == 1.0);
        CHECK(s(1.0) == 0.0);
        CHECK(s(7.0) == 0.0);
    }
    SUBCASE("all censored") {
        const auto s = kaplan_meier(make({{{0.0}, 1.0, 0}, {{0.0}, 2.0, 0}}));
        for (double v : s.values()) CHECK(v == 1.0);
    }
    SUBCASE("times 1,2,3 with the middle censored") {
        const auto s = kaplan_meier(make({{{0.0}, 1.0, 1}, {{0.0}, 2.0, 0}, {{0.0}, 3.0, 1}}));
        CHECK(s(1.0) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
        CHECK(s(2.5) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
        CHECK(s(3.0) == 0.0);
    }
    SUBCASE("empty dataset") { CHECK_THROWS_AS(kaplan_meier(SurvivalDataset()), std::domain_error); }
}

TEST_CASE("kaplan_meier and nelson_aalen match the risk-set oracle with ties") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const auto rs = oracle::random_records(rng, 25, 2, 0.3, true);
        const auto ds = make(rs);
        const auto km = kaplan_meier(ds);
        const auto na = nelson_aalen(ds);
        for (std::size_t k = 0; k < ds.grid().size(); ++k) {
            CHECK(km.value(k) == doctest::Approx(oracle::km_at(rs, ds.grid()[k])).epsilon(1e-12));
            CHECK(na.value(k) == doctest::Approx(oracle::na_at(rs, ds.grid()[k])).epsilon(1e-12));
        }
    }
}

TEST_CASE("kernel_weights examples") {
    SUBCASE("identical training points give uniform weights") {
        const auto ds = make({{{0.3, 0.4}, 1.0, 1}, {{0.3, 0.4}, 2.0, 1}, {{0.3, 0.4}, 3.0, 0}});
        const std::vector<double> x{0.9, 0.1};
        for (double w : kernel_weights(x, ds, 0.5)) CHECK(w == doctest::Approx(1.0 / 3.0));
    }
    SUBCASE("large temperature flattens the weights") {
        const auto ds = make({{{0.0}, 1.0, 1}, {{5.0}, 2.0, 1}});
        const std::vector<double> x{0.0};
        for (double w : kernel_weights(x, ds, 1e12)) CHECK(w == doctest::Approx(0.5).epsilon(1e-9));
    }
    SUBCASE("squared distances 0 and tau") {
        const double tau = 2.0;
        const auto ds = make({{{0.0}, 1.0, 1}, {{std::sqrt(tau)}, 2.0, 1}});
        const std::vector<double> x{0.0};
        const auto w = kernel_weights(x, ds, tau);
        const double z = 1.0 + std::exp(-1.0);
        CHECK(w[0] == doctest::Approx(1.0 / z).epsilon(1e-14));
        CHECK(w[1] == doctest::Approx(std::exp(-1.0) / z).epsilon(1e-14));
    }
    SUBCASE("invalid temperature") {
        const auto ds = make({{{0.0}, 1.0, 1}});
        const std::vector<double> x{0.0};
        CHECK_THROWS_AS(kernel_weights(x, ds, 0.0), std::domain_error);
        CHECK_THROWS_AS(kernel_weights(x, ds, -1.0), std::domain_error);
    }
}

TEST_CASE("beran_sf examples") {
    SUBCASE("uniform weights reproduce Kaplan-Meier") {
        const auto ds = make({{{0.0}, 1.0, 1}, {{0.0}, 2.0, 0}, {{0.0}, 3.0, 1}, {{0.0}, 3.0, 1}});
        const std::vector<double> w(4, 0.25);
        const auto b = beran_sf(ds, w);
        const auto km = kaplan_meier(ds);
        for (std::size_t k = 0; k < b.size(); ++k) CHECK(std::abs(b.value(k) - km.value(k)) <= 1e-12);
    }
    SUBCASE("all weight on one uncensored record") {
        const auto ds = make({{{0.0}, 1.0, 1}, {{0.0}, 2.0, 1}, {{0.0}, 3.0, 0}});
        const std::vector<double> w{0.0, 1.0, 0.0};
        const auto s = beran_sf(ds, w);
        CHECK(s(1.5) == 1.0);
        CHECK(s(2.0) == 0.0);
        CHECK(s(10.0) == 0.0);
    }
    SUBCASE("three records with weights 0.5, 0.3, 0.2") {
        const auto ds = make({{{0.0}, 1.0, 1}, {{0.0}, 2.0, 1}, {{0.0}, 3.0, 1}});
        const std::vector<double> w{0.5, 0.3, 0.2};
        const auto s = beran_sf(ds, w);
        const std::vector<double> t(ds.times().begin(), ds.times().end());
        const std::vector<int> e(ds.events().begin(), ds.events().end());
        for (double q : {0.5, 1.0, 2.0, 2.5, 3.0}) {
            CHECK(s(q) == doctest::Approx(oracle::beran_at(t, e, w, q)).epsilon(1e-14));
        }
        CHECK(s(1.0) == doctest::Approx(0.5));
        CHECK(s(2.0) == doctest::Approx(0.2));
    }
    SUBCASE("exhausted weight mass is clamped, not an error") {
        const auto ds = make({{{0.0}, 1.0, 1}, {{0.0}, 2.0, 1}, {{0.0}, 3.0, 1}});
        const std::vector<double> w{1.0, 0.0, 0.0};
        const auto s = beran_sf(ds, w);
        for (double v : s.values()) CHECK(std::isfinite(v));
        CHECK(s.is_survival_function());
        CHECK(s(5.0) == 0.0);
    }
    SUBCASE("misaligned weights") {
        const auto ds = make({{{0.0}, 1.0, 1}, {{0.0}, 2.0, 1}});
        const std::vector<double> w{1.0};
        CHECK_THROWS_AS(beran_sf(ds, w), std::domain_error);
    }
}

TEST_CASE("beran_sf matches the term-by-term product on random weights") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        const auto ds = make(oracle::random_records(rng, 12, 1, 0.4));
        std::vector<double> w(ds.size());
        for (auto& v : w) v = u(rng);
        const double total = std::accumulate(w.begin(), w.end(), 0.0);
        for (auto& v : w) v /= total;
        const auto s = beran_sf(ds, w);
        const std::vector<double> t(ds.times().begin(), ds.times().end());
        const std::vector<int> e(ds.events().begin(), ds.events().end());
        for (std::size_t k = 0; k < ds.grid().size(); ++k) {
            CHECK(std::abs(s.value(k) - oracle::beran_at(t, e, w, ds.grid()[k])) <= 1e-12);
        }
    }
}

TEST_CASE("property: uniform Beran equals Kaplan-Meier on random censored data") {
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<std::size_t> size(1, 50);
    for (int trial = 0; trial < 200; ++trial) {
        const auto ds = make(oracle::random_records(rng, size(rng), 2, 0.35, trial % 2 == 0));
        const std::vector<double> w(ds.size(), 1.0 / static_cast<double>(ds.size()));
        const auto b = beran_sf(ds, w);
        const auto km = kaplan_meier(ds);
        for (std::size_t k = 0; k < b.size(); ++k) REQUIRE(std::abs(b.value(k) - km.value(k)) <= 1e-12);
    }
}

TEST_CASE("property: every Beran output is a survival function starting at 1") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        const auto rs = oracle::random_records(rng, 30, 3, 0.3);
        const auto ds = make(rs);
        const std::vector<double> x{0.5, 0.5, 0.5};
        const auto s = beran_sf(ds, kernel_weights(x, ds, 0.1));
        CHECK(s.is_survival_function());
        CHECK(s.value(0) == 1.0);
    }
}

TEST_CASE("property: Beran estimate is invariant to record permutation") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 30; ++trial) {
        auto rs = oracle::random_records(rng, 20, 2, 0.3);
        const std::vector<double> x{0.2, 0.7};
        const auto a = beran_sf(make(rs), kernel_weights(x, make(rs), 0.3));
        std::shuffle(rs.begin(), rs.end(), rng);
        const auto ds = make(rs);
        const auto b = beran_sf(ds, kernel_weights(x, ds, 0.3));
        REQUIRE(a.grid() == b.grid());
        for (std::size_t k = 0; k < a.size(); ++k) CHECK(std::abs(a.value(k) - b.value(k)) <= 1e-14);
    }
}

TEST_CASE("sf and chf conversion") {
    TimeGrid g({0.0, 1.0, 2.0});
    const auto h = sf_to_chf(StepFunction(g, {1.0, 1.0, 1.0}));
    for (double v : h.values()) CHECK(v == 0.0);
    const auto s = chf_to_sf(StepFunction(g, {0.0, 0.0, 0.0}));
    for (double v : s.values()) CHECK(v == 1.0);
    const auto half = sf_to_chf(StepFunction(g, {1.0, 0.5, 0.0}));
    CHECK(half.value(1) == doctest::Approx(0.6931471805599453).epsilon(1e-15));
    CHECK(half.value(2) == doctest::Approx(-std::log(kDefaultLogFloor)));
    CHECK(half.is_cumulative_hazard());
}

TEST_CASE("property: sf_to_chf after chf_to_sf is the identity above the floor") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    std::vector<double> t{0.0};
    for (int k = 1; k < 20; ++k) t.push_back(static_cast<double>(k));
    TimeGrid g(t);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> h(g.size());
        double acc = 0.0;
        for (auto& v : h) v = (acc += u(rng));
        const auto back = sf_to_chf(chf_to_sf(StepFunction(g, h)));
        const double cap = -std::log(kDefaultLogFloor);
        for (std::size_t k = 0; k < g.size(); ++k) {
            CHECK(back.value(k) == doctest::Approx(std::min(h[k], cap)).epsilon(1e-10));
        }
    }
}

TEST_CASE("concordance_index examples") {
    const std::vector<double> t{1, 2, 3};
    const std::vector<int> all{1, 1, 1};
    CHECK(*concordance_index(t, std::vector<double>{1, 2, 3}, all) == 1.0);
    CHECK(*concordance_index(t, std::vector<double>{3, 2, 1}, all) == 0.0);

    const std::vector<double> t4{1, 2, 3, 4}, s4{2, 1, 4, 3};
    const std::vector<int> e4{1, 0, 1, 1};
    const double expect = oracle::cindex(t4, s4, e4);
    CHECK(expect == doctest::Approx(0.5));
    CHECK(*concordance_index(t4, s4, e4) == doctest::Approx(expect));

    CHECK_FALSE(concordance_index(t, std::vector<double>{1, 2, 3}, std::vector<int>{0, 0, 0}).has_value());
    // tied scores earn no credit
    CHECK(*concordance_index(t, std::vector<double>{1, 1, 1}, all) == 0.0);
}

TEST_CASE("property: concordance against oracle, identity and monotone transforms") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 15;
        std::vector<double> t(n), s(n), s2(n);
        std::vector<int> e(n), ones(n, 1);
        for (std::size_t i = 0; i < n; ++i) {
            t[i] = std::round(u(rng) * 8.0) + 1.0;
            s[i] = std::round(u(rng) * 5.0);
            s2[i] = std::exp(3.0 * s[i]) - 7.0;
            e[i] = u(rng) < 0.7;
        }
        const double ref = oracle::cindex(t, s, e);
        const auto c = concordance_index(t, s, e);
        if (ref < 0) {
            CHECK_FALSE(c.has_value());
            continue;
        }
        CHECK(*c == doctest::Approx(ref));
        CHECK(*concordance_index(t, s2, e) == *c);
        CHECK(*concordance_index(t, t, ones) == 1.0);
    }
}
