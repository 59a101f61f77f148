#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "qwalk/walk.hpp"

using namespace qwalk;

namespace {

const double kR = 1.0 / std::numbers::sqrt2;

WalkConfig hadamard_walk(std::int64_t steps, std::optional<DefectSpec> defect,
                         CoinState init = CoinState::antisymmetric()) {
    WalkConfig cfg;
    cfg.steps = steps;
    cfg.coin = CoinAngle::hadamard();
    cfg.defect = defect;
    cfg.initial_coin = init;
    return cfg;
}

void expect_matches_oracle(const Distribution& d, const std::map<std::int64_t, double>& ref, double tol) {
    for (std::int64_t x = d.first_site() - 1; x <= d.last_site() + 1; ++x) {
        const auto it = ref.find(x);
        const double expected = it == ref.end() ? 0.0 : it->second;
        EXPECT_NEAR(d.at(x), expected, tol) << "x=" << x;
    }
}

}  // namespace

TEST(apply_coin, examples) {
    const auto s = apply_coin(make_initial(0, CoinState::h()), CoinAngle::hadamard());
    EXPECT_NEAR(s.amp(0, kH).real(), kR, 1e-15);
    EXPECT_NEAR(s.amp(0, kV).real(), kR, 1e-15);

    const auto v = apply_coin(make_initial(0, CoinState::v()), CoinAngle::degrees(0));
    EXPECT_EQ(v.amp(0, kV), cplx(-1.0, 0.0));
    EXPECT_EQ(v.amp(0, kH), cplx(0.0, 0.0));
}

TEST(apply_coin, twice_is_identity) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    std::vector<PureState::Row> rows(9);
    for (auto& r : rows) r = {cplx(g(rng), g(rng)), cplx(g(rng), g(rng))};
    PureState s(-4, rows);
    const auto angle = CoinAngle::degrees(17.3);
    const auto back = apply_coin(apply_coin(s, angle), angle);
    for (std::int64_t x = -4; x <= 4; ++x)
        for (std::size_t c = 0; c < 2; ++c) EXPECT_NEAR(std::abs(back.amp(x, c) - s.amp(x, c)), 0.0, 1e-12);
}

TEST(apply_shift, moves_and_phases) {
    const auto h = apply_shift(make_initial(0, CoinState::h()), std::nullopt);
    EXPECT_EQ(h.first_site(), -1);
    EXPECT_EQ(h.last_site(), 1);
    EXPECT_EQ(h.amp(-1, kH), cplx(1.0, 0.0));

    const auto v = apply_shift(make_initial(0, CoinState::v()), DefectSpec(0, 180));
    EXPECT_NEAR(std::abs(v.amp(1, kV) - cplx(-1.0, 0.0)), 0.0, 1e-15);

    // source site 1 is not the defect site
    const auto off = apply_shift(make_initial(1, CoinState::h()), DefectSpec(0, 90));
    EXPECT_EQ(off.amp(0, kH), cplx(1.0, 0.0));
}

TEST(step, one_hadamard_step) {
    const auto s = step(make_initial(0, CoinState::h()), CoinAngle::hadamard(), std::nullopt);
    EXPECT_NEAR(s.amp(-1, kH).real(), kR, 1e-15);
    EXPECT_NEAR(s.amp(1, kV).real(), kR, 1e-15);
    EXPECT_EQ(s.amp(0, kH), cplx{});

    const auto d = step(make_initial(0, CoinState::h()), CoinAngle::hadamard(), DefectSpec(0, 180));
    EXPECT_NEAR(std::abs(d.amp(-1, kH) - cplx(-kR, 0.0)), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(d.amp(1, kV) - cplx(-kR, 0.0)), 0.0, 1e-15);
    const auto p0 = position_distribution(s), p1 = position_distribution(d);
    for (std::int64_t x = -1; x <= 1; ++x) EXPECT_NEAR(p0.at(x), p1.at(x), 1e-15);
}

TEST(step, equals_shift_after_coin) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g;
    std::vector<PureState::Row> rows(7);
    for (auto& r : rows) r = {cplx(g(rng), g(rng)), cplx(g(rng), g(rng))};
    PureState s(-3, rows);
    const auto angle = CoinAngle::degrees(31);
    const DefectSpec defect(1, 77);
    const auto a = step(s, angle, defect);
    const auto b = apply_shift(apply_coin(s, angle), defect);
    ASSERT_EQ(a.offset(), b.offset());
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t c = 0; c < 2; ++c) EXPECT_EQ(a.rows()[i][c], b.rows()[i][c]);
    EXPECT_NEAR(a.norm_squared(), s.norm_squared(), 1e-12);
}

TEST(evolve, standard_hadamard_variance) {
    // exact value 1917/64 from the path-sum oracle; printed in the literature as 29.951
    const auto rec = evolve(hadamard_walk(10, std::nullopt));
    EXPECT_NEAR(rec.final_variance(), 1917.0 / 64.0, 1e-12);
    const auto ref = oracle::path_sum(10, 22.5, std::nullopt, 0, 0, {kR, 0}, {0, -kR});
    expect_matches_oracle(rec.final_distribution(), ref, 1e-12);
}

TEST(evolve, localized_variance_and_recurrence) {
    const auto rec = evolve(hadamard_walk(10, DefectSpec(0, 180)));
    EXPECT_NEAR(rec.final_variance(), 9.547, 1e-3);
    EXPECT_NEAR(rec.final_variance(), 611.0 / 64.0, 1e-12);
    EXPECT_NEAR(rec.final_recurrence(), 85.0 / 128.0, 1e-12);
    ASSERT_EQ(rec.distributions.size(), 11u);
    ASSERT_EQ(rec.variances.size(), 11u);
    ASSERT_EQ(rec.recurrences.size(), 11u);
    EXPECT_NEAR(rec.recurrences[0], 1.0, 1e-15);
    EXPECT_EQ(rec.variances[0], 0.0);
}

TEST(evolve, four_step_peak) {
    // oracle value 0.625; inside the 0.615 +- 0.011 corridor
    const auto ref = oracle::path_sum(4, 22.5, 0, 180, 0, {kR, 0}, {0, -kR});
    ASSERT_NEAR(ref.at(0), 0.625, 1e-12);
    const auto rec = evolve(hadamard_walk(4, DefectSpec(0, 180)));
    EXPECT_NEAR(rec.final_recurrence(), 0.625, 1e-12);
    EXPECT_LT(std::abs(rec.final_recurrence() - 0.615), 0.011 + 1e-12);
}

TEST(evolve, zero_steps) {
    const auto rec = evolve(hadamard_walk(0, DefectSpec(0, 180)));
    ASSERT_EQ(rec.distributions.size(), 1u);
    EXPECT_NEAR(rec.final_distribution().at(0), 1.0, 1e-15);
}

TEST(evolve, budget_exceeded) {
    auto cfg = hadamard_walk(20, std::nullopt);
    cfg.max_steps = 10;
    EXPECT_THROW(evolve(cfg), config_error);
}

TEST(position_distribution, examples) {
    EXPECT_EQ(position_distribution(make_initial(0, CoinState::h())).at(0), 1.0);
    PureState s(-1, {{cplx(kR), cplx()}, {cplx(), cplx()}, {cplx(), cplx(kR)}});
    const auto d = position_distribution(s);
    EXPECT_NEAR(d.at(-1), 0.5, 1e-15);
    EXPECT_NEAR(d.at(1), 0.5, 1e-15);
    EXPECT_EQ(d.at(0), 0.0);
}

TEST(position_distribution, ten_steps_from_h_match_path_sum) {
    WalkConfig cfg = hadamard_walk(10, std::nullopt, CoinState::h());
    const auto rec = evolve(cfg);
    expect_matches_oracle(rec.final_distribution(), oracle::path_sum(10, 22.5, std::nullopt, 0, 0, {1, 0}, {0, 0}),
                          1e-12);
}

TEST(variance, examples) {
    EXPECT_EQ(variance(Distribution(0, {1.0})), 0.0);
    EXPECT_EQ(variance(Distribution(-1, {0.5, 0.0, 0.5})), 1.0);
    EXPECT_EQ(variance(Distribution(7, {0.5, 0.0, 0.5})), 1.0);
}

TEST(tv_distance, examples) {
    const Distribution a(-1, {0.25, 0.5, 0.25});
    EXPECT_EQ(tv_distance(a, a), 0.0);
    EXPECT_EQ(tv_distance(Distribution(0, {1.0}), Distribution(3, {1.0})), 1.0);
    EXPECT_NEAR(tv_distance(a, Distribution(0, {1.0})), 0.5, 1e-15);
    EXPECT_NEAR(tv_distance(a, Distribution(0, {1.0})), tv_distance(Distribution(0, {1.0}), a), 0.0);
}

TEST(distribution, rejects_invalid) {
    EXPECT_THROW(Distribution(0, {0.5, 0.4}), config_error);
    EXPECT_THROW(Distribution(0, {1.5, -0.5}), config_error);
    EXPECT_THROW(Distribution(0, {}), config_error);
}

TEST(sweep_phase, recurrence_values) {
    const std::vector<double> phases{0, 45, 90, 135, 180};
    const auto rows = sweep_phase(hadamard_walk(10, DefectSpec(0, 0)), phases);
    ASSERT_EQ(rows.size(), 5u);
    const auto plain = evolve(hadamard_walk(10, std::nullopt));
    EXPECT_EQ(rows[0].variance, plain.final_variance());
    EXPECT_EQ(rows[0].recurrence, plain.final_recurrence());
    // oracle: 0.6673938036811937
    EXPECT_NEAR(rows[3].recurrence, 0.667, 0.005);
    const auto ref = oracle::path_sum(10, 22.5, 0, 135, 0, {kR, 0}, {0, -kR});
    EXPECT_NEAR(rows[3].recurrence, ref.at(0), 1e-12);
    // on this coarse grid 135 is the maximum
    for (const auto& r : rows) EXPECT_LE(r.recurrence, rows[3].recurrence);
}

TEST(sweep_phase, monotone_rise_to_a_peak_then_symmetric) {
    std::vector<double> phases;
    for (int p = 0; p <= 270; p += 5) phases.push_back(p);
    const auto rows = sweep_phase(hadamard_walk(10, DefectSpec(0, 0)), phases);
    // strictly increasing on [0, 105]
    for (std::size_t i = 1; i <= 21; ++i) EXPECT_GT(rows[i].recurrence, rows[i - 1].recurrence) << phases[i];
    // phi <-> 270 - phi symmetry of the final distribution at x=0
    for (std::size_t i = 0; i < rows.size(); ++i)
        EXPECT_NEAR(rows[i].recurrence, rows[rows.size() - 1 - i].recurrence, 1e-12) << phases[i];
}

TEST(sweep_phase, errors) {
    const std::vector<double> none;
    EXPECT_THROW(sweep_phase(hadamard_walk(10, DefectSpec(0, 0)), none), config_error);
    const std::vector<double> one{90};
    EXPECT_THROW(sweep_phase(hadamard_walk(10, std::nullopt), one), config_error);
}

TEST(sweep_phase, threads_do_not_change_results) {
    std::vector<double> phases;
    for (int p = 0; p <= 180; p += 15) phases.push_back(p);
    const auto a = sweep_phase(hadamard_walk(10, DefectSpec(0, 0)), phases, 1);
    const auto b = sweep_phase(hadamard_walk(10, DefectSpec(0, 0)), phases, 4);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].variance, b[i].variance);
        EXPECT_EQ(a[i].recurrence, b[i].recurrence);
    }
}

TEST(sweep_coin, recurrence_increases_with_theta) {
    const std::vector<double> angles{9, 18, 22.5, 30};
    const auto rows = sweep_coin(hadamard_walk(10, DefectSpec(0, 180)), angles);
    // oracle: 0.07454161, 0.47321737, 0.6640625, 0.83665466
    const double frozen[] = {0.07454161, 0.47321737, 0.6640625, 0.83665466};
    for (std::size_t i = 0; i < rows.size(); ++i) EXPECT_NEAR(rows[i].recurrence, frozen[i], 1e-8);
    for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_GT(rows[i].recurrence, rows[i - 1].recurrence);
    const auto direct = evolve(hadamard_walk(10, DefectSpec(0, 180)));
    EXPECT_EQ(rows[2].recurrence, direct.final_recurrence());
    EXPECT_EQ(rows[2].variance, direct.final_variance());
}

TEST(sweep_coin, defect_at_one_traps_at_one) {
    WalkConfig cfg = hadamard_walk(9, DefectSpec(1, 180));
    const std::vector<double> angles{30};
    const auto rows = sweep_coin(cfg, angles);
    cfg.coin = CoinAngle::degrees(30);
    const auto rec = evolve(cfg);
    EXPECT_EQ(rec.recurrence_site, 1);
    EXPECT_EQ(rec.final_distribution().argmax(), 1);
    EXPECT_EQ(rows[0].recurrence, rec.final_recurrence());
}

// ---- properties -----------------------------------------------------------

TEST(walk_properties, unitarity_over_ten_thousand_steps) {
    WalkConfig cfg;
    cfg.steps = 10000;
    cfg.coin = CoinAngle::degrees(27.3);
    cfg.defect = DefectSpec(0, 123);
    const auto s = evolve_state(cfg);
    EXPECT_LT(std::abs(s.norm_squared() - 1.0), 1e-10);
    EXPECT_EQ(s.size(), 20001u);

    PureState t = make_initial(0, CoinState::h());
    const StepKernel k(CoinAngle::degrees(8.0), DefectSpec(2, 250));
    for (int i = 0; i < 500; ++i) {
        t = step(t, k);
        ASSERT_LT(std::abs(t.norm_squared() - 1.0), 1e-10) << "step " << i + 1;
    }
}

TEST(walk_properties, parity_and_light_cone) {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> th(0.0, 45.0), ph(0.0, 360.0);
    std::uniform_int_distribution<int> site(-4, 4);
    for (int trial = 0; trial < 20; ++trial) {
        WalkConfig cfg;
        cfg.steps = 12;
        cfg.coin = CoinAngle::degrees(th(rng));
        cfg.defect = DefectSpec(site(rng), ph(rng));
        cfg.initial_site = site(rng);
        cfg.initial_coin = CoinState::normalized({1.0, 0.3}, {-0.2, 0.9});
        const auto rec = evolve(cfg);
        for (std::int64_t t = 0; t <= cfg.steps; ++t) {
            const auto& d = rec.distributions[static_cast<std::size_t>(t)];
            for (std::int64_t x = cfg.initial_site - t - 3; x <= cfg.initial_site + t + 3; ++x) {
                const std::int64_t rel = x - cfg.initial_site;
                if ((rel + t) % 2 != 0) EXPECT_EQ(d.at(x), 0.0);
                if (std::abs(rel) > t) EXPECT_EQ(d.at(x), 0.0);
            }
        }
    }
}

TEST(walk_properties, defect_outside_light_cone_is_inert) {
    for (std::int64_t t = 0; t <= 8; ++t) {
        const auto plain = evolve(hadamard_walk(t, std::nullopt));
        const auto far = evolve(hadamard_walk(t, DefectSpec(t + 1, 97)));
        for (std::int64_t s = 0; s <= t; ++s) {
            const auto& a = plain.distributions[static_cast<std::size_t>(s)].probs();
            const auto& b = far.distributions[static_cast<std::size_t>(s)].probs();
            ASSERT_EQ(a.size(), b.size());
            for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]);
        }
    }
}

TEST(walk_properties, phase_periodicity) {
    for (double phi : {0.0, 33.0, 135.0, 180.0, 301.5}) {
        const auto a = evolve(hadamard_walk(10, DefectSpec(0, phi)));
        const auto b = evolve(hadamard_walk(10, DefectSpec(0, phi + 360.0)));
        for (std::int64_t x = -10; x <= 10; ++x)
            EXPECT_NEAR(a.final_distribution().at(x), b.final_distribution().at(x), 1e-12);
    }
}

TEST(walk_properties, path_sum_oracle_equivalence) {
    std::mt19937_64 rng(1234);
    std::uniform_real_distribution<double> th(0.0, 45.0), ph(0.0, 360.0), g(-1.0, 1.0);
    std::uniform_int_distribution<int> site(-3, 3);
    for (int trial = 0; trial < 30; ++trial) {
        const int t = trial % 9;
        const double theta = th(rng), phi = ph(rng);
        const std::int64_t n = site(rng);
        const auto coin = CoinState::normalized({g(rng), g(rng)}, {g(rng), g(rng)});
        WalkConfig cfg;
        cfg.steps = t;
        cfg.coin = CoinAngle::degrees(theta);
        cfg.defect = DefectSpec(n, phi);
        cfg.initial_coin = coin;
        const auto rec = evolve(cfg);
        expect_matches_oracle(rec.final_distribution(),
                              oracle::path_sum(t, theta, n, phi, 0, coin.amp_h(), coin.amp_v()), 1e-10);
    }
}

TEST(walk_properties, symmetric_standard_walk_is_mirror_symmetric) {
    for (int t = 0; t <= 10; ++t) {
        const auto ref = oracle::path_sum(t, 22.5, std::nullopt, 0, 0, {kR, 0}, {0, -kR});
        for (const auto& [x, p] : ref) ASSERT_NEAR(p, ref.count(-x) ? ref.at(-x) : 0.0, 1e-10);
        const auto d = evolve(hadamard_walk(t, DefectSpec(0, 0))).final_distribution();
        for (std::int64_t x = 0; x <= t; ++x) EXPECT_NEAR(d.at(x), d.at(-x), 1e-10);
    }
}
