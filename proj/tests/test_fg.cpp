#include <doctest.h>

#include <algorithm>
#include <set>

#include "lsic/env.hpp"
#include "lsic/error.hpp"
#include "lsic/fg.hpp"

using namespace lsic;

namespace {

Experience make_experience(const ItemParams& p, State s, int a, int d) {
    Experience e;
    e.s = std::move(s);
    e.a = a;
    const auto t = transition(p, e.s, a, d);
    e.r = t.r;
    e.s_next = t.s_next;
    e.d_obs = t.d_obs;
    e.censored = t.censored;
    return e;
}

ItemParams params_with(int y_max, int a_max, int lead_time, int d_max) {
    ItemParams p;
    p.y_max = y_max;
    p.a_max = a_max;
    p.lead_time = lead_time;
    p.d_max = d_max;
    return p;
}

}  // namespace

TEST_CASE("censored source enumerates only lower inventories") {
    const ItemParams p = params_with(10, 2, 2, 5);
    const auto exp = make_experience(p, State{3, {1}}, 1, 5);
    REQUIRE(exp.censored);
    const auto side = generate_side_experiences(exp, {}, p);
    CHECK(side.size() == 12);
    CHECK(side_count(exp, {}, p) == 12);
    for (const auto& e : side) {
        CHECK(e.s.y <= 3);
        CHECK(e.s.pipeline == exp.s.pipeline);
    }
}

TEST_CASE("uncensored source forms the complete graph") {
    const ItemParams p;  // y_max=100, a_max=20
    auto exp = make_experience(p, State{30, {0, 0, 0}}, 0, 4);
    REQUIRE_FALSE(exp.censored);
    CHECK(generate_side_experiences(exp, {}, p).size() == 2121);
    CHECK(side_count(exp, {}, p) == 2121);
    FeedbackGraphSpec one{1, std::nullopt};
    CHECK(side_count(exp, one, p) == 44541);
    CHECK(generate_side_experiences(exp, one, p).size() == 44541);
}

TEST_CASE("side count closed form at zero inventory") {
    const ItemParams p;
    const auto exp = make_experience(p, State{0, {0, 0, 0}}, 0, 3);
    CHECK(exp.censored);
    CHECK(side_count(exp, {}, p) == 21);
}

TEST_CASE("side rewards use the observed demand as the realization") {
    ItemParams p = params_with(10, 2, 2, 5);
    p.c = 0;
    p.h = 1;
    p.p = 4;
    const auto exp = make_experience(p, State{5, {2}}, 0, 3);
    REQUIRE(exp.d_obs == 3);
    const auto side = generate_side_experiences(exp, {}, p);
    const auto it = std::find_if(side.begin(), side.end(), [](const auto& e) { return e.s.y == 1 && e.a == 0; });
    REQUIRE(it != side.end());
    CHECK(it->r == -8.0);
    CHECK(it->s_next == State{2, {0}});
}

TEST_CASE("fg properties over random experiences") {
    Rng rng(2024);
    for (int trial = 0; trial < 200; ++trial) {
        ItemParams p = params_with(3 + static_cast<int>(rng.below(8)), 1 + static_cast<int>(rng.below(3)),
                                   1 + static_cast<int>(rng.below(3)), 1);
        p.d_max = 1 + static_cast<int>(rng.below(p.y_max));
        State s = initial_state(p);
        s.y = static_cast<int>(rng.below(p.y_max + 1));
        for (auto& x : s.pipeline) x = static_cast<int>(rng.below(p.a_max + 1));
        const int a = static_cast<int>(rng.below(p.a_max + 1));
        const int d = static_cast<int>(rng.below(p.d_max + 1));
        const auto exp = make_experience(p, s, a, d);
        FeedbackGraphSpec spec;
        spec.enumerate_pipeline_dims = static_cast<int>(rng.below(p.pipeline_length() + 1));

        const auto side = generate_side_experiences(exp, spec, p, 9);
        // count
        REQUIRE(side.size() == side_count(exp, spec, p));
        bool self_seen = false;
        std::set<std::pair<std::pair<int, std::vector<int>>, int>> distinct;
        for (const auto& e : side) {
            // censorship monotonicity
            if (exp.censored) CHECK(e.s.y <= exp.s.y);
            // consistency with the env under forced demand d_obs
            const auto t = transition(p, e.s, e.a, exp.d_obs);
            CHECK(t.r == e.r);
            CHECK(t.s_next == e.s_next);
            CHECK(e.source_id == 9);
            // non-enumerated pipeline dims are copied
            for (std::size_t i = static_cast<std::size_t>(spec.enumerate_pipeline_dims); i < e.s.pipeline.size(); ++i)
                CHECK(e.s.pipeline[i] == exp.s.pipeline[i]);
            self_seen |= e.s == exp.s && e.a == exp.a;
            distinct.insert({{e.s.y, e.s.pipeline}, e.a});
        }
        CHECK(distinct.size() == side.size());
        CHECK(self_seen);
        if (!exp.censored) {
            std::set<int> ys;
            for (const auto& e : side) ys.insert(e.s.y);
            CHECK(static_cast<int>(ys.size()) == p.y_max + 1);
        }
    }
}

TEST_CASE("cap subsamples uniformly and deterministically") {
    const ItemParams p = params_with(10, 3, 2, 5);
    const auto exp = make_experience(p, State{8, {1}}, 2, 1);
    FeedbackGraphSpec spec;
    spec.cap_side_per_experience = 5;
    Rng a(1), b(1);
    const auto s1 = generate_side_experiences(exp, spec, p, 0, &a);
    const auto s2 = generate_side_experiences(exp, spec, p, 0, &b);
    CHECK(s1.size() == 5);
    REQUIRE(s2.size() == 5);
    for (int i = 0; i < 5; ++i) CHECK(s1[i].s == s2[i].s);

    spec.cap_side_per_experience = 0;
    CHECK(generate_side_experiences(exp, spec, p).empty());
    spec.cap_side_per_experience = 1000;
    CHECK(generate_side_experiences(exp, spec, p).size() == side_count(exp, {}, p));

    // every pair is kept with equal frequency
    spec.cap_side_per_experience = 4;
    const auto total = side_count(exp, {}, p);
    std::vector<int> hits(total, 0);
    Rng rng(3);
    const int rounds = 20000;
    for (int r = 0; r < rounds; ++r) {
        for (const auto& e : generate_side_experiences(exp, spec, p, 0, &rng))
            ++hits[static_cast<std::size_t>(e.s.y * (p.a_max + 1) + e.a)];
    }
    const double expected = rounds * 4.0 / static_cast<double>(total);
    for (int h : hits) CHECK(std::abs(h - expected) < 5 * std::sqrt(expected));
}

TEST_CASE("fg spec validation") {
    const ItemParams p = params_with(10, 3, 2, 5);
    const auto exp = make_experience(p, State{8, {1}}, 2, 1);
    FeedbackGraphSpec spec;
    spec.enumerate_pipeline_dims = 2;
    CHECK_THROWS_AS(generate_side_experiences(exp, spec, p), ConfigError);
    spec.enumerate_pipeline_dims = -1;
    CHECK_THROWS_AS(generate_side_experiences(exp, spec, p), ConfigError);
}

TEST_CASE("per-node side experiences vary one node at a time") {
    std::vector<ItemParams> items(2, params_with(6, 2, 2, 4));
    MultiItemEnv env{items};
    env.reset(5);
    env.set_states({State{4, {1}}, State{2, {0}}});
    const auto before = env.states();
    const std::vector<int> actions{1, 2};
    const auto res = env.step_forced(actions, std::vector<int>{1, 3});
    const auto side = generate_per_node_side_experiences(items, before, actions, res.items, {});
    // node 0 uncensored: 7*3; node 1 censored at y=2: 3*3
    CHECK(side.size() == 21 + 9);
    for (const auto& e : side) {
        const std::size_t other = 1 - e.node;
        CHECK(e.s[other] == before[other]);
        CHECK(e.a[other] == actions[other]);
        CHECK(e.s_next[other] == res.items[other].s_next);
        const auto t = transition(items[e.node], e.s[e.node], e.a[e.node], res.items[e.node].d_obs);
        CHECK(e.r == doctest::Approx(t.r + res.items[other].r));
    }
}
