#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "lsic/error.hpp"
#include "lsic/heuristics.hpp"
#include "lsic/theory.hpp"

using namespace lsic;

namespace {

ItemParams reduced() {
    ItemParams p;
    p.y_max = 10;
    p.a_max = 3;
    p.lead_time = 2;
    p.d_mean = 2.0;
    p.d_max = 8;
    return p;
}

ItemParams small_params() {
    ItemParams q;
    q.y_max = 5;
    q.a_max = 1;
    q.lead_time = 1;
    q.d_max = 5;
    return q;
}

}  // namespace

TEST_CASE("stationary distribution of small chains") {
    MarkovChain one;
    one.rows = {{{0, 1.0}}};
    CHECK(stationary_distribution(one)[0] == 1.0);

    MarkovChain cycle;  // periodic 2-cycle
    cycle.rows = {{{1, 1.0}}, {{0, 1.0}}};
    const auto pi = stationary_distribution(cycle);
    CHECK(pi[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(pi[1] == doctest::Approx(0.5).epsilon(1e-12));

    MarkovChain transient;  // 0 -> {1,2}, 1 <-> 2
    transient.rows = {{{1, 0.5}, {2, 0.5}}, {{2, 1.0}}, {{1, 0.3}, {2, 0.7}}};
    const auto t = stationary_distribution(transient);
    CHECK(t[0] == 0.0);
    CHECK(t[1] == doctest::Approx(0.3 / 1.3).epsilon(1e-10));

    MarkovChain split;
    split.rows = {{{0, 1.0}}, {{1, 1.0}}, {{0, 0.5}, {1, 0.5}}};
    CHECK(closed_classes(split).size() == 2);
    CHECK_THROWS_AS(stationary_distribution(split), ChainError);

    MarkovChain bad;
    bad.rows = {{{0, 0.7}}};
    CHECK_THROWS_AS(stationary_distribution(bad), ChainError);
}

TEST_CASE("stationary law solves pi P = pi on random chains") {
    Rng rng(41);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = 2 + rng.below(15);
        MarkovChain c;
        c.rows.resize(n);
        for (std::size_t v = 0; v < n; ++v) {
            double total = 0.0;
            std::vector<double> w(n);
            for (auto& x : w) total += (x = rng.uniform() < 0.4 ? rng.uniform() : 0.0);
            w[(v + 1) % n] += 0.1;  // keeps the chain irreducible
            total += 0.1;
            for (std::size_t u = 0; u < n; ++u)
                if (w[u] > 0.0) c.rows[v].emplace_back(u, w[u] / total);
        }
        const auto pi = stationary_distribution(c);
        std::vector<double> next(n, 0.0);
        for (std::size_t v = 0; v < n; ++v)
            for (const auto& [u, p] : c.rows[v]) next[u] += pi[v] * p;
        double resid = 0.0, total = 0.0;
        for (std::size_t v = 0; v < n; ++v) {
            resid += std::abs(next[v] - pi[v]);
            total += pi[v];
        }
        CHECK(resid <= 1e-11);
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("default TinyMDP update probabilities") {
    const TinyMDP m = TinyMDP::make_default();
    CHECK(m.pairs() == 18);
    const auto rep = verify_update_probability(m, 1'000'000, 5);
    double total = 0.0;
    for (double x : rep.mu) total += x;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rep.violations == 0);
    for (std::size_t i = 0; i < rep.mu.size(); ++i) {
        CHECK(rep.mu_tilde[i] >= rep.mu[i]);
        CHECK(rep.mu_tilde[i] <= 1.0);
    }
    CHECK(rep.mc_visit_error <= 1e-2);
    CHECK(rep.mc_error <= 1e-2);
    CHECK(rep.mc_error_generated <= 1e-2);
    CHECK(rep.improvement_factor > 1.0);
}

TEST_CASE("zero demand makes every visit update every pair") {
    TinyMDP m = TinyMDP::uniform(small_params(), DemandModel::point_mass(0));
    const auto mu = stationary_distribution(m.pair_chain());
    for (double x : update_probability_fg(m, mu)) CHECK(x == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("update probability dominates mu on random TinyMDPs") {
    Rng rng(77);
    for (int trial = 0; trial < 25; ++trial) {
        ItemParams p;
        p.y_max = 2 + static_cast<int>(rng.below(5));
        p.a_max = 1 + static_cast<int>(rng.below(2));
        p.lead_time = 1 + static_cast<int>(rng.below(2));
        p.d_max = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(p.y_max)));
        std::vector<double> pmf(static_cast<std::size_t>(p.d_max) + 1);
        double total = 0.0;
        for (auto& x : pmf) total += (x = 0.05 + rng.uniform());
        for (auto& x : pmf) x /= total;
        TinyMDP m = TinyMDP::uniform(p, DemandModel::from_pmf(pmf));
        QTable table(m.params);
        for (std::size_t s = 0; s < table.indexer().size(); ++s)
            for (int a = 0; a <= p.a_max; ++a) table.at(table.indexer().state(s), a) = rng.normal();
        m.set_epsilon_greedy(table, 0.3);
        const auto mu = stationary_distribution(m.pair_chain());
        for (auto sem : {FgSemantics::visit_rule, FgSemantics::generated}) {
            const auto mt = update_probability_fg(m, mu, sem);
            for (std::size_t i = 0; i < mu.size(); ++i) CHECK(mt[i] >= mu[i] - 1e-15);
        }
    }
}

TEST_CASE("degenerate demand: pairs at or above d share one update probability") {
    const ItemParams q = small_params();
    for (int d = 0; d < q.y_max; ++d) {
        TinyMDP m = TinyMDP::uniform(q, DemandModel::point_mass(d));
        const auto mu = stationary_distribution(m.pair_chain());
        const auto mt = update_probability_fg(m, mu);
        const std::size_t A = m.actions();
        for (int y = 1; y <= q.y_max; ++y) CHECK(mt[static_cast<std::size_t>(y) * A] <= mt[static_cast<std::size_t>(y - 1) * A] + 1e-15);
        for (int y = d; y <= q.y_max; ++y) CHECK(mt[static_cast<std::size_t>(y) * A] == doctest::Approx(mt[static_cast<std::size_t>(d) * A]).epsilon(1e-14));
    }
}

TEST_CASE("improvement factor under degenerate demand") {
    const ItemParams q = small_params();
    const auto r = verify_degenerate_factor(TinyMDP::uniform(q, DemandModel::point_mass(2)));
    CHECK(r.bound == 6.0);
    CHECK(r.holds);
    for (int d = 0; d < q.y_max; ++d) CHECK(verify_degenerate_factor(TinyMDP::uniform(q, DemandModel::point_mass(d))).holds);

    TinyMDP zero = TinyMDP::uniform(q, DemandModel::point_mass(0));
    const auto mt = update_probability_fg(zero, stationary_distribution(zero.pair_chain()));
    CHECK(*std::min_element(mt.begin(), mt.end()) == doctest::Approx(1.0));

    CHECK_THROWS_AS(verify_degenerate_factor(TinyMDP::make_default()), ConfigError);
    CHECK_THROWS_AS(verify_degenerate_factor(TinyMDP::uniform(q, DemandModel::point_mass(5))), ConfigError);
}

TEST_CASE("graph number closed forms") {
    ItemParams big;
    big.y_max = 100;
    big.a_max = 20;
    big.lead_time = 4;
    CHECK(graph_numbers(0, true, big) == GraphNumbers{16'000'000, 16'000'000, 16'000'000});
    CHECK(graph_numbers(7, false, big) == GraphNumbers{1, 1, 1});
    const ItemParams q = small_params();
    const auto g = graph_numbers(3, true, q);
    CHECK(g.alpha == 3);
    CHECK(g.zeta == 3);
    CHECK(g.omega == 5);
    CHECK_THROWS_AS(graph_numbers(6, true, q), ConfigError);
}

TEST_CASE("graph numbers agree with brute force on explicit graphs") {
    const ItemParams q = small_params();
    const std::uint64_t pairs = (q.y_max + 1) * (q.a_max + 1);
    for (int y = 0; y <= q.y_max; ++y)
        for (bool censored : {true, false}) {
            const auto printed = graph_numbers(y, censored, q);
            const auto one = graph_numbers_bruteforce(build_feedback_graph(y, censored, q, NodeIndexing::one_based));
            const auto zero = graph_numbers_bruteforce(build_feedback_graph(y, censored, q, NodeIndexing::zero_based));
            CHECK(one == printed);
            CHECK(zero == graph_numbers_zero_based(y, censored, q));
            for (const auto& t : {printed, zero}) {
                CHECK(t.zeta <= t.alpha);
                CHECK(t.alpha <= t.omega);
                CHECK(t.omega <= pairs);
            }
        }
    ItemParams two = q;
    two.a_max = 2;
    two.y_max = 2;
    for (int y = 0; y <= 2; ++y)
        CHECK(graph_numbers_bruteforce(build_feedback_graph(y, true, two, NodeIndexing::zero_based)) ==
              graph_numbers_zero_based(y, true, two));
}

TEST_CASE("brute force on hand-made graphs") {
    Digraph g;  // directed 3-cycle
    g.n = 3;
    g.adj = {{false, true, false}, {false, false, true}, {true, false, false}};
    const auto r = graph_numbers_bruteforce(g);
    CHECK(r.alpha == 1);
    CHECK(r.zeta == 2);
    CHECK(r.omega == 2);
}

TEST_CASE("value iteration basics") {
    ItemParams p = reduced();
    p.c = 0.0;
    p.h = 0.0;
    const auto zero = value_iteration(p, DemandModel::point_mass(0));
    CHECK(zero.converged);
    for (double v : zero.values) CHECK(v == 0.0);
    for (auto a : zero.policy) CHECK(a == 0);
    p.h = 1.0;
    const auto held = value_iteration(p, DemandModel::point_mass(0));
    CHECK(held.values[0] == 0.0);
    for (auto a : held.policy) CHECK(a == 0);

    p.gamma = 0.9;
    ValueIterationOptions o;
    o.tol = 1e-10;
    const auto res = value_iteration(p, DemandModel::for_item(p), o);
    REQUIRE(res.converged);
    for (std::size_t k = 1; k < res.deltas.size(); ++k) CHECK(res.deltas[k] <= p.gamma * res.deltas[k - 1] + 1e-12);

    o.threads = 3;
    const auto threaded = value_iteration(p, DemandModel::for_item(p), o);
    CHECK(threaded.values == res.values);
    CHECK(threaded.policy == res.policy);

    o.max_states = 10;
    CHECK_THROWS_AS(value_iteration(p, DemandModel::for_item(p), o), SizeError);

    // Bellman residual of the returned values
    const StateIndexer idx(p);
    const auto demand_law = DemandModel::for_item(p);
    const auto& pmf = demand_law.pmf();
    for (std::size_t i = 0; i < idx.size(); i += 7) {
        const State s = idx.state(i);
        double best = 1e300;
        for (int a = 0; a <= p.a_max; ++a) {
            double q = 0.0;
            for (std::size_t d = 0; d < pmf.size(); ++d) {
                const auto t = transition(p, s, a, static_cast<int>(d));
                q += pmf[d] * (-t.r + p.gamma * res.values[idx.index(t.s_next)]);
            }
            best = std::min(best, q);
        }
        CHECK(best == doctest::Approx(res.values[i]).epsilon(1e-8));
    }
}

TEST_CASE("span stopping gives the same policy as a tight sup-norm run") {
    ItemParams p = reduced();
    ValueIterationOptions sup;
    sup.tol = 1e-9;
    ValueIterationOptions span = sup;
    span.stop = StopRule::span;
    span.tol = 1e-9;
    const auto a = value_iteration(p, DemandModel::for_item(p), sup);
    const auto b = value_iteration(p, DemandModel::for_item(p), span);
    CHECK(b.sweeps < a.sweeps);
    const auto demand = DemandModel::for_item(p);
    CHECK(average_cost(p, demand, PolicyTable(p, a.policy)) ==
          doctest::Approx(average_cost(p, demand, PolicyTable(p, b.policy))).epsilon(1e-9));
}

TEST_CASE("exact average cost agrees with simulation and beats heuristics") {
    const ItemParams p = reduced();
    const auto demand = DemandModel::for_item(p);
    ValueIterationOptions o;
    o.stop = StopRule::span;
    const PolicyTable opt(p, value_iteration(p, demand, o).policy);
    const double exact = average_cost(p, demand, opt);
    EvalProtocol eval;
    eval.episodes = 100;
    eval.warmup = 50;
    eval.seed = 9;
    const auto sim = evaluate_policy(opt, p, eval);
    CHECK(std::abs(sim.mean_cost - exact) <= 3 * sim.std_cost / std::sqrt(100.0));

    for (auto kind : {HeuristicKind::constant, HeuristicKind::base_stock, HeuristicKind::capped_base_stock,
                      HeuristicKind::myopic1, HeuristicKind::myopic2}) {
        for (const auto& hp : {HeuristicParams{2.0, 6, 0.0, {}}, HeuristicParams{3.0, 7, 0.0, {}}}) {
            HeuristicPolicy h(kind, hp, p);
            const auto r = evaluate_rollouts(p, h, eval);
            CHECK(sim.mean_cost <= r.mean_cost + 2 * r.std_cost);
        }
    }

    ItemParams fixed = p;
    EvalProtocol det = eval;
    det.episodes = 5;
    const auto point = evaluate_rollouts(fixed, [](const State&) { return 2; }, det);
    (void)point;
    SingleItemEnv env(fixed, DemandModel::point_mass(2));
    std::vector<double> totals;
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        env.reset(seed);
        double total = 0.0;
        for (int t = 0; t < 400; ++t) total -= env.step(opt(env.state())).r;
        totals.push_back(total);
    }
    CHECK(totals[0] == totals[1]);
    CHECK(totals[1] == totals[2]);
}

TEST_CASE("order-nothing policy costs p times mean demand") {
    const ItemParams p;
    const PolicyTable none(p, std::vector<std::uint8_t>(StateIndexer(p).size(), 0));
    EvalProtocol eval;
    eval.episodes = 10;
    CHECK(evaluate_policy(none, p, eval).mean_cost == doctest::Approx(20.0).epsilon(0.02));
    CHECK(average_cost(p, DemandModel::for_item(p), none) == doctest::Approx(20.0).epsilon(1e-6));
}

TEST_CASE("policy file round trip") {
    const ItemParams p = reduced();
    std::vector<std::uint8_t> acts(StateIndexer(p).size());
    for (std::size_t i = 0; i < acts.size(); ++i) acts[i] = static_cast<std::uint8_t>(i % 4);
    const PolicyTable t(p, acts);
    const auto path = (std::filesystem::temp_directory_path() / "lsic_policy_test.bin").string();
    write_policy(path, t);
    CHECK(std::filesystem::file_size(path) == 12 + acts.size());
    std::ifstream raw(path, std::ios::binary);
    unsigned char head[12];
    raw.read(reinterpret_cast<char*>(head), 12);
    CHECK(head[0] == 10);
    CHECK(head[1] == 0);
    CHECK(head[4] == 3);
    CHECK(head[8] == 2);
    raw.close();
    const PolicyTable back = read_policy(path);
    CHECK(back.actions == t.actions);
    CHECK(back(State{3, {2}}) == t(State{3, {2}}));

    std::filesystem::resize_file(path, 20);
    CHECK_THROWS_AS(read_policy(path), IoError);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(read_policy(path), IoError);
    CHECK_THROWS_AS(write_policy("/nonexistent-dir/x.bin", t), IoError);
}

TEST_CASE("greedy Q-learning on a tiny MDP reaches the optimal cost") {
    ItemParams p;
    p.y_max = 5;
    p.a_max = 2;
    p.lead_time = 1;
    p.d_max = 2;
    p.d_mean = 1.0;
    p.gamma = 0.9;
    const auto demand = DemandModel::for_item(p);
    const PolicyTable opt(p, value_iteration(p, demand).policy);

    AgentConfig cfg;
    cfg.gamma = p.gamma;
    cfg.alpha = 0.01;
    cfg.epsilon = 0.3;
    QAgent agent(p, cfg, {}, 13);
    SingleItemEnv env(p);
    env.reset(13);
    for (int t = 0; t < 60000; ++t) {
        env.step(agent.act(env.state()));
        agent.observe(env.last_experience());
    }
    std::vector<std::uint8_t> greedy(StateIndexer(p).size());
    for (std::size_t i = 0; i < greedy.size(); ++i)
        greedy[i] = static_cast<std::uint8_t>(agent.act_greedy(StateIndexer(p).state(i)));
    EvalProtocol eval;
    eval.episodes = 200;
    eval.warmup = 20;
    const auto learned = evaluate_policy(PolicyTable(p, greedy), p, eval);
    const auto best = evaluate_policy(opt, p, eval);
    CHECK(std::abs(learned.mean_cost - best.mean_cost) <= 2 * best.std_cost / std::sqrt(200.0) + 1e-9);
}
