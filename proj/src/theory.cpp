#include "lsic/theory.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>

#include "lsic/error.hpp"
#include "lsic/fg.hpp"
#include "lsic/parallel.hpp"

namespace lsic {

std::vector<std::vector<std::size_t>> closed_classes(const MarkovChain& chain) {
    const std::size_t n = chain.size();
    constexpr std::size_t unseen = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> index(n, unseen), low(n, 0), comp(n, unseen);
    std::vector<bool> on_stack(n, false);
    std::vector<std::size_t> stack;
    std::vector<std::pair<std::size_t, std::size_t>> calls;  // (node, next edge)
    std::size_t counter = 0, n_comp = 0;

    for (std::size_t root = 0; root < n; ++root) {
        if (index[root] != unseen) continue;
        calls.emplace_back(root, 0);
        while (!calls.empty()) {
            auto& [v, e] = calls.back();
            if (e == 0 && index[v] == unseen) {
                index[v] = low[v] = counter++;
                stack.push_back(v);
                on_stack[v] = true;
            }
            const auto& row = chain.rows[v];
            bool descended = false;
            while (e < row.size()) {
                const auto [w, p] = row[e++];
                if (p <= 0.0) continue;
                if (index[w] == unseen) {
                    calls.emplace_back(w, 0);
                    descended = true;
                    break;
                }
                if (on_stack[w]) low[v] = std::min(low[v], index[w]);
            }
            if (descended) continue;
            const std::size_t node = v;
            if (low[node] == index[node]) {
                std::size_t w;
                do {
                    w = stack.back();
                    stack.pop_back();
                    on_stack[w] = false;
                    comp[w] = n_comp;
                } while (w != node);
                ++n_comp;
            }
            calls.pop_back();
            if (!calls.empty()) {
                const std::size_t parent = calls.back().first;
                low[parent] = std::min(low[parent], low[node]);
            }
        }
    }

    std::vector<bool> closed(n_comp, true);
    for (std::size_t v = 0; v < n; ++v)
        for (const auto& [w, p] : chain.rows[v])
            if (p > 0.0 && comp[w] != comp[v]) closed[comp[v]] = false;
    std::map<std::size_t, std::vector<std::size_t>> by_comp;
    for (std::size_t v = 0; v < n; ++v)
        if (closed[comp[v]]) by_comp[comp[v]].push_back(v);
    std::vector<std::vector<std::size_t>> out;
    for (auto& [c, members] : by_comp) out.push_back(std::move(members));
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<double> stationary_distribution(const MarkovChain& chain, const StationaryOptions& options) {
    const std::size_t n = chain.size();
    if (n == 0) throw ChainError("empty chain");
    for (std::size_t v = 0; v < n; ++v) {
        double total = 0.0;
        for (const auto& [w, p] : chain.rows[v]) {
            if (w >= n || p < 0.0) throw ChainError("row " + std::to_string(v) + " has an invalid entry");
            total += p;
        }
        if (std::abs(total - 1.0) > 1e-9) throw ChainError("row " + std::to_string(v) + " does not sum to 1");
    }
    const auto classes = closed_classes(chain);
    if (classes.size() != 1) {
        std::string msg = "chain has " + std::to_string(classes.size()) + " closed classes, containing states";
        for (const auto& c : classes) msg += " " + std::to_string(c.front());
        throw ChainError(msg);
    }
    std::vector<double> pi(n, 0.0), next(n);
    for (std::size_t v : classes[0]) pi[v] = 1.0 / static_cast<double>(classes[0].size());
    for (long it = 0; it < options.max_iterations; ++it) {
        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t v = 0; v < n; ++v) {
            if (pi[v] == 0.0) continue;
            for (const auto& [w, p] : chain.rows[v]) next[w] += pi[v] * p;
        }
        double residual = 0.0;
        for (std::size_t v = 0; v < n; ++v) residual += std::abs(next[v] - pi[v]);
        if (residual <= options.tol) {
            double total = 0.0;
            for (double x : pi) total += x;
            for (double& x : pi) x /= total;
            return pi;
        }
        for (std::size_t v = 0; v < n; ++v) pi[v] = 0.5 * (pi[v] + next[v]);
    }
    throw ChainError("power iteration did not reach the residual tolerance");
}

TinyMDP TinyMDP::make_default() {
    ItemParams p;
    p.y_max = 5;
    p.a_max = 2;
    p.lead_time = 1;
    p.d_max = 2;
    p.d_mean = 1.0;
    return uniform(p, DemandModel::poisson_clamped(1.0, 2));
}

TinyMDP TinyMDP::uniform(const ItemParams& params, const DemandModel& demand) {
    TinyMDP m;
    m.params = params;
    m.params.d_max = std::max(params.d_max, demand.d_max());
    m.pmf = demand.pmf();
    m.pmf.resize(static_cast<std::size_t>(m.params.d_max) + 1, 0.0);
    m.params.demand_pmf = m.pmf;
    m.policy.assign(m.pairs(), 1.0 / static_cast<double>(m.actions()));
    m.validate();
    return m;
}

std::size_t TinyMDP::states() const {
    std::size_t n = static_cast<std::size_t>(params.y_max) + 1;
    for (int i = 0; i < params.pipeline_length(); ++i) n *= actions();
    return n;
}

void TinyMDP::validate() const {
    params.validate();
    if (pairs() > 10000) throw SizeError("TinyMDP has " + std::to_string(pairs()) + " pairs; at most 10000 allowed");
    if (pmf.size() != static_cast<std::size_t>(params.d_max) + 1) throw ConfigError("pmf length must be d_max + 1");
    if (policy.size() != pairs()) throw ConfigError("behavior policy must have one entry per pair");
    for (std::size_t s = 0; s < states(); ++s) {
        double total = 0.0;
        for (std::size_t a = 0; a < actions(); ++a) {
            const double w = policy[s * actions() + a];
            if (w < 0.0) throw ConfigError("behavior policy has a negative probability");
            total += w;
        }
        if (std::abs(total - 1.0) > 1e-9) throw ConfigError("behavior policy row does not sum to 1");
    }
}

void TinyMDP::set_epsilon_greedy(const QTable& table, double epsilon) {
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ConfigError("epsilon must lie in [0, 1]");
    const auto idx = indexer();
    const double share = epsilon / static_cast<double>(actions());
    for (std::size_t s = 0; s < states(); ++s) {
        const int best = argmax(table.row(idx.state(s)));
        for (std::size_t a = 0; a < actions(); ++a)
            policy[s * actions() + a] = share + (static_cast<int>(a) == best ? 1.0 - epsilon : 0.0);
    }
}

MarkovChain TinyMDP::pair_chain() const {
    validate();
    const auto idx = indexer();
    const std::size_t A = actions();
    MarkovChain chain;
    chain.rows.resize(pairs());
    for (std::size_t s = 0; s < states(); ++s) {
        const State st = idx.state(s);
        for (std::size_t a = 0; a < A; ++a) {
            std::map<std::size_t, double> row;
            for (std::size_t d = 0; d < pmf.size(); ++d) {
                if (pmf[d] == 0.0) continue;
                const std::size_t s2 =
                    idx.index(transition(params, st, static_cast<int>(a), static_cast<int>(d)).s_next);
                for (std::size_t a2 = 0; a2 < A; ++a2) {
                    const double w = pmf[d] * policy[s2 * A + a2];
                    if (w > 0.0) row[s2 * A + a2] += w;
                }
            }
            chain.rows[s * A + a].assign(row.begin(), row.end());
        }
    }
    return chain;
}

namespace {

// Stationary mass of each inventory level.
std::vector<double> inventory_mass(const TinyMDP& mdp, const std::vector<double>& mu) {
    const std::size_t per_level = mdp.pairs() / (static_cast<std::size_t>(mdp.params.y_max) + 1);
    std::vector<double> m(static_cast<std::size_t>(mdp.params.y_max) + 1, 0.0);
    for (std::size_t i = 0; i < mu.size(); ++i) m[i / per_level] += mu[i];
    return m;
}

}  // namespace

std::vector<double> update_probability_fg(const TinyMDP& mdp, const std::vector<double>& mu, FgSemantics semantics) {
    if (mu.size() != mdp.pairs()) throw ConfigError("mu must have one entry per pair");
    const auto M = inventory_mass(mdp, mu);
    const int y_max = mdp.params.y_max;
    std::vector<double> by_level(M.size(), 0.0);
    for (int y = 0; y <= y_max; ++y) {
        double total = 0.0;
        for (std::size_t di = 0; di < mdp.pmf.size(); ++di) {
            const int d = static_cast<int>(di);
            double covered = 0.0;
            for (int yh = 0; yh <= y_max; ++yh) {
                const bool all = semantics == FgSemantics::visit_rule ? yh >= d : d < yh;
                if (all || y <= yh) covered += M[static_cast<std::size_t>(yh)];
            }
            total += mdp.pmf[di] * covered;
        }
        by_level[static_cast<std::size_t>(y)] = total;
    }
    const std::size_t per_level = mdp.pairs() / M.size();
    std::vector<double> out(mu.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::min(1.0, by_level[i / per_level]);
    return out;
}

UpdateFrequencies simulate_update_frequencies(const TinyMDP& mdp, long steps, std::uint64_t seed, long burn_in) {
    mdp.validate();
    if (steps < 1 || burn_in < 0) throw ConfigError("simulation needs steps >= 1 and burn_in >= 0");
    const auto idx = mdp.indexer();
    const std::size_t A = mdp.actions();
    const std::size_t per_level = mdp.pairs() / (static_cast<std::size_t>(mdp.params.y_max) + 1);
    const DemandModel demand = DemandModel::from_pmf(mdp.pmf);
    Rng behavior(seed, Stream::exploration), demand_rng(seed, Stream::demand);
    FeedbackGraphSpec spec;
    spec.enumerate_pipeline_dims = mdp.params.pipeline_length();

    UpdateFrequencies out;
    out.steps = steps;
    std::vector<long> visits(mdp.pairs(), 0), up_rule(mdp.pairs(), 0), up_generated(mdp.pairs(), 0);
    State s = initial_state(mdp.params);
    for (long t = 0; t < burn_in + steps; ++t) {
        const std::size_t si = idx.index(s);
        double u = behavior.uniform();
        std::size_t a = 0;
        while (a + 1 < A && u >= mdp.policy[si * A + a]) u -= mdp.policy[si * A + a++];
        const int d = demand.sample(demand_rng);
        const Transition tr = transition(mdp.params, s, static_cast<int>(a), d);
        if (t >= burn_in) {
            ++visits[si * A + a];
            for (std::size_t p = 0; p < mdp.pairs(); ++p) {
                const int y = static_cast<int>(p / per_level);
                if (s.y >= d || y <= s.y) ++up_rule[p];
            }
            Experience exp;
            exp.s = s;
            exp.a = static_cast<int>(a);
            exp.r = tr.r;
            exp.s_next = tr.s_next;
            exp.d_obs = tr.d_obs;
            exp.censored = tr.censored;
            for_each_side_pair(exp, spec, mdp.params, [&](const State& sh, int ah) {
                ++up_generated[idx.index(sh) * A + static_cast<std::size_t>(ah)];
            });
        }
        s = tr.s_next;
    }
    const double n = static_cast<double>(steps);
    for (std::size_t p = 0; p < mdp.pairs(); ++p) {
        out.visits.push_back(visits[p] / n);
        out.updates_visit_rule.push_back(up_rule[p] / n);
        out.updates_generated.push_back(up_generated[p] / n);
    }
    return out;
}

namespace {

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace

UpdateProbabilityReport verify_update_probability(const TinyMDP& mdp, long mc_steps, std::uint64_t seed) {
    UpdateProbabilityReport r;
    r.mu = stationary_distribution(mdp.pair_chain());
    r.mu_tilde = update_probability_fg(mdp, r.mu, FgSemantics::visit_rule);
    r.mu_tilde_generated = update_probability_fg(mdp, r.mu, FgSemantics::generated);
    r.mu_min = *std::min_element(r.mu.begin(), r.mu.end());
    r.mu_tilde_min = *std::min_element(r.mu_tilde.begin(), r.mu_tilde.end());
    r.improvement_factor =
        r.mu_min > 0.0 ? r.mu_tilde_min / r.mu_min : std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < r.mu.size(); ++i)
        if (r.mu_tilde[i] < r.mu[i] || r.mu_tilde_generated[i] < r.mu[i]) ++r.violations;
    r.semantics_gap = max_abs_diff(r.mu_tilde, r.mu_tilde_generated);
    if (mc_steps > 0) {
        r.mc = simulate_update_frequencies(mdp, mc_steps, seed);
        r.mc_visit_error = max_abs_diff(r.mu, r.mc.visits);
        r.mc_error = max_abs_diff(r.mu_tilde, r.mc.updates_visit_rule);
        r.mc_error_generated = max_abs_diff(r.mu_tilde_generated, r.mc.updates_generated);
    }
    return r;
}

DegenerateDemandReport verify_degenerate_factor(const TinyMDP& mdp) {
    DegenerateDemandReport r;
    r.d = -1;
    for (std::size_t d = 0; d < mdp.pmf.size(); ++d)
        if (mdp.pmf[d] == 1.0) r.d = static_cast<int>(d);
    if (r.d < 0) throw ConfigError("the degenerate-demand check needs a point-mass demand");
    if (r.d >= mdp.params.y_max) throw ConfigError("the degenerate-demand check needs d < y_max");
    const auto mu = stationary_distribution(mdp.pair_chain());
    const auto mt = update_probability_fg(mdp, mu, FgSemantics::visit_rule);
    double mu_min = 1.0, mt_min = 1.0, mu_min_rec = 1.0, mt_min_rec = 1.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        mu_min = std::min(mu_min, mu[i]);
        mt_min = std::min(mt_min, mt[i]);
        if (mu[i] > 0.0) {
            mu_min_rec = std::min(mu_min_rec, mu[i]);
            mt_min_rec = std::min(mt_min_rec, mt[i]);
        }
    }
    r.ratio = mu_min > 0.0 ? mt_min / mu_min : std::numeric_limits<double>::infinity();
    r.ratio_recurrent = mt_min_rec / mu_min_rec;
    r.bound = (mdp.params.y_max - r.d) * std::pow(static_cast<double>(mdp.actions()), mdp.params.lead_time);
    r.holds = r.ratio >= r.bound;
    return r;
}

namespace {

std::uint64_t ipow(std::uint64_t base, int exp) {
    std::uint64_t out = 1;
    for (int i = 0; i < exp; ++i) out *= base;
    return out;
}

void check_inventory(int y_t, const ItemParams& params) {
    if (y_t < 0 || y_t > params.y_max) throw ConfigError("y_t must lie in [0, y_max]");
}

}  // namespace

GraphNumbers graph_numbers(int y_t, bool censored, const ItemParams& params) {
    check_inventory(y_t, params);
    if (!censored) return {1, 1, 1};
    const std::uint64_t base =
        static_cast<std::uint64_t>(params.y_max - y_t) * ipow(static_cast<std::uint64_t>(params.a_max), params.lead_time);
    const std::uint64_t y = static_cast<std::uint64_t>(y_t);
    return {base + y, base + (y_t != 0 ? 1 : 0), base + (y_t != 0 ? 1 : 0)};
}

GraphNumbers graph_numbers_zero_based(int y_t, bool censored, const ItemParams& params) {
    check_inventory(y_t, params);
    if (!censored) return {1, 1, 1};
    const std::uint64_t base = static_cast<std::uint64_t>(params.y_max - y_t) *
                               ipow(static_cast<std::uint64_t>(params.a_max) + 1, params.lead_time);
    const std::uint64_t y = static_cast<std::uint64_t>(y_t);
    return {base + y + 1, base + 1, base + 1};
}

Digraph build_feedback_graph(int y_t, bool censored, const ItemParams& params, NodeIndexing indexing) {
    check_inventory(y_t, params);
    const int lo = indexing == NodeIndexing::one_based ? 1 : 0;
    const int digits = params.lead_time;
    const std::uint64_t per_level = ipow(static_cast<std::uint64_t>(params.a_max - lo + 1), digits);
    Digraph g;
    for (int y = lo; y <= params.y_max; ++y)
        for (std::uint64_t k = 0; k < per_level; ++k) g.inventory.push_back(y);
    g.n = g.inventory.size();
    if (g.n > 64) throw SizeError("feedback graph has " + std::to_string(g.n) + " nodes; at most 64 supported");
    g.adj.assign(g.n, std::vector<bool>(g.n, false));
    for (std::size_t u = 0; u < g.n; ++u)
        for (std::size_t v = 0; v < g.n; ++v) {
            if (u == v) continue;
            if (!censored)
                g.adj[u][v] = true;
            else
                g.adj[u][v] = g.inventory[u] <= y_t && g.inventory[v] <= g.inventory[u];
        }
    return g;
}

GraphNumbers graph_numbers_bruteforce(const Digraph& g) {
    const std::size_t n = g.n;
    if (n > 24) throw SizeError("brute-force graph numbers support at most 24 nodes");
    std::vector<std::uint32_t> und(n, 0), closed_out(n, 0), in(n, 0);
    for (std::size_t u = 0; u < n; ++u) {
        closed_out[u] |= 1u << u;
        for (std::size_t v = 0; v < n; ++v) {
            if (u == v || !g.adj[u][v]) continue;
            und[u] |= 1u << v;
            und[v] |= 1u << u;
            closed_out[u] |= 1u << v;
            in[v] |= 1u << u;
        }
    }
    const std::uint32_t full = n == 32 ? ~0u : (1u << n) - 1u;
    GraphNumbers out{0, 0, static_cast<std::uint64_t>(n)};
    for (std::uint64_t mask64 = 0; mask64 <= full; ++mask64) {
        const auto mask = static_cast<std::uint32_t>(mask64);
        const auto size = static_cast<std::uint64_t>(std::popcount(mask));
        bool independent = true, acyclic_candidate = size > out.omega, dom_candidate = size < out.zeta;
        std::uint32_t covered = 0;
        for (std::size_t u = 0; u < n; ++u) {
            if (!(mask >> u & 1u)) continue;
            if (und[u] & mask) independent = false;
            covered |= closed_out[u];
        }
        if (independent) out.alpha = std::max(out.alpha, size);
        if (dom_candidate && covered == full) out.zeta = size;
        if (acyclic_candidate) {
            std::uint32_t rem = mask;
            bool changed = true;
            while (rem && changed) {
                changed = false;
                for (std::size_t v = 0; v < n; ++v)
                    if ((rem >> v & 1u) && !(in[v] & rem)) {
                        rem &= ~(1u << v);
                        changed = true;
                    }
            }
            if (rem == 0) out.omega = size;
        }
    }
    return out;
}

namespace {

std::vector<double> expected_period_cost(const ItemParams& params, const std::vector<double>& pmf) {
    std::vector<double> G(static_cast<std::size_t>(params.y_max) + 1, 0.0);
    for (int y = 0; y <= params.y_max; ++y)
        for (std::size_t di = 0; di < pmf.size(); ++di) {
            const int d = static_cast<int>(di);
            G[static_cast<std::size_t>(y)] += pmf[di] * (params.h * std::max(y - d, 0) + params.p * std::max(d - y, 0));
        }
    return G;
}

}  // namespace

ValueIterationResult value_iteration(const ItemParams& params, const DemandModel& demand,
                                     const ValueIterationOptions& options) {
    params.validate();
    if (!(options.tol > 0.0)) throw ConfigError("tolerance must be positive");
    if (params.a_max > 255) throw SizeError("policy actions are stored in one byte; a_max must be <= 255");
    if (options.threads < 1) throw ConfigError("threads must be >= 1");
    const StateIndexer idx(params, options.max_states);
    const std::size_t n = idx.size(), tail = idx.tail();
    const int radix = params.a_max + 1;
    const int P = params.pipeline_length();
    const std::size_t lead_div = P >= 1 ? tail / static_cast<std::size_t>(radix) : 1;
    const auto& pmf = demand.pmf();
    const auto G = expected_period_cost(params, pmf);

    ValueIterationResult res;
    res.values.assign(n, 0.0);
    res.policy.assign(n, 0);
    std::vector<double> next(n, 0.0);

    const std::size_t chunks = std::min<std::size_t>(n, static_cast<std::size_t>(options.threads) * 8);
    auto sweep_range = [&](std::size_t begin, std::size_t end) {
        std::vector<std::pair<int, double>> arrivals;  // (y' before the arriving order, weight)
        for (std::size_t i = begin; i < end; ++i) {
            const int y = static_cast<int>(i / tail);
            const std::size_t t = i % tail;
            const int x0 = P >= 1 ? static_cast<int>(t / lead_div) : 0;
            const std::size_t rest = P >= 1 ? t % lead_div : 0;
            arrivals.clear();
            for (std::size_t di = 0; di < pmf.size(); ++di) {
                if (pmf[di] == 0.0) continue;
                const int left = std::max(y - static_cast<int>(di), 0) + x0;
                if (!arrivals.empty() && arrivals.back().first == left)
                    arrivals.back().second += pmf[di];
                else
                    arrivals.emplace_back(left, pmf[di]);
            }
            double best = std::numeric_limits<double>::infinity();
            int best_a = 0;
            for (int a = 0; a <= params.a_max; ++a) {
                double future = 0.0;
                if (P >= 1) {
                    const std::size_t t2 = rest * static_cast<std::size_t>(radix) + static_cast<std::size_t>(a);
                    for (const auto& [left, w] : arrivals)
                        future += w * res.values[static_cast<std::size_t>(std::min(params.y_max, left)) * tail + t2];
                } else {
                    for (const auto& [left, w] : arrivals)
                        future += w * res.values[static_cast<std::size_t>(std::min(params.y_max, left + a))];
                }
                const double q = params.c * a + G[static_cast<std::size_t>(y)] + params.gamma * future;
                if (q < best) {
                    best = q;
                    best_a = a;
                }
            }
            next[i] = best;
            res.policy[i] = static_cast<std::uint8_t>(best_a);
        }
    };

    for (int sweep = 0; sweep < options.max_sweeps; ++sweep) {
        parallel_for(chunks, options.threads, [&](std::size_t c) {
            sweep_range(c * n / chunks, (c + 1) * n / chunks);
        });
        double lo = std::numeric_limits<double>::infinity(), hi = -lo, sup = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double diff = next[i] - res.values[i];
            lo = std::min(lo, diff);
            hi = std::max(hi, diff);
            sup = std::max(sup, std::abs(diff));
        }
        res.values.swap(next);
        res.deltas.push_back(sup);
        res.sweeps = sweep + 1;
        const double measure = options.stop == StopRule::sup_norm ? sup : hi - lo;
        if (measure <= options.tol) {
            res.converged = true;
            break;
        }
    }
    return res;
}

PolicyTable::PolicyTable(const ItemParams& params, std::vector<std::uint8_t> acts)
    : y_max(params.y_max), a_max(params.a_max), lead_time(params.lead_time), actions(std::move(acts)) {
    if (actions.size() != StateIndexer(params).size()) throw ConfigError("policy table size does not match the state space");
}

int PolicyTable::operator()(const State& s) const {
    std::size_t idx = static_cast<std::size_t>(s.y);
    for (int x : s.pipeline) idx = idx * static_cast<std::size_t>(a_max + 1) + static_cast<std::size_t>(x);
    return actions.at(idx);
}

double average_cost(const ItemParams& params, const DemandModel& demand, const PolicyTable& policy) {
    const StateIndexer idx(params);
    if (policy.actions.size() != idx.size()) throw ConfigError("policy table size does not match the state space");
    const auto& pmf = demand.pmf();
    const auto G = expected_period_cost(params, pmf);
    MarkovChain chain;
    chain.rows.resize(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const State s = idx.state(i);
        const int a = policy.actions[i];
        for (std::size_t d = 0; d < pmf.size(); ++d) {
            if (pmf[d] == 0.0) continue;
            const std::size_t j = idx.index(transition(params, s, a, static_cast<int>(d)).s_next);
            auto& row = chain.rows[i];
            auto it = std::find_if(row.begin(), row.end(), [j](const auto& e) { return e.first == j; });
            if (it == row.end())
                row.emplace_back(j, pmf[d]);
            else
                it->second += pmf[d];
        }
    }
    const auto pi = stationary_distribution(chain);
    double cost = 0.0;
    for (std::size_t i = 0; i < idx.size(); ++i)
        cost += pi[i] * (params.c * policy.actions[i] + G[static_cast<std::size_t>(i / idx.tail())]);
    return cost;
}

EvalResult evaluate_policy(const PolicyTable& policy, const ItemParams& params, const EvalProtocol& eval) {
    if (policy.y_max != params.y_max || policy.a_max != params.a_max || policy.lead_time != params.lead_time)
        throw ConfigError("policy table was built for different dimensions");
    return evaluate_rollouts(params, [&](const State& s) { return policy(s); }, eval);
}

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
    const char bytes[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                           static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
    out.write(bytes, 4);
}

std::uint32_t get_u32(std::istream& in, const std::string& path) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) throw IoError(path + ": truncated header");
    return static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
           static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
}

}  // namespace

void write_policy(const std::string& path, const PolicyTable& policy) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path + ": cannot open for writing");
    put_u32(out, static_cast<std::uint32_t>(policy.y_max));
    put_u32(out, static_cast<std::uint32_t>(policy.a_max));
    put_u32(out, static_cast<std::uint32_t>(policy.lead_time));
    out.write(reinterpret_cast<const char*>(policy.actions.data()), static_cast<std::streamsize>(policy.actions.size()));
    if (!out) throw IoError(path + ": write failed");
}

PolicyTable read_policy(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path + ": cannot open for reading");
    ItemParams params;
    params.y_max = static_cast<int>(get_u32(in, path));
    params.a_max = static_cast<int>(get_u32(in, path));
    params.lead_time = static_cast<int>(get_u32(in, path));
    if (params.y_max < 1 || params.a_max < 1 || params.a_max > 255 || params.lead_time < 1 || params.lead_time > 16)
        throw IoError(path + ": invalid header");
    std::size_t n = static_cast<std::size_t>(params.y_max) + 1;
    for (int i = 1; i < params.lead_time; ++i) n *= static_cast<std::size_t>(params.a_max) + 1;
    std::vector<std::uint8_t> acts(n);
    if (!in.read(reinterpret_cast<char*>(acts.data()), static_cast<std::streamsize>(n)))
        throw IoError(path + ": truncated action table");
    if (in.peek() != std::char_traits<char>::eof()) throw IoError(path + ": trailing bytes after action table");
    for (auto a : acts)
        if (a > params.a_max) throw IoError(path + ": action exceeds a_max");
    PolicyTable t;
    t.y_max = params.y_max;
    t.a_max = params.a_max;
    t.lead_time = params.lead_time;
    t.actions = std::move(acts);
    return t;
}

}  // namespace lsic
