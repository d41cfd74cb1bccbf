#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "lsic/agents.hpp"
#include "lsic/env.hpp"
#include "lsic/state_index.hpp"

namespace lsic {

// Row-stochastic chain with sparse rows.
struct MarkovChain {
    std::vector<std::vector<std::pair<std::size_t, double>>> rows;

    std::size_t size() const { return rows.size(); }
};

// Closed communicating classes, each sorted, ordered by smallest member.
std::vector<std::vector<std::size_t>> closed_classes(const MarkovChain& chain);

struct StationaryOptions {
    double tol = 1e-12;  // L1 residual |pi P - pi|
    long max_iterations = 10'000'000;
};

// Power iteration on the lazy chain (P + I)/2 started uniformly on the unique
// closed class, so periodic chains are handled and transient states get 0.
// Throws ChainError when there is more than one closed class.
std::vector<double> stationary_distribution(const MarkovChain& chain, const StationaryOptions& options = {});

// Small inventory MDP with an explicit stochastic behavior policy.
struct TinyMDP {
    ItemParams params;
    std::vector<double> pmf;     // demand law over 0..d_max
    std::vector<double> policy;  // policy[state * actions + a] = pi(a | state)

    // y_max=5, a_max=2, L=1, demand Poisson(1) lumped at d_max=2, uniform policy.
    static TinyMDP make_default();
    static TinyMDP uniform(const ItemParams& params, const DemandModel& demand);

    // Greedy on `table` with probability 1-epsilon, uniform otherwise.
    void set_epsilon_greedy(const QTable& table, double epsilon);

    std::size_t states() const;
    std::size_t actions() const { return static_cast<std::size_t>(params.a_max) + 1; }
    std::size_t pairs() const { return states() * actions(); }
    StateIndexer indexer() const { return StateIndexer(params); }

    // Chain over (s, a) pairs: (s,a) -> (s',a') with prob sum_d pmf(d) 1[s'=f(s,a,d)] pi(a'|s').
    MarkovChain pair_chain() const;
    void validate() const;
};

// Which side pairs count as updated after a visit.
// visit_rule: an uncensored-by-rule visit (y_hat >= d) covers every pair,
//   otherwise pairs with y <= y_hat.
// generated: the generated graph with every pipeline digit enumerated;
//   d < y_hat covers every pair, otherwise pairs with y <= y_hat.
enum class FgSemantics { visit_rule, generated };

std::vector<double> update_probability_fg(const TinyMDP& mdp, const std::vector<double>& mu,
                                          FgSemantics semantics = FgSemantics::visit_rule);

struct UpdateFrequencies {
    long steps = 0;
    std::vector<double> visits;
    std::vector<double> updates_visit_rule;
    std::vector<double> updates_generated;  // counted from generated side experiences
};

// Simulates the behavior chain and counts, per pair, the fraction of steps
// at which it is visited or updated.
UpdateFrequencies simulate_update_frequencies(const TinyMDP& mdp, long steps, std::uint64_t seed, long burn_in = 1000);

struct UpdateProbabilityReport {
    std::vector<double> mu;
    std::vector<double> mu_tilde;        // visit_rule
    std::vector<double> mu_tilde_generated;   // generated
    double mu_min = 0.0;
    double mu_tilde_min = 0.0;
    double improvement_factor = 0.0;     // mu_tilde_min / mu_min, +inf when mu_min = 0
    std::size_t violations = 0;          // pairs with mu_tilde < mu (either semantics)
    double semantics_gap = 0.0;          // max |mu_tilde - mu_tilde_generated|
    UpdateFrequencies mc;
    double mc_visit_error = 0.0;         // max |mu - visits|
    double mc_error = 0.0;               // max |mu_tilde - updates_visit_rule|
    double mc_error_generated = 0.0;          // max |mu_tilde_generated - updates_generated|
};

UpdateProbabilityReport verify_update_probability(const TinyMDP& mdp, long mc_steps, std::uint64_t seed);

struct DegenerateDemandReport {
    int d = 0;
    double ratio = 0.0;            // mu_tilde_min / mu_min over all pairs
    double ratio_recurrent = 0.0;  // same, restricted to pairs with mu > 0
    double bound = 0.0;            // (y_max - d) (a_max + 1)^L
    bool holds = false;            // ratio >= bound
};

// Requires a point-mass demand at d < y_max.
DegenerateDemandReport verify_degenerate_factor(const TinyMDP& mdp);

struct GraphNumbers {
    std::uint64_t omega = 0;  // mas-number
    std::uint64_t alpha = 0;  // independence number
    std::uint64_t zeta = 0;   // domination number

    friend bool operator==(const GraphNumbers&, const GraphNumbers&) = default;
};

// Closed forms as printed: uncensored (1,1,1); censored
// alpha = zeta = (y_max - y_t) a_max^L + 1[y_t != 0], omega = (y_max - y_t) a_max^L + y_t.
GraphNumbers graph_numbers(int y_t, bool censored, const ItemParams& params);

// Same counts on the zero-based node set, base a_max + 1:
// alpha = zeta = (y_max - y_t)(a_max+1)^L + 1, omega = (y_max - y_t)(a_max+1)^L + y_t + 1.
GraphNumbers graph_numbers_zero_based(int y_t, bool censored, const ItemParams& params);

// one_based: y in 1..y_max and every action/pipeline digit in 1..a_max.
// zero_based: y in 0..y_max and digits in 0..a_max.
enum class NodeIndexing { one_based, zero_based };

struct Digraph {
    std::size_t n = 0;
    std::vector<std::vector<bool>> adj;  // adj[u][v]: u -> v
    std::vector<int> inventory;          // y of each node
};

// Nodes are (y, L digits). Censored at y_t: nodes with y <= y_t form G1 with
// u -> v iff y(v) <= y(u); the rest are isolated. Uncensored: complete.
Digraph build_feedback_graph(int y_t, bool censored, const ItemParams& params, NodeIndexing indexing);

// Exhaustive search; throws SizeError above 24 nodes.
GraphNumbers graph_numbers_bruteforce(const Digraph& g);

enum class StopRule { sup_norm, span };

struct ValueIterationOptions {
    double tol = 1e-8;
    StopRule stop = StopRule::sup_norm;
    int max_sweeps = 1'000'000;
    int threads = 1;
    std::size_t max_states = 50'000'000;
};

struct ValueIterationResult {
    std::vector<double> values;           // discounted expected cost
    std::vector<std::uint8_t> policy;     // greedy action per state index
    std::vector<double> deltas;           // sup-norm change of each sweep
    int sweeps = 0;
    bool converged = false;
};

// Synchronous sweeps of V(s) = min_a sum_d pmf(d) [cost(s,a,d) + gamma V(s')].
// Stops when the sup-norm (or span) of the change is at most tol.
ValueIterationResult value_iteration(const ItemParams& params, const DemandModel& demand,
                                     const ValueIterationOptions& options = {});

// Deterministic stationary policy over the mixed-radix state index.
struct PolicyTable {
    int y_max = 0;
    int a_max = 0;
    int lead_time = 1;
    std::vector<std::uint8_t> actions;

    PolicyTable() = default;
    PolicyTable(const ItemParams& params, std::vector<std::uint8_t> actions);
    int operator()(const State& s) const;
};

// Long-run average cost per period of a stationary policy, from the exact
// stationary law of its state chain.
double average_cost(const ItemParams& params, const DemandModel& demand, const PolicyTable& policy);

EvalResult evaluate_policy(const PolicyTable& policy, const ItemParams& params, const EvalProtocol& eval);

// Little-endian uint32 {y_max, a_max, L}, then one action byte per state.
void write_policy(const std::string& path, const PolicyTable& policy);
PolicyTable read_policy(const std::string& path);

}  // namespace lsic
