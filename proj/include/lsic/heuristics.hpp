#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lsic/agents.hpp"
#include "lsic/env.hpp"

namespace lsic {

enum class HeuristicKind { constant, bracket, base_stock, capped_base_stock, myopic1, myopic2 };

HeuristicKind parse_heuristic(const std::string& name);
std::string to_string(HeuristicKind kind);

struct HeuristicParams {
    double r = 0.0;      // order rate; integral except for bracket
    int S = 0;           // base-stock level on the inventory position
    double theta = 0.0;  // bracket phase in [0, 1)
    std::optional<double> service_ratio;  // myopic; default (c+h)/(p+h)

    void validate(const ItemParams& params) const;
    friend bool operator==(const HeuristicParams&, const HeuristicParams&) = default;
};

int constant_order(const HeuristicParams& hp, const ItemParams& params);

// floor((t+1) r + theta) - floor(t r + theta), clamped to [0, a_max].
int bracket(long t, const HeuristicParams& hp, const ItemParams& params);

int base_stock(const State& s, const HeuristicParams& hp, const ItemParams& params);
int capped_base_stock(const State& s, const HeuristicParams& hp, const ItemParams& params);

// Myopic ordering with the demand law propagated exactly through the lead
// time. Decisions are memoized per state.
class MyopicPolicy {
public:
    MyopicPolicy(const ItemParams& params, int horizon, std::optional<double> service_ratio = std::nullopt);
    MyopicPolicy(const ItemParams& params, const DemandModel& demand, int horizon,
                 std::optional<double> service_ratio = std::nullopt);

    int operator()(const State& s);

    // Distribution of on-hand inventory when an order placed now arrives.
    std::vector<double> arrival_inventory(const State& s, int a) const;
    // P(demand exceeds stock) in the arrival period.
    double stockout_probability(const State& s, int a) const;

    double service_ratio() const { return ratio_; }

private:
    int decide(const State& s) const;

    ItemParams params_;
    std::vector<double> pmf_;
    std::vector<double> tail_;  // tail_[y] = P(D > y)
    std::vector<double> G_;     // G_[y] = E[h (y-D)^+ + p (D-y)^+]
    int horizon_;
    double ratio_;
    std::map<std::pair<int, std::vector<int>>, int> memo_;
};

// Stateful policy object for any heuristic kind, callable as policy(s, t).
class HeuristicPolicy {
public:
    HeuristicPolicy(HeuristicKind kind, const HeuristicParams& hp, const ItemParams& params);
    int operator()(const State& s, int t);

private:
    HeuristicKind kind_;
    HeuristicParams hp_;
    ItemParams params_;
    std::optional<MyopicPolicy> myopic_;
};

struct GridPoint {
    HeuristicParams params;
    double mean_cost = 0.0;
    double std_cost = 0.0;
};

struct GridSearchResult {
    GridPoint best;
    std::vector<GridPoint> points;  // in grid order
};

// Candidate grids: integer r and S; bracket r and theta step 0.05.
// `s_max` defaults to y_max + (L-1) a_max.
std::vector<HeuristicParams> default_grid(HeuristicKind kind, const ItemParams& params,
                                          std::optional<int> s_max = std::nullopt);

// Every point is scored on the same evaluation streams. Ties go to the
// lexicographically smaller (r, S, theta).
GridSearchResult grid_search(HeuristicKind kind, const ItemParams& params, const std::vector<HeuristicParams>& grid,
                             const EvalProtocol& eval, int workers = 1);

}  // namespace lsic
