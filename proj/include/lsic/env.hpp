#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lsic/rng.hpp"

namespace lsic {

// Environment constants for one stocked item. Defaults are the single-item
// benchmark: L=4, p=4, y_max=100, a_max=20, c=0, h=1, Poisson mean 5 capped at 20.
struct ItemParams {
    double c = 0.0;        // procurement cost per unit ordered
    double h = 1.0;        // holding cost per unit left over
    double p = 4.0;        // penalty per unit of lost sales
    int lead_time = 4;     // L >= 1; the state carries L-1 outstanding orders
    int a_max = 20;
    int y_max = 100;
    int d_max = 20;
    double d_mean = 5.0;
    double gamma = 0.995;
    // Optional explicit demand law over 0..d_max; replaces the capped Poisson.
    std::optional<std::vector<double>> demand_pmf;

    int pipeline_length() const { return lead_time - 1; }

    // Throws ConfigError. Returns human-readable warnings (d_max == y_max).
    std::vector<std::string> validate() const;

    // Largest possible one-period cost; rewards lie in [-max_cost(), 0].
    double max_cost() const;
};

// Demand distribution on 0..d_max with a precomputed pmf and inverse-cdf sampling.
class DemandModel {
public:
    // Poisson(mean) with the upper tail P(D >= d_max) lumped onto d_max.
    static DemandModel poisson_clamped(double mean, int d_max);
    static DemandModel from_pmf(std::vector<double> pmf);
    static DemandModel point_mass(int d);
    static DemandModel for_item(const ItemParams& params);

    int d_max() const { return static_cast<int>(pmf_.size()) - 1; }
    const std::vector<double>& pmf() const { return pmf_; }
    double mean() const;
    int sample(Rng& rng) const;

private:
    explicit DemandModel(std::vector<double> pmf);

    std::vector<double> pmf_;
    std::vector<double> cdf_;
};

// (y, a_{t+1-L}, ..., a_{t-1}): on-hand inventory after receipt plus the
// outstanding orders, oldest first.
struct State {
    int y = 0;
    std::vector<int> pipeline;

    int position() const;  // y + sum of pipeline
    friend bool operator==(const State&, const State&) = default;
};

struct Experience {
    State s;
    int a = 0;
    double r = 0.0;
    State s_next;
    int d_obs = 0;
    bool censored = false;
};

// Synthetic transition built from a real one; `source_id` names the real
// experience that generated it.
struct SideExperience : Experience {
    std::uint64_t source_id = 0;
};

// Outcome of one period for a single item.
struct Transition {
    State s_next;
    double r = 0.0;
    int d_obs = 0;
    bool censored = false;
};

// c*a + h*[y-d]^+ + p*[d-y]^+
double period_cost(const ItemParams& params, int y, int a, int d);

// Pure lost-sales dynamics for a given demand realization. Received stock
// above y_max is discarded.
Transition transition(const ItemParams& params, const State& s, int a, int d);

void check_action(const ItemParams& params, int a);
void check_state(const ItemParams& params, const State& s);

State initial_state(const ItemParams& params);

// Seed of the demand stream feeding item `index` of an environment.
std::uint64_t item_demand_seed(std::uint64_t seed, std::size_t index);

class SingleItemEnv {
public:
    explicit SingleItemEnv(ItemParams params);
    SingleItemEnv(ItemParams params, DemandModel demand);

    const State& reset(std::uint64_t seed);
    Transition step(int a);
    Transition step_forced(int a, int d);  // demand supplied by the caller

    const State& state() const { return state_; }
    void set_state(State s);
    const ItemParams& params() const { return params_; }
    const DemandModel& demand() const { return demand_; }

    Experience last_experience() const { return last_; }

private:
    ItemParams params_;
    DemandModel demand_;
    State state_;
    Rng rng_;
    Experience last_;
};

struct MultiItemResult {
    std::vector<Transition> items;
    double r = 0.0;  // sum of item rewards
};

// Independent items sharing one store; each item has its own demand stream.
class MultiItemEnv {
public:
    explicit MultiItemEnv(std::vector<ItemParams> items);

    const std::vector<State>& reset(std::uint64_t seed);
    MultiItemResult step(std::span<const int> actions);
    MultiItemResult step_forced(std::span<const int> actions, std::span<const int> demands);

    const std::vector<State>& states() const { return states_; }
    void set_states(std::vector<State> states);
    std::size_t size() const { return params_.size(); }
    const std::vector<ItemParams>& params() const { return params_; }

private:
    void check(std::span<const int> actions) const;

    std::vector<ItemParams> params_;
    std::vector<DemandModel> demand_;
    std::vector<State> states_;
    std::vector<Rng> rngs_;
};

// Multi-item benchmark presets: 2, 3 or 5 items, other fields from `base`.
std::vector<ItemParams> multi_item_preset(int n_items, const ItemParams& base = {});

struct MultiEchelonConfig {
    ItemParams warehouse;
    std::vector<ItemParams> retailers;
    std::string allocation_rule = "proportional-largest-remainder";
    int warehouse_initial_y = 0;
};

// One warehouse supplying 1, 2 or 4 retailers, other fields from `base`.
MultiEchelonConfig multi_echelon_preset(int n_retailers, const ItemParams& base = {});

// Splits `supply` across `orders` proportionally, rounding by largest
// remainder with ties broken toward the lower index. Never exceeds an order.
std::vector<int> allocate_largest_remainder(std::span<const int> orders, int supply);

struct EchelonResult {
    Transition warehouse;             // d_obs is the filled retailer demand
    int warehouse_demand = 0;         // sum of retailer orders this period
    std::vector<int> allocation;      // units shipped to each retailer
    std::vector<Transition> retailers;
    double r = 0.0;                   // sum of all node rewards
};

class MultiEchelonEnv {
public:
    explicit MultiEchelonEnv(MultiEchelonConfig config);

    void reset(std::uint64_t seed);
    EchelonResult step(int warehouse_order, std::span<const int> retailer_orders);
    EchelonResult step_forced(int warehouse_order, std::span<const int> retailer_orders,
                              std::span<const int> customer_demands);

    const State& warehouse_state() const { return warehouse_; }
    const std::vector<State>& retailer_states() const { return retailers_; }
    const MultiEchelonConfig& config() const { return config_; }

private:
    MultiEchelonConfig config_;
    std::vector<DemandModel> demand_;
    State warehouse_;
    std::vector<State> retailers_;
    std::vector<Rng> rngs_;
};

}  // namespace lsic
