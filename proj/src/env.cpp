#include "lsic/env.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "lsic/error.hpp"

namespace lsic {

namespace {

std::string item_field_error(const char* field, const std::string& rule) {
    std::ostringstream os;
    os << "invalid item parameter " << field << ": " << rule;
    return os.str();
}

}  // namespace

std::vector<std::string> ItemParams::validate() const {
    auto finite = [](double x) { return std::isfinite(x); };
    if (!finite(c) || c < 0) throw ConfigError(item_field_error("c", "must be >= 0"));
    if (!finite(h) || h < 0) throw ConfigError(item_field_error("h", "must be >= 0"));
    if (!finite(p) || p < 0) throw ConfigError(item_field_error("p", "must be >= 0"));
    if (lead_time < 1) throw ConfigError(item_field_error("L", "must be >= 1"));
    if (a_max <= 0) throw ConfigError(item_field_error("a_max", "must be > 0"));
    if (d_max <= 0) throw ConfigError(item_field_error("d_max", "must be > 0"));
    if (d_max > y_max) throw ConfigError(item_field_error("d_max", "must be <= y_max"));
    if (!finite(d_mean) || d_mean < 0) throw ConfigError(item_field_error("d_mean", "must be >= 0"));
    if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError(item_field_error("gamma", "must lie in (0, 1]"));
    if (demand_pmf) {
        if (static_cast<int>(demand_pmf->size()) != d_max + 1)
            throw ConfigError(item_field_error("demand_pmf", "length must equal d_max + 1"));
        DemandModel::from_pmf(*demand_pmf);
    }
    std::vector<std::string> warnings;
    if (d_max == y_max) warnings.emplace_back("d_max equals y_max; the analysis assumes d_max < y_max");
    return warnings;
}

double ItemParams::max_cost() const { return c * a_max + h * y_max + p * d_max; }

DemandModel::DemandModel(std::vector<double> pmf) : pmf_(std::move(pmf)) {
    cdf_.resize(pmf_.size());
    std::partial_sum(pmf_.begin(), pmf_.end(), cdf_.begin());
}

DemandModel DemandModel::poisson_clamped(double mean, int d_max) {
    if (d_max < 0) throw ConfigError("demand d_max must be >= 0");
    if (!(mean >= 0.0) || !std::isfinite(mean)) throw ConfigError("demand mean must be >= 0");
    std::vector<double> pmf(static_cast<std::size_t>(d_max) + 1, 0.0);
    if (mean == 0.0) {
        pmf[0] = 1.0;
        return DemandModel(std::move(pmf));
    }
    // Log-space terms avoid under/overflow for large means.
    double head = 0.0;
    for (int k = 0; k < d_max; ++k) {
        pmf[k] = std::exp(k * std::log(mean) - mean - std::lgamma(k + 1.0));
        head += pmf[k];
    }
    pmf[d_max] = std::max(0.0, 1.0 - head);
    return DemandModel(std::move(pmf));
}

DemandModel DemandModel::from_pmf(std::vector<double> pmf) {
    if (pmf.empty()) throw ConfigError("demand pmf must be non-empty");
    double total = 0.0;
    for (double v : pmf) {
        if (!std::isfinite(v) || v < 0.0) throw ConfigError("demand pmf entries must be finite and >= 0");
        total += v;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ConfigError("demand pmf must sum to 1");
    return DemandModel(std::move(pmf));
}

DemandModel DemandModel::point_mass(int d) {
    if (d < 0) throw ConfigError("point-mass demand must be >= 0");
    std::vector<double> pmf(static_cast<std::size_t>(d) + 1, 0.0);
    pmf[d] = 1.0;
    return DemandModel(std::move(pmf));
}

DemandModel DemandModel::for_item(const ItemParams& params) {
    if (params.demand_pmf) return from_pmf(*params.demand_pmf);
    return poisson_clamped(params.d_mean, params.d_max);
}

double DemandModel::mean() const {
    double m = 0.0;
    for (std::size_t k = 0; k < pmf_.size(); ++k) m += static_cast<double>(k) * pmf_[k];
    return m;
}

int DemandModel::sample(Rng& rng) const {
    const double u = rng.uniform() * cdf_.back();
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    const auto k = std::distance(cdf_.begin(), it);
    return static_cast<int>(std::min<std::ptrdiff_t>(k, static_cast<std::ptrdiff_t>(pmf_.size()) - 1));
}

int State::position() const { return y + std::accumulate(pipeline.begin(), pipeline.end(), 0); }

double period_cost(const ItemParams& params, int y, int a, int d) {
    return params.c * a + params.h * std::max(y - d, 0) + params.p * std::max(d - y, 0);
}

Transition transition(const ItemParams& params, const State& s, int a, int d) {
    Transition out;
    out.d_obs = std::min(d, s.y);
    out.censored = out.d_obs == s.y;
    out.r = -period_cost(params, s.y, a, d);
    const int left = std::max(s.y - d, 0);
    if (s.pipeline.empty()) {
        out.s_next.y = std::min(left + a, params.y_max);
    } else {
        out.s_next.y = std::min(left + s.pipeline.front(), params.y_max);
        out.s_next.pipeline.reserve(s.pipeline.size());
        out.s_next.pipeline.assign(s.pipeline.begin() + 1, s.pipeline.end());
        out.s_next.pipeline.push_back(a);
    }
    return out;
}

void check_action(const ItemParams& params, int a) {
    if (a < 0 || a > params.a_max) {
        std::ostringstream os;
        os << "order " << a << " outside [0, " << params.a_max << "]";
        throw ActionError(os.str());
    }
}

void check_state(const ItemParams& params, const State& s) {
    if (s.y < 0 || s.y > params.y_max) throw ActionError("inventory outside [0, y_max]");
    if (static_cast<int>(s.pipeline.size()) != params.pipeline_length())
        throw ActionError("pipeline length must equal L-1");
    for (int x : s.pipeline)
        if (x < 0 || x > params.a_max) throw ActionError("pipeline entry outside [0, a_max]");
}

State initial_state(const ItemParams& params) {
    State s;
    s.pipeline.assign(static_cast<std::size_t>(params.pipeline_length()), 0);
    return s;
}

std::uint64_t item_demand_seed(std::uint64_t seed, std::size_t index) {
    const auto base = static_cast<std::uint64_t>(Stream::demand);
    return derive_seed(seed, index == 0 ? base : base + 1000 * index);
}

SingleItemEnv::SingleItemEnv(ItemParams params)
    : SingleItemEnv(params, DemandModel::for_item(params)) {}

SingleItemEnv::SingleItemEnv(ItemParams params, DemandModel demand)
    : params_(std::move(params)), demand_(std::move(demand)) {
    params_.validate();
    state_ = initial_state(params_);
}

const State& SingleItemEnv::reset(std::uint64_t seed) {
    rng_ = Rng(item_demand_seed(seed, 0));
    state_ = initial_state(params_);
    return state_;
}

Transition SingleItemEnv::step(int a) {
    check_action(params_, a);
    return step_forced(a, demand_.sample(rng_));
}

Transition SingleItemEnv::step_forced(int a, int d) {
    check_action(params_, a);
    Transition t = transition(params_, state_, a, d);
    last_.s = state_;
    last_.a = a;
    last_.r = t.r;
    last_.s_next = t.s_next;
    last_.d_obs = t.d_obs;
    last_.censored = t.censored;
    state_ = t.s_next;
    return t;
}

void SingleItemEnv::set_state(State s) {
    check_state(params_, s);
    state_ = std::move(s);
}

MultiItemEnv::MultiItemEnv(std::vector<ItemParams> items) : params_(std::move(items)) {
    if (params_.empty()) throw ConfigError("multi-item environment needs at least one item");
    for (const auto& p : params_) {
        p.validate();
        demand_.push_back(DemandModel::for_item(p));
        states_.push_back(initial_state(p));
    }
    rngs_.resize(params_.size());
}

const std::vector<State>& MultiItemEnv::reset(std::uint64_t seed) {
    for (std::size_t i = 0; i < params_.size(); ++i) {
        rngs_[i] = Rng(item_demand_seed(seed, i));
        states_[i] = initial_state(params_[i]);
    }
    return states_;
}

void MultiItemEnv::set_states(std::vector<State> states) {
    if (states.size() != params_.size()) throw ActionError("one state per item is required");
    for (std::size_t i = 0; i < params_.size(); ++i) check_state(params_[i], states[i]);
    states_ = std::move(states);
}

void MultiItemEnv::check(std::span<const int> actions) const {
    if (actions.size() != params_.size()) throw ActionError("one action per item is required");
    for (std::size_t i = 0; i < params_.size(); ++i) check_action(params_[i], actions[i]);
}

MultiItemResult MultiItemEnv::step(std::span<const int> actions) {
    check(actions);
    std::vector<int> demands(params_.size());
    for (std::size_t i = 0; i < params_.size(); ++i) demands[i] = demand_[i].sample(rngs_[i]);
    return step_forced(actions, demands);
}

MultiItemResult MultiItemEnv::step_forced(std::span<const int> actions, std::span<const int> demands) {
    check(actions);
    if (demands.size() != params_.size()) throw ActionError("one demand per item is required");
    MultiItemResult out;
    out.items.reserve(params_.size());
    for (std::size_t i = 0; i < params_.size(); ++i) {
        out.items.push_back(transition(params_[i], states_[i], actions[i], demands[i]));
        out.r += out.items.back().r;
        states_[i] = out.items.back().s_next;
    }
    return out;
}

std::vector<ItemParams> multi_item_preset(int n_items, const ItemParams& base) {
    std::vector<double> penalties;
    std::vector<int> leads;
    switch (n_items) {
        case 2: penalties = {4, 9}; leads = {4, 3}; break;
        case 3: penalties = {4, 9, 19}; leads = {4, 3, 2}; break;
        case 5: penalties = {4, 9, 4, 9, 19}; leads = {4, 4, 3, 3, 2}; break;
        default: throw ConfigError("multi-item presets exist for 2, 3 and 5 items");
    }
    std::vector<ItemParams> items(penalties.size(), base);
    for (std::size_t i = 0; i < items.size(); ++i) {
        items[i].p = penalties[i];
        items[i].lead_time = leads[i];
    }
    return items;
}

MultiEchelonConfig multi_echelon_preset(int n_retailers, const ItemParams& base) {
    std::vector<double> penalties;
    std::vector<int> leads;
    switch (n_retailers) {
        case 1: penalties = {4}; leads = {4}; break;
        case 2: penalties = {4, 9}; leads = {4, 4}; break;
        case 4: penalties = {4, 9, 4, 9}; leads = {4, 4, 3, 3}; break;
        default: throw ConfigError("multi-echelon presets exist for 1, 2 and 4 retailers");
    }
    MultiEchelonConfig cfg;
    cfg.warehouse = base;
    cfg.warehouse.p = 4;
    cfg.warehouse.lead_time = 4;
    cfg.retailers.assign(penalties.size(), base);
    for (std::size_t i = 0; i < penalties.size(); ++i) {
        cfg.retailers[i].p = penalties[i];
        cfg.retailers[i].lead_time = leads[i];
    }
    return cfg;
}

std::vector<int> allocate_largest_remainder(std::span<const int> orders, int supply) {
    std::vector<int> out(orders.begin(), orders.end());
    long long total = 0;
    for (int o : orders) {
        if (o < 0) throw ActionError("orders must be >= 0");
        total += o;
    }
    if (supply < 0) throw ActionError("supply must be >= 0");
    if (total <= supply) return out;

    std::vector<long long> remainder(orders.size());
    long long given = 0;
    for (std::size_t i = 0; i < orders.size(); ++i) {
        const long long num = static_cast<long long>(supply) * orders[i];
        out[i] = static_cast<int>(num / total);
        remainder[i] = num % total;
        given += out[i];
    }
    std::vector<std::size_t> order(orders.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    for (std::size_t k = 0; given < supply; ++k, ++given) ++out[order[k]];
    return out;
}

MultiEchelonEnv::MultiEchelonEnv(MultiEchelonConfig config) : config_(std::move(config)) {
    if (config_.retailers.empty()) throw ConfigError("multi-echelon environment needs a retailer");
    if (config_.allocation_rule != "proportional-largest-remainder")
        throw ConfigError("unknown allocation rule: " + config_.allocation_rule);
    config_.warehouse.validate();
    if (config_.warehouse_initial_y < 0 || config_.warehouse_initial_y > config_.warehouse.y_max)
        throw ConfigError("warehouse initial inventory outside [0, y_max]");
    for (const auto& r : config_.retailers) {
        r.validate();
        demand_.push_back(DemandModel::for_item(r));
    }
    rngs_.resize(config_.retailers.size());
    reset(0);
}

void MultiEchelonEnv::reset(std::uint64_t seed) {
    warehouse_ = initial_state(config_.warehouse);
    warehouse_.y = config_.warehouse_initial_y;
    retailers_.clear();
    for (std::size_t i = 0; i < config_.retailers.size(); ++i) {
        retailers_.push_back(initial_state(config_.retailers[i]));
        rngs_[i] = Rng(item_demand_seed(seed, i));
    }
}

EchelonResult MultiEchelonEnv::step(int warehouse_order, std::span<const int> retailer_orders) {
    if (retailer_orders.size() != retailers_.size()) throw ActionError("one order per retailer is required");
    std::vector<int> demands(retailers_.size());
    for (std::size_t i = 0; i < retailers_.size(); ++i) demands[i] = demand_[i].sample(rngs_[i]);
    return step_forced(warehouse_order, retailer_orders, demands);
}

EchelonResult MultiEchelonEnv::step_forced(int warehouse_order, std::span<const int> retailer_orders,
                                           std::span<const int> customer_demands) {
    const std::size_t n = retailers_.size();
    if (retailer_orders.size() != n) throw ActionError("one order per retailer is required");
    if (customer_demands.size() != n) throw ActionError("one customer demand per retailer is required");
    check_action(config_.warehouse, warehouse_order);
    for (std::size_t i = 0; i < n; ++i) check_action(config_.retailers[i], retailer_orders[i]);

    EchelonResult out;
    out.warehouse_demand = std::accumulate(retailer_orders.begin(), retailer_orders.end(), 0);
    out.allocation = allocate_largest_remainder(retailer_orders, warehouse_.y);
    out.warehouse = transition(config_.warehouse, warehouse_, warehouse_order, out.warehouse_demand);
    out.r = out.warehouse.r;
    warehouse_ = out.warehouse.s_next;

    out.retailers.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.retailers.push_back(
            transition(config_.retailers[i], retailers_[i], out.allocation[i], customer_demands[i]));
        out.r += out.retailers.back().r;
        retailers_[i] = out.retailers.back().s_next;
    }
    return out;
}

}  // namespace lsic
