#include "lsic/heuristics.hpp"

#include <cmath>
#include <tuple>

#include "lsic/error.hpp"
#include "lsic/parallel.hpp"

namespace lsic {

HeuristicKind parse_heuristic(const std::string& name) {
    if (name == "constant") return HeuristicKind::constant;
    if (name == "bracket") return HeuristicKind::bracket;
    if (name == "base-stock") return HeuristicKind::base_stock;
    if (name == "capped-base-stock") return HeuristicKind::capped_base_stock;
    if (name == "myopic1") return HeuristicKind::myopic1;
    if (name == "myopic2") return HeuristicKind::myopic2;
    throw ConfigError("unknown policy '" + name +
                      "' (expected constant, bracket, base-stock, capped-base-stock, myopic1, myopic2)");
}

std::string to_string(HeuristicKind kind) {
    switch (kind) {
        case HeuristicKind::constant: return "constant";
        case HeuristicKind::bracket: return "bracket";
        case HeuristicKind::base_stock: return "base-stock";
        case HeuristicKind::capped_base_stock: return "capped-base-stock";
        case HeuristicKind::myopic1: return "myopic1";
        case HeuristicKind::myopic2: return "myopic2";
    }
    return "unknown";
}

void HeuristicParams::validate(const ItemParams& params) const {
    if (!(r >= 0.0 && r <= params.a_max)) throw ConfigError("r must lie in [0, a_max]");
    const int s_bound = params.y_max + params.pipeline_length() * params.a_max;
    if (S < 0 || S > s_bound) throw ConfigError("S must lie in [0, y_max + (L-1) a_max]");
    if (!(theta >= 0.0 && theta < 1.0)) throw ConfigError("theta must lie in [0, 1)");
    if (service_ratio && !(*service_ratio > 0.0 && *service_ratio < 1.0))
        throw ConfigError("service ratio must lie in (0, 1)");
}

namespace {

int clamp_action(long a, const ItemParams& params) {
    return static_cast<int>(std::clamp<long>(a, 0, params.a_max));
}

}  // namespace

int constant_order(const HeuristicParams& hp, const ItemParams& params) {
    return clamp_action(std::lround(hp.r), params);
}

int bracket(long t, const HeuristicParams& hp, const ItemParams& params) {
    const double td = static_cast<double>(t);
    const auto hi = static_cast<long>(std::floor((td + 1.0) * hp.r + hp.theta));
    const auto lo = static_cast<long>(std::floor(td * hp.r + hp.theta));
    return clamp_action(hi - lo, params);
}

int base_stock(const State& s, const HeuristicParams& hp, const ItemParams& params) {
    return clamp_action(std::max(0, hp.S - s.position()), params);
}

int capped_base_stock(const State& s, const HeuristicParams& hp, const ItemParams& params) {
    return std::min(base_stock(s, hp, params), constant_order(hp, params));
}

MyopicPolicy::MyopicPolicy(const ItemParams& params, int horizon, std::optional<double> service_ratio)
    : MyopicPolicy(params, DemandModel::for_item(params), horizon, service_ratio) {}

MyopicPolicy::MyopicPolicy(const ItemParams& params, const DemandModel& demand, int horizon,
                           std::optional<double> service_ratio)
    : params_(params), pmf_(demand.pmf()), horizon_(horizon) {
    if (horizon != 1 && horizon != 2) throw ConfigError("myopic horizon must be 1 or 2");
    ratio_ = service_ratio.value_or((params.c + params.h) / (params.p + params.h));
    if (!(ratio_ > 0.0 && ratio_ < 1.0)) throw ConfigError("service ratio must lie in (0, 1)");
    tail_.assign(static_cast<std::size_t>(params.y_max) + 1, 0.0);
    G_.assign(static_cast<std::size_t>(params.y_max) + 1, 0.0);
    for (int y = 0; y <= params.y_max; ++y)
        for (std::size_t d = 0; d < pmf_.size(); ++d) {
            const int di = static_cast<int>(d);
            if (di > y) tail_[static_cast<std::size_t>(y)] += pmf_[d];
            G_[static_cast<std::size_t>(y)] += pmf_[d] * (params.h * std::max(y - di, 0) + params.p * std::max(di - y, 0));
        }
}

std::vector<double> MyopicPolicy::arrival_inventory(const State& s, int a) const {
    const auto n = static_cast<std::size_t>(params_.y_max) + 1;
    std::vector<double> dist(n, 0.0), next(n);
    dist[static_cast<std::size_t>(s.y)] = 1.0;
    for (int k = 1; k <= params_.lead_time; ++k) {
        const int arrival = k < params_.lead_time ? s.pipeline[static_cast<std::size_t>(k - 1)] : a;
        std::fill(next.begin(), next.end(), 0.0);
        for (int y = 0; y <= params_.y_max; ++y) {
            const double w = dist[static_cast<std::size_t>(y)];
            if (w == 0.0) continue;
            for (std::size_t d = 0; d < pmf_.size(); ++d) {
                const int y2 = std::min(params_.y_max, std::max(y - static_cast<int>(d), 0) + arrival);
                next[static_cast<std::size_t>(y2)] += w * pmf_[d];
            }
        }
        dist.swap(next);
    }
    return dist;
}

double MyopicPolicy::stockout_probability(const State& s, int a) const {
    const auto q = arrival_inventory(s, a);
    double out = 0.0;
    for (std::size_t y = 0; y < q.size(); ++y) out += q[y] * tail_[y];
    return out;
}

int MyopicPolicy::decide(const State& s) const {
    if (horizon_ == 1) {
        for (int a = 0; a <= params_.a_max; ++a)
            if (stockout_probability(s, a) <= ratio_) return a;
        return params_.a_max;
    }
    const auto n = static_cast<std::size_t>(params_.y_max) + 1;
    int best = 0;
    double best_cost = 0.0;
    std::vector<double> left(n);
    for (int a = 0; a <= params_.a_max; ++a) {
        const auto q = arrival_inventory(s, a);
        double now = params_.c * a;
        std::fill(left.begin(), left.end(), 0.0);
        for (std::size_t y = 0; y < n; ++y) {
            now += q[y] * G_[y];
            for (std::size_t d = 0; d < pmf_.size(); ++d)
                left[static_cast<std::size_t>(std::max(static_cast<int>(y) - static_cast<int>(d), 0))] += q[y] * pmf_[d];
        }
        double later = 0.0;
        for (int a2 = 0; a2 <= params_.a_max; ++a2) {
            double c2 = params_.c * a2;
            for (std::size_t z = 0; z < n; ++z)
                c2 += left[z] * G_[static_cast<std::size_t>(std::min(params_.y_max, static_cast<int>(z) + a2))];
            if (a2 == 0 || c2 < later) later = c2;
        }
        const double total = now + params_.gamma * later;
        if (a == 0 || total < best_cost) {
            best = a;
            best_cost = total;
        }
    }
    return best;
}

int MyopicPolicy::operator()(const State& s) {
    auto key = std::make_pair(s.y, s.pipeline);
    const auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    const int a = decide(s);
    memo_.emplace(std::move(key), a);
    return a;
}

HeuristicPolicy::HeuristicPolicy(HeuristicKind kind, const HeuristicParams& hp, const ItemParams& params)
    : kind_(kind), hp_(hp), params_(params) {
    hp.validate(params);
    if (kind != HeuristicKind::bracket && hp.r != std::floor(hp.r))
        throw ConfigError("r must be an integer for " + to_string(kind));
    if (kind == HeuristicKind::myopic1) myopic_.emplace(params, 1, hp.service_ratio);
    if (kind == HeuristicKind::myopic2) myopic_.emplace(params, 2, hp.service_ratio);
}

int HeuristicPolicy::operator()(const State& s, int t) {
    switch (kind_) {
        case HeuristicKind::constant: return constant_order(hp_, params_);
        case HeuristicKind::bracket: return bracket(t, hp_, params_);
        case HeuristicKind::base_stock: return base_stock(s, hp_, params_);
        case HeuristicKind::capped_base_stock: return capped_base_stock(s, hp_, params_);
        case HeuristicKind::myopic1:
        case HeuristicKind::myopic2: return (*myopic_)(s);
    }
    return 0;
}

std::vector<HeuristicParams> default_grid(HeuristicKind kind, const ItemParams& params, std::optional<int> s_max) {
    const int s_hi = s_max.value_or(params.y_max + params.pipeline_length() * params.a_max);
    std::vector<HeuristicParams> grid;
    HeuristicParams hp;
    switch (kind) {
        case HeuristicKind::constant:
            for (int r = 0; r <= params.a_max; ++r) grid.push_back({static_cast<double>(r), 0, 0.0, {}});
            break;
        case HeuristicKind::bracket:
            for (int i = 0; i <= params.a_max * 20; ++i)
                for (int j = 0; j < 20; ++j) grid.push_back({i / 20.0, 0, j / 20.0, {}});
            break;
        case HeuristicKind::base_stock:
            for (int S = 0; S <= s_hi; ++S) grid.push_back({0.0, S, 0.0, {}});
            break;
        case HeuristicKind::capped_base_stock:
            for (int r = 0; r <= params.a_max; ++r)
                for (int S = 0; S <= s_hi; ++S) grid.push_back({static_cast<double>(r), S, 0.0, {}});
            break;
        case HeuristicKind::myopic1:
        case HeuristicKind::myopic2:
            for (int i = 1; i < 20; ++i) grid.push_back({0.0, 0, 0.0, i / 20.0});
            break;
    }
    return grid;
}

GridSearchResult grid_search(HeuristicKind kind, const ItemParams& params, const std::vector<HeuristicParams>& grid,
                             const EvalProtocol& eval, int workers) {
    if (grid.empty()) throw ConfigError("grid search needs at least one candidate");
    params.validate();
    for (const auto& hp : grid) HeuristicPolicy(kind, hp, params);  // validates every point up front
    GridSearchResult out;
    out.points.resize(grid.size());
    parallel_for(grid.size(), workers, [&](std::size_t i) {
        HeuristicPolicy policy(kind, grid[i], params);
        const EvalResult r = evaluate_rollouts(params, policy, eval);
        out.points[i] = {grid[i], r.mean_cost, r.std_cost};
    });
    auto key = [](const HeuristicParams& hp) {
        return std::make_tuple(hp.r, hp.S, hp.theta, hp.service_ratio.value_or(0.0));
    };
    std::size_t best = 0;
    for (std::size_t i = 1; i < out.points.size(); ++i) {
        const auto& a = out.points[i];
        const auto& b = out.points[best];
        if (a.mean_cost < b.mean_cost || (a.mean_cost == b.mean_cost && key(a.params) < key(b.params))) best = i;
    }
    out.best = out.points[best];
    return out;
}

}  // namespace lsic
