#include "lsic/curiosity.hpp"

#include <cmath>
#include <numeric>

#include "lsic/error.hpp"
#include "lsic/state_index.hpp"

namespace lsic {

void IntrinsicRewardConfig::validate() const {
    if (!(beta0 >= 0.0 && beta0 <= 1.0)) throw ConfigError("beta0 must lie in [0, 1]");
    if (!(beta_decay > 0.0 && beta_decay <= 1.0)) throw ConfigError("beta decay must lie in (0, 1]");
    if (heads < 2) throw ConfigError("the curiosity ensemble needs at least 2 heads");
}

double IntrinsicRewardConfig::beta(int episode) const { return beta0 * std::pow(beta_decay, episode); }

double head_disagreement(std::span<const double> head_values) {
    const auto m = head_values.size();
    if (m < 2) throw ConfigError("disagreement needs at least 2 heads");
    const double mean = std::accumulate(head_values.begin(), head_values.end(), 0.0) / static_cast<double>(m);
    double ss = 0.0;
    for (double q : head_values) ss += (q - mean) * (q - mean);
    return std::sqrt(ss) / static_cast<double>(m);
}

namespace {

double disagreement_at(std::span<const double> values, int heads, int actions, int a) {
    std::vector<double> column(static_cast<std::size_t>(heads));
    for (int m = 0; m < heads; ++m) column[m] = values[static_cast<std::size_t>(m) * actions + a];
    return head_disagreement(column);
}

}  // namespace

double head_disagreement(const EnsembleValueModel& model, const State& s, int a) {
    std::vector<double> values(static_cast<std::size_t>(model.heads()) * model.actions());
    model.head_values(s, values);
    return disagreement_at(values, model.heads(), model.actions(), a);
}

double intrinsic_reward(double own, std::span<const double> side_curiosity) {
    if (side_curiosity.empty()) return own;
    const double j = static_cast<double>(side_curiosity.size());
    const double mean = std::accumulate(side_curiosity.begin(), side_curiosity.end(), 0.0) / j;
    return own + std::log10(j) * mean;
}

double intrinsic_reward(const EnsembleValueModel& model, const Experience& exp,
                        std::span<const SideExperience> side) {
    CuriosityCache cache(model);
    std::vector<double> side_curiosity;
    side_curiosity.reserve(side.size());
    for (const auto& e : side) side_curiosity.push_back(cache.at(e.s, e.a));
    return intrinsic_reward(cache.at(exp.s, exp.a), side_curiosity);
}

double CuriosityCache::at(const State& s, int a) {
    auto key = std::make_pair(s.y, s.pipeline);
    auto it = memo_.find(key);
    if (it == memo_.end()) {
        const int heads = model_.heads();
        const int actions = model_.actions();
        scratch_.resize(static_cast<std::size_t>(heads) * actions);
        model_.head_values(s, scratch_);
        std::vector<double> per_action(static_cast<std::size_t>(actions));
        for (int b = 0; b < actions; ++b) per_action[b] = disagreement_at(scratch_, heads, actions, b);
        it = memo_.emplace(std::move(key), std::move(per_action)).first;
    }
    return it->second[static_cast<std::size_t>(a)];
}

double intrinsic_reward_fg(CuriosityCache& cache, const Experience& exp, const FeedbackGraphSpec& spec,
                           const ItemParams& params, Rng* rng) {
    const double own = cache.at(exp.s, exp.a);
    if (spec.cap_side_per_experience && *spec.cap_side_per_experience < side_count(exp, spec, params)) {
        const auto side = generate_side_experiences(exp, spec, params, 0, rng);
        std::vector<double> c;
        c.reserve(side.size());
        for (const auto& e : side) c.push_back(cache.at(e.s, e.a));
        return intrinsic_reward(own, c);
    }
    // Summation order matches the materialized path, so both give equal bits.
    double sum = 0.0;
    std::uint64_t j = 0;
    for_each_side_pair(exp, spec, params, [&](const State& s_hat, int a_hat) {
        sum += cache.at(s_hat, a_hat);
        ++j;
    });
    if (j == 0) return own;
    const double jd = static_cast<double>(j);
    return own + std::log10(jd) * (sum / jd);
}

TableEnsemble::TableEnsemble(const ItemParams& params, int heads)
    : heads_(heads), actions_(params.a_max + 1), radix_(params.a_max + 1) {
    if (heads < 1) throw ConfigError("ensemble needs at least one head");
    states_ = StateIndexer(params).size();
    values_.assign(states_ * static_cast<std::size_t>(actions_) * heads_, 0.0);
}

std::size_t TableEnsemble::offset(int head, const State& s, int a) const {
    std::size_t idx = static_cast<std::size_t>(s.y);
    for (int x : s.pipeline) idx = idx * radix_ + static_cast<std::size_t>(x);
    return (static_cast<std::size_t>(head) * states_ + idx) * actions_ + static_cast<std::size_t>(a);
}

void TableEnsemble::head_values(const State& s, std::span<double> out) const {
    for (int m = 0; m < heads_; ++m)
        for (int a = 0; a < actions_; ++a)
            out[static_cast<std::size_t>(m) * actions_ + a] = values_[offset(m, s, a)];
}

double& TableEnsemble::at(int head, const State& s, int a) { return values_[offset(head, s, a)]; }

}  // namespace lsic
