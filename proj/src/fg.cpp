#include "lsic/fg.hpp"

#include "lsic/error.hpp"

namespace lsic {

void FeedbackGraphSpec::validate(const ItemParams& params) const {
    if (enumerate_pipeline_dims < 0 || enumerate_pipeline_dims > params.pipeline_length())
        throw ConfigError("fg dims must lie in [0, L-1]");
}

int side_inventory_bound(const Experience& exp, const ItemParams& params) {
    return exp.censored ? exp.s.y : params.y_max;
}

std::uint64_t side_count(const Experience& exp, const FeedbackGraphSpec& spec, const ItemParams& params) {
    std::uint64_t n = static_cast<std::uint64_t>(side_inventory_bound(exp, params)) + 1;
    for (int i = 0; i <= spec.enumerate_pipeline_dims; ++i) n *= static_cast<std::uint64_t>(params.a_max) + 1;
    return n;
}

std::vector<SideExperience> generate_side_experiences(const Experience& exp, const FeedbackGraphSpec& spec,
                                                      const ItemParams& params, std::uint64_t source_id,
                                                      Rng* rng) {
    spec.validate(params);
    const std::uint64_t total = side_count(exp, spec, params);
    std::uint64_t keep = total;
    if (spec.cap_side_per_experience && *spec.cap_side_per_experience < total) {
        keep = *spec.cap_side_per_experience;
        if (keep > 0 && rng == nullptr) throw ConfigError("a capped feedback graph needs an rng");
    }

    std::vector<SideExperience> out;
    out.reserve(keep);
    std::uint64_t seen = 0;
    for_each_side_pair(exp, spec, params, [&](const State& s_hat, int a_hat) {
        // selection sampling: keeps exactly `keep` of `total`, uniformly
        if (keep < total) {
            const std::uint64_t needed = keep - out.size();
            const std::uint64_t remaining = total - seen++;
            if (needed == 0 || rng->below(remaining) >= needed) return;
        }
        Transition t = transition(params, s_hat, a_hat, exp.d_obs);
        SideExperience side;
        side.s = s_hat;
        side.a = a_hat;
        side.r = t.r;
        side.s_next = std::move(t.s_next);
        side.d_obs = t.d_obs;
        side.censored = t.censored;
        side.source_id = source_id;
        out.push_back(std::move(side));
    });
    return out;
}

std::vector<JointSideExperience> generate_per_node_side_experiences(
    std::span<const ItemParams> params, std::span<const State> states, std::span<const int> actions,
    std::span<const Transition> outcomes, const FeedbackGraphSpec& spec, std::uint64_t source_id) {
    const std::size_t n = params.size();
    if (states.size() != n || actions.size() != n || outcomes.size() != n)
        throw ActionError("per-node side experiences need one state, action and outcome per node");

    double real_total = 0.0;
    for (const auto& t : outcomes) real_total += t.r;

    std::vector<JointSideExperience> out;
    for (std::size_t node = 0; node < n; ++node) {
        Experience exp;
        exp.s = states[node];
        exp.a = actions[node];
        exp.r = outcomes[node].r;
        exp.s_next = outcomes[node].s_next;
        exp.d_obs = outcomes[node].d_obs;
        exp.censored = outcomes[node].censored;
        FeedbackGraphSpec node_spec = spec;
        node_spec.enumerate_pipeline_dims = std::min(spec.enumerate_pipeline_dims, params[node].pipeline_length());
        for_each_side_pair(exp, node_spec, params[node], [&](const State& s_hat, int a_hat) {
            Transition t = transition(params[node], s_hat, a_hat, exp.d_obs);
            JointSideExperience side;
            side.node = node;
            side.s.assign(states.begin(), states.end());
            side.a.assign(actions.begin(), actions.end());
            side.s_next.reserve(n);
            for (const auto& o : outcomes) side.s_next.push_back(o.s_next);
            side.s[node] = s_hat;
            side.a[node] = a_hat;
            side.s_next[node] = t.s_next;
            side.r = real_total - outcomes[node].r + t.r;
            side.d_obs = t.d_obs;
            side.censored = t.censored;
            side.source_id = source_id;
            out.push_back(std::move(side));
        });
    }
    return out;
}

}  // namespace lsic
