#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "lsic/env.hpp"
#include "lsic/rng.hpp"

namespace lsic {

// Which state dimensions the feedback graph enumerates. Inventory and action
// are always enumerated; the first `enumerate_pipeline_dims` outstanding
// orders are enumerated too and the rest are copied from the source.
struct FeedbackGraphSpec {
    int enumerate_pipeline_dims = 0;
    std::optional<std::size_t> cap_side_per_experience;

    void validate(const ItemParams& params) const;
};

// Highest side inventory a real experience can vouch for: its own y when the
// observed demand was censored, y_max otherwise.
int side_inventory_bound(const Experience& exp, const ItemParams& params);

// (y_bound+1) * (a_max+1)^(k+1), before any cap.
std::uint64_t side_count(const Experience& exp, const FeedbackGraphSpec& spec, const ItemParams& params);

// Calls fn(s_hat, a_hat) for every enumerated side pair: inventory outermost,
// then pipeline combinations lexicographically, then action. Ignores the cap.
template <class Fn>
void for_each_side_pair(const Experience& exp, const FeedbackGraphSpec& spec, const ItemParams& params,
                        Fn&& fn) {
    const int y_bound = side_inventory_bound(exp, params);
    const int k = spec.enumerate_pipeline_dims;
    State s_hat = exp.s;
    for (int y = 0; y <= y_bound; ++y) {
        s_hat.y = y;
        for (int i = 0; i < k; ++i) s_hat.pipeline[i] = 0;
        while (true) {
            for (int a = 0; a <= params.a_max; ++a) fn(static_cast<const State&>(s_hat), a);
            // odometer over the k enumerated pipeline digits, last digit fastest
            int i = k - 1;
            while (i >= 0 && s_hat.pipeline[i] == params.a_max) s_hat.pipeline[i--] = 0;
            if (i < 0) break;
            ++s_hat.pipeline[i];
        }
    }
}

// Side experiences of one real experience, each built by treating the observed
// demand as the realized demand. When the spec has a cap below the full count,
// a uniform subset of that size is kept (in enumeration order) using `rng`.
std::vector<SideExperience> generate_side_experiences(const Experience& exp, const FeedbackGraphSpec& spec,
                                                      const ItemParams& params, std::uint64_t source_id = 0,
                                                      Rng* rng = nullptr);

// Multi-node variant: one node's state and action vary while every other node
// keeps its real transition. Works for multi-item stores and for echelons
// (nodes = warehouse then retailers, actions = shipped quantities).
struct JointSideExperience {
    std::size_t node = 0;
    std::vector<State> s;
    std::vector<int> a;
    double r = 0.0;  // joint reward
    std::vector<State> s_next;
    int d_obs = 0;
    bool censored = false;
    std::uint64_t source_id = 0;
};

std::vector<JointSideExperience> generate_per_node_side_experiences(
    std::span<const ItemParams> params, std::span<const State> states, std::span<const int> actions,
    std::span<const Transition> outcomes, const FeedbackGraphSpec& spec, std::uint64_t source_id = 0);

}  // namespace lsic
