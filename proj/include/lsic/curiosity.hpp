#pragma once

#include <map>
#include <span>
#include <vector>

#include "lsic/env.hpp"
#include "lsic/fg.hpp"

namespace lsic {

// M action-value heads over (state, action). Shared by control and curiosity.
class EnsembleValueModel {
public:
    virtual ~EnsembleValueModel() = default;
    virtual int heads() const = 0;
    virtual int actions() const = 0;
    // out[m * actions() + a] = Q_m(s, a); out.size() == heads() * actions()
    virtual void head_values(const State& s, std::span<double> out) const = 0;
};

struct IntrinsicRewardConfig {
    double beta0 = 0.01;
    double beta_decay = 0.9;  // per-episode multiplicative decay of the weight
    int heads = 5;

    void validate() const;
    // Weight in force during (0-based) episode `episode`.
    double beta(int episode) const;
};

// (1/M) * sqrt(sum_m (Q_m - mean)^2) over the M head values at one pair.
double head_disagreement(std::span<const double> head_values);
double head_disagreement(const EnsembleValueModel& model, const State& s, int a);

// own + log10(J) * mean(side); J = side.size(). With J = 0 returns own.
double intrinsic_reward(double own, std::span<const double> side_curiosity);
double intrinsic_reward(const EnsembleValueModel& model, const Experience& exp,
                        std::span<const SideExperience> side);

// (1 - beta) * r + beta * r_in
inline double mix_reward(double r, double r_in, double beta) { return (1.0 - beta) * r + beta * r_in; }

// Per-state memo of disagreements, valid while the model is unchanged (one
// update step). Side pairs of one experience share few distinct states.
class CuriosityCache {
public:
    explicit CuriosityCache(const EnsembleValueModel& model) : model_(model) {}
    double at(const State& s, int a);

private:
    const EnsembleValueModel& model_;
    std::map<std::pair<int, std::vector<int>>, std::vector<double>> memo_;
    std::vector<double> scratch_;
};

// Intrinsic reward of `exp` with its side pairs enumerated on the fly. Uses
// the cap (and `rng`) when the spec sets one.
double intrinsic_reward_fg(CuriosityCache& cache, const Experience& exp, const FeedbackGraphSpec& spec,
                           const ItemParams& params, Rng* rng = nullptr);

// Ensemble of dense tables, used by tabular learners and tests.
class TableEnsemble : public EnsembleValueModel {
public:
    TableEnsemble(const ItemParams& params, int heads);

    int heads() const override { return heads_; }
    int actions() const override { return actions_; }
    void head_values(const State& s, std::span<double> out) const override;

    double& at(int head, const State& s, int a);

private:
    std::size_t offset(int head, const State& s, int a) const;

    int heads_;
    int actions_;
    int radix_;
    std::size_t states_;
    std::vector<double> values_;
};

}  // namespace lsic
