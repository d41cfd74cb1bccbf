#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <deque>
#include <string>
#include <type_traits>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "lsic/curiosity.hpp"
#include "lsic/env.hpp"
#include "lsic/error.hpp"
#include "lsic/fg.hpp"
#include "lsic/rng.hpp"
#include "lsic/runlog.hpp"
#include "lsic/state_index.hpp"

namespace lsic {

// Fixed-capacity FIFO store; the oldest entry is evicted first.
template <class T>
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
        if (capacity == 0) throw ConfigError("replay capacity must be positive");
    }

    void push(T item) {
        if (items_.size() == capacity_) items_.pop_front();
        items_.push_back(std::move(item));
    }

    std::size_t size() const { return items_.size(); }
    std::size_t capacity() const { return capacity_; }
    bool empty() const { return items_.empty(); }
    const T& operator[](std::size_t i) const { return items_[i]; }  // 0 = oldest

    // Uniform draw with replacement.
    const T& sample(Rng& rng) const { return items_[rng.below(items_.size())]; }

private:
    std::size_t capacity_;
    std::deque<T> items_;
};

inline constexpr std::size_t kMainReplayCapacity = 12000;
inline constexpr std::size_t kSideReplayCapacity = 192000;

struct AgentConfig {
    double epsilon = 0.1;
    double gamma = 0.995;
    double lr = 1e-4;
    double alpha = 0.1;  // tabular step size
    int target_update_every = 100;
    std::size_t batch_main = 128;
    std::size_t batch_side = 256;
    std::size_t replay_main = kMainReplayCapacity;
    std::size_t replay_side = kSideReplayCapacity;
    int hidden = 512;
    double reward_scale = 1.0;  // applied to extrinsic rewards before mixing
    bool use_fg = false;
    bool use_intrinsic = false;

    void validate() const;
};

// Index of the largest value, lowest index on ties.
int argmax(std::span<const double> values);

// Greedy with probability 1 - epsilon, otherwise a uniform action. Always
// consumes one uniform draw.
int act_epsilon_greedy(std::span<const double> values, double epsilon, Rng& rng);

class QTable {
public:
    explicit QTable(const ItemParams& params);

    const StateIndexer& indexer() const { return indexer_; }
    int actions() const { return indexer_.actions(); }
    std::span<double> row(const State& s);
    std::span<const double> row(const State& s) const;
    double& at(const State& s, int a) { return row(s)[static_cast<std::size_t>(a)]; }
    double at(const State& s, int a) const { return row(s)[static_cast<std::size_t>(a)]; }
    const std::vector<double>& values() const { return values_; }

private:
    StateIndexer indexer_;
    std::vector<double> values_;
};

// Q(s,a) += alpha * (r + gamma * max Q(s',.) - Q(s,a))
void q_update(QTable& table, const Experience& exp, double alpha, double gamma);

// q_update on exp, then on each side experience in enumeration order.
// Returns the number of side updates applied.
std::size_t q_update_with_fg(QTable& table, const Experience& exp, const FeedbackGraphSpec& spec,
                             const ItemParams& params, double alpha, double gamma, Rng* rng = nullptr);

// Network inputs: y / y_max, then each pipeline entry / a_max.
Eigen::VectorXd encode_state(const ItemParams& params, const State& s);

// Adaptive moment estimation:
//   m <- b1 m + (1-b1) g,  v <- b2 v + (1-b2) g^2
//   theta <- theta - lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)
struct Adam {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    Eigen::VectorXd m, v;
    long t = 0;

    void step(Eigen::VectorXd& theta, const Eigen::VectorXd& grad);
};

// Regression batch for the ensemble. Column i of x is one input; head m is
// fit on entry (m, i) when mask(m, i) is 1.
struct TrainBatch {
    Eigen::MatrixXd x;
    std::vector<int> actions;
    Eigen::MatrixXd targets;
    Eigen::MatrixXd mask;
};

// One hidden ReLU layer shared by M linear heads of (a_max+1) outputs each.
// All parameters live in one flat vector: W1, b1, W2, b2 (column-major).
class EnsembleMlp : public EnsembleValueModel {
public:
    EnsembleMlp(int inputs, int hidden, int heads, int actions, Rng& rng);
    EnsembleMlp(const ItemParams& params, int hidden, int heads, Rng& rng);

    int heads() const override { return heads_; }
    int actions() const override { return actions_; }
    int inputs() const { return inputs_; }
    int hidden() const { return hidden_; }
    void head_values(const State& s, std::span<double> out) const override;

    // (heads*actions) x B outputs; row m*actions + a is Q_m(., a).
    Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;

    // sum over masked (m,i) of 0.5 * (Q_m(x_i, a_i) - target)^2, divided by B.
    double loss(const TrainBatch& batch) const;
    double loss_and_grad(const TrainBatch& batch, Eigen::VectorXd& grad) const;

    Eigen::VectorXd& parameters() { return theta_; }
    const Eigen::VectorXd& parameters() const { return theta_; }

private:
    int inputs_, hidden_, heads_, actions_;
    Eigen::VectorXd scale_;  // per-input normalization used by head_values
    Eigen::VectorXd theta_;
};

// Learner driven by run_training.
class Agent {
public:
    virtual ~Agent() = default;
    virtual void begin_episode(int episode) { (void)episode; }
    virtual int act(const State& s) = 0;         // behavior policy
    virtual int act_greedy(const State& s) = 0;  // no exploration, no rng
    virtual void observe(const Experience& exp) = 0;
    virtual double beta() const { return 0.0; }
};

class QAgent : public Agent {
public:
    QAgent(const ItemParams& params, AgentConfig config, FeedbackGraphSpec fg, std::uint64_t seed);

    int act(const State& s) override;
    int act_greedy(const State& s) override;
    void observe(const Experience& exp) override;

    const QTable& table() const { return table_; }
    QTable& table() { return table_; }

private:
    ItemParams params_;
    AgentConfig config_;
    FeedbackGraphSpec fg_;
    QTable table_;
    Rng explore_;
    Rng cap_;
};

struct DqnStepStats {
    double loss = 0.0;
    std::size_t main_items = 0;
    std::size_t side_items = 0;
};

// Double DQN over the head ensemble; control acts on the mean head.
class DqnAgent : public Agent {
public:
    DqnAgent(const ItemParams& params, AgentConfig config, FeedbackGraphSpec fg, IntrinsicRewardConfig intrinsic,
             std::uint64_t seed);

    void begin_episode(int episode) override;
    int act(const State& s) override;
    int act_greedy(const State& s) override;
    void observe(const Experience& exp) override;
    double beta() const override { return beta_; }

    // One gradient step; nullopt while the main buffer holds less than a batch.
    std::optional<DqnStepStats> train_step();

    // Assembles the regression batch for the next update without applying it.
    // Consumes sampling and bootstrap draws.
    TrainBatch sample_batch(std::size_t* main_items = nullptr, std::size_t* side_items = nullptr);

    const EnsembleMlp& online() const { return online_; }
    EnsembleMlp& online() { return online_; }
    const EnsembleMlp& target() const { return target_; }
    const ReplayBuffer<Experience>& main_buffer() const { return main_; }
    const ReplayBuffer<SideExperience>& side_buffer() const { return side_; }
    long updates() const { return updates_; }

private:
    std::vector<double> mean_values(const State& s) const;

    ItemParams params_;
    AgentConfig config_;
    FeedbackGraphSpec fg_;
    IntrinsicRewardConfig intrinsic_;
    Rng init_;
    EnsembleMlp online_;
    EnsembleMlp target_;
    Adam adam_;
    ReplayBuffer<Experience> main_;
    ReplayBuffer<SideExperience> side_;
    Rng explore_, sampling_, bootstrap_, cap_, curiosity_cap_;
    double beta_ = 0.0;
    long updates_ = 0;
    std::uint64_t experiences_ = 0;
};

std::unique_ptr<Agent> make_agent(const std::string& kind, const ItemParams& params, const AgentConfig& config,
                                  const FeedbackGraphSpec& fg, const IntrinsicRewardConfig& intrinsic,
                                  std::uint64_t seed);

// Greedy test rollouts from a fresh reset. Episode j uses the same demand
// stream at every checkpoint. The first `warmup` periods are run but not scored.
// Policies are called as policy(state) or policy(state, t), t counting from 0
// at each reset.
struct EvalProtocol {
    int episodes = 10;
    int steps = 400;
    int warmup = 0;
    std::uint64_t seed = 0;
};

struct EvalResult {
    double mean_cost = 0.0;  // mean over episodes of the per-period cost
    double std_cost = 0.0;   // population std across episodes
};

template <class Policy>
EvalResult evaluate_rollouts(const ItemParams& params, Policy&& policy, const EvalProtocol& protocol) {
    if (protocol.episodes < 1 || protocol.steps < 1 || protocol.warmup < 0)
        throw ConfigError("evaluation needs episodes >= 1, steps >= 1, warmup >= 0");
    SingleItemEnv env(params);
    const std::uint64_t base = derive_seed(protocol.seed, static_cast<std::uint64_t>(Stream::evaluation));
    std::vector<double> costs;
    costs.reserve(static_cast<std::size_t>(protocol.episodes));
    for (int j = 0; j < protocol.episodes; ++j) {
        env.reset(derive_seed(base, static_cast<std::uint64_t>(j)));
        double total = 0.0;
        for (int t = 0; t < protocol.warmup + protocol.steps; ++t) {
            int a;
            if constexpr (std::is_invocable_v<Policy&, const State&, int>)
                a = policy(env.state(), t);
            else
                a = policy(env.state());
            const auto tr = env.step(a);
            if (t >= protocol.warmup) total -= tr.r;
        }
        costs.push_back(total / protocol.steps);
    }
    EvalResult out;
    for (double c : costs) out.mean_cost += c;
    out.mean_cost /= static_cast<double>(costs.size());
    for (double c : costs) out.std_cost += (c - out.mean_cost) * (c - out.mean_cost);
    out.std_cost = std::sqrt(out.std_cost / static_cast<double>(costs.size()));
    return out;
}

struct TrainingSchedule {
    int episodes = 100;
    int steps_per_episode = 1000;
    bool record_wallclock = false;  // otherwise the wallclock column is 0
};

// Each training episode starts from a fresh reset on its own demand stream;
// the agent is evaluated greedily after every episode.
RunLog run_training(const ItemParams& params, Agent& agent, const TrainingSchedule& schedule,
                    const EvalProtocol& eval, std::uint64_t seed, const std::string& run_id);

}  // namespace lsic
