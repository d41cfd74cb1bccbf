#include "lsic/agents.hpp"

#include <chrono>

namespace lsic {

void RunLog::append(RunLogRow row) {
    if (!rows.empty() && row.episode <= rows.back().episode)
        throw ConfigError("run log episodes must be strictly increasing");
    rows.push_back(std::move(row));
}

void AgentConfig::validate() const {
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ConfigError("epsilon must lie in [0, 1]");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("gamma must lie in [0, 1)");
    if (!(lr > 0.0)) throw ConfigError("lr must be positive");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
    if (target_update_every < 1) throw ConfigError("target_update_every must be >= 1");
    if (batch_main < 1) throw ConfigError("batch_main must be >= 1");
    if (replay_main < 1 || replay_side < 1) throw ConfigError("replay capacities must be >= 1");
    if (hidden < 1) throw ConfigError("hidden width must be >= 1");
    if (!(reward_scale > 0.0)) throw ConfigError("reward_scale must be positive");
}

int argmax(std::span<const double> values) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i)
        if (values[i] > values[best]) best = i;
    return static_cast<int>(best);
}

int act_epsilon_greedy(std::span<const double> values, double epsilon, Rng& rng) {
    if (rng.uniform() < epsilon) return static_cast<int>(rng.below(values.size()));
    return argmax(values);
}

QTable::QTable(const ItemParams& params)
    : indexer_(params), values_(indexer_.size() * static_cast<std::size_t>(indexer_.actions()), 0.0) {}

std::span<double> QTable::row(const State& s) {
    const auto a = static_cast<std::size_t>(actions());
    return {values_.data() + indexer_.index(s) * a, a};
}

std::span<const double> QTable::row(const State& s) const {
    const auto a = static_cast<std::size_t>(actions());
    return {values_.data() + indexer_.index(s) * a, a};
}

void q_update(QTable& table, const Experience& exp, double alpha, double gamma) {
    const auto next = table.row(exp.s_next);
    double best = next[0];
    for (double v : next) best = std::max(best, v);
    double& q = table.at(exp.s, exp.a);
    q += alpha * (exp.r + gamma * best - q);
}

std::size_t q_update_with_fg(QTable& table, const Experience& exp, const FeedbackGraphSpec& spec,
                             const ItemParams& params, double alpha, double gamma, Rng* rng) {
    q_update(table, exp, alpha, gamma);
    const auto side = generate_side_experiences(exp, spec, params, 0, rng);
    for (const auto& e : side) q_update(table, e, alpha, gamma);
    return side.size();
}

Eigen::VectorXd encode_state(const ItemParams& params, const State& s) {
    Eigen::VectorXd x(1 + static_cast<Eigen::Index>(s.pipeline.size()));
    x(0) = static_cast<double>(s.y) / params.y_max;
    for (std::size_t i = 0; i < s.pipeline.size(); ++i)
        x(static_cast<Eigen::Index>(i) + 1) = static_cast<double>(s.pipeline[i]) / params.a_max;
    return x;
}

void Adam::step(Eigen::VectorXd& theta, const Eigen::VectorXd& grad) {
    if (m.size() != theta.size()) {
        m = Eigen::VectorXd::Zero(theta.size());
        v = Eigen::VectorXd::Zero(theta.size());
        t = 0;
    }
    ++t;
    m = beta1 * m + (1.0 - beta1) * grad;
    v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    theta.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
}

namespace {

struct Layout {
    Eigen::Index w1, b1, w2, b2, total;
};

Layout layout(int inputs, int hidden, int outputs) {
    Layout l;
    l.w1 = 0;
    l.b1 = l.w1 + static_cast<Eigen::Index>(hidden) * inputs;
    l.w2 = l.b1 + hidden;
    l.b2 = l.w2 + static_cast<Eigen::Index>(outputs) * hidden;
    l.total = l.b2 + outputs;
    return l;
}

using CMap = Eigen::Map<const Eigen::MatrixXd>;
using CVMap = Eigen::Map<const Eigen::VectorXd>;

}  // namespace

EnsembleMlp::EnsembleMlp(int inputs, int hidden, int heads, int actions, Rng& rng)
    : inputs_(inputs), hidden_(hidden), heads_(heads), actions_(actions), scale_(Eigen::VectorXd::Ones(inputs)) {
    if (inputs < 1 || hidden < 1 || heads < 1 || actions < 1) throw ConfigError("network dimensions must be positive");
    const int outputs = heads * actions;
    const Layout l = layout(inputs, hidden, outputs);
    theta_.resize(l.total);
    const double r1 = 1.0 / std::sqrt(static_cast<double>(inputs));
    const double r2 = 1.0 / std::sqrt(static_cast<double>(hidden));
    for (Eigen::Index i = 0; i < l.w2; ++i) theta_(i) = r1 * (2.0 * rng.uniform() - 1.0);
    for (Eigen::Index i = l.w2; i < l.total; ++i) theta_(i) = r2 * (2.0 * rng.uniform() - 1.0);
}

EnsembleMlp::EnsembleMlp(const ItemParams& params, int hidden, int heads, Rng& rng)
    : EnsembleMlp(params.lead_time, hidden, heads, params.a_max + 1, rng) {
    scale_(0) = 1.0 / params.y_max;
    for (int i = 1; i < inputs_; ++i) scale_(i) = 1.0 / params.a_max;
}

Eigen::MatrixXd EnsembleMlp::forward(const Eigen::MatrixXd& x) const {
    const int outputs = heads_ * actions_;
    const Layout l = layout(inputs_, hidden_, outputs);
    const CMap w1(theta_.data() + l.w1, hidden_, inputs_);
    const CVMap b1(theta_.data() + l.b1, hidden_);
    const CMap w2(theta_.data() + l.w2, outputs, hidden_);
    const CVMap b2(theta_.data() + l.b2, outputs);
    const Eigen::MatrixXd h = ((w1 * x).colwise() + b1).cwiseMax(0.0);
    return (w2 * h).colwise() + b2;
}

void EnsembleMlp::head_values(const State& s, std::span<double> out) const {
    Eigen::VectorXd x(inputs_);
    x(0) = s.y * scale_(0);
    for (int i = 1; i < inputs_; ++i) x(i) = s.pipeline[static_cast<std::size_t>(i - 1)] * scale_(i);
    const Eigen::MatrixXd q = forward(x);
    for (Eigen::Index i = 0; i < q.rows(); ++i) out[static_cast<std::size_t>(i)] = q(i, 0);
}

double EnsembleMlp::loss(const TrainBatch& batch) const {
    const Eigen::MatrixXd q = forward(batch.x);
    const Eigen::Index n = batch.x.cols();
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (int m = 0; m < heads_; ++m) {
            const double w = batch.mask(m, i);
            if (w == 0.0) continue;
            const double diff = q(m * actions_ + batch.actions[static_cast<std::size_t>(i)], i) - batch.targets(m, i);
            total += 0.5 * w * diff * diff;
        }
    return total / static_cast<double>(n);
}

double EnsembleMlp::loss_and_grad(const TrainBatch& batch, Eigen::VectorXd& grad) const {
    const int outputs = heads_ * actions_;
    const Layout l = layout(inputs_, hidden_, outputs);
    const CMap w1(theta_.data() + l.w1, hidden_, inputs_);
    const CVMap b1(theta_.data() + l.b1, hidden_);
    const CMap w2(theta_.data() + l.w2, outputs, hidden_);
    const CVMap b2(theta_.data() + l.b2, outputs);

    const Eigen::Index n = batch.x.cols();
    const double inv_n = 1.0 / static_cast<double>(n);
    const Eigen::MatrixXd z = (w1 * batch.x).colwise() + b1;
    const Eigen::MatrixXd h = z.cwiseMax(0.0);
    const Eigen::MatrixXd q = (w2 * h).colwise() + b2;

    Eigen::MatrixXd dq = Eigen::MatrixXd::Zero(outputs, n);
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (int m = 0; m < heads_; ++m) {
            const double w = batch.mask(m, i);
            if (w == 0.0) continue;
            const Eigen::Index row = m * actions_ + batch.actions[static_cast<std::size_t>(i)];
            const double diff = q(row, i) - batch.targets(m, i);
            total += 0.5 * w * diff * diff;
            dq(row, i) = w * diff * inv_n;
        }

    grad.setZero(l.total);
    Eigen::Map<Eigen::MatrixXd>(grad.data() + l.w2, outputs, hidden_) = dq * h.transpose();
    Eigen::Map<Eigen::VectorXd>(grad.data() + l.b2, outputs) = dq.rowwise().sum();
    const Eigen::MatrixXd dz = (w2.transpose() * dq).cwiseProduct((z.array() > 0.0).cast<double>().matrix());
    Eigen::Map<Eigen::MatrixXd>(grad.data() + l.w1, hidden_, inputs_) = dz * batch.x.transpose();
    Eigen::Map<Eigen::VectorXd>(grad.data() + l.b1, hidden_) = dz.rowwise().sum();
    return total * inv_n;
}

QAgent::QAgent(const ItemParams& params, AgentConfig config, FeedbackGraphSpec fg, std::uint64_t seed)
    : params_(params),
      config_(config),
      fg_(fg),
      table_(params),
      explore_(seed, Stream::exploration),
      cap_(seed, Stream::fg_cap) {
    config_.validate();
    if (config_.use_fg) fg_.validate(params_);
    if (config_.use_intrinsic) throw ConfigError("intrinsic reward requires the dqn agent");
}

int QAgent::act(const State& s) { return act_epsilon_greedy(table_.row(s), config_.epsilon, explore_); }

int QAgent::act_greedy(const State& s) { return argmax(table_.row(s)); }

void QAgent::observe(const Experience& exp) {
    if (config_.use_fg)
        q_update_with_fg(table_, exp, fg_, params_, config_.alpha, config_.gamma, &cap_);
    else
        q_update(table_, exp, config_.alpha, config_.gamma);
}

DqnAgent::DqnAgent(const ItemParams& params, AgentConfig config, FeedbackGraphSpec fg,
                   IntrinsicRewardConfig intrinsic, std::uint64_t seed)
    : params_(params),
      config_((config.validate(), config)),
      fg_(fg),
      intrinsic_((intrinsic.validate(), intrinsic)),
      init_(seed, Stream::init),
      online_(params, config.hidden, intrinsic.heads, init_),
      target_(online_),
      main_(config.replay_main),
      side_(config.replay_side),
      explore_(seed, Stream::exploration),
      sampling_(seed, Stream::sampling),
      bootstrap_(seed, Stream::bootstrap),
      cap_(seed, Stream::fg_cap),
      curiosity_cap_(seed, Stream::curiosity) {
    fg_.validate(params_);
    adam_.lr = config_.lr;
}

void DqnAgent::begin_episode(int episode) { beta_ = config_.use_intrinsic ? intrinsic_.beta(episode) : 0.0; }

std::vector<double> DqnAgent::mean_values(const State& s) const {
    const int m = online_.heads(), a = online_.actions();
    std::vector<double> all(static_cast<std::size_t>(m * a));
    online_.head_values(s, all);
    std::vector<double> mean(static_cast<std::size_t>(a), 0.0);
    for (int h = 0; h < m; ++h)
        for (int j = 0; j < a; ++j) mean[static_cast<std::size_t>(j)] += all[static_cast<std::size_t>(h * a + j)];
    for (double& v : mean) v /= m;
    return mean;
}

int DqnAgent::act(const State& s) { return act_epsilon_greedy(mean_values(s), config_.epsilon, explore_); }

int DqnAgent::act_greedy(const State& s) { return argmax(mean_values(s)); }

void DqnAgent::observe(const Experience& exp) {
    main_.push(exp);
    if (config_.use_fg)
        for (auto& e : generate_side_experiences(exp, fg_, params_, experiences_, &cap_)) side_.push(std::move(e));
    ++experiences_;
    train_step();
}

TrainBatch DqnAgent::sample_batch(std::size_t* main_items, std::size_t* side_items) {
    std::vector<const Experience*> items;
    items.reserve(config_.batch_main + config_.batch_side);
    for (std::size_t i = 0; i < config_.batch_main; ++i) items.push_back(&main_.sample(sampling_));
    const std::size_t n_main = items.size();
    if (config_.use_fg && !side_.empty())
        for (std::size_t i = 0; i < config_.batch_side; ++i) items.push_back(&side_.sample(sampling_));
    if (main_items) *main_items = n_main;
    if (side_items) *side_items = items.size() - n_main;

    const auto n = static_cast<Eigen::Index>(items.size());
    const int heads = online_.heads(), actions = online_.actions();
    TrainBatch batch;
    batch.x.resize(online_.inputs(), n);
    Eigen::MatrixXd x_next(online_.inputs(), n);
    batch.actions.resize(items.size());
    for (Eigen::Index i = 0; i < n; ++i) {
        const Experience& e = *items[static_cast<std::size_t>(i)];
        batch.x.col(i) = encode_state(params_, e.s);
        x_next.col(i) = encode_state(params_, e.s_next);
        batch.actions[static_cast<std::size_t>(i)] = e.a;
    }

    std::vector<double> reward(items.size());
    std::optional<CuriosityCache> cache;
    if (config_.use_intrinsic) cache.emplace(online_);
    for (std::size_t i = 0; i < items.size(); ++i) {
        reward[i] = items[i]->r * config_.reward_scale;
        if (cache) {
            const double r_in = intrinsic_reward_fg(*cache, *items[i], fg_, params_, &curiosity_cap_);
            reward[i] = mix_reward(reward[i], r_in, beta_);
        }
    }

    const Eigen::MatrixXd q_online = online_.forward(x_next);
    const Eigen::MatrixXd q_target = target_.forward(x_next);
    batch.targets.resize(heads, n);
    batch.mask.resize(heads, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (int m = 0; m < heads; ++m) {
            int best = 0;
            for (int a = 1; a < actions; ++a)
                if (q_online(m * actions + a, i) > q_online(m * actions + best, i)) best = a;
            batch.targets(m, i) = reward[static_cast<std::size_t>(i)] + config_.gamma * q_target(m * actions + best, i);
            batch.mask(m, i) = bootstrap_.uniform() < 0.5 ? 1.0 : 0.0;
        }
    return batch;
}

std::optional<DqnStepStats> DqnAgent::train_step() {
    if (main_.size() < config_.batch_main) return std::nullopt;
    DqnStepStats stats;
    const TrainBatch batch = sample_batch(&stats.main_items, &stats.side_items);
    Eigen::VectorXd grad;
    stats.loss = online_.loss_and_grad(batch, grad);
    adam_.step(online_.parameters(), grad);
    ++updates_;
    if (updates_ % config_.target_update_every == 0) target_.parameters() = online_.parameters();
    return stats;
}

std::unique_ptr<Agent> make_agent(const std::string& kind, const ItemParams& params, const AgentConfig& config,
                                  const FeedbackGraphSpec& fg, const IntrinsicRewardConfig& intrinsic,
                                  std::uint64_t seed) {
    if (kind == "qtable") return std::make_unique<QAgent>(params, config, fg, seed);
    if (kind == "dqn") return std::make_unique<DqnAgent>(params, config, fg, intrinsic, seed);
    throw ConfigError("unknown agent '" + kind + "' (expected qtable or dqn)");
}

RunLog run_training(const ItemParams& params, Agent& agent, const TrainingSchedule& schedule,
                    const EvalProtocol& eval, std::uint64_t seed, const std::string& run_id) {
    if (schedule.episodes < 0 || schedule.steps_per_episode < 0)
        throw ConfigError("episodes and steps_per_episode must be nonnegative");
    const auto start = std::chrono::steady_clock::now();
    SingleItemEnv env(params);
    const std::uint64_t base = derive_seed(seed, static_cast<std::uint64_t>(Stream::demand));
    RunLog log;
    std::uint64_t steps = 0;
    for (int e = 0; e < schedule.episodes; ++e) {
        agent.begin_episode(e);
        env.reset(derive_seed(base, static_cast<std::uint64_t>(e)));
        for (int t = 0; t < schedule.steps_per_episode; ++t) {
            env.step(agent.act(env.state()));
            agent.observe(env.last_experience());
            ++steps;
        }
        const EvalResult res = evaluate_rollouts(params, [&](const State& s) { return agent.act_greedy(s); }, eval);
        RunLogRow row;
        row.run_id = run_id;
        row.seed = seed;
        row.episode = e + 1;
        row.env_steps = steps;
        row.eval_mean_cost = res.mean_cost;
        row.eval_std = res.std_cost;
        row.beta = agent.beta();
        if (schedule.record_wallclock)
            row.wallclock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        log.append(std::move(row));
    }
    return log;
}

}  // namespace lsic
