#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lsic/agents.hpp"
#include "lsic/curiosity.hpp"
#include "lsic/env.hpp"
#include "lsic/fg.hpp"
#include "lsic/runlog.hpp"

namespace lsic {

// Environment section of a config file. `item` drives single-item commands;
// `items` and `echelon` describe the multi-node presets when given.
struct EnvConfig {
    ItemParams item;
    std::vector<ItemParams> items;
    std::optional<MultiEchelonConfig> echelon;
};

struct ExperimentConfig {
    EnvConfig env;
    std::string agent = "dqn";  // qtable | dqn
    AgentConfig agent_config;
    FeedbackGraphSpec fg;
    IntrinsicRewardConfig intrinsic;
    std::vector<std::uint64_t> seeds = default_seeds();
    int episodes = 100;
    int steps_per_episode = 1000;
    EvalProtocol eval;  // seed is replaced by the run seed
    bool record_wallclock = false;
    std::string run_id = "run";

    static std::vector<std::uint64_t> default_seeds();  // 0..19
    void validate() const;
};

// JSON schema (all keys optional):
//   env keys       c h p L a_max y_max d_max d_mean gamma demand_pmf
//                  items: [ {env keys} ]  echelon: {warehouse, retailers, warehouse_initial_y}
//   "agent"        {kind, epsilon, gamma, lr, alpha, target_update_every, batch_main,
//                   batch_side, replay_main, replay_side, hidden, reward_scale, fg, intrinsic}
//   "fg"           {dims, cap}
//   "intrinsic"    {beta0, beta_decay, heads}
//   "eval"         {episodes, steps, warmup}
//   seeds episodes steps_per_episode record_wallclock run_id
// Env keys may sit at the top level or under "env". Item entries and the
// echelon nodes inherit unspecified keys from the base item. The agent's gamma
// defaults to the env gamma. Unknown keys raise ConfigError.
ExperimentConfig parse_experiment_config(const std::string& json_text);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

// "0-4,7,9" -> {0,1,2,3,4,7,9}. Order is kept; duplicates raise ConfigError.
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

// ---- CSV -----------------------------------------------------------------
// UTF-8, LF line endings, '.' decimal point, reals with 17 significant digits.

inline constexpr const char* kRunLogHeader =
    "run_id,seed,episode,env_steps_cumulative,eval_mean_cost,eval_std,beta_current,wallclock_s";
inline constexpr const char* kSummaryHeader = "episode,env_steps_cumulative,mean_eval_cost,std_eval_cost,seeds";

std::string format_real(double x);
double parse_real(const std::string& field);

std::string runlog_to_csv(const RunLog& log);
RunLog runlog_from_csv(const std::string& text);

struct SummaryRow {
    int episode = 0;
    std::uint64_t env_steps = 0;
    double mean = 0.0;
    double std = 0.0;  // population std across seeds
    std::size_t seeds = 0;

    friend bool operator==(const SummaryRow&, const SummaryRow&) = default;
};

using Summary = std::vector<SummaryRow>;

// Per-episode aggregate over runs with identical episode grids.
Summary summarize(const std::vector<RunLog>& logs);
std::string summary_to_csv(const Summary& summary);
Summary summary_from_csv(const std::string& text);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

// ---- experiments -----------------------------------------------------------

RunLog run_seed(const ExperimentConfig& config, std::uint64_t seed);

struct ExperimentResult {
    std::vector<RunLog> logs;  // config seed order
    Summary summary;
};

// Runs every seed on up to `workers` threads. With `out_dir` set, writes
// seed_<seed>.csv per run and summary.csv.
ExperimentResult run_experiment(const ExperimentConfig& config, int workers = 1,
                                const std::optional<std::filesystem::path>& out_dir = std::nullopt);

std::filesystem::path seed_csv_path(const std::filesystem::path& dir, std::uint64_t seed);

struct ComparisonRow {
    int episode = 0;
    double mean_a = 0.0;
    double mean_b = 0.0;
    double difference = 0.0;  // a - b
};

struct ComparisonReport {
    std::vector<ComparisonRow> rows;
    double final_gap = 0.0;  // last-episode a - b
    std::optional<double> threshold;
    std::optional<int> crossing_a;  // first episode with mean <= threshold
    std::optional<int> crossing_b;
};

// Throws ComparisonError when the episode grids differ.
ComparisonReport compare_runs(const Summary& a, const Summary& b, std::optional<double> threshold = std::nullopt);
std::string comparison_to_csv(const ComparisonReport& report);
// "final_gap,<x>" and one "crossing_<a|b>,<episode|not reached>" line each.
std::string comparison_digest(const ComparisonReport& report);

// First episode whose eval cost is <= threshold.
std::optional<int> first_crossing(const RunLog& log, double threshold);

}  // namespace lsic
