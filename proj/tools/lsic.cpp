// Command-line front end. Every command writes CSV (or the binary policy
// format) and exits nonzero with one "error:<kind>: message" line on failure.

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "lsic/error.hpp"
#include "lsic/harness.hpp"
#include "lsic/heuristics.hpp"
#include "lsic/theory.hpp"

using namespace lsic;

namespace {

struct Globals {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string seeds;
    std::string out;
    int workers = 1;
};

struct TrainOptions {
    std::string agent;
    std::string fg;
    std::string intrinsic;
    std::optional<int> fg_dims;
    std::optional<std::size_t> fg_cap;
    std::optional<double> beta0;
    std::optional<double> beta_decay;
    std::optional<int> heads;
    bool no_intrinsic = false;
    std::optional<int> episodes;
    std::optional<int> steps;
    std::string run_id;
};

struct EvalOptions {
    std::optional<int> episodes;
    std::optional<int> steps;
    std::optional<int> warmup;
};

struct EvaluateOptions {
    std::string policy_file;
    std::string heuristic;
    HeuristicParams hp;
    std::optional<double> service_ratio;
};

struct SearchOptions {
    std::string policy;
    std::optional<int> s_max;
};

struct OptimalOptions {
    double tol = 1e-8;
    std::string stop = "span";
    int max_sweeps = 1'000'000;
};

struct TheoryOptions {
    long mc_steps = 1'000'000;
    int y = 0;
    bool censored = false;
};

struct CompareOptions {
    std::string a, b;
    std::optional<double> threshold;
};

ExperimentConfig base_config(const Globals& g) {
    return g.config.empty() ? parse_experiment_config("{}") : load_experiment_config(g.config);
}

bool on_off(const std::string& value, const std::string& flag) {
    if (value == "on") return true;
    if (value == "off") return false;
    throw ConfigError(flag + " takes 'on' or 'off'");
}

void emit(const Globals& g, const std::string& text) {
    if (g.out.empty())
        std::cout << text;
    else
        write_text(g.out, text);
}

void apply_eval(const EvalOptions& e, EvalProtocol& eval) {
    if (e.episodes) eval.episodes = *e.episodes;
    if (e.steps) eval.steps = *e.steps;
    if (e.warmup) eval.warmup = *e.warmup;
}

std::uint64_t single_seed(const Globals& g) {
    if (!g.seeds.empty()) throw ConfigError("this command takes --seed, not --seeds");
    return g.seed.value_or(0);
}

void run_train(const Globals& g, const TrainOptions& t, const EvalOptions& e) {
    ExperimentConfig cfg = base_config(g);
    if (!t.agent.empty()) cfg.agent = t.agent;
    if (!t.fg.empty()) cfg.agent_config.use_fg = on_off(t.fg, "--fg");
    if (!t.intrinsic.empty()) cfg.agent_config.use_intrinsic = on_off(t.intrinsic, "--intrinsic");
    if (t.fg_dims) cfg.fg.enumerate_pipeline_dims = *t.fg_dims;
    if (t.fg_cap) cfg.fg.cap_side_per_experience = *t.fg_cap;
    if (t.beta0) cfg.intrinsic.beta0 = *t.beta0;
    if (t.beta_decay) cfg.intrinsic.beta_decay = *t.beta_decay;
    if (t.heads) cfg.intrinsic.heads = *t.heads;
    if (t.no_intrinsic) cfg.intrinsic.beta0 = 0.0;
    if (t.episodes) cfg.episodes = *t.episodes;
    if (t.steps) cfg.steps_per_episode = *t.steps;
    if (!t.run_id.empty()) cfg.run_id = t.run_id;
    apply_eval(e, cfg.eval);

    if (g.seed && !g.seeds.empty()) throw ConfigError("give either --seed or --seeds");
    if (g.seed) {
        cfg.seeds = {*g.seed};
        cfg.validate();
        emit(g, runlog_to_csv(run_seed(cfg, *g.seed)));
        return;
    }
    if (!g.seeds.empty()) cfg.seeds = parse_seed_list(g.seeds);
    if (g.out.empty()) throw ConfigError("a seed sweep needs --out DIR");
    const auto res = run_experiment(cfg, g.workers, std::filesystem::path(g.out));
    std::cout << "runs," << res.logs.size() << "\nsummary," << (std::filesystem::path(g.out) / "summary.csv").string()
              << "\nfinal_mean_cost," << format_real(res.summary.back().mean) << "\n";
}

void run_evaluate(const Globals& g, const EvaluateOptions& o, const EvalOptions& e) {
    ExperimentConfig cfg = base_config(g);
    EvalProtocol eval = cfg.eval;
    apply_eval(e, eval);
    eval.seed = single_seed(g);
    const ItemParams& params = cfg.env.item;

    EvalResult res;
    std::string name;
    if (!o.policy_file.empty() == !o.heuristic.empty())
        throw ConfigError("evaluate needs exactly one of --policy-file or --heuristic");
    if (!o.policy_file.empty()) {
        const PolicyTable table = read_policy(o.policy_file);
        res = evaluate_policy(table, params, eval);
        name = "table";
    } else {
        HeuristicParams hp = o.hp;
        hp.service_ratio = o.service_ratio;
        const HeuristicKind kind = parse_heuristic(o.heuristic);
        hp.validate(params);
        HeuristicPolicy policy(kind, hp, params);
        res = evaluate_rollouts(params, policy, eval);
        name = to_string(kind);
    }
    emit(g, "policy,episodes,steps,warmup,seed,mean_cost,std_cost\n" + name + "," + std::to_string(eval.episodes) +
                "," + std::to_string(eval.steps) + "," + std::to_string(eval.warmup) + "," +
                std::to_string(eval.seed) + "," + format_real(res.mean_cost) + "," + format_real(res.std_cost) + "\n");
}

void run_search(const Globals& g, const SearchOptions& o, const EvalOptions& e) {
    ExperimentConfig cfg = base_config(g);
    EvalProtocol eval = cfg.eval;
    apply_eval(e, eval);
    eval.seed = single_seed(g);
    const HeuristicKind kind = parse_heuristic(o.policy);
    const auto grid = default_grid(kind, cfg.env.item, o.s_max);
    const auto res = grid_search(kind, cfg.env.item, grid, eval, g.workers);

    std::string csv = "policy,r,S,theta,service_ratio,mean_cost,std_cost,best\n";
    for (const auto& pt : res.points) {
        const auto& hp = pt.params;
        csv += to_string(kind) + "," + format_real(hp.r) + "," + std::to_string(hp.S) + "," + format_real(hp.theta) +
               "," + (hp.service_ratio ? format_real(*hp.service_ratio) : std::string()) + "," +
               format_real(pt.mean_cost) + "," + format_real(pt.std_cost) + "," +
               (hp == res.best.params ? "1" : "0") + "\n";
    }
    emit(g, csv);
    if (!g.out.empty())
        std::cout << "best_mean_cost," << format_real(res.best.mean_cost) << "\nbest_r," << format_real(res.best.params.r)
                  << "\nbest_S," << res.best.params.S << "\n";
}

void run_optimal(const Globals& g, const OptimalOptions& o) {
    const ExperimentConfig cfg = base_config(g);
    const ItemParams& params = cfg.env.item;
    ValueIterationOptions vi;
    vi.tol = o.tol;
    vi.max_sweeps = o.max_sweeps;
    vi.threads = g.workers;
    if (o.stop == "span")
        vi.stop = StopRule::span;
    else if (o.stop == "sup")
        vi.stop = StopRule::sup_norm;
    else
        throw ConfigError("--stop takes 'span' or 'sup'");
    const DemandModel demand = DemandModel::for_item(params);
    const auto res = value_iteration(params, demand, vi);
    const PolicyTable table(params, res.policy);
    if (!g.out.empty()) write_policy(g.out, table);
    std::cout << "sweeps," << res.sweeps << "\nconverged," << (res.converged ? 1 : 0) << "\naverage_cost,"
              << format_real(average_cost(params, demand, table)) << "\n";
}

std::string kv(const std::string& key, double value) { return key + "," + format_real(value) + "\n"; }

void run_verify_mu(const Globals& g, const TheoryOptions& o) {
    TinyMDP mdp = TinyMDP::make_default();
    if (!g.config.empty()) {
        const ItemParams params = load_experiment_config(g.config).env.item;
        mdp = TinyMDP::uniform(params, DemandModel::for_item(params));
    }
    const auto rep = verify_update_probability(mdp, o.mc_steps, single_seed(g));
    std::string out = "key,value\n";
    out += kv("pairs", static_cast<double>(mdp.pairs()));
    out += kv("mu_min", rep.mu_min);
    out += kv("mu_tilde_min", rep.mu_tilde_min);
    out += kv("improvement_factor", rep.improvement_factor);
    out += kv("violations", static_cast<double>(rep.violations));
    out += kv("semantics_gap", rep.semantics_gap);
    out += kv("mc_visit_error", rep.mc_visit_error);
    out += kv("mc_error", rep.mc_error);
    out += kv("mc_error_generated", rep.mc_error_generated);
    emit(g, out);
}

void run_graph_numbers(const Globals& g, const TheoryOptions& o) {
    ItemParams params;
    params.y_max = 5;
    params.a_max = 1;
    params.lead_time = 1;
    params.d_max = 5;
    if (!g.config.empty()) params = load_experiment_config(g.config).env.item;
    if (o.y < 0 || o.y > params.y_max) throw ConfigError("--y must lie in [0, y_max]");
    const GraphNumbers printed = graph_numbers(o.y, o.censored, params);
    const GraphNumbers zero = graph_numbers_zero_based(o.y, o.censored, params);
    std::string out = "indexing,omega,alpha,zeta\n";
    auto row = [](const std::string& name, const GraphNumbers& n) {
        return name + "," + std::to_string(n.omega) + "," + std::to_string(n.alpha) + "," + std::to_string(n.zeta) + "\n";
    };
    out += row("closed_form", printed);
    out += row("closed_form_zero_based", zero);
    for (auto [name, idx] : {std::pair{"bruteforce_one_based", NodeIndexing::one_based},
                             std::pair{"bruteforce_zero_based", NodeIndexing::zero_based}}) {
        try {
            out += row(name, graph_numbers_bruteforce(build_feedback_graph(o.y, o.censored, params, idx)));
        } catch (const SizeError&) {
            // too many nodes for exhaustive search
        }
    }
    emit(g, out);
}

void run_degenerate(const Globals& g) {
    ItemParams params;
    params.y_max = 5;
    params.a_max = 1;
    params.lead_time = 1;
    params.d_max = 5;
    if (!g.config.empty()) params = load_experiment_config(g.config).env.item;
    std::string out = "d,ratio,ratio_recurrent,bound,holds\n";
    for (int d = 0; d < params.y_max; ++d) {
        std::vector<double> pmf(static_cast<std::size_t>(std::max(params.d_max, params.y_max)) + 1, 0.0);
        pmf[static_cast<std::size_t>(d)] = 1.0;
        const auto rep = verify_degenerate_factor(TinyMDP::uniform(params, DemandModel::from_pmf(pmf)));
        out += std::to_string(d) + "," + format_real(rep.ratio) + "," + format_real(rep.ratio_recurrent) + "," +
               format_real(rep.bound) + "," + (rep.holds ? "1" : "0") + "\n";
    }
    emit(g, out);
}

void run_compare(const Globals& g, const CompareOptions& o) {
    const auto rep = compare_runs(summary_from_csv(read_text(o.a)), summary_from_csv(read_text(o.b)), o.threshold);
    emit(g, comparison_to_csv(rep));
    std::cout << comparison_digest(rep);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Lost-sales inventory control experiments"};
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--config", g.config, "JSON config file");
    app.add_option("--seed", g.seed, "Run seed");
    app.add_option("--seeds", g.seeds, "Seed list, e.g. 0-19 or 1,4,7");
    app.add_option("--out", g.out, "Output file or directory");
    app.add_option("--workers", g.workers, "Worker threads")->check(CLI::PositiveNumber);

    EvalOptions eval;
    auto add_eval = [&](CLI::App* sub) {
        sub->add_option("--eval-episodes", eval.episodes, "Test episodes per checkpoint");
        sub->add_option("--eval-steps", eval.steps, "Scored periods per test episode");
        sub->add_option("--warmup", eval.warmup, "Unscored periods before scoring");
    };

    TrainOptions train;
    auto* train_cmd = app.add_subcommand("train", "Train an agent on one seed or a seed sweep");
    train_cmd->add_option("--agent", train.agent, "qtable or dqn")->check(CLI::IsMember({"qtable", "dqn"}));
    train_cmd->add_option("--fg", train.fg, "on or off");
    train_cmd->add_option("--intrinsic", train.intrinsic, "on or off");
    train_cmd->add_option("--fg-dims", train.fg_dims, "Enumerated pipeline dimensions");
    train_cmd->add_option("--fg-cap", train.fg_cap, "Side experiences kept per real experience");
    train_cmd->add_option("--beta0", train.beta0, "Initial intrinsic weight");
    train_cmd->add_option("--beta-decay", train.beta_decay, "Per-episode intrinsic weight decay");
    train_cmd->add_option("--heads", train.heads, "Ensemble heads");
    train_cmd->add_flag("--no-intrinsic", train.no_intrinsic, "Set beta0 to 0");
    train_cmd->add_option("--episodes", train.episodes, "Training episodes");
    train_cmd->add_option("--steps", train.steps, "Steps per training episode");
    train_cmd->add_option("--run-id", train.run_id, "run_id column value");
    add_eval(train_cmd);

    EvaluateOptions evaluate;
    auto* eval_cmd = app.add_subcommand("evaluate", "Score a stored policy table or a heuristic");
    eval_cmd->add_option("--policy-file", evaluate.policy_file, "Binary policy from 'optimal'");
    eval_cmd->add_option("--heuristic", evaluate.heuristic, "Heuristic name");
    eval_cmd->add_option("--r", evaluate.hp.r, "Order rate");
    eval_cmd->add_option("--S", evaluate.hp.S, "Base-stock level");
    eval_cmd->add_option("--theta", evaluate.hp.theta, "Bracket phase");
    eval_cmd->add_option("--service-ratio", evaluate.service_ratio, "Myopic service ratio");
    add_eval(eval_cmd);

    SearchOptions search;
    auto* search_cmd = app.add_subcommand("heuristic-search", "Grid-search a heuristic's parameters");
    search_cmd->add_option("--policy", search.policy, "Heuristic name")->required();
    search_cmd->add_option("--s-max", search.s_max, "Largest base-stock level in the grid");
    add_eval(search_cmd);

    OptimalOptions optimal;
    auto* optimal_cmd = app.add_subcommand("optimal", "Solve for the optimal policy by value iteration");
    optimal_cmd->add_option("--tol", optimal.tol, "Stopping tolerance");
    optimal_cmd->add_option("--stop", optimal.stop, "span or sup");
    optimal_cmd->add_option("--max-sweeps", optimal.max_sweeps, "Sweep limit");

    TheoryOptions theory;
    auto* theory_cmd = app.add_subcommand("theory", "Update-probability and graph checks");
    theory_cmd->require_subcommand(1);
    auto* mu_cmd = theory_cmd->add_subcommand("verify-mu", "Exact and simulated update probabilities");
    mu_cmd->add_option("--mc-steps", theory.mc_steps, "Simulated steps");
    auto* graph_cmd = theory_cmd->add_subcommand("graph-numbers", "Closed-form and brute-force graph numbers");
    graph_cmd->add_option("--y", theory.y, "Visited inventory")->required();
    graph_cmd->add_flag("--censored", theory.censored, "Censored visit");
    auto* degenerate_cmd = theory_cmd->add_subcommand("degenerate-factor", "Improvement factor under degenerate demand");

    CompareOptions compare;
    auto* compare_cmd = app.add_subcommand("compare", "Compare two summary CSVs");
    compare_cmd->add_option("--a", compare.a, "First summary CSV")->required();
    compare_cmd->add_option("--b", compare.b, "Second summary CSV")->required();
    compare_cmd->add_option("--threshold", compare.threshold, "Target cost");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::fprintf(stderr, "error:usage: %s\n", e.what());
        return 2;
    }

    try {
        if (*train_cmd) run_train(g, train, eval);
        else if (*eval_cmd) run_evaluate(g, evaluate, eval);
        else if (*search_cmd) run_search(g, search, eval);
        else if (*optimal_cmd) run_optimal(g, optimal);
        else if (*mu_cmd) run_verify_mu(g, theory);
        else if (*graph_cmd) run_graph_numbers(g, theory);
        else if (*degenerate_cmd) run_degenerate(g);
        else if (*compare_cmd) run_compare(g, compare);
    } catch (const Error& e) {
        std::fprintf(stderr, "error:%s: %s\n", e.kind().c_str(), e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error:internal: %s\n", e.what());
        return 1;
    }
    return 0;
}
