#include "lsic/harness.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"

#include "lsic/error.hpp"
#include "lsic/parallel.hpp"

namespace lsic {

using nlohmann::json;

namespace {

const std::set<std::string> kItemKeys = {"c", "h", "p", "L", "a_max", "y_max", "d_max", "d_mean", "gamma", "demand_pmf"};

template <class T>
T get_as(const json& j, const std::string& key) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config key '" + key + "' has the wrong type");
    }
}

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be an object");
    for (const auto& [key, value] : j.items())
        if (!allowed.count(key)) throw ConfigError("unknown config key '" + key + "' in " + where);
}

void apply_item(const json& j, ItemParams& p) {
    if (j.contains("c")) p.c = get_as<double>(j, "c");
    if (j.contains("h")) p.h = get_as<double>(j, "h");
    if (j.contains("p")) p.p = get_as<double>(j, "p");
    if (j.contains("L")) p.lead_time = get_as<int>(j, "L");
    if (j.contains("a_max")) p.a_max = get_as<int>(j, "a_max");
    if (j.contains("y_max")) p.y_max = get_as<int>(j, "y_max");
    if (j.contains("d_max")) p.d_max = get_as<int>(j, "d_max");
    if (j.contains("d_mean")) p.d_mean = get_as<double>(j, "d_mean");
    if (j.contains("gamma")) p.gamma = get_as<double>(j, "gamma");
    if (j.contains("demand_pmf")) {
        if (j.at("demand_pmf").is_null())
            p.demand_pmf.reset();
        else
            p.demand_pmf = get_as<std::vector<double>>(j, "demand_pmf");
    }
}

ItemParams parse_item(const json& j, const ItemParams& base, const std::string& where) {
    check_keys(j, kItemKeys, where);
    ItemParams p = base;
    apply_item(j, p);
    p.validate();
    return p;
}

EnvConfig parse_env(const json& j) {
    EnvConfig env;
    apply_item(j, env.item);
    env.item.validate();
    if (j.contains("items")) {
        const json& items = j.at("items");
        if (items.is_number_integer()) {
            env.items = multi_item_preset(items.get<int>(), env.item);
        } else if (items.is_array()) {
            for (std::size_t i = 0; i < items.size(); ++i)
                env.items.push_back(parse_item(items[i], env.item, "items[" + std::to_string(i) + "]"));
        } else {
            throw ConfigError("'items' must be a preset size or an array");
        }
    }
    if (j.contains("echelon")) {
        const json& e = j.at("echelon");
        if (e.is_number_integer()) {
            env.echelon = multi_echelon_preset(e.get<int>(), env.item);
        } else {
            check_keys(e, {"warehouse", "retailers", "warehouse_initial_y"}, "echelon");
            MultiEchelonConfig cfg;
            cfg.warehouse = e.contains("warehouse") ? parse_item(e.at("warehouse"), env.item, "echelon.warehouse")
                                                    : env.item;
            if (!e.contains("retailers") || !e.at("retailers").is_array() || e.at("retailers").empty())
                throw ConfigError("echelon needs a nonempty 'retailers' array");
            const json& rs = e.at("retailers");
            for (std::size_t i = 0; i < rs.size(); ++i)
                cfg.retailers.push_back(parse_item(rs[i], env.item, "echelon.retailers[" + std::to_string(i) + "]"));
            if (e.contains("warehouse_initial_y")) cfg.warehouse_initial_y = get_as<int>(e, "warehouse_initial_y");
            env.echelon = std::move(cfg);
        }
    }
    return env;
}

void parse_agent(const json& j, ExperimentConfig& cfg) {
    check_keys(j,
               {"kind", "epsilon", "gamma", "lr", "alpha", "target_update_every", "batch_main", "batch_side",
                "replay_main", "replay_side", "hidden", "reward_scale", "fg", "intrinsic"},
               "agent");
    AgentConfig& a = cfg.agent_config;
    if (j.contains("kind")) cfg.agent = get_as<std::string>(j, "kind");
    if (j.contains("epsilon")) a.epsilon = get_as<double>(j, "epsilon");
    if (j.contains("gamma")) a.gamma = get_as<double>(j, "gamma");
    if (j.contains("lr")) a.lr = get_as<double>(j, "lr");
    if (j.contains("alpha")) a.alpha = get_as<double>(j, "alpha");
    if (j.contains("target_update_every")) a.target_update_every = get_as<int>(j, "target_update_every");
    if (j.contains("batch_main")) a.batch_main = get_as<std::size_t>(j, "batch_main");
    if (j.contains("batch_side")) a.batch_side = get_as<std::size_t>(j, "batch_side");
    if (j.contains("replay_main")) a.replay_main = get_as<std::size_t>(j, "replay_main");
    if (j.contains("replay_side")) a.replay_side = get_as<std::size_t>(j, "replay_side");
    if (j.contains("hidden")) a.hidden = get_as<int>(j, "hidden");
    if (j.contains("reward_scale")) a.reward_scale = get_as<double>(j, "reward_scale");
    if (j.contains("fg")) a.use_fg = get_as<bool>(j, "fg");
    if (j.contains("intrinsic")) a.use_intrinsic = get_as<bool>(j, "intrinsic");
}

}  // namespace

std::vector<std::uint64_t> ExperimentConfig::default_seeds() {
    std::vector<std::uint64_t> s(20);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = i;
    return s;
}

void ExperimentConfig::validate() const {
    env.item.validate();
    if (agent != "qtable" && agent != "dqn") throw ConfigError("agent must be 'qtable' or 'dqn'");
    agent_config.validate();
    fg.validate(env.item);
    intrinsic.validate();
    if (seeds.empty()) throw ConfigError("at least one seed is required");
    if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
        throw ConfigError("seeds must be distinct");
    if (episodes < 1) throw ConfigError("episodes must be >= 1");
    if (steps_per_episode < 1) throw ConfigError("steps_per_episode must be >= 1");
    if (eval.episodes < 1 || eval.steps < 1 || eval.warmup < 0)
        throw ConfigError("eval needs episodes >= 1, steps >= 1, warmup >= 0");
    if (run_id.find_first_of(",\"\r\n") != std::string::npos)
        throw ConfigError("run_id may not contain commas, quotes or line breaks");
}

ExperimentConfig parse_experiment_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config must be a JSON object");

    std::set<std::string> top = {"env",       "agent",    "fg",     "intrinsic", "eval",  "seeds",
                                 "episodes",  "steps_per_episode",  "record_wallclock", "run_id", "items",
                                 "echelon"};
    top.insert(kItemKeys.begin(), kItemKeys.end());
    check_keys(j, top, "config");

    ExperimentConfig cfg;
    json env_json = json::object();
    for (const auto& [key, value] : j.items())
        if (kItemKeys.count(key) || key == "items" || key == "echelon") env_json[key] = value;
    if (j.contains("env")) {
        if (!env_json.empty()) throw ConfigError("env keys must sit either at the top level or under 'env'");
        env_json = j.at("env");
        std::set<std::string> allowed = kItemKeys;
        allowed.insert({"items", "echelon"});
        check_keys(env_json, allowed, "env");
    }
    cfg.env = parse_env(env_json);
    cfg.agent_config.gamma = cfg.env.item.gamma;

    if (j.contains("agent")) parse_agent(j.at("agent"), cfg);
    if (j.contains("fg")) {
        const json& f = j.at("fg");
        check_keys(f, {"dims", "cap"}, "fg");
        if (f.contains("dims")) cfg.fg.enumerate_pipeline_dims = get_as<int>(f, "dims");
        if (f.contains("cap") && !f.at("cap").is_null()) cfg.fg.cap_side_per_experience = get_as<std::size_t>(f, "cap");
    }
    if (j.contains("intrinsic")) {
        const json& in = j.at("intrinsic");
        check_keys(in, {"beta0", "beta_decay", "heads"}, "intrinsic");
        if (in.contains("beta0")) cfg.intrinsic.beta0 = get_as<double>(in, "beta0");
        if (in.contains("beta_decay")) cfg.intrinsic.beta_decay = get_as<double>(in, "beta_decay");
        if (in.contains("heads")) cfg.intrinsic.heads = get_as<int>(in, "heads");
    }
    if (j.contains("eval")) {
        const json& e = j.at("eval");
        check_keys(e, {"episodes", "steps", "warmup"}, "eval");
        if (e.contains("episodes")) cfg.eval.episodes = get_as<int>(e, "episodes");
        if (e.contains("steps")) cfg.eval.steps = get_as<int>(e, "steps");
        if (e.contains("warmup")) cfg.eval.warmup = get_as<int>(e, "warmup");
    }
    if (j.contains("seeds")) cfg.seeds = get_as<std::vector<std::uint64_t>>(j, "seeds");
    if (j.contains("episodes")) cfg.episodes = get_as<int>(j, "episodes");
    if (j.contains("steps_per_episode")) cfg.steps_per_episode = get_as<int>(j, "steps_per_episode");
    if (j.contains("record_wallclock")) cfg.record_wallclock = get_as<bool>(j, "record_wallclock");
    if (j.contains("run_id")) cfg.run_id = get_as<std::string>(j, "run_id");
    cfg.validate();
    return cfg;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
    std::vector<std::uint64_t> out;
    std::istringstream in(text);
    std::string item;
    auto number = [&](const std::string& f) {
        if (f.empty() || f.find_first_not_of("0123456789") != std::string::npos)
            throw ConfigError("bad seed list '" + text + "'");
        return static_cast<std::uint64_t>(std::stoull(f));
    };
    while (std::getline(in, item, ',')) {
        const std::size_t dash = item.find('-');
        if (dash == std::string::npos) {
            out.push_back(number(item));
            continue;
        }
        const std::uint64_t lo = number(item.substr(0, dash)), hi = number(item.substr(dash + 1));
        if (hi < lo || hi - lo >= 1'000'000) throw ConfigError("bad seed range '" + item + "'");
        for (std::uint64_t s = lo; s <= hi; ++s) out.push_back(s);
    }
    if (out.empty()) throw ConfigError("empty seed list");
    if (std::set<std::uint64_t>(out.begin(), out.end()).size() != out.size())
        throw ConfigError("seeds must be distinct");
    return out;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    return parse_experiment_config(read_text(path));
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    out.flush();
    if (!out) throw IoError("write failed for " + path.string());
}

// ---- CSV -------------------------------------------------------------------

std::string format_real(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

double parse_real(const std::string& field) {
    if (field.empty()) throw IoError("empty numeric field");
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(field.c_str(), &end);
    const bool overflow = errno == ERANGE && std::isinf(v);
    if (end != field.c_str() + field.size() || overflow) throw IoError("bad numeric field '" + field + "'");
    return v;
}

namespace {

std::uint64_t parse_uint(const std::string& field) {
    if (field.empty() || field.find_first_not_of("0123456789") != std::string::npos)
        throw IoError("bad integer field '" + field + "'");
    errno = 0;
    const unsigned long long v = std::strtoull(field.c_str(), nullptr, 10);
    if (errno == ERANGE) throw IoError("integer field out of range '" + field + "'");
    return v;
}

int parse_int(const std::string& field) {
    const std::uint64_t v = parse_uint(field);
    if (v > static_cast<std::uint64_t>(std::numeric_limits<int>::max()))
        throw IoError("integer field out of range '" + field + "'");
    return static_cast<int>(v);
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        out.push_back(line.substr(start, comma - start));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

// Data rows of a CSV with the given header, split into fields.
std::vector<std::vector<std::string>> csv_rows(const std::string& text, const std::string& header) {
    if (text.find('\r') != std::string::npos) throw IoError("CSV must use LF line endings");
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != header) throw IoError("CSV header mismatch, expected: " + header);
    const std::size_t columns = split(header).size();
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        auto fields = split(line);
        if (fields.size() != columns)
            throw IoError("CSV row " + std::to_string(rows.size() + 1) + " has " + std::to_string(fields.size()) +
                          " fields, expected " + std::to_string(columns));
        rows.push_back(std::move(fields));
    }
    return rows;
}

}  // namespace

std::string runlog_to_csv(const RunLog& log) {
    std::string out = std::string(kRunLogHeader) + "\n";
    for (const auto& r : log.rows) {
        if (r.run_id.find_first_of(",\"\r\n") != std::string::npos)
            throw ConfigError("run_id may not contain commas, quotes or line breaks");
        out += r.run_id + "," + std::to_string(r.seed) + "," + std::to_string(r.episode) + "," +
               std::to_string(r.env_steps) + "," + format_real(r.eval_mean_cost) + "," + format_real(r.eval_std) +
               "," + format_real(r.beta) + "," + format_real(r.wallclock_s) + "\n";
    }
    return out;
}

RunLog runlog_from_csv(const std::string& text) {
    RunLog log;
    for (const auto& f : csv_rows(text, kRunLogHeader)) {
        RunLogRow r;
        r.run_id = f[0];
        r.seed = parse_uint(f[1]);
        r.episode = parse_int(f[2]);
        r.env_steps = parse_uint(f[3]);
        r.eval_mean_cost = parse_real(f[4]);
        r.eval_std = parse_real(f[5]);
        r.beta = parse_real(f[6]);
        r.wallclock_s = parse_real(f[7]);
        try {
            log.append(std::move(r));
        } catch (const ConfigError& e) {
            throw IoError(e.what());
        }
    }
    return log;
}

Summary summarize(const std::vector<RunLog>& logs) {
    if (logs.empty()) throw ConfigError("nothing to summarize");
    const std::size_t n = logs.front().rows.size();
    for (const auto& log : logs) {
        if (log.rows.size() != n) throw ComparisonError("runs have different episode counts");
        for (std::size_t i = 0; i < n; ++i)
            if (log.rows[i].episode != logs.front().rows[i].episode ||
                log.rows[i].env_steps != logs.front().rows[i].env_steps)
                throw ComparisonError("runs have different episode grids");
    }
    Summary out(n);
    for (std::size_t i = 0; i < n; ++i) {
        SummaryRow& s = out[i];
        s.episode = logs.front().rows[i].episode;
        s.env_steps = logs.front().rows[i].env_steps;
        s.seeds = logs.size();
        for (const auto& log : logs) s.mean += log.rows[i].eval_mean_cost;
        s.mean /= static_cast<double>(logs.size());
        for (const auto& log : logs) {
            const double d = log.rows[i].eval_mean_cost - s.mean;
            s.std += d * d;
        }
        s.std = std::sqrt(s.std / static_cast<double>(logs.size()));
    }
    return out;
}

std::string summary_to_csv(const Summary& summary) {
    std::string out = std::string(kSummaryHeader) + "\n";
    for (const auto& s : summary)
        out += std::to_string(s.episode) + "," + std::to_string(s.env_steps) + "," + format_real(s.mean) + "," +
               format_real(s.std) + "," + std::to_string(s.seeds) + "\n";
    return out;
}

Summary summary_from_csv(const std::string& text) {
    Summary out;
    for (const auto& f : csv_rows(text, kSummaryHeader)) {
        SummaryRow s;
        s.episode = parse_int(f[0]);
        s.env_steps = parse_uint(f[1]);
        s.mean = parse_real(f[2]);
        s.std = parse_real(f[3]);
        s.seeds = parse_uint(f[4]);
        if (!out.empty() && s.episode <= out.back().episode)
            throw IoError("summary episodes must be strictly increasing");
        out.push_back(s);
    }
    return out;
}

// ---- experiments -------------------------------------------------------------

RunLog run_seed(const ExperimentConfig& config, std::uint64_t seed) {
    if (!config.env.items.empty() || config.env.echelon)
        throw ConfigError("training runs on single-item environments only");
    auto agent = make_agent(config.agent, config.env.item, config.agent_config, config.fg, config.intrinsic, seed);
    TrainingSchedule schedule;
    schedule.episodes = config.episodes;
    schedule.steps_per_episode = config.steps_per_episode;
    schedule.record_wallclock = config.record_wallclock;
    EvalProtocol eval = config.eval;
    eval.seed = seed;
    return run_training(config.env.item, *agent, schedule, eval, seed, config.run_id);
}

std::filesystem::path seed_csv_path(const std::filesystem::path& dir, std::uint64_t seed) {
    return dir / ("seed_" + std::to_string(seed) + ".csv");
}

ExperimentResult run_experiment(const ExperimentConfig& config, int workers,
                                const std::optional<std::filesystem::path>& out_dir) {
    config.validate();
    if (out_dir) {
        std::error_code ec;
        std::filesystem::create_directories(*out_dir, ec);
        if (ec) throw IoError("cannot create " + out_dir->string() + ": " + ec.message());
    }
    ExperimentResult result;
    result.logs.resize(config.seeds.size());
    parallel_for(config.seeds.size(), workers, [&](std::size_t i) {
        result.logs[i] = run_seed(config, config.seeds[i]);
        if (out_dir) write_text(seed_csv_path(*out_dir, config.seeds[i]), runlog_to_csv(result.logs[i]));
    });

    // aggregate in ascending seed order so the summary ignores list order
    std::vector<std::size_t> order(config.seeds.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return config.seeds[a] < config.seeds[b]; });
    std::vector<RunLog> sorted;
    for (std::size_t i : order) sorted.push_back(result.logs[i]);
    result.summary = summarize(sorted);
    if (out_dir) write_text(*out_dir / "summary.csv", summary_to_csv(result.summary));
    return result;
}

ComparisonReport compare_runs(const Summary& a, const Summary& b, std::optional<double> threshold) {
    if (a.empty() || b.empty()) throw ComparisonError("cannot compare an empty summary");
    if (a.size() != b.size()) throw ComparisonError("episode grids differ in length");
    ComparisonReport report;
    report.threshold = threshold;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].episode != b[i].episode)
            throw ComparisonError("episode grids differ at row " + std::to_string(i + 1));
        report.rows.push_back({a[i].episode, a[i].mean, b[i].mean, a[i].mean - b[i].mean});
        if (threshold) {
            if (!report.crossing_a && a[i].mean <= *threshold) report.crossing_a = a[i].episode;
            if (!report.crossing_b && b[i].mean <= *threshold) report.crossing_b = b[i].episode;
        }
    }
    report.final_gap = report.rows.back().difference;
    return report;
}

std::string comparison_to_csv(const ComparisonReport& report) {
    std::string out = "episode,mean_a,mean_b,difference\n";
    for (const auto& r : report.rows)
        out += std::to_string(r.episode) + "," + format_real(r.mean_a) + "," + format_real(r.mean_b) + "," +
               format_real(r.difference) + "\n";
    return out;
}

std::string comparison_digest(const ComparisonReport& report) {
    auto crossing = [](const std::optional<int>& c) { return c ? std::to_string(*c) : std::string("not reached"); };
    std::string out = "final_gap," + format_real(report.final_gap) + "\n";
    if (report.threshold) {
        out += "threshold," + format_real(*report.threshold) + "\n";
        out += "crossing_a," + crossing(report.crossing_a) + "\n";
        out += "crossing_b," + crossing(report.crossing_b) + "\n";
    }
    return out;
}

std::optional<int> first_crossing(const RunLog& log, double threshold) {
    for (const auto& r : log.rows)
        if (r.eval_mean_cost <= threshold) return r.episode;
    return std::nullopt;
}

}  // namespace lsic
