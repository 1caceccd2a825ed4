#pragma once

// Batch benchmark harness: runs seeded trial matrices across tasks x
// strategies, aggregates success rates, and emits table/CSV/JSON reports.
// Identical configurations always reproduce byte-identical outputs.

#include <atomic>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "planmon/monitor.hpp"
#include "planmon/util.hpp"

namespace planmon::bench {

using monitor::Strategy;

struct TaskSpec {
    std::string name;
    std::string domain_path;
    std::string problem_path;

    bool operator==(const TaskSpec&) const = default;
};

struct BenchmarkConfig {
    std::vector<TaskSpec> tasks;
    std::vector<Strategy> strategies;
    std::size_t trials = 1;
    std::uint64_t base_seed = 0;
    perception::PerceptionConfig perception;
    std::string situations_path;
    std::string families_path;
    std::string visibility_path;
    std::string templates_path;
    std::size_t max_steps = 0; // 0 = 10 x initial plan length
    std::size_t max_replans = 25;
    std::size_t threads = 1;
    std::string csv_path;
    std::string json_path;
    std::string table_path;
    std::string trace_dir;
    std::string save_traces = "none"; // none | failures | all
};

// Trial seeds are a pure function of (base seed, task index, strategy index,
// trial index).  The strategy index is deliberately not mixed in: strategies
// face common random numbers, so per-trial outcomes are paired across
// strategies.
inline std::uint64_t derive_seed(std::uint64_t base, std::size_t task_index,
                                 std::size_t strategy_index, std::size_t trial_index) {
    (void)strategy_index;
    std::uint64_t h = Rng::mix(base + 0x9e3779b97f4a7c15ULL * (task_index + 1));
    return Rng::mix(h + 0x9e3779b97f4a7c15ULL * (trial_index + 1));
}

// ---------------------------------------------------------------------------
// Config file: "key = value" lines; 'task' lines may repeat.  Relative paths
// resolve against the config file's directory.

inline BenchmarkConfig parse_benchmark_config(const std::string& text,
                                              const std::string& base_dir) {
    BenchmarkConfig cfg;
    auto resolve = [&](const std::string& p) -> std::string {
        std::filesystem::path path(p);
        if (path.is_absolute() || base_dir.empty()) return p;
        return (std::filesystem::path(base_dir) / path).string();
    };

    std::string default_domain;
    int lineno = 0;
    for (const auto& raw : split(text, '\n')) {
        ++lineno;
        std::string line = trim(strip_comment(raw));
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) +
                              ": expected 'key = value'");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));

        auto as_size = [&]() -> std::size_t {
            try {
                return static_cast<std::size_t>(std::stoull(value));
            } catch (const std::exception&) {
                throw ConfigError("config line " + std::to_string(lineno) +
                                  ": bad number '" + value + "'");
            }
        };
        auto as_double = [&]() -> double {
            try {
                return std::stod(value);
            } catch (const std::exception&) {
                throw ConfigError("config line " + std::to_string(lineno) +
                                  ": bad number '" + value + "'");
            }
        };

        if (key == "domain") {
            default_domain = resolve(value);
        } else if (key == "task") {
            auto fields = split_ws(value);
            if (fields.size() < 2 || fields.size() > 3)
                throw ConfigError("config line " + std::to_string(lineno) +
                                  ": task needs 'name problem [domain]'");
            TaskSpec t;
            t.name = fields[0];
            t.problem_path = resolve(fields[1]);
            t.domain_path = fields.size() == 3 ? resolve(fields[2]) : std::string();
            cfg.tasks.push_back(std::move(t));
        } else if (key == "strategies") {
            for (const auto& s : split(value, ',')) {
                std::string name = trim(s);
                if (name.empty()) continue;
                auto strat = monitor::parse_strategy(name);
                if (!strat)
                    throw ConfigError("config line " + std::to_string(lineno) +
                                      ": unknown strategy '" + name + "'");
                cfg.strategies.push_back(*strat);
            }
        } else if (key == "trials") {
            cfg.trials = as_size();
        } else if (key == "base_seed") {
            cfg.base_seed = as_size();
        } else if (key == "flip_rate") {
            cfg.perception.flip_rate = as_double();
        } else if (key == "skip_rate") {
            cfg.perception.skip_rate = as_double();
        } else if (key == "gate_on_inview") {
            cfg.perception.gate_on_inview = as_size() != 0;
        } else if (key == "situations") {
            cfg.situations_path = resolve(value);
        } else if (key == "families") {
            cfg.families_path = resolve(value);
        } else if (key == "visibility") {
            cfg.visibility_path = resolve(value);
        } else if (key == "templates") {
            cfg.templates_path = resolve(value);
        } else if (key == "max_steps") {
            cfg.max_steps = as_size();
        } else if (key == "max_replans") {
            cfg.max_replans = as_size();
        } else if (key == "threads") {
            cfg.threads = std::max<std::size_t>(1, as_size());
        } else if (key == "csv") {
            cfg.csv_path = resolve(value);
        } else if (key == "json") {
            cfg.json_path = resolve(value);
        } else if (key == "table") {
            cfg.table_path = resolve(value);
        } else if (key == "trace_dir") {
            cfg.trace_dir = resolve(value);
        } else if (key == "save_traces") {
            if (value != "none" && value != "failures" && value != "all")
                throw ConfigError("config line " + std::to_string(lineno) +
                                  ": save_traces must be none|failures|all");
            cfg.save_traces = value;
        } else {
            throw ConfigError("config line " + std::to_string(lineno) +
                              ": unknown key '" + key + "'");
        }
    }
    for (auto& t : cfg.tasks) {
        if (t.domain_path.empty()) t.domain_path = default_domain;
        if (t.domain_path.empty())
            throw ConfigError("task '" + t.name + "' has no domain path");
    }
    return cfg;
}

// ---------------------------------------------------------------------------
// Report

struct Report {
    std::vector<std::string> task_names;     // column order
    std::vector<std::string> strategy_names; // row order
    // cells[strategy][task] = {successes, trials}
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> cells;

    bool operator==(const Report&) const = default;

    double rate_percent(std::size_t s, std::size_t t) const {
        auto [succ, trials] = cells[s][t];
        return trials == 0 ? 0.0 : 100.0 * static_cast<double>(succ) / trials;
    }

    // Paper-style average: unweighted mean of per-task percentages.
    double avg_percent(std::size_t s) const {
        if (task_names.empty()) return 0.0;
        double sum = 0.0;
        for (std::size_t t = 0; t < task_names.size(); ++t) sum += rate_percent(s, t);
        return sum / static_cast<double>(task_names.size());
    }
};

namespace detail {

inline std::string fmt1(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", v);
    return buf;
}

} // namespace detail

struct Summary {
    std::string table;
    std::string csv;
    std::string json;
};

inline std::string report_csv(const Report& r) {
    std::string out = "strategy,task,successes,trials,rate_percent\n";
    for (std::size_t s = 0; s < r.strategy_names.size(); ++s) {
        for (std::size_t t = 0; t < r.task_names.size(); ++t) {
            auto [succ, trials] = r.cells[s][t];
            out += r.strategy_names[s] + "," + r.task_names[t] + "," +
                   std::to_string(succ) + "," + std::to_string(trials) + "," +
                   detail::fmt1(r.rate_percent(s, t)) + "\n";
        }
        out += r.strategy_names[s] + ",avg,,," + detail::fmt1(r.avg_percent(s)) + "\n";
    }
    return out;
}

inline Report parse_report_csv(const std::string& csv) {
    Report r;
    auto lines = split(csv, '\n');
    if (lines.empty() || trim(lines[0]) != "strategy,task,successes,trials,rate_percent")
        throw ConfigError("unrecognized report CSV header");
    auto strategy_row = [&](const std::string& name) -> std::size_t {
        for (std::size_t i = 0; i < r.strategy_names.size(); ++i)
            if (r.strategy_names[i] == name) return i;
        r.strategy_names.push_back(name);
        r.cells.emplace_back(r.task_names.size(), std::pair<std::size_t, std::size_t>{0, 0});
        return r.strategy_names.size() - 1;
    };
    auto task_col = [&](const std::string& name) -> std::size_t {
        for (std::size_t i = 0; i < r.task_names.size(); ++i)
            if (r.task_names[i] == name) return i;
        r.task_names.push_back(name);
        for (auto& row : r.cells) row.emplace_back(0, 0);
        return r.task_names.size() - 1;
    };
    for (std::size_t i = 1; i < lines.size(); ++i) {
        std::string line = trim(lines[i]);
        if (line.empty()) continue;
        auto f = split(line, ',');
        if (f.size() != 5) throw ConfigError("bad report CSV row: " + line);
        if (f[1] == "avg") {
            strategy_row(f[0]);
            continue;
        }
        std::size_t s = strategy_row(f[0]);
        std::size_t t = task_col(f[1]);
        r.cells[s][t] = {std::stoull(f[2]), std::stoull(f[3])};
    }
    return r;
}

inline std::string report_table(const Report& r) {
    std::vector<std::size_t> widths;
    std::size_t name_w = 8;
    for (const auto& s : r.strategy_names) name_w = std::max(name_w, s.size());
    for (const auto& t : r.task_names) widths.push_back(std::max<std::size_t>(t.size(), 7));

    std::string out;
    auto pad = [](const std::string& s, std::size_t w) {
        std::string o = s;
        while (o.size() < w) o += ' ';
        return o;
    };
    out += pad("strategy", name_w + 2);
    for (std::size_t t = 0; t < r.task_names.size(); ++t)
        out += pad(r.task_names[t], widths[t] + 2);
    out += "avg(%)\n";
    for (std::size_t s = 0; s < r.strategy_names.size(); ++s) {
        out += pad(r.strategy_names[s], name_w + 2);
        for (std::size_t t = 0; t < r.task_names.size(); ++t) {
            auto [succ, trials] = r.cells[s][t];
            out += pad(std::to_string(succ) + "/" + std::to_string(trials), widths[t] + 2);
        }
        out += detail::fmt1(r.avg_percent(s)) + "\n";
    }
    return out;
}

inline std::string report_json(const Report& r) {
    nlohmann::json j;
    j["tasks"] = r.task_names;
    j["strategies"] = r.strategy_names;
    j["cells"] = nlohmann::json::array();
    for (std::size_t s = 0; s < r.strategy_names.size(); ++s) {
        for (std::size_t t = 0; t < r.task_names.size(); ++t) {
            auto [succ, trials] = r.cells[s][t];
            j["cells"].push_back({{"strategy", r.strategy_names[s]},
                                  {"task", r.task_names[t]},
                                  {"successes", succ},
                                  {"trials", trials},
                                  {"rate_percent", r.rate_percent(s, t)}});
        }
    }
    j["avg_percent"] = nlohmann::json::object();
    for (std::size_t s = 0; s < r.strategy_names.size(); ++s)
        j["avg_percent"][r.strategy_names[s]] = r.avg_percent(s);
    return j.dump(2) + "\n";
}

inline Summary summarize(const Report& r) {
    return {report_table(r), report_csv(r), report_json(r)};
}

// ---------------------------------------------------------------------------
// Trace files

struct TraceHeader {
    std::string task;
    std::string domain_path;
    std::string problem_path;
    std::string strategy = "dkprompt";
    std::uint64_t seed = 0;
    std::size_t max_steps = 0;
    std::size_t max_replans = 25;
    perception::PerceptionConfig perception;
    std::string situations_path;
    std::string families_path;
    std::string visibility_path;
    std::string templates_path;
};

inline std::string serialize_trace(const TraceHeader& h, const monitor::TrialResult& r) {
    std::string out = "# planmon trace v1\n";
    char buf[64];
    out += "task = " + h.task + "\n";
    out += "domain = " + h.domain_path + "\n";
    out += "problem = " + h.problem_path + "\n";
    out += "strategy = " + h.strategy + "\n";
    out += "seed = " + std::to_string(h.seed) + "\n";
    out += "max_steps = " + std::to_string(h.max_steps) + "\n";
    out += "max_replans = " + std::to_string(h.max_replans) + "\n";
    std::snprintf(buf, sizeof buf, "%.17g", h.perception.flip_rate);
    out += std::string("flip_rate = ") + buf + "\n";
    std::snprintf(buf, sizeof buf, "%.17g", h.perception.skip_rate);
    out += std::string("skip_rate = ") + buf + "\n";
    out += std::string("gate_on_inview = ") + (h.perception.gate_on_inview ? "1" : "0") + "\n";
    out += "situations = " + h.situations_path + "\n";
    out += "families = " + h.families_path + "\n";
    out += "visibility = " + h.visibility_path + "\n";
    out += "templates = " + h.templates_path + "\n";
    out += "---\n";
    for (const auto& line : r.trace.lines) out += line + "\n";
    return out;
}

struct ParsedTrace {
    TraceHeader header;
    std::vector<std::string> body;
};

inline ParsedTrace parse_trace(const std::string& text) {
    ParsedTrace t;
    bool in_body = false;
    for (const auto& raw : split(text, '\n')) {
        if (!in_body) {
            std::string line = trim(raw);
            if (line.empty() || line[0] == '#') continue;
            if (line == "---") {
                in_body = true;
                continue;
            }
            auto eq = line.find('=');
            if (eq == std::string::npos) throw ConfigError("bad trace header line: " + line);
            std::string key = trim(line.substr(0, eq));
            std::string value = trim(line.substr(eq + 1));
            if (key == "task") t.header.task = value;
            else if (key == "domain") t.header.domain_path = value;
            else if (key == "problem") t.header.problem_path = value;
            else if (key == "strategy") t.header.strategy = value;
            else if (key == "seed") t.header.seed = std::stoull(value);
            else if (key == "max_steps") t.header.max_steps = std::stoull(value);
            else if (key == "max_replans") t.header.max_replans = std::stoull(value);
            else if (key == "flip_rate") t.header.perception.flip_rate = std::stod(value);
            else if (key == "skip_rate") t.header.perception.skip_rate = std::stod(value);
            else if (key == "gate_on_inview") t.header.perception.gate_on_inview = value != "0";
            else if (key == "situations") t.header.situations_path = value;
            else if (key == "families") t.header.families_path = value;
            else if (key == "visibility") t.header.visibility_path = value;
            else if (key == "templates") t.header.templates_path = value;
            else throw ConfigError("unknown trace header key: " + key);
        } else if (!raw.empty()) {
            t.body.push_back(raw);
        }
    }
    if (!in_body) throw ConfigError("trace file has no '---' body separator");
    return t;
}

// ---------------------------------------------------------------------------
// Runner

namespace detail {

struct TaskRuntime {
    TaskSpec spec;
    std::unique_ptr<pddl::Domain> domain;
    std::unique_ptr<pddl::Problem> problem;
    monitor::TaskContext ctx;
};

inline TaskRuntime load_task(const TaskSpec& spec, const world::FamilyMap& families,
                             const world::SituationSpec& situations,
                             const perception::VisibilityTable& visibility,
                             const perception::QuestionTemplates& templates) {
    TaskRuntime rt;
    rt.spec = spec;
    try {
        rt.domain = std::make_unique<pddl::Domain>(
            pddl::parse_domain(read_file(spec.domain_path)));
        rt.problem = std::make_unique<pddl::Problem>(
            pddl::parse_problem(read_file(spec.problem_path), *rt.domain));
        rt.ctx = monitor::make_task_context(*rt.domain, *rt.problem, families, situations,
                                            visibility, templates);
    } catch (const std::exception& e) {
        throw ConfigError("task '" + spec.name + "': " + e.what());
    }
    return rt;
}

} // namespace detail

// Runs the trial matrix.  Trials fan out across `threads` workers; results
// merge by deterministic (task, strategy, trial) index, so parallelism never
// changes the report.
inline Report run_benchmark(const BenchmarkConfig& cfg) {
    if (cfg.trials == 0) throw ConfigError("trials must be >= 1");
    world::FamilyMap families = world::parse_family_map(read_file(cfg.families_path));
    world::SituationSpec situations = world::parse_situations(read_file(cfg.situations_path));
    perception::VisibilityTable visibility =
        perception::parse_visibility(read_file(cfg.visibility_path));
    perception::QuestionTemplates templates =
        perception::parse_templates(read_file(cfg.templates_path));

    std::deque<detail::TaskRuntime> tasks;
    for (const auto& spec : cfg.tasks)
        tasks.push_back(detail::load_task(spec, families, situations, visibility, templates));

    const std::size_t n_tasks = cfg.tasks.size();
    const std::size_t n_strats = cfg.strategies.size();
    const std::size_t total = n_tasks * n_strats * cfg.trials;
    std::vector<std::uint8_t> success(total, 0);

    if (!cfg.trace_dir.empty() && cfg.save_traces != "none")
        std::filesystem::create_directories(cfg.trace_dir);

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (std::size_t i = next.fetch_add(1); i < total; i = next.fetch_add(1)) {
            std::size_t t = i / (n_strats * cfg.trials);
            std::size_t rem = i % (n_strats * cfg.trials);
            std::size_t s = rem / cfg.trials;
            std::size_t k = rem % cfg.trials;

            monitor::EpisodeConfig ec;
            ec.strategy = cfg.strategies[s];
            ec.max_steps = cfg.max_steps;
            ec.max_replans = cfg.max_replans;
            ec.perception = cfg.perception;
            std::uint64_t seed = derive_seed(cfg.base_seed, t, s, k);
            monitor::TrialResult r = monitor::run_episode(tasks[t].ctx, ec, seed);
            success[i] = r.success ? 1 : 0;

            if (cfg.save_traces != "none" && !cfg.trace_dir.empty() &&
                (cfg.save_traces == "all" || !r.success)) {
                TraceHeader h;
                h.task = cfg.tasks[t].name;
                h.domain_path = cfg.tasks[t].domain_path;
                h.problem_path = cfg.tasks[t].problem_path;
                h.strategy = monitor::to_string(cfg.strategies[s]);
                h.seed = seed;
                h.max_steps = cfg.max_steps;
                h.max_replans = cfg.max_replans;
                h.perception = cfg.perception;
                h.situations_path = cfg.situations_path;
                h.families_path = cfg.families_path;
                h.visibility_path = cfg.visibility_path;
                h.templates_path = cfg.templates_path;
                std::string name = cfg.tasks[t].name + "_" +
                                   monitor::to_string(cfg.strategies[s]) + "_trial" +
                                   std::to_string(k) + ".trace";
                std::ofstream f(std::filesystem::path(cfg.trace_dir) / name);
                f << serialize_trace(h, r);
            }
        }
    };

    std::size_t n_workers = std::min<std::size_t>(std::max<std::size_t>(cfg.threads, 1), total);
    if (n_workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    Report report;
    for (const auto& t : cfg.tasks) report.task_names.push_back(t.name);
    for (auto s : cfg.strategies) report.strategy_names.push_back(monitor::to_string(s));
    report.cells.assign(n_strats, std::vector<std::pair<std::size_t, std::size_t>>(
                                      n_tasks, {0, 0}));
    for (std::size_t t = 0; t < n_tasks; ++t)
        for (std::size_t s = 0; s < n_strats; ++s) {
            std::size_t succ = 0;
            for (std::size_t k = 0; k < cfg.trials; ++k)
                succ += success[(t * n_strats + s) * cfg.trials + k];
            report.cells[s][t] = {succ, cfg.trials};
        }
    return report;
}

// Re-runs the trial recorded in a trace file and reports whether the rerun
// reproduces it line for line.
struct ReplayOutcome {
    bool match = false;
    monitor::TrialResult result;
    std::vector<std::string> original_body;
};

inline ReplayOutcome replay_trace(const std::string& trace_text) {
    ParsedTrace parsed = parse_trace(trace_text);
    const TraceHeader& h = parsed.header;

    world::FamilyMap families = world::parse_family_map(read_file(h.families_path));
    world::SituationSpec situations = world::parse_situations(read_file(h.situations_path));
    perception::VisibilityTable visibility =
        perception::parse_visibility(read_file(h.visibility_path));
    perception::QuestionTemplates templates =
        perception::parse_templates(read_file(h.templates_path));

    auto domain = pddl::parse_domain(read_file(h.domain_path));
    auto problem = pddl::parse_problem(read_file(h.problem_path), domain);
    monitor::TaskContext ctx = monitor::make_task_context(domain, problem, families,
                                                          situations, visibility, templates);
    auto strat = monitor::parse_strategy(h.strategy);
    if (!strat) throw ConfigError("unknown strategy in trace: " + h.strategy);

    monitor::EpisodeConfig ec;
    ec.strategy = *strat;
    ec.max_steps = h.max_steps;
    ec.max_replans = h.max_replans;
    ec.perception = h.perception;

    ReplayOutcome out;
    out.result = monitor::run_episode(ctx, ec, h.seed);
    out.original_body = parsed.body;
    out.match = out.result.trace.lines == parsed.body;
    return out;
}

} // namespace planmon::bench
