// Benchmark CLI: run seeded trial matrices, validate and plan single tasks,
// and replay recorded episode traces.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "planmon/bench.hpp"

namespace fs = std::filesystem;
using namespace planmon;

namespace {

struct BundledTask {
    const char* name;
    const char* problem_file;
};

constexpr BundledTask kBundledTasks[] = {
    {"boil_water", "problems/boil_water.pddl"},
    {"bring_in_bottles", "problems/bring_in_bottles.pddl"},
    {"cook_pie", "problems/cook_pie.pddl"},
    {"halve_egg", "problems/halve_egg.pddl"},
    {"store_firewood", "problems/store_firewood.pddl"},
};

void write_text(const std::string& path, const std::string& text) {
    fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + path);
    f << text;
}

int cmd_run(const std::string& config_path) {
    std::string base_dir = fs::path(config_path).parent_path().string();
    bench::BenchmarkConfig cfg =
        bench::parse_benchmark_config(read_file(config_path), base_dir);
    bench::Report report = bench::run_benchmark(cfg);
    bench::Summary summary = bench::summarize(report);
    std::cout << summary.table;
    if (!cfg.csv_path.empty()) write_text(cfg.csv_path, summary.csv);
    if (!cfg.json_path.empty()) write_text(cfg.json_path, summary.json);
    if (!cfg.table_path.empty()) write_text(cfg.table_path, summary.table);
    return 0;
}

int cmd_validate(const std::string& domain_path, const std::string& problem_path) {
    auto domain = pddl::parse_domain(read_file(domain_path));
    auto problem = pddl::parse_problem(read_file(problem_path), domain);
    auto g = pddl::ground(domain, problem);
    auto init = planner::state_from_init(g, problem);
    auto goal = g.ground_literals(problem.goal);
    std::cout << "domain: " << domain.name << " (" << domain.actions.size()
              << " schemas, " << domain.predicates.size() << " predicates)\n";
    std::cout << "problem: " << problem.name << " (" << problem.objects.size()
              << " objects, " << g.atom_count() << " ground atoms, " << g.actions.size()
              << " ground actions)\n";
    auto res = planner::plan(g, init, goal);
    if (!res) {
        std::cout << "plan: "
                  << (res.status == planner::PlanStatus::Unsolvable ? "unsolvable"
                                                                    : "resource limit")
                  << "\n";
        return 1;
    }
    auto v = planner::validate_plan(g, init, res.plan, goal);
    std::cout << "plan: length " << res.plan.cost() << ", "
              << (v.valid ? "valid" : "INVALID") << "\n";
    return v.valid ? 0 : 1;
}

int cmd_plan(const std::string& task, const std::string& data_dir, bool sas) {
    const BundledTask* found = nullptr;
    for (const auto& t : kBundledTasks)
        if (task == t.name) found = &t;
    if (!found) {
        std::cerr << "unknown task '" << task << "'; bundled tasks:";
        for (const auto& t : kBundledTasks) std::cerr << " " << t.name;
        std::cerr << "\n";
        return 2;
    }
    auto domain = pddl::parse_domain(read_file(data_dir + "/domains/omnigibson.pddl"));
    auto problem =
        pddl::parse_problem(read_file(data_dir + "/" + found->problem_file), domain);
    auto g = pddl::ground(domain, problem);
    auto init = planner::state_from_init(g, problem);
    auto goal = g.ground_literals(problem.goal);
    auto res = planner::plan(g, init, goal);
    if (!res) {
        std::cerr << "no plan found\n";
        return 1;
    }
    if (sas) {
        std::cout << planner::to_sas_plan(g, res.plan);
    } else {
        for (auto s : res.plan.steps) std::cout << g.actions[s].display() << "\n";
    }
    return 0;
}

int cmd_replay(const std::string& trace_path) {
    bench::ReplayOutcome outcome = bench::replay_trace(read_file(trace_path));
    for (const auto& line : outcome.result.trace.lines) std::cout << line << "\n";
    if (outcome.match) {
        std::cout << "REPLAY OK: trace reproduced\n";
        return 0;
    }
    std::cout << "REPLAY MISMATCH: recorded trace differs from rerun\n";
    return 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"plan-execution monitoring benchmark"};
    app.require_subcommand(1);

    std::string config_path;
    auto* run = app.add_subcommand("run", "run a benchmark matrix from a config file");
    run->add_option("--config", config_path, "benchmark config file")->required();

    std::string domain_path, problem_path;
    auto* validate = app.add_subcommand("validate", "parse, ground, plan and validate");
    validate->add_option("--domain", domain_path, "PDDL domain file")->required();
    validate->add_option("--problem", problem_path, "PDDL problem file")->required();

    std::string task_name;
    std::string data_dir = PLANMON_DATA_DIR;
    bool sas = false;
    auto* plan = app.add_subcommand("plan", "plan a bundled task");
    plan->add_option("--task", task_name, "bundled task name")->required();
    plan->add_option("--data", data_dir, "data directory (domains/, problems/)");
    plan->add_flag("--sas", sas, "emit the plan in sas_plan text format");

    std::string trace_path;
    auto* replay = app.add_subcommand("replay", "re-run a recorded trial trace");
    replay->add_option("--trace", trace_path, "trace file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(config_path);
        if (validate->parsed()) return cmd_validate(domain_path, problem_path);
        if (plan->parsed()) return cmd_plan(task_name, data_dir, sas);
        if (replay->parsed()) return cmd_replay(trace_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
