// Minimal library walkthrough: load a bundled task, run one monitored
// episode under the default situation probabilities, and print its trace.

#include <iostream>

#include "planmon/monitor.hpp"

using namespace planmon;

int main(int argc, char** argv) {
    std::string data = argc > 1 ? argv[1] : PLANMON_DATA_DIR;
    std::uint64_t seed = argc > 2 ? std::stoull(argv[2]) : 7;

    auto domain = pddl::parse_domain(read_file(data + "/domains/omnigibson.pddl"));
    auto problem = pddl::parse_problem(read_file(data + "/problems/halve_egg.pddl"), domain);

    auto ctx = monitor::make_task_context(
        domain, problem, world::parse_family_map(read_file(data + "/action_families.cfg")),
        world::parse_situations(read_file(data + "/situations.cfg")),
        perception::parse_visibility(read_file(data + "/visibility.cfg")),
        perception::parse_templates(read_file(data + "/templates.cfg")));

    monitor::EpisodeConfig cfg;
    cfg.strategy = monitor::Strategy::DKPrompt;

    monitor::TrialResult result = monitor::run_episode(ctx, cfg, seed);
    for (const auto& line : result.trace.lines) std::cout << line << "\n";
    return result.success ? 0 : 1;
}
