#pragma once

// Strategy-driven episode loop: plans from the agent's belief, checks action
// preconditions/effects through predicate queries (or whole-action
// success/affordance questions for the baseline strategies), updates the
// belief from the answers, and replans when belief contradicts the plan.

#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "planmon/perception.hpp"
#include "planmon/planner.hpp"
#include "planmon/world.hpp"

namespace planmon::monitor {

using pddl::GroundAction;
using pddl::Grounding;
using pddl::GroundLiteral;
using perception::AnswerValue;
using planner::SymbolicState;
using world::WorldState;

enum class Strategy { DKPrompt, PreOnly, EffOnly, Classical, SucQA, AffQA, SucAffQA };

inline const char* to_string(Strategy s) {
    switch (s) {
    case Strategy::DKPrompt: return "dkprompt";
    case Strategy::PreOnly: return "preonly";
    case Strategy::EffOnly: return "effonly";
    case Strategy::Classical: return "classical";
    case Strategy::SucQA: return "sucqa";
    case Strategy::AffQA: return "affqa";
    case Strategy::SucAffQA: return "sucaffqa";
    }
    return "?";
}

inline std::optional<Strategy> parse_strategy(const std::string& name) {
    for (Strategy s : {Strategy::DKPrompt, Strategy::PreOnly, Strategy::EffOnly,
                       Strategy::Classical, Strategy::SucQA, Strategy::AffQA,
                       Strategy::SucAffQA})
        if (name == to_string(s)) return s;
    return std::nullopt;
}

// Strategies whose belief maintenance is driven by per-predicate domain
// knowledge rather than whole-action questions.
inline bool knowledge_driven(Strategy s) {
    return s == Strategy::DKPrompt || s == Strategy::PreOnly || s == Strategy::EffOnly;
}

struct EpisodeConfig {
    Strategy strategy = Strategy::DKPrompt;
    std::size_t max_steps = 0;   // 0 = 10 x initial plan length
    std::size_t max_replans = 25;
    perception::PerceptionConfig perception;
    planner::PlannerLimits planner_limits;
};

// A single predicate query: the literal the plan expects to hold, the
// rendered question, and the polarity the question text affirms.
struct Query {
    GroundLiteral expected;
    std::string text;
    bool yes_affirms_atom = true;
};

struct QueryRecord {
    std::string text;
    AnswerValue answer = AnswerValue::Skip;
};

// Everything needed to run episodes of one task; immutable after
// construction and safely shareable across concurrent trials.
struct TaskContext {
    const pddl::Domain* domain = nullptr;
    const pddl::Problem* problem = nullptr;
    std::unique_ptr<const Grounding> grounding;
    world::WorldModel world_model;
    perception::Perception perception;
    SymbolicState init;
    std::vector<GroundLiteral> goal;
    planner::Plan initial_plan;
    std::vector<std::uint32_t> movables; // objects of a type named "movable"

    const Grounding& g() const { return *grounding; }
};

inline TaskContext make_task_context(const pddl::Domain& domain,
                                     const pddl::Problem& problem,
                                     world::FamilyMap families,
                                     world::SituationSpec situations,
                                     perception::VisibilityTable visibility,
                                     perception::QuestionTemplates templates,
                                     planner::PlannerLimits limits = {}) {
    TaskContext ctx;
    ctx.domain = &domain;
    ctx.problem = &problem;
    ctx.grounding = std::make_unique<Grounding>(pddl::ground(domain, problem));
    ctx.world_model =
        world::WorldModel(*ctx.grounding, std::move(families), std::move(situations));
    ctx.perception =
        perception::Perception(*ctx.grounding, std::move(visibility), std::move(templates));
    ctx.init = planner::state_from_init(*ctx.grounding, problem);
    ctx.goal = ctx.grounding->ground_literals(problem.goal);
    auto pr = planner::plan(*ctx.grounding, ctx.init, ctx.goal, limits);
    if (!pr)
        throw ConfigError("task '" + problem.name + "' is unsolvable from its initial state");
    ctx.initial_plan = std::move(pr.plan);
    for (std::uint32_t o = 0; o < ctx.grounding->object_names.size(); ++o)
        if (domain.is_subtype(ctx.grounding->object_types[o], "movable"))
            ctx.movables.push_back(o);
    return ctx;
}

// ---------------------------------------------------------------------------
// Query construction

inline Query make_query(const TaskContext& ctx, const GroundLiteral& lit) {
    Query q;
    q.expected = lit;
    auto rendered = ctx.perception.render_question(lit);
    q.text = rendered.text;
    q.yes_affirms_atom = rendered.yes_affirms_atom;
    return q;
}

// Vision-class literals of the action's precondition, each with rendered
// question text.  Non-vision and imperceptible literals are excluded.
inline std::vector<Query> precondition_queries(const TaskContext& ctx,
                                               const GroundAction& action) {
    std::vector<Query> out;
    for (const auto& lit : action.precondition) {
        const auto& info = ctx.g().atoms[lit.atom];
        if (ctx.perception.classify(info.predicate) !=
            perception::VisibilityClass::PerceptibleVision)
            continue;
        out.push_back(make_query(ctx, lit));
    }
    return out;
}

// The action's expected effect per touched atom, with delete-then-add
// conflicts resolved (adds win) and conditionals fired against `pre`.
struct ExpectedEffects {
    std::vector<std::uint32_t> order; // first-touch order
    std::vector<GroundLiteral> literals; // resolved polarity, same order

    bool touched(std::uint32_t atom) const {
        for (std::uint32_t a : order)
            if (a == atom) return true;
        return false;
    }
};

inline ExpectedEffects expected_effects(const Grounding& g, const SymbolicState& pre,
                                        const GroundAction& action) {
    std::vector<std::uint32_t> adds, dels;
    planner::detail::collect_effects(g, pre, action, adds, dels);
    ExpectedEffects out;
    auto touch = [&](std::uint32_t atom, bool positive, bool overwrite) {
        for (std::size_t i = 0; i < out.order.size(); ++i) {
            if (out.order[i] != atom) continue;
            if (overwrite) out.literals[i].positive = positive;
            return;
        }
        out.order.push_back(atom);
        out.literals.push_back({atom, positive});
    };
    for (std::uint32_t a : adds) touch(a, true, true);
    for (std::uint32_t a : dels) touch(a, false, false); // adds win
    return out;
}

// Vision-class literals among the action's expected effects (conditionals
// resolved against the pre-execution belief).
inline std::vector<Query> effect_queries(const TaskContext& ctx, const GroundAction& action,
                                         const SymbolicState& pre_belief) {
    ExpectedEffects expected = expected_effects(ctx.g(), pre_belief, action);
    std::vector<Query> out;
    for (const auto& lit : expected.literals) {
        const auto& info = ctx.g().atoms[lit.atom];
        if (ctx.perception.classify(info.predicate) !=
            perception::VisibilityClass::PerceptibleVision)
            continue;
        out.push_back(make_query(ctx, lit));
    }
    return out;
}

// Yes makes the queried literal's atom match the polarity the question
// affirms, No the opposite, Skip leaves belief unchanged.
inline void update_belief(SymbolicState& belief, const Query& query, AnswerValue answer) {
    if (answer == AnswerValue::Skip) return;
    bool value = (answer == AnswerValue::Yes) == query.yes_affirms_atom;
    belief.assign(query.expected.atom, value);
}

// ---------------------------------------------------------------------------
// Answer sources

// One query round.  Implementations must preserve order and return one
// answer per query.
struct AnswerSource {
    virtual ~AnswerSource() = default;
    virtual std::vector<AnswerValue> answer_round(const WorldState& truth,
                                                  const std::vector<Query>& queries,
                                                  Rng& rng) = 0;
};

// Default oracle: answers each question from ground truth via the perception
// module, inverting the raw atom answer when the question affirms the atom's
// negation.
struct SimulatedAnswerSource final : AnswerSource {
    const perception::Perception* perception = nullptr;
    perception::PerceptionConfig config;

    SimulatedAnswerSource() = default;
    SimulatedAnswerSource(const perception::Perception& p, perception::PerceptionConfig c)
        : perception(&p), config(c) {}

    std::vector<AnswerValue> answer_round(const WorldState& truth,
                                          const std::vector<Query>& queries,
                                          Rng& rng) override {
        std::vector<AnswerValue> out;
        out.reserve(queries.size());
        for (const auto& q : queries) {
            AnswerValue v = perception->answer(truth, q.expected.atom, config, rng);
            if (!q.yes_affirms_atom) {
                if (v == AnswerValue::Yes)
                    v = AnswerValue::No;
                else if (v == AnswerValue::No)
                    v = AnswerValue::Yes;
            }
            out.push_back(v);
        }
        return out;
    }
};

// ---------------------------------------------------------------------------
// Episode trace / result

struct ActionEvent {
    std::uint32_t action = 0;
    world::ExecutionOutcome outcome;

    bool operator==(const ActionEvent&) const = default;
};

struct EpisodeTrace {
    std::vector<std::string> lines;
    std::vector<ActionEvent> action_events;

    bool operator==(const EpisodeTrace&) const = default;
};

struct TrialResult {
    bool success = false;
    std::size_t steps = 0;
    std::size_t replans = 0;
    std::string failure_reason; // empty on success
    EpisodeTrace trace;

    bool operator==(const TrialResult&) const = default;
};

// ---------------------------------------------------------------------------
// run_episode

namespace detail {

inline std::string render_queries(const std::vector<QueryRecord>& records) {
    std::string s = "[";
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (i) s += ";";
        s += "\"" + records[i].text + "\"=" + perception::to_string(records[i].answer);
    }
    return s + "]";
}

inline std::string render_delta(const Grounding& g, const SymbolicState& before,
                                const SymbolicState& after) {
    std::string s = "[";
    bool first = true;
    for (std::uint32_t a = 0; a < g.atom_count(); ++a) {
        bool b = before.test(a), v = after.test(a);
        if (b == v) continue;
        if (!first) s += ";";
        first = false;
        s += (v ? "+" : "-") + g.atom_name(a);
    }
    return s + "]";
}

// Ground-truth access to non-vision predicates: copies their truth values
// into the belief.  Reads pass through the perception skip gate so that full
// perception dropout (skip_rate = 1) silences this channel as well.
inline void sync_nonvision(const TaskContext& ctx, SymbolicState& belief,
                           const WorldState& truth,
                           const perception::PerceptionConfig& cfg, Rng& rng) {
    const Grounding& g = ctx.g();
    for (std::uint32_t p = 0; p < g.predicate_names.size(); ++p) {
        if (ctx.perception.classify(p) != perception::VisibilityClass::PerceptibleNonVision)
            continue;
        for (std::uint32_t atom : ctx.world_model.atoms_by_predicate[p]) {
            if (cfg.skip_rate > 0 && rng.uniform() < cfg.skip_rate) continue;
            belief.assign(atom, truth.truth.test(atom));
        }
    }
}

// Optimistic relocation of lost objects: a movable that the belief can no
// longer place anywhere (not held, not inside/ontop/onfloor of anything) is
// assumed to have dropped onto the scene floor.  A wrong assumption is
// corrected by the next precondition query round on the floor pickup.
inline void patch_lost_objects(const TaskContext& ctx, SymbolicState& belief) {
    const Grounding& g = ctx.g();
    const world::WorldModel& wm = ctx.world_model;
    if (wm.floor_objects.empty()) return;
    for (std::uint32_t obj : ctx.movables) {
        bool located = false;
        auto scan = [&](std::optional<std::uint32_t> pred, int obj_slot) {
            if (located || !pred) return;
            for (std::uint32_t atom : wm.atoms_by_predicate[*pred])
                if (g.atoms[atom].args[obj_slot] == obj && belief.test(atom)) {
                    located = true;
                    return;
                }
        };
        scan(wm.p_inside, 0);
        scan(wm.p_ontop, 0);
        scan(wm.p_onfloor, 0);
        scan(wm.p_inhand, 1);
        if (located) continue;

        std::optional<std::uint32_t> floor;
        if (wm.p_inroom) {
            for (std::uint32_t f : wm.floor_objects) {
                for (std::uint32_t atom : wm.atoms_by_predicate[*wm.p_inroom]) {
                    const auto& info = g.atoms[atom];
                    if (info.args[0] != obj || !belief.test(atom)) continue;
                    if (wm.test2(belief, wm.p_inroom, f, info.args[1])) {
                        floor = f;
                        break;
                    }
                }
                if (floor) break;
            }
        }
        if (!floor) floor = wm.floor_objects.front();
        if (wm.p_ontop) {
            auto a = g.find_atom(*wm.p_ontop, {obj, *floor});
            if (a) belief.set(*a);
        }
        if (wm.p_onfloor) {
            auto a = g.find_atom(*wm.p_onfloor, {obj, *floor});
            if (a) belief.set(*a);
        }
    }
}

} // namespace detail

inline TrialResult run_episode(const TaskContext& ctx, const EpisodeConfig& cfg,
                               std::uint64_t seed, AnswerSource* source = nullptr) {
    const Grounding& g = ctx.g();
    const Strategy strategy = cfg.strategy;
    Rng world_rng(seed, 0);
    Rng perc_rng(seed, 1);

    SimulatedAnswerSource simulated(ctx.perception, cfg.perception);
    if (!source) source = &simulated;

    TrialResult result;
    EpisodeTrace& trace = result.trace;

    WorldState world{ctx.init};
    SymbolicState belief = ctx.init;

    std::deque<std::uint32_t> plan(ctx.initial_plan.steps.begin(),
                                   ctx.initial_plan.steps.end());
    trace.lines.push_back("plan len=" + std::to_string(plan.size()) + " reason=initial");

    const std::size_t max_steps =
        cfg.max_steps ? cfg.max_steps
                      : 10 * std::max<std::size_t>(std::size_t(1), plan.size());

    // Belief snapshot taken before the latest executed step's projection;
    // consumed by the QA strategies' revert rule.
    std::optional<SymbolicState> revert_snapshot;

    auto fail = [&](const char* reason) {
        result.success = false;
        result.failure_reason = reason;
    };

    // Replans from the current belief with the original goal.  Returns false
    // when the episode must end (budget or unsolvable).
    auto do_replan = [&](const std::string& reason) -> bool {
        if (result.replans >= cfg.max_replans) {
            fail("replan-budget");
            return false;
        }
        ++result.replans;
        if (knowledge_driven(strategy)) detail::patch_lost_objects(ctx, belief);
        auto pr = planner::plan(g, belief, ctx.goal, cfg.planner_limits);
        if (!pr) {
            trace.lines.push_back("replan n=" + std::to_string(result.replans) +
                                  " reason=" + reason + " status=unsolvable");
            fail("unsolvable-replan");
            return false;
        }
        plan.assign(pr.plan.steps.begin(), pr.plan.steps.end());
        trace.lines.push_back("replan n=" + std::to_string(result.replans) + " reason=" +
                              reason + " len=" + std::to_string(plan.size()));
        return true;
    };

    while (true) {
        if (world::goal_satisfied(world, ctx.goal)) {
            result.success = true;
            result.failure_reason.clear();
            break;
        }
        if (plan.empty()) {
            if (strategy == Strategy::Classical) {
                fail("plan-exhausted");
                break;
            }
            if (!do_replan("plan-exhausted")) break;
            continue;
        }

        const std::uint32_t action_id = plan.front();
        const GroundAction& action = g.actions[action_id];

        // ---- before execution -------------------------------------------
        if (strategy == Strategy::DKPrompt || strategy == Strategy::PreOnly) {
            std::vector<Query> queries = precondition_queries(ctx, action);
            std::vector<QueryRecord> records;
            if (!queries.empty()) {
                auto answers = source->answer_round(world, queries, perc_rng);
                for (std::size_t i = 0; i < queries.size(); ++i) {
                    update_belief(belief, queries[i], answers[i]);
                    records.push_back({queries[i].text, answers[i]});
                }
            }
            if (!planner::holds(belief, action.precondition)) {
                trace.lines.push_back("check action=" + action.display() + " pre" +
                                      detail::render_queries(records) +
                                      " replan=precondition");
                if (!do_replan("precondition")) break;
                continue;
            }
            if (!records.empty())
                trace.lines.push_back("check action=" + action.display() + " pre" +
                                      detail::render_queries(records));
        } else if (strategy == Strategy::AffQA || strategy == Strategy::SucAffQA) {
            AnswerValue ans = ctx.perception.answer_affordance(world, action,
                                                               cfg.perception, perc_rng);
            std::vector<QueryRecord> records{
                {"Is it possible to " + action.display() + " here?", ans}};
            if (ans == AnswerValue::No) {
                // The conjunction failed but the culprit is unknown; suspect
                // the most recent step and undo its projection before
                // replanning.
                if (revert_snapshot) {
                    belief = *revert_snapshot;
                    revert_snapshot.reset();
                    detail::sync_nonvision(ctx, belief, world, cfg.perception, perc_rng);
                }
                trace.lines.push_back("check action=" + action.display() + " aff" +
                                      detail::render_queries(records) +
                                      " replan=affordance");
                if (!do_replan("affordance")) break;
                continue;
            }
            trace.lines.push_back("check action=" + action.display() + " aff" +
                                  detail::render_queries(records));
        }

        // ---- execute ------------------------------------------------------
        if (result.steps >= max_steps) {
            fail("step-budget");
            break;
        }
        const WorldState world_before = world;
        auto [world_after, outcome] = world::execute(ctx.world_model, world, action, world_rng);
        world = world_after;
        ++result.steps;
        trace.action_events.push_back({action_id, outcome});

        // Dead-reckoned belief: project the action's expected effects.
        const SymbolicState pre_belief = belief;
        belief = planner::apply_effects(g, belief, action);
        const SymbolicState projected = belief;
        revert_snapshot = pre_belief;

        std::string line = "step=" + std::to_string(result.steps) +
                           " action=" + action.display() +
                           " outcome=" + outcome.to_string();

        // ---- after execution ---------------------------------------------
        bool replanned = false;
        if (strategy != Strategy::Classical)
            detail::sync_nonvision(ctx, belief, world, cfg.perception, perc_rng);

        if (strategy == Strategy::DKPrompt || strategy == Strategy::EffOnly) {
            std::vector<Query> queries = effect_queries(ctx, action, pre_belief);
            std::vector<QueryRecord> records;
            if (!queries.empty()) {
                auto answers = source->answer_round(world, queries, perc_rng);
                for (std::size_t i = 0; i < queries.size(); ++i) {
                    update_belief(belief, queries[i], answers[i]);
                    records.push_back({queries[i].text, answers[i]});
                }
            }
            line += " post" + detail::render_queries(records);

            // Replan when any expected effect is off in the belief: compare
            // the effect-touched atoms against the projection.
            ExpectedEffects expected = expected_effects(g, pre_belief, action);
            bool mismatch = false;
            for (std::uint32_t atom : expected.order)
                if (belief.test(atom) != projected.test(atom)) mismatch = true;
            line += " belief" + detail::render_delta(g, pre_belief, belief);
            if (mismatch) {
                line += " replan=effect";
                trace.lines.push_back(line);
                if (!do_replan("effect")) break;
                replanned = true;
            }
        } else if (strategy == Strategy::SucQA || strategy == Strategy::SucAffQA) {
            AnswerValue ans = ctx.perception.answer_success(world_before, world, action,
                                                            cfg.perception, perc_rng);
            std::vector<QueryRecord> records{
                {"Did the robot successfully " + action.display() + "?", ans}};
            line += " suc" + detail::render_queries(records);
            if (ans == AnswerValue::No) {
                // Revert this step's projected effects and replan.
                belief = pre_belief;
                revert_snapshot.reset();
                detail::sync_nonvision(ctx, belief, world, cfg.perception, perc_rng);
                line += " belief" + detail::render_delta(g, pre_belief, belief);
                line += " replan=success";
                trace.lines.push_back(line);
                if (!do_replan("success")) break;
                replanned = true;
            } else {
                line += " belief" + detail::render_delta(g, pre_belief, belief);
                trace.lines.push_back(line);
            }
        } else {
            line += " belief" + detail::render_delta(g, pre_belief, belief);
            trace.lines.push_back(line);
        }

        if (!replanned) {
            if (strategy == Strategy::DKPrompt || strategy == Strategy::EffOnly)
                trace.lines.push_back(line);
            plan.pop_front();
        }
    }

    trace.lines.push_back(std::string("result success=") + (result.success ? "1" : "0") +
                          " steps=" + std::to_string(result.steps) +
                          " replans=" + std::to_string(result.replans) +
                          (result.failure_reason.empty()
                               ? std::string(" reason=goal")
                               : " reason=" + result.failure_reason));
    return result;
}

} // namespace planmon::monitor
