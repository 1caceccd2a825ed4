#pragma once

// Grounded forward state-space search with deterministic tie-breaking, plus
// the closed-world state transition semantics shared with the simulator.

#include <cstdint>
#include <deque>
#include <queue>
#include <span>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include "planmon/pddl.hpp"

namespace planmon::planner {

using pddl::GroundAction;
using pddl::Grounding;
using pddl::GroundLiteral;

// Set of ground atoms under the closed-world assumption, packed as a bitset
// over the grounding's atom universe.
struct SymbolicState {
    std::vector<std::uint64_t> bits;

    static SymbolicState make(std::size_t atom_count) {
        SymbolicState s;
        s.bits.assign((atom_count + 63) / 64, 0);
        return s;
    }

    bool test(std::uint32_t atom) const {
        return (bits[atom >> 6] >> (atom & 63)) & 1;
    }
    void set(std::uint32_t atom) { bits[atom >> 6] |= std::uint64_t(1) << (atom & 63); }
    void reset(std::uint32_t atom) { bits[atom >> 6] &= ~(std::uint64_t(1) << (atom & 63)); }

    void assign(std::uint32_t atom, bool value) {
        if (value)
            set(atom);
        else
            reset(atom);
    }

    std::vector<std::uint32_t> atom_ids() const {
        std::vector<std::uint32_t> out;
        for (std::size_t w = 0; w < bits.size(); ++w) {
            std::uint64_t word = bits[w];
            while (word) {
                unsigned bit = static_cast<unsigned>(__builtin_ctzll(word));
                out.push_back(static_cast<std::uint32_t>(w * 64 + bit));
                word &= word - 1;
            }
        }
        return out;
    }

    bool operator==(const SymbolicState&) const = default;
};

struct StateHash {
    std::size_t operator()(const SymbolicState& s) const {
        std::uint64_t h = 1469598103934665603ULL;
        for (std::uint64_t w : s.bits) {
            h ^= w;
            h *= 1099511628211ULL;
        }
        return static_cast<std::size_t>(h);
    }
};

inline SymbolicState state_from_init(const Grounding& g, const pddl::Problem& p) {
    SymbolicState s = SymbolicState::make(g.atom_count());
    for (const auto& atom : p.init)
        s.set(g.require_atom_by_name(atom.predicate, atom.args));
    return s;
}

// True iff every positive literal's atom is present and every negative
// literal's atom absent.
inline bool holds(const SymbolicState& state, std::span<const GroundLiteral> condition) {
    for (const auto& lit : condition)
        if (state.test(lit.atom) != lit.positive) return false;
    return true;
}

class PreconditionViolation : public std::logic_error {
public:
    explicit PreconditionViolation(const std::string& action)
        : std::logic_error("apply() called with unsatisfied precondition: " + action) {}
};

namespace detail {

// Instantiates a schematic conditional-effect literal for one binding of the
// quantified variable.  Returns no value when the binding is ill-typed for
// the literal's predicate.
inline std::optional<std::uint32_t> instantiate_templ(
    const Grounding& g, const pddl::GroundConditional::TemplLiteral& tl,
    std::uint32_t binding) {
    std::vector<std::uint32_t> args;
    args.reserve(tl.args.size());
    for (std::int32_t a : tl.args)
        args.push_back(a == pddl::GroundConditional::kVarSlot
                           ? binding
                           : static_cast<std::uint32_t>(a));
    return g.find_atom(tl.predicate, args);
}

// Collects the action's effect literals against `pre`: unconditional adds and
// deletes plus every conditional whose condition holds in `pre` (all
// conditions are evaluated against the pre-state simultaneously).
inline void collect_effects(const Grounding& g, const SymbolicState& pre,
                            const GroundAction& action,
                            std::vector<std::uint32_t>& adds,
                            std::vector<std::uint32_t>& dels) {
    adds.insert(adds.end(), action.add_atoms.begin(), action.add_atoms.end());
    dels.insert(dels.end(), action.del_atoms.begin(), action.del_atoms.end());
    for (const auto& cond : action.conditionals) {
        for (std::uint32_t obj : g.extension(cond.var_type)) {
            bool fires = true;
            for (const auto& tl : cond.condition) {
                auto atom = instantiate_templ(g, tl, obj);
                if (!atom || pre.test(*atom) != tl.positive) {
                    fires = false;
                    break;
                }
            }
            if (!fires) continue;
            for (const auto& tl : cond.consequence) {
                auto atom = instantiate_templ(g, tl, obj);
                if (!atom) continue;
                if (tl.positive)
                    adds.push_back(*atom);
                else
                    dels.push_back(*atom);
            }
        }
    }
}

} // namespace detail

// Effect application without a precondition check (delete-then-add).  The
// simulator reuses this as the nominal-effect fragment.
inline SymbolicState apply_effects(const Grounding& g, const SymbolicState& state,
                                   const GroundAction& action) {
    std::vector<std::uint32_t> adds, dels;
    detail::collect_effects(g, state, action, adds, dels);
    SymbolicState next = state;
    for (std::uint32_t a : dels) next.reset(a);
    for (std::uint32_t a : adds) next.set(a);
    return next;
}

inline SymbolicState apply(const Grounding& g, const SymbolicState& state,
                           const GroundAction& action) {
    if (!holds(state, action.precondition))
        throw PreconditionViolation(action.display());
    return apply_effects(g, state, action);
}

// ---------------------------------------------------------------------------
// Search

struct Plan {
    std::vector<std::uint32_t> steps; // indices into Grounding::actions

    std::size_t cost() const { return steps.size(); }
};

enum class PlanStatus { Found, Unsolvable, ResourceLimit };

struct PlanResult {
    PlanStatus status = PlanStatus::Unsolvable;
    Plan plan;
    std::size_t expansions = 0;

    explicit operator bool() const { return status == PlanStatus::Found; }
};

struct PlannerLimits {
    std::size_t node_budget = 1000000;
};

namespace detail {

struct SearchNode {
    SymbolicState state;
    std::int64_t parent = -1;
    std::uint32_t action = 0;
};

inline std::size_t goal_count_h(const SymbolicState& s,
                                std::span<const GroundLiteral> goal) {
    std::size_t h = 0;
    for (const auto& lit : goal)
        if (s.test(lit.atom) != lit.positive) ++h;
    return h;
}

inline Plan extract_plan(const std::vector<SearchNode>& nodes, std::int64_t leaf) {
    Plan plan;
    for (std::int64_t n = leaf; nodes[n].parent >= 0; n = nodes[n].parent)
        plan.steps.push_back(nodes[n].action);
    std::reverse(plan.steps.begin(), plan.steps.end());
    return plan;
}

// Best-first search over the grounded space.  With `greedy` the frontier is
// ordered by goal-count heuristic (FIFO within equal h); otherwise it
// degenerates to breadth-first.  Ground actions are expanded in the
// grounding's (schema name, argument tuple) order, which fixes tie-breaking.
inline PlanResult best_first(const Grounding& g, const SymbolicState& init,
                             std::span<const GroundLiteral> goal, bool greedy,
                             std::size_t budget) {
    PlanResult result;
    if (goal_count_h(init, goal) == 0) {
        result.status = PlanStatus::Found;
        return result;
    }

    std::vector<SearchNode> nodes;
    nodes.push_back({init, -1, 0});
    std::unordered_set<SymbolicState, StateHash> closed{init};

    struct Entry {
        std::size_t h;
        std::size_t tick;
        std::int64_t node;
        bool operator>(const Entry& o) const {
            if (h != o.h) return h > o.h;
            return tick > o.tick;
        }
    };
    std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> open;
    std::size_t tick = 0;
    open.push({greedy ? goal_count_h(init, goal) : 0, tick++, 0});

    while (!open.empty()) {
        Entry cur = open.top();
        open.pop();
        if (++result.expansions > budget) {
            result.status = PlanStatus::ResourceLimit;
            return result;
        }
        const SymbolicState state = nodes[cur.node].state;
        for (std::uint32_t ai = 0; ai < g.actions.size(); ++ai) {
            const GroundAction& action = g.actions[ai];
            if (!holds(state, action.precondition)) continue;
            SymbolicState succ = apply_effects(g, state, action);
            if (!closed.insert(succ).second) continue;
            nodes.push_back({succ, cur.node, ai});
            std::int64_t id = static_cast<std::int64_t>(nodes.size()) - 1;
            if (goal_count_h(succ, goal) == 0) {
                result.status = PlanStatus::Found;
                result.plan = extract_plan(nodes, id);
                return result;
            }
            open.push({greedy ? goal_count_h(succ, goal) : 0, tick++, id});
        }
    }
    result.status = PlanStatus::Unsolvable;
    return result;
}

} // namespace detail

// Greedy best-first search with a goal-count heuristic; falls back to
// breadth-first with the remaining budget if the greedy pass burns half the
// node budget without finding a plan.
inline PlanResult plan(const Grounding& g, const SymbolicState& init,
                       std::span<const GroundLiteral> goal,
                       PlannerLimits limits = {}) {
    PlanResult greedy = detail::best_first(g, init, goal, true, limits.node_budget / 2);
    if (greedy.status != PlanStatus::ResourceLimit) return greedy;
    PlanResult bfs =
        detail::best_first(g, init, goal, false, limits.node_budget - greedy.expansions);
    bfs.expansions += greedy.expansions;
    return bfs;
}

struct ValidationResult {
    bool valid = false;
    std::optional<std::size_t> failed_step; // first step whose precondition fails
    SymbolicState final_state;

    explicit operator bool() const { return valid; }
};

// Simulates the plan with apply(); valid iff every precondition holds in
// sequence and the final state satisfies the goal.
inline ValidationResult validate_plan(const Grounding& g, const SymbolicState& init,
                                      const Plan& plan,
                                      std::span<const GroundLiteral> goal) {
    ValidationResult r;
    SymbolicState s = init;
    for (std::size_t i = 0; i < plan.steps.size(); ++i) {
        const GroundAction& action = g.actions[plan.steps[i]];
        if (!holds(s, action.precondition)) {
            r.failed_step = i;
            r.final_state = s;
            return r;
        }
        s = apply_effects(g, s, action);
    }
    r.final_state = s;
    r.valid = holds(s, goal);
    return r;
}

// Fast-Downward-style sas_plan text: one "(action arg1 arg2)" line per step.
inline std::string to_sas_plan(const Grounding& g, const Plan& plan) {
    std::string out;
    for (std::uint32_t step : plan.steps) {
        const GroundAction& a = g.actions[step];
        out += "(" + a.schema;
        for (const auto& arg : a.args) out += " " + arg;
        out += ")\n";
    }
    out += "; cost = " + std::to_string(plan.steps.size()) + " (unit cost)\n";
    return out;
}

} // namespace planmon::planner
