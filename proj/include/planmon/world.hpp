#pragma once

// Ground-truth symbolic simulator: executes actions under per-family
// executability constraints, injects stochastic situations with configurable
// probabilities, and checks task goals.  Constraints and situation mutations
// are the simulator's own and are never exposed to agents.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "planmon/planner.hpp"
#include "planmon/rng.hpp"
#include "planmon/util.hpp"

namespace planmon::world {

using pddl::GroundAction;
using pddl::Grounding;
using pddl::GroundLiteral;
using planner::SymbolicState;

// The simulator's ground truth.  Mutated only through execute().
struct WorldState {
    SymbolicState truth;

    bool operator==(const WorldState&) const = default;
};

struct ExecutionOutcome {
    enum class Kind { CleanSuccess, ConstraintFailure, Situation };

    Kind kind = Kind::CleanSuccess;
    std::vector<std::string> violated; // ConstraintFailure only
    std::string label;                 // Situation only

    static ExecutionOutcome clean() { return {}; }
    static ExecutionOutcome constraint_failure(std::vector<std::string> v) {
        return {Kind::ConstraintFailure, std::move(v), {}};
    }
    static ExecutionOutcome situation(std::string l) {
        return {Kind::Situation, {}, std::move(l)};
    }

    bool operator==(const ExecutionOutcome&) const = default;

    std::string to_string() const {
        switch (kind) {
        case Kind::CleanSuccess:
            return "clean";
        case Kind::Situation:
            return "situation:" + label;
        case Kind::ConstraintFailure: {
            std::string s = "constraint-failure(";
            for (std::size_t i = 0; i < violated.size(); ++i) {
                if (i) s += ",";
                s += violated[i];
            }
            return s + ")";
        }
        }
        return "?";
    }
};

class UnknownActionFamily : public std::runtime_error {
public:
    explicit UnknownActionFamily(const std::string& what) : std::runtime_error(what) {}
};

// ---------------------------------------------------------------------------
// Configuration tables

inline const std::map<std::string, std::vector<std::string>>& known_situations() {
    static const std::map<std::string, std::vector<std::string>> table = {
        {"find", {"object-not-inview", "no-free-space", "held-object-drops"}},
        {"grasp", {"unchanged", "drop"}},
        {"placein", {"remains-inhand", "drop"}},
        {"placeon", {"remains-inhand", "drop"}},
        {"fillsink", {"faucet-fail"}},
        {"fill", {"not-filled", "drop"}},
        {"open", {"remains-closed"}},
        {"close", {"remains-open"}},
        {"turnon", {"remains-off"}},
        {"cut", {"not-cut-inhand", "not-cut-drop"}},
    };
    return table;
}

struct SituationRow {
    std::string family;
    std::string label;
    double probability = 0.0;

    bool operator==(const SituationRow&) const = default;
};

// Per-family situation list in file order; residual probability mass is a
// clean success.
struct SituationSpec {
    std::vector<SituationRow> rows;

    const std::vector<SituationRow>& all() const { return rows; }

    std::vector<const SituationRow*> family_rows(const std::string& family) const {
        std::vector<const SituationRow*> out;
        for (const auto& r : rows)
            if (r.family == family) out.push_back(&r);
        return out;
    }

    double probability(const std::string& family, const std::string& label) const {
        for (const auto& r : rows)
            if (r.family == family && r.label == label) return r.probability;
        return 0.0;
    }

    void set_probability(const std::string& family, const std::string& label, double p) {
        for (auto& r : rows)
            if (r.family == family && r.label == label) {
                r.probability = p;
                return;
            }
        rows.push_back({family, label, p});
    }

    SituationSpec zeroed() const {
        SituationSpec s = *this;
        for (auto& r : s.rows) r.probability = 0.0;
        return s;
    }

    void validate() const {
        std::map<std::string, double> mass;
        for (const auto& r : rows) {
            auto it = known_situations().find(r.family);
            if (it == known_situations().end())
                throw ConfigError("unknown action family '" + r.family + "' in situation table");
            bool known = false;
            for (const auto& l : it->second)
                if (l == r.label) known = true;
            if (!known)
                throw ConfigError("unknown situation '" + r.label + "' for family '" +
                                  r.family + "'");
            if (r.probability < 0.0 || r.probability > 1.0)
                throw ConfigError("situation probability out of [0,1] for '" + r.family +
                                  " " + r.label + "'");
            mass[r.family] += r.probability;
        }
        for (const auto& [family, m] : mass)
            if (m > 1.0 + 1e-12)
                throw ConfigError("situation probabilities for family '" + family +
                                  "' sum to more than 1");
    }
};

inline SituationSpec parse_situations(const std::string& text) {
    SituationSpec spec;
    int lineno = 0;
    for (const auto& raw : split(text, '\n')) {
        ++lineno;
        auto fields = split_ws(strip_comment(raw));
        if (fields.empty()) continue;
        if (fields.size() != 3)
            throw ConfigError("situation table line " + std::to_string(lineno) +
                              ": expected 'family label probability'");
        SituationRow row;
        row.family = fields[0];
        row.label = fields[1];
        try {
            row.probability = std::stod(fields[2]);
        } catch (const std::exception&) {
            throw ConfigError("situation table line " + std::to_string(lineno) +
                              ": bad probability '" + fields[2] + "'");
        }
        spec.rows.push_back(std::move(row));
    }
    spec.validate();
    return spec;
}

// Maps action schema names onto the ten simulator families.
struct FamilyMap {
    std::map<std::string, std::string> schema_to_family;

    const std::string& family_of(const std::string& schema) const {
        auto it = schema_to_family.find(schema);
        if (it == schema_to_family.end())
            throw UnknownActionFamily("action '" + schema +
                                      "' has no simulator family mapping");
        return it->second;
    }
};

inline FamilyMap parse_family_map(const std::string& text) {
    FamilyMap fm;
    int lineno = 0;
    for (const auto& raw : split(text, '\n')) {
        ++lineno;
        auto fields = split_ws(strip_comment(raw));
        if (fields.empty()) continue;
        if (fields.size() != 2)
            throw ConfigError("family map line " + std::to_string(lineno) +
                              ": expected 'schema family'");
        if (!known_situations().count(fields[1]))
            throw ConfigError("family map line " + std::to_string(lineno) +
                              ": unknown family '" + fields[1] + "'");
        if (!fm.schema_to_family.emplace(fields[0], fields[1]).second)
            throw ConfigError("family map line " + std::to_string(lineno) +
                              ": duplicate schema '" + fields[0] + "'");
    }
    return fm;
}

// ---------------------------------------------------------------------------
// WorldModel: grounding + simulator configuration + cached predicate lookups

struct WorldModel {
    const Grounding* grounding = nullptr;
    FamilyMap families;
    SituationSpec situations;

    // Cached predicate ids (absent predicates stay unset).
    std::optional<std::uint32_t> p_inhand, p_handempty, p_inview, p_inroom, p_closed,
        p_filled, p_inside, p_ontop, p_onfloor;
    std::vector<std::uint32_t> floor_objects; // objects of a type named "floor"
    std::vector<std::vector<std::uint32_t>> atoms_by_predicate;

    WorldModel() = default;
    WorldModel(const Grounding& g, FamilyMap fm, SituationSpec spec)
        : grounding(&g), families(std::move(fm)), situations(std::move(spec)) {
        situations.validate();
        auto pid = [&](const char* name) -> std::optional<std::uint32_t> {
            auto it = g.predicate_index.find(name);
            if (it == g.predicate_index.end()) return std::nullopt;
            return it->second;
        };
        p_inhand = pid("inhand");
        p_handempty = pid("handempty");
        p_inview = pid("inview");
        p_inroom = pid("inroom");
        p_closed = pid("closed");
        p_filled = pid("filled");
        p_inside = pid("inside");
        p_ontop = pid("ontop");
        p_onfloor = pid("onfloor");

        for (std::uint32_t o = 0; o < g.object_names.size(); ++o)
            if (g.domain->is_subtype(g.object_types[o], "floor")) floor_objects.push_back(o);

        atoms_by_predicate.resize(g.predicate_names.size());
        for (std::uint32_t a = 0; a < g.atoms.size(); ++a)
            atoms_by_predicate[g.atoms[a].predicate].push_back(a);
    }

    bool test2(const SymbolicState& s, std::optional<std::uint32_t> pred, std::uint32_t x,
               std::uint32_t y) const {
        if (!pred) return false;
        auto atom = grounding->find_atom(*pred, {x, y});
        return atom && s.test(*atom);
    }

    bool test1(const SymbolicState& s, std::optional<std::uint32_t> pred,
               std::uint32_t x) const {
        if (!pred) return false;
        auto atom = grounding->find_atom(*pred, {x});
        return atom && s.test(*atom);
    }
};

namespace detail {

inline std::runtime_error role_error(const GroundAction& a, const char* what) {
    return std::runtime_error("cannot derive " + std::string(what) + " for action " +
                              a.display() + "; check the action family mapping");
}

inline std::uint32_t agent_of(const WorldModel& m, const GroundAction& a) {
    const Grounding& g = *m.grounding;
    for (const auto& arg : a.args) {
        std::uint32_t o = g.object_index.at(arg);
        if (g.domain->is_subtype(g.object_types[o], "agent")) return o;
    }
    throw role_error(a, "acting agent");
}

inline std::uint32_t room_of(const WorldModel& m, const GroundAction& a) {
    const Grounding& g = *m.grounding;
    for (const auto& arg : a.args) {
        std::uint32_t o = g.object_index.at(arg);
        if (g.domain->is_subtype(g.object_types[o], "room")) return o;
    }
    throw role_error(a, "room argument");
}

// Object added to the agent's hand by the action's effects (grasp target).
inline std::uint32_t inhand_add_object(const WorldModel& m, const GroundAction& a) {
    const Grounding& g = *m.grounding;
    if (m.p_inhand)
        for (std::uint32_t atom : a.add_atoms)
            if (g.atoms[atom].predicate == *m.p_inhand) return g.atoms[atom].args[1];
    throw role_error(a, "grasp target");
}

// Object removed from the agent's hand by the action's effects (placed object).
inline std::uint32_t inhand_del_object(const WorldModel& m, const GroundAction& a) {
    const Grounding& g = *m.grounding;
    if (m.p_inhand)
        for (std::uint32_t atom : a.del_atoms)
            if (g.atoms[atom].predicate == *m.p_inhand) return g.atoms[atom].args[1];
    throw role_error(a, "placed object");
}

// Object required to be in the agent's hand by the action's precondition.
inline std::uint32_t inhand_pre_object(const WorldModel& m, const GroundAction& a) {
    const Grounding& g = *m.grounding;
    if (m.p_inhand)
        for (const auto& lit : a.precondition)
            if (lit.positive && g.atoms[lit.atom].predicate == *m.p_inhand)
                return g.atoms[lit.atom].args[1];
    throw role_error(a, "held object");
}

// Target of the inview precondition (the object the agent must be looking at).
inline std::uint32_t inview_pre_target(const WorldModel& m, const GroundAction& a) {
    const Grounding& g = *m.grounding;
    if (m.p_inview)
        for (const auto& lit : a.precondition)
            if (lit.positive && g.atoms[lit.atom].predicate == *m.p_inview)
                return g.atoms[lit.atom].args[1];
    throw role_error(a, "inview target");
}

// Object brought into view by the action's effects (find target).
inline std::uint32_t inview_add_target(const WorldModel& m, const GroundAction& a) {
    const Grounding& g = *m.grounding;
    if (m.p_inview)
        for (std::uint32_t atom : a.add_atoms)
            if (g.atoms[atom].predicate == *m.p_inview) return g.atoms[atom].args[1];
    throw role_error(a, "find target");
}

// Receptacle of a place-family action: second argument of the added
// inside/ontop/onfloor atom.
inline std::uint32_t place_receptacle(const WorldModel& m, const GroundAction& a) {
    const Grounding& g = *m.grounding;
    for (std::uint32_t atom : a.add_atoms) {
        std::uint32_t p = g.atoms[atom].predicate;
        if ((m.p_inside && p == *m.p_inside) || (m.p_ontop && p == *m.p_ontop) ||
            (m.p_onfloor && p == *m.p_onfloor))
            return g.atoms[atom].args[1];
    }
    throw role_error(a, "receptacle");
}

inline bool holds_any_filled(const WorldModel& m, const SymbolicState& s,
                             std::uint32_t container) {
    if (!m.p_filled) return false;
    for (std::uint32_t atom : m.atoms_by_predicate[*m.p_filled])
        if (m.grounding->atoms[atom].args[0] == container && s.test(atom)) return true;
    return false;
}

inline std::optional<std::uint32_t> held_object(const WorldModel& m,
                                                const SymbolicState& s,
                                                std::uint32_t agent) {
    if (!m.p_inhand) return std::nullopt;
    for (std::uint32_t atom : m.atoms_by_predicate[*m.p_inhand])
        if (m.grounding->atoms[atom].args[0] == agent && s.test(atom))
            return m.grounding->atoms[atom].args[1];
    return std::nullopt;
}

// Floor object for drop mutations: prefers a floor sharing a room with the
// agent, otherwise the lowest-indexed floor.
inline std::optional<std::uint32_t> drop_floor(const WorldModel& m,
                                               const SymbolicState& s,
                                               std::uint32_t agent) {
    if (m.floor_objects.empty()) return std::nullopt;
    if (m.p_inroom) {
        for (std::uint32_t f : m.floor_objects) {
            for (std::uint32_t atom : m.atoms_by_predicate[*m.p_inroom]) {
                const auto& info = m.grounding->atoms[atom];
                if (info.args[0] != f || !s.test(atom)) continue;
                if (m.test2(s, m.p_inroom, agent, info.args[1])) return f;
            }
        }
    }
    return m.floor_objects.front();
}

// Drops `obj` onto the scene floor: strips its location atoms, lands it
// ontop/onfloor of the floor object, and takes it out of the agent's view.
// Room membership is kept.  Returns false when no floor object exists.
inline bool drop_to_floor(const WorldModel& m, SymbolicState& s, std::uint32_t agent,
                          std::uint32_t obj) {
    auto floor = drop_floor(m, s, agent);
    if (!floor) return false;
    const Grounding& g = *m.grounding;
    auto strip = [&](std::optional<std::uint32_t> pred) {
        if (!pred) return;
        for (std::uint32_t atom : m.atoms_by_predicate[*pred])
            if (g.atoms[atom].args[0] == obj) s.reset(atom);
    };
    strip(m.p_inside);
    strip(m.p_ontop);
    strip(m.p_onfloor);
    if (m.p_inhand) {
        auto held = g.find_atom(*m.p_inhand, {agent, obj});
        if (held && s.test(*held)) {
            s.reset(*held);
            if (m.p_handempty) {
                auto he = g.find_atom(*m.p_handempty, {agent});
                if (he) s.set(*he);
            }
        }
    }
    if (m.p_ontop) {
        auto a = g.find_atom(*m.p_ontop, {obj, *floor});
        if (a) s.set(*a);
    }
    if (m.p_onfloor) {
        auto a = g.find_atom(*m.p_onfloor, {obj, *floor});
        if (a) s.set(*a);
    }
    if (m.p_inview) {
        auto a = g.find_atom(*m.p_inview, {agent, obj});
        if (a) s.reset(*a);
    }
    return true;
}

} // namespace detail

// ---------------------------------------------------------------------------
// check_constraints

// Evaluates the simulator-side executability constraints of the action's
// family against ground truth.  Empty result means executable.
inline std::vector<std::string> check_constraints(const WorldModel& m,
                                                  const WorldState& w,
                                                  const GroundAction& action) {
    using namespace detail;
    const std::string& family = m.families.family_of(action.schema);
    const SymbolicState& s = w.truth;
    std::uint32_t agent = agent_of(m, action);
    std::vector<std::string> violated;

    if (family == "find") {
        std::uint32_t target = inview_add_target(m, action);
        std::uint32_t room = room_of(m, action);
        if (!(m.test2(s, m.p_inroom, agent, room) && m.test2(s, m.p_inroom, target, room)))
            violated.push_back("same-room");
    } else if (family == "grasp") {
        std::uint32_t target = inhand_add_object(m, action);
        if (!m.test2(s, m.p_inview, agent, target)) violated.push_back("object-inview");
        if (!m.test1(s, m.p_handempty, agent)) violated.push_back("hand-empty");
    } else if (family == "placein") {
        std::uint32_t obj = inhand_del_object(m, action);
        std::uint32_t recv = place_receptacle(m, action);
        if (!m.test2(s, m.p_inhand, agent, obj)) violated.push_back("object-inhand");
        if (!m.test2(s, m.p_inview, agent, recv)) violated.push_back("receptacle-inview");
        if (m.test1(s, m.p_closed, recv)) violated.push_back("receptacle-not-closed");
    } else if (family == "placeon") {
        std::uint32_t obj = inhand_del_object(m, action);
        std::uint32_t recv = place_receptacle(m, action);
        if (!m.test2(s, m.p_inhand, agent, obj)) violated.push_back("object-inhand");
        if (!m.test2(s, m.p_inview, agent, recv)) violated.push_back("receptacle-inview");
    } else if (family == "fillsink") {
        std::uint32_t sink = inview_pre_target(m, action);
        if (!m.test2(s, m.p_inview, agent, sink)) violated.push_back("sink-inview");
    } else if (family == "fill") {
        std::uint32_t container = inhand_pre_object(m, action);
        std::uint32_t sink = inview_pre_target(m, action);
        if (!m.test2(s, m.p_inhand, agent, container)) violated.push_back("container-inhand");
        if (!m.test2(s, m.p_inview, agent, sink)) violated.push_back("near-sink");
        if (holds_any_filled(m, s, container)) violated.push_back("container-empty");
    } else if (family == "open" || family == "close" || family == "turnon") {
        std::uint32_t target = inview_pre_target(m, action);
        if (!m.test2(s, m.p_inview, agent, target)) violated.push_back("object-inview");
    } else if (family == "cut") {
        std::uint32_t target = inview_pre_target(m, action);
        std::uint32_t knife = inhand_pre_object(m, action);
        if (!m.test2(s, m.p_inview, agent, target)) violated.push_back("object-inview");
        if (!m.test2(s, m.p_inhand, agent, knife)) violated.push_back("knife-inhand");
    } else {
        throw UnknownActionFamily("no constraint rules for family '" + family + "'");
    }
    return violated;
}

// ---------------------------------------------------------------------------
// execute

namespace detail {

// Applies the situation's mutation.  Returns no value when the situation is
// not applicable in the current state (the roll then folds into a clean
// success).
inline std::optional<SymbolicState> apply_situation(const WorldModel& m,
                                                    const WorldState& w,
                                                    const GroundAction& action,
                                                    const std::string& family,
                                                    const std::string& label) {
    const Grounding& g = *m.grounding;
    std::uint32_t agent = agent_of(m, action);

    if (family == "find") {
        if (label == "no-free-space") return w.truth; // navigation failed outright
        if (label == "object-not-inview") {
            SymbolicState s = planner::apply_effects(g, w.truth, action);
            if (m.p_inview) {
                auto a = g.find_atom(*m.p_inview, {agent, inview_add_target(m, action)});
                if (a) s.reset(*a);
            }
            return s;
        }
        if (label == "held-object-drops") {
            auto held = held_object(m, w.truth, agent);
            if (!held) return std::nullopt;
            SymbolicState s = planner::apply_effects(g, w.truth, action);
            if (!drop_to_floor(m, s, agent, *held)) return std::nullopt;
            return s;
        }
    } else if (family == "grasp") {
        if (label == "unchanged") return w.truth;
        if (label == "drop") {
            SymbolicState s = w.truth;
            if (!drop_to_floor(m, s, agent, inhand_add_object(m, action)))
                return std::nullopt;
            return s;
        }
    } else if (family == "placein" || family == "placeon") {
        if (label == "remains-inhand") return w.truth;
        if (label == "drop") {
            SymbolicState s = w.truth;
            if (!drop_to_floor(m, s, agent, inhand_del_object(m, action)))
                return std::nullopt;
            return s;
        }
    } else if (family == "fill") {
        if (label == "not-filled") return w.truth;
        if (label == "drop") {
            SymbolicState s = w.truth;
            if (!drop_to_floor(m, s, agent, inhand_pre_object(m, action)))
                return std::nullopt;
            return s;
        }
    } else if (family == "cut") {
        if (label == "not-cut-inhand") return w.truth;
        if (label == "not-cut-drop") {
            SymbolicState s = w.truth;
            if (!drop_to_floor(m, s, agent, inhand_pre_object(m, action)))
                return std::nullopt;
            return s;
        }
    } else if (family == "fillsink" || family == "open" || family == "close" ||
               family == "turnon") {
        // Single "the action did nothing" situation per family.
        return w.truth;
    }
    throw ConfigError("no mutation defined for situation '" + family + " " + label + "'");
}

} // namespace detail

// Executes the action against ground truth.  Constraint violations fail
// without any changes and without consuming randomness; otherwise one
// uniform draw selects a situation (walking the configured rows in order)
// with the residual mass being a clean success that applies the action's
// nominal effects.
inline std::pair<WorldState, ExecutionOutcome> execute(const WorldModel& m,
                                                       const WorldState& w,
                                                       const GroundAction& action,
                                                       Rng& rng) {
    const std::string& family = m.families.family_of(action.schema);
    std::vector<std::string> violated = check_constraints(m, w, action);
    if (!violated.empty())
        return {w, ExecutionOutcome::constraint_failure(std::move(violated))};

    double u = rng.uniform();
    double acc = 0.0;
    for (const SituationRow* row : m.situations.family_rows(family)) {
        acc += row->probability;
        if (u < acc) {
            auto mutated = detail::apply_situation(m, w, action, family, row->label);
            if (!mutated) break; // inapplicable here: fold into clean success
            return {WorldState{std::move(*mutated)}, ExecutionOutcome::situation(row->label)};
        }
    }
    return {WorldState{planner::apply_effects(*m.grounding, w.truth, action)},
            ExecutionOutcome::clean()};
}

inline bool goal_satisfied(const WorldState& w, std::span<const GroundLiteral> goal) {
    return planner::holds(w.truth, goal);
}

} // namespace planmon::world
