#pragma once

// Simulated visual-question answering: predicate visibility classes,
// natural-language question rendering, and yes/no/skip answers derived from
// ground truth under configurable noise.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "planmon/rng.hpp"
#include "planmon/util.hpp"
#include "planmon/world.hpp"

namespace planmon::perception {

using pddl::GroundAction;
using pddl::Grounding;
using world::WorldState;

enum class VisibilityClass { PerceptibleVision, PerceptibleNonVision, Imperceptible };

enum class AnswerValue { Yes, No, Skip };

inline const char* to_string(AnswerValue v) {
    switch (v) {
    case AnswerValue::Yes:
        return "yes";
    case AnswerValue::No:
        return "no";
    case AnswerValue::Skip:
        return "skip";
    }
    return "?";
}

struct PerceptionConfig {
    double flip_rate = 0.0; // probability a truthful yes/no is inverted
    double skip_rate = 0.0; // probability of answering skip
    bool gate_on_inview = false; // skip when the queried object is not inview
};

// ---------------------------------------------------------------------------
// Visibility table

struct VisibilityTable {
    std::map<std::string, VisibilityClass> classes;

    // Unknown predicates default to imperceptible (never queried, assumed to
    // hold as projected).
    VisibilityClass classify(const std::string& predicate) const {
        auto it = classes.find(predicate);
        return it == classes.end() ? VisibilityClass::Imperceptible : it->second;
    }
};

inline VisibilityTable parse_visibility(const std::string& text) {
    VisibilityTable t;
    int lineno = 0;
    for (const auto& raw : split(text, '\n')) {
        ++lineno;
        auto fields = split_ws(strip_comment(raw));
        if (fields.empty()) continue;
        if (fields.size() != 2)
            throw ConfigError("visibility table line " + std::to_string(lineno) +
                              ": expected 'predicate class'");
        VisibilityClass c;
        if (fields[1] == "vision")
            c = VisibilityClass::PerceptibleVision;
        else if (fields[1] == "nonvision")
            c = VisibilityClass::PerceptibleNonVision;
        else if (fields[1] == "imperceptible")
            c = VisibilityClass::Imperceptible;
        else
            throw ConfigError("visibility table line " + std::to_string(lineno) +
                              ": unknown class '" + fields[1] + "'");
        if (!t.classes.emplace(fields[0], c).second)
            throw ConfigError("visibility table line " + std::to_string(lineno) +
                              ": duplicate predicate '" + fields[0] + "'");
    }
    return t;
}

// ---------------------------------------------------------------------------
// Question templates

class TemplateError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RenderedQuestion {
    std::string text;
    // Polarity the question text affirms: true when a "yes" answer asserts
    // the atom, false when it asserts the atom's negation (e.g. the "open"
    // wording for a negated closed literal).
    bool yes_affirms_atom = true;
};

struct QuestionTemplates {
    struct Entry {
        std::string positive;
        std::optional<std::string> negative; // wording for negative literals
    };
    std::map<std::string, Entry> templates;

    bool has(const std::string& predicate) const { return templates.count(predicate) > 0; }

    // Renders a question about `predicate(args...)`.  Negative literals use
    // the dedicated negative wording when registered; otherwise they are
    // phrased positively and the asker interprets the answer's polarity.
    RenderedQuestion render(const std::string& predicate,
                            const std::vector<std::string>& args, bool positive) const {
        auto it = templates.find(predicate);
        if (it == templates.end())
            throw TemplateError("no question template registered for predicate '" +
                                predicate + "'");
        RenderedQuestion q;
        const std::string* pattern = &it->second.positive;
        if (!positive && it->second.negative) {
            pattern = &*it->second.negative;
            q.yes_affirms_atom = false;
        }
        q.text = *pattern;
        for (std::size_t i = 0; i < args.size(); ++i) {
            std::string slot = "{" + std::to_string(i) + "}";
            std::size_t pos;
            while ((pos = q.text.find(slot)) != std::string::npos)
                q.text.replace(pos, slot.size(), args[i]);
        }
        return q;
    }
};

inline QuestionTemplates parse_templates(const std::string& text) {
    QuestionTemplates t;
    int lineno = 0;
    for (const auto& raw : split(text, '\n')) {
        ++lineno;
        std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("template line " + std::to_string(lineno) +
                              ": expected 'predicate = text'");
        std::string key = trim(line.substr(0, eq));
        std::string pattern = trim(line.substr(eq + 1));
        if (key.empty() || pattern.empty())
            throw ConfigError("template line " + std::to_string(lineno) +
                              ": empty key or pattern");
        bool negative = key.back() == '!';
        if (negative) key.pop_back();
        auto& entry = t.templates[key];
        if (negative)
            entry.negative = pattern;
        else
            entry.positive = pattern;
    }
    for (const auto& [key, entry] : t.templates)
        if (entry.positive.empty())
            throw ConfigError("template for '" + key + "' has a negative wording only");
    return t;
}

// ---------------------------------------------------------------------------
// Simulated oracle

namespace detail {

// Draw order is part of the replay contract: an optional skip draw first,
// then the inview gate, then the truth lookup with an optional flip draw.
inline AnswerValue noisy(bool truth_value, const PerceptionConfig& cfg, Rng& rng) {
    if (cfg.skip_rate > 0 && rng.uniform() < cfg.skip_rate) return AnswerValue::Skip;
    bool v = truth_value;
    if (cfg.flip_rate > 0 && rng.uniform() < cfg.flip_rate) v = !v;
    return v ? AnswerValue::Yes : AnswerValue::No;
}

} // namespace detail

// Perception context for one grounded task.
struct Perception {
    const Grounding* grounding = nullptr;
    VisibilityTable visibility;
    QuestionTemplates templates;

    // Instrumentation: number of answer() calls that violated the
    // vision-class contract.  Stays zero across correct benchmark runs.
    mutable std::uint64_t contract_violations = 0;

    Perception() = default;
    Perception(const Grounding& g, VisibilityTable vis, QuestionTemplates tpl)
        : grounding(&g), visibility(std::move(vis)), templates(std::move(tpl)) {}

    VisibilityClass classify(std::uint32_t predicate) const {
        return visibility.classify(grounding->predicate_names[predicate]);
    }

    RenderedQuestion render_question(const pddl::GroundLiteral& lit) const {
        const auto& info = grounding->atoms[lit.atom];
        std::vector<std::string> args;
        args.reserve(info.args.size());
        for (auto o : info.args) args.push_back(grounding->object_names[o]);
        return templates.render(grounding->predicate_names[info.predicate], args,
                                lit.positive);
    }

    // Answers a vision-class predicate query from ground truth under the
    // configured noise.  Non-vision atoms are a caller contract breach.
    AnswerValue answer(const WorldState& w, std::uint32_t atom,
                       const PerceptionConfig& cfg, Rng& rng) const {
        if (classify(grounding->atoms[atom].predicate) != VisibilityClass::PerceptibleVision) {
            ++contract_violations;
            throw std::logic_error("answer() queried non-vision atom " +
                                   grounding->atom_name(atom));
        }
        if (cfg.skip_rate > 0 && rng.uniform() < cfg.skip_rate) return AnswerValue::Skip;
        if (cfg.gate_on_inview && !queried_object_inview(w, atom)) return AnswerValue::Skip;
        bool v = w.truth.test(atom);
        if (cfg.flip_rate > 0 && rng.uniform() < cfg.flip_rate) v = !v;
        return v ? AnswerValue::Yes : AnswerValue::No;
    }

    // "Did the robot successfully <action>?": yes iff every nominal effect
    // literal (conditionals resolved against the pre-execution world) holds
    // in the post-execution world.
    AnswerValue answer_success(const WorldState& before, const WorldState& after,
                               const GroundAction& action, const PerceptionConfig& cfg,
                               Rng& rng) const {
        std::vector<std::uint32_t> adds, dels;
        planner::detail::collect_effects(*grounding, before.truth, action, adds, dels);
        bool ok = true;
        for (std::uint32_t a : adds)
            if (!after.truth.test(a)) ok = false;
        for (std::uint32_t a : dels)
            if (after.truth.test(a) &&
                std::find(adds.begin(), adds.end(), a) == adds.end())
                ok = false;
        return detail::noisy(ok, cfg, rng);
    }

    // "Is it possible to <action> here?": yes iff the action's declared
    // preconditions hold in ground truth.
    AnswerValue answer_affordance(const WorldState& w, const GroundAction& action,
                                  const PerceptionConfig& cfg, Rng& rng) const {
        return detail::noisy(planner::holds(w.truth, action.precondition), cfg, rng);
    }

private:
    // Gate target: the first non-agent argument of the queried atom.
    bool queried_object_inview(const WorldState& w, std::uint32_t atom) const {
        const Grounding& g = *grounding;
        auto inview_it = g.predicate_index.find("inview");
        if (inview_it == g.predicate_index.end()) return true;
        std::optional<std::uint32_t> agent;
        for (std::uint32_t o = 0; o < g.object_names.size(); ++o)
            if (g.domain->is_subtype(g.object_types[o], "agent")) {
                agent = o;
                break;
            }
        if (!agent) return true;
        for (std::uint32_t arg : g.atoms[atom].args) {
            if (g.domain->is_subtype(g.object_types[arg], "agent")) continue;
            auto id = g.find_atom(inview_it->second, {*agent, arg});
            return id && w.truth.test(*id);
        }
        return true;
    }
};

} // namespace planmon::perception
