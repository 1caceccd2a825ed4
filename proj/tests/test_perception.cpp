#include <catch2/catch_amalgamated.hpp>

#include "planmon/perception.hpp"
#include "test_util.hpp"

using namespace planmon;
using perception::AnswerValue;
using perception::VisibilityClass;
using world::WorldState;

namespace {

const char* kVizDomain = R"PDDL(
(define (domain viz)
    (:requirements :strips :typing)
    (:types agent item - object)
    (:predicates
        (inview ?a - agent ?o - object)
        (inside ?o1 - object ?o2 - object)
        (closed ?o - object)
        (inhand ?a - agent ?o - object)))
)PDDL";

const char* kVizProblem = R"PDDL(
(define (problem viz-scene)
    (:domain viz)
    (:objects agent - agent cup cabinet - item)
    (:init)
    (:goal (and)))
)PDDL";

struct VizFixture {
    pddl::Domain domain = pddl::parse_domain(kVizDomain);
    pddl::Problem problem = pddl::parse_problem(kVizProblem, domain);
    pddl::Grounding g = pddl::ground(domain, problem);
    perception::Perception perc{g, bundled_visibility(), bundled_templates()};

    std::uint32_t atom(const char* p, std::vector<std::string> args) const {
        return g.require_atom_by_name(p, args);
    }
    pddl::GroundLiteral lit(const char* p, std::vector<std::string> args,
                            bool positive = true) const {
        return {atom(p, args), positive};
    }
};

} // namespace

TEST_CASE("classify matches the published visibility classes") {
    auto vis = bundled_visibility();
    CHECK(vis.classify("inside") == VisibilityClass::PerceptibleVision);
    CHECK(vis.classify("inview") == VisibilityClass::PerceptibleVision);
    CHECK(vis.classify("closed") == VisibilityClass::PerceptibleVision);
    CHECK(vis.classify("halved") == VisibilityClass::PerceptibleVision);
    CHECK(vis.classify("onfloor") == VisibilityClass::PerceptibleVision);
    CHECK(vis.classify("ontop") == VisibilityClass::PerceptibleVision);
    CHECK(vis.classify("cooked") == VisibilityClass::PerceptibleVision);
    CHECK(vis.classify("handempty") == VisibilityClass::PerceptibleNonVision);
    CHECK(vis.classify("inhand") == VisibilityClass::PerceptibleNonVision);
    CHECK(vis.classify("hot") == VisibilityClass::PerceptibleNonVision);
    CHECK(vis.classify("turnedon") == VisibilityClass::Imperceptible);
    CHECK(vis.classify("filled") == VisibilityClass::Imperceptible);
    CHECK(vis.classify("inroom") == VisibilityClass::Imperceptible);
    CHECK(vis.classify("insource") == VisibilityClass::Imperceptible);
    // Predicates outside the published table default to imperceptible.
    CHECK(vis.classify("found") == VisibilityClass::Imperceptible);
    CHECK(vis.classify("filledsink") == VisibilityClass::Imperceptible);
    CHECK(vis.classify("frozen") == VisibilityClass::Imperceptible);
    CHECK(vis.classify("no-such-predicate") == VisibilityClass::Imperceptible);
}

TEST_CASE("every bundled domain predicate has a total classification") {
    auto d = pddl::parse_domain(data_file("domains/omnigibson.pddl"));
    auto vis = bundled_visibility();
    CHECK(d.predicates.size() == 17);
    for (const auto& p : d.predicates) {
        VisibilityClass c = vis.classify(p.name);
        CHECK((c == VisibilityClass::PerceptibleVision ||
               c == VisibilityClass::PerceptibleNonVision ||
               c == VisibilityClass::Imperceptible));
    }
}

TEST_CASE("visibility table parse errors") {
    CHECK_THROWS_AS(perception::parse_visibility("inview visible"), ConfigError);
    CHECK_THROWS_AS(perception::parse_visibility("inview"), ConfigError);
    CHECK_THROWS_AS(perception::parse_visibility("inview vision\ninview vision"),
                    ConfigError);
}

TEST_CASE("render_question fills templates with object names") {
    VizFixture f;

    auto q1 = f.perc.render_question(f.lit("inview", {"agent", "cup"}));
    CHECK(q1.text == "Is cup inview agent?");
    CHECK(q1.yes_affirms_atom);

    auto q2 = f.perc.render_question(f.lit("inside", {"cup", "cabinet"}));
    CHECK(q2.text == "Is cup inside cabinet?");
    CHECK(q2.yes_affirms_atom);

    // Negated closed renders with the "open" wording and flips polarity.
    auto q3 = f.perc.render_question(f.lit("closed", {"cabinet"}, false));
    CHECK(q3.text == "Is cabinet open?");
    CHECK_FALSE(q3.yes_affirms_atom);

    auto q4 = f.perc.render_question(f.lit("closed", {"cabinet"}));
    CHECK(q4.text == "Is cabinet closed?");
    CHECK(q4.yes_affirms_atom);

    // Without a dedicated negative wording the positive phrasing is used and
    // the asker interprets the answer's polarity.
    auto q5 = f.perc.render_question(f.lit("inside", {"cup", "cabinet"}, false));
    CHECK(q5.text == "Is cup inside cabinet?");
    CHECK(q5.yes_affirms_atom);
}

TEST_CASE("missing question template is an error") {
    VizFixture f;
    CHECK_THROWS_AS(f.perc.render_question(f.lit("inhand", {"agent", "cup"})),
                    perception::TemplateError);
}

TEST_CASE("template table parse errors") {
    CHECK_THROWS_AS(perception::parse_templates("closed! = Is {0} open?"), ConfigError);
    CHECK_THROWS_AS(perception::parse_templates("closed Is {0} closed?"), ConfigError);
    CHECK_THROWS_AS(perception::parse_templates("closed ="), ConfigError);
}

TEST_CASE("answer reads ground truth under noise knobs") {
    VizFixture f;
    WorldState w{planner::SymbolicState::make(f.g.atom_count())};
    w.truth.set(f.atom("closed", {"cabinet"}));
    w.truth.set(f.atom("inside", {"cup", "cabinet"}));

    perception::PerceptionConfig clean;
    Rng rng(11, 0);
    CHECK(f.perc.answer(w, f.atom("closed", {"cabinet"}), clean, rng) == AnswerValue::Yes);
    CHECK(f.perc.answer(w, f.atom("inview", {"agent", "cup"}), clean, rng) ==
          AnswerValue::No);

    perception::PerceptionConfig all_skip;
    all_skip.skip_rate = 1.0;
    for (int i = 0; i < 20; ++i)
        CHECK(f.perc.answer(w, f.atom("closed", {"cabinet"}), all_skip, rng) ==
              AnswerValue::Skip);

    perception::PerceptionConfig all_flip;
    all_flip.flip_rate = 1.0;
    CHECK(f.perc.answer(w, f.atom("inside", {"cup", "cabinet"}), all_flip, rng) ==
          AnswerValue::No);
    CHECK(f.perc.answer(w, f.atom("inview", {"agent", "cup"}), all_flip, rng) ==
          AnswerValue::Yes);
}

TEST_CASE("answer on a non-vision atom is a contract breach") {
    VizFixture f;
    WorldState w{planner::SymbolicState::make(f.g.atom_count())};
    perception::PerceptionConfig cfg;
    Rng rng(1, 0);
    CHECK(f.perc.contract_violations == 0);
    CHECK_THROWS_AS(f.perc.answer(w, f.atom("inhand", {"agent", "cup"}), cfg, rng),
                    std::logic_error);
    CHECK(f.perc.contract_violations == 1);
}

TEST_CASE("inview gating skips questions about unseen objects") {
    VizFixture f;
    WorldState w{planner::SymbolicState::make(f.g.atom_count())};
    w.truth.set(f.atom("inside", {"cup", "cabinet"}));

    perception::PerceptionConfig gated;
    gated.gate_on_inview = true;
    Rng rng(2, 0);
    CHECK(f.perc.answer(w, f.atom("inside", {"cup", "cabinet"}), gated, rng) ==
          AnswerValue::Skip);
    w.truth.set(f.atom("inview", {"agent", "cup"}));
    CHECK(f.perc.answer(w, f.atom("inside", {"cup", "cabinet"}), gated, rng) ==
          AnswerValue::Yes);
}

TEST_CASE("property: with zero noise answers equal ground truth on reachable worlds") {
    auto task = load_task("boil_water.pddl");
    const auto& g = task->ctx.g();
    const auto& perc = task->ctx.perception;
    perception::PerceptionConfig clean;

    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng pick(seed, 3);
        Rng world_rng(seed, 0);
        Rng perc_rng(seed, 1);
        WorldState w{task->ctx.init};
        for (int step = 0; step < 60; ++step) {
            const auto& action = g.actions[pick.below(g.actions.size())];
            w = world::execute(task->ctx.world_model, w, action, world_rng).first;
            for (std::uint32_t atom = 0; atom < g.atom_count(); ++atom) {
                if (perc.classify(g.atoms[atom].predicate) !=
                    VisibilityClass::PerceptibleVision)
                    continue;
                AnswerValue v = perc.answer(w, atom, clean, perc_rng);
                REQUIRE(v == (w.truth.test(atom) ? AnswerValue::Yes : AnswerValue::No));
            }
        }
    }
}

TEST_CASE("empirical skip frequency matches skip_rate") {
    VizFixture f;
    WorldState w{planner::SymbolicState::make(f.g.atom_count())};
    perception::PerceptionConfig cfg;
    cfg.skip_rate = 0.3;
    Rng rng(777, 0);
    int skips = 0;
    const int n = 10000;
    for (int i = 0; i < n; ++i)
        if (f.perc.answer(w, f.atom("closed", {"cabinet"}), cfg, rng) == AnswerValue::Skip)
            ++skips;
    double ci = 3.0 * std::sqrt(0.3 * 0.7 / n);
    CHECK(std::abs(skips / double(n) - 0.3) < ci);
}

TEST_CASE("answer_success checks nominal effect literals in the post world") {
    auto task = load_task("halve_egg.pddl");
    const auto& g = task->ctx.g();
    auto id = [&](const char* p, std::vector<std::string> args) {
        return g.require_atom_by_name(p, args);
    };
    const pddl::GroundAction* graspon = nullptr;
    for (const auto& a : g.actions)
        if (a.schema == "graspon" &&
            a.args == std::vector<std::string>{"agent-n-01", "carving_knife-n-01",
                                               "countertop-n-01"})
            graspon = &a;
    REQUIRE(graspon);

    WorldState before{task->ctx.init};
    before.truth.set(id("inview", {"agent-n-01", "carving_knife-n-01"}));
    before.truth.set(id("found", {"agent-n-01", "carving_knife-n-01"}));

    perception::PerceptionConfig clean;
    Rng rng(5, 0);

    // Clean grasp: effects all hold afterwards.
    WorldState after{planner::apply(g, before.truth, *graspon)};
    CHECK(task->ctx.perception.answer_success(before, after, *graspon, clean, rng) ==
          AnswerValue::Yes);

    // Grasp with the object-unchanged situation: nothing happened.
    CHECK(task->ctx.perception.answer_success(before, before, *graspon, clean, rng) ==
          AnswerValue::No);

    perception::PerceptionConfig all_skip;
    all_skip.skip_rate = 1.0;
    CHECK(task->ctx.perception.answer_success(before, after, *graspon, all_skip, rng) ==
          AnswerValue::Skip);
}

TEST_CASE("answer_affordance checks declared preconditions in truth") {
    auto task = load_task("boil_water.pddl");
    const auto& g = task->ctx.g();
    auto id = [&](const char* p, std::vector<std::string> args) {
        return g.require_atom_by_name(p, args);
    };
    const pddl::GroundAction* graspin = nullptr;
    for (const auto& a : g.actions)
        if (a.schema == "graspin" &&
            a.args == std::vector<std::string>{"agent-n-01", "mug-n-04", "cabinet-n-01"})
            graspin = &a;
    REQUIRE(graspin);

    perception::PerceptionConfig clean;
    Rng rng(6, 0);

    // Initial scene: cabinet closed, mug neither inview nor found.
    WorldState closed_scene{task->ctx.init};
    CHECK(task->ctx.perception.answer_affordance(closed_scene, *graspin, clean, rng) ==
          AnswerValue::No);

    // Cabinet opened and mug located: graspable.
    WorldState open_scene{task->ctx.init};
    open_scene.truth.reset(id("closed", {"cabinet-n-01"}));
    open_scene.truth.set(id("inview", {"agent-n-01", "mug-n-04"}));
    open_scene.truth.set(id("found", {"agent-n-01", "mug-n-04"}));
    CHECK(task->ctx.perception.answer_affordance(open_scene, *graspin, clean, rng) ==
          AnswerValue::Yes);

    perception::PerceptionConfig all_flip;
    all_flip.flip_rate = 1.0;
    CHECK(task->ctx.perception.answer_affordance(closed_scene, *graspin, all_flip, rng) ==
          AnswerValue::Yes);
    CHECK(task->ctx.perception.answer_affordance(open_scene, *graspin, all_flip, rng) ==
          AnswerValue::No);
}
