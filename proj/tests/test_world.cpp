#include <catch2/catch_amalgamated.hpp>

#include "planmon/world.hpp"
#include "test_util.hpp"

using namespace planmon;
using world::ExecutionOutcome;
using world::WorldState;

namespace {

// Deterministic seed whose first uniform draw lands in [lo, hi).
std::uint64_t seed_with_first_uniform(double lo, double hi) {
    for (std::uint64_t s = 0; s < 200000; ++s) {
        Rng r(s, 0);
        double u = r.uniform();
        if (u >= lo && u < hi) return s;
    }
    FAIL("no seed found");
    return 0;
}

const pddl::GroundAction& action_of(const pddl::Grounding& g, const std::string& schema,
                                    const std::vector<std::string>& args) {
    for (const auto& a : g.actions)
        if (a.schema == schema && a.args == args) return a;
    FAIL("no ground action " + schema);
    throw std::logic_error("unreachable");
}

} // namespace

TEST_CASE("bundled situation table carries the published probabilities") {
    auto spec = bundled_situations();
    CHECK(spec.probability("find", "object-not-inview") == 0.0);
    CHECK(spec.probability("find", "no-free-space") == 0.0);
    CHECK(spec.probability("find", "held-object-drops") == 0.1);
    CHECK(spec.probability("grasp", "unchanged") == 0.25);
    CHECK(spec.probability("grasp", "drop") == 0.25);
    CHECK(spec.probability("placein", "remains-inhand") == 0.1);
    CHECK(spec.probability("placein", "drop") == 0.1);
    CHECK(spec.probability("placeon", "remains-inhand") == 0.1);
    CHECK(spec.probability("placeon", "drop") == 0.1);
    CHECK(spec.probability("fillsink", "faucet-fail") == 0.1);
    CHECK(spec.probability("fill", "not-filled") == 0.05);
    CHECK(spec.probability("fill", "drop") == 0.05);
    CHECK(spec.probability("open", "remains-closed") == 0.1);
    CHECK(spec.probability("close", "remains-open") == 0.1);
    CHECK(spec.probability("turnon", "remains-off") == 0.1);
    CHECK(spec.probability("cut", "not-cut-inhand") == 0.25);
    CHECK(spec.probability("cut", "not-cut-drop") == 0.25);
}

TEST_CASE("situation table validation") {
    CHECK_THROWS_AS(world::parse_situations("teleport oops 0.1"), ConfigError);
    CHECK_THROWS_AS(world::parse_situations("grasp vanish 0.1"), ConfigError);
    CHECK_THROWS_AS(world::parse_situations("grasp drop 1.5"), ConfigError);
    CHECK_THROWS_AS(world::parse_situations("grasp drop 0.6\ngrasp unchanged 0.6"),
                    ConfigError);
    CHECK_THROWS_AS(world::parse_situations("grasp drop"), ConfigError);
}

TEST_CASE("family map covers all thirteen schemas") {
    auto fm = bundled_families();
    auto d = pddl::parse_domain(data_file("domains/omnigibson.pddl"));
    for (const auto& schema : d.actions) CHECK_NOTHROW(fm.family_of(schema.name));
    CHECK(fm.family_of("graspin") == "grasp");
    CHECK(fm.family_of("place_on_floor") == "placeon");
    CHECK(fm.family_of("microwave_water") == "turnon");
    CHECK_THROWS_AS(fm.family_of("teleport"), world::UnknownActionFamily);
    CHECK_THROWS_AS(world::parse_family_map("jump levitate"), ConfigError);
    CHECK_THROWS_AS(world::parse_family_map("jump grasp\njump grasp"), ConfigError);
}

TEST_CASE("check_constraints per family") {
    auto task = load_task("halve_egg.pddl");
    const auto& g = task->ctx.g();
    const auto& wm = task->ctx.world_model;
    auto id = [&](const char* p, std::vector<std::string> args) {
        return g.require_atom_by_name(p, args);
    };

    WorldState w{task->ctx.init};

    SECTION("find with agent and object in the same room is executable") {
        const auto& find =
            action_of(g, "find", {"agent-n-01", "carving_knife-n-01", "kitchen"});
        CHECK(world::check_constraints(wm, w, find).empty());
    }

    SECTION("grasp needs the target inview and an empty hand") {
        const auto& graspon =
            action_of(g, "graspon", {"agent-n-01", "carving_knife-n-01", "countertop-n-01"});
        CHECK(world::check_constraints(wm, w, graspon) ==
              std::vector<std::string>{"object-inview"});
        w.truth.set(id("inview", {"agent-n-01", "carving_knife-n-01"}));
        CHECK(world::check_constraints(wm, w, graspon).empty());
        // A non-empty hand blocks grasping.
        w.truth.reset(id("handempty", {"agent-n-01"}));
        w.truth.set(id("inhand", {"agent-n-01", "hard__boiled_egg-n-01"}));
        CHECK(world::check_constraints(wm, w, graspon) ==
              std::vector<std::string>{"hand-empty"});
    }

    SECTION("cut without a knife inhand is blocked") {
        const auto& cut = action_of(
            g, "cut_into_half", {"agent-n-01", "carving_knife-n-01", "hard__boiled_egg-n-01"});
        w.truth.set(id("inview", {"agent-n-01", "hard__boiled_egg-n-01"}));
        CHECK(world::check_constraints(wm, w, cut) ==
              std::vector<std::string>{"knife-inhand"});
        w.truth.reset(id("handempty", {"agent-n-01"}));
        w.truth.set(id("inhand", {"agent-n-01", "carving_knife-n-01"}));
        CHECK(world::check_constraints(wm, w, cut).empty());
    }
}

TEST_CASE("fill constraints include container emptiness") {
    auto task = load_task("boil_water.pddl");
    const auto& g = task->ctx.g();
    const auto& wm = task->ctx.world_model;
    auto id = [&](const char* p, std::vector<std::string> args) {
        return g.require_atom_by_name(p, args);
    };
    WorldState w{task->ctx.init};
    const auto& fill =
        action_of(g, "fill", {"agent-n-01", "mug-n-04", "sink-n-01", "water-n-06"});

    auto violated = world::check_constraints(wm, w, fill);
    CHECK(violated == std::vector<std::string>{"container-inhand", "near-sink"});

    w.truth.reset(id("handempty", {"agent-n-01"}));
    w.truth.set(id("inhand", {"agent-n-01", "mug-n-04"}));
    w.truth.set(id("inview", {"agent-n-01", "sink-n-01"}));
    CHECK(world::check_constraints(wm, w, fill).empty());

    w.truth.set(id("filled", {"mug-n-04", "water-n-06"}));
    CHECK(world::check_constraints(wm, w, fill) ==
          std::vector<std::string>{"container-empty"});
}

TEST_CASE("constraint failure leaves the world bit-identical and rolls no situation") {
    auto task = load_task("halve_egg.pddl");
    const auto& g = task->ctx.g();
    const auto& wm = task->ctx.world_model;
    WorldState w{task->ctx.init};
    const auto& graspon =
        action_of(g, "graspon", {"agent-n-01", "carving_knife-n-01", "countertop-n-01"});

    Rng rng(1, 0);
    auto [next, outcome] = world::execute(wm, w, graspon, rng);
    CHECK(outcome.kind == ExecutionOutcome::Kind::ConstraintFailure);
    CHECK(outcome.violated == std::vector<std::string>{"object-inview"});
    CHECK(next == w);
    // The failed call consumed no randomness.
    Rng fresh(1, 0);
    CHECK(rng.next_u64() == fresh.next_u64());
}

TEST_CASE("execute samples situations by cumulative probability") {
    auto task = load_task("halve_egg.pddl");
    const auto& g = task->ctx.g();
    const auto& wm = task->ctx.world_model;
    auto id = [&](const char* p, std::vector<std::string> args) {
        return g.require_atom_by_name(p, args);
    };
    WorldState w{task->ctx.init};
    w.truth.set(id("inview", {"agent-n-01", "carving_knife-n-01"}));
    const auto& graspon =
        action_of(g, "graspon", {"agent-n-01", "carving_knife-n-01", "countertop-n-01"});

    SECTION("draw beyond the situation mass is a clean success") {
        Rng rng(seed_with_first_uniform(0.65, 0.75), 0); // grasp mass = 0.5
        auto [next, outcome] = world::execute(wm, w, graspon, rng);
        CHECK(outcome == ExecutionOutcome::clean());
        CHECK(next.truth.test(id("inhand", {"agent-n-01", "carving_knife-n-01"})));
        CHECK_FALSE(next.truth.test(id("handempty", {"agent-n-01"})));
        CHECK_FALSE(next.truth.test(id("ontop", {"carving_knife-n-01", "countertop-n-01"})));
    }

    SECTION("low draw hits the first configured situation") {
        Rng rng(seed_with_first_uniform(0.0, 0.25), 0);
        auto [next, outcome] = world::execute(wm, w, graspon, rng);
        CHECK(outcome == ExecutionOutcome::situation("unchanged"));
        CHECK(next == w); // position unchanged, nothing grasped
    }

    SECTION("mid draw hits the drop situation") {
        Rng rng(seed_with_first_uniform(0.30, 0.45), 0);
        auto [next, outcome] = world::execute(wm, w, graspon, rng);
        CHECK(outcome == ExecutionOutcome::situation("drop"));
        // Knife knocked off the countertop onto the floor, out of view.
        CHECK_FALSE(next.truth.test(id("ontop", {"carving_knife-n-01", "countertop-n-01"})));
        CHECK(next.truth.test(id("ontop", {"carving_knife-n-01", "floor-n-01"})));
        CHECK(next.truth.test(id("onfloor", {"carving_knife-n-01", "floor-n-01"})));
        CHECK_FALSE(next.truth.test(id("inview", {"agent-n-01", "carving_knife-n-01"})));
        CHECK(next.truth.test(id("handempty", {"agent-n-01"}))); // hand was empty before
        CHECK(next.truth.test(id("inroom", {"carving_knife-n-01", "kitchen"})));
    }
}

TEST_CASE("find drops the held object while still completing navigation") {
    auto task = load_task("boil_water.pddl");
    const auto& g = task->ctx.g();
    const auto& wm = task->ctx.world_model;
    auto id = [&](const char* p, std::vector<std::string> args) {
        return g.require_atom_by_name(p, args);
    };
    WorldState w{task->ctx.init};
    w.truth.reset(id("handempty", {"agent-n-01"}));
    w.truth.set(id("inhand", {"agent-n-01", "mug-n-04"}));
    w.truth.set(id("inroom", {"mug-n-04", "kitchen"}));
    const auto& find = action_of(g, "find", {"agent-n-01", "sink-n-01", "kitchen"});

    Rng rng(seed_with_first_uniform(0.04, 0.06), 0); // find drop mass = [0, 0.1)
    auto [next, outcome] = world::execute(wm, w, find, rng);
    CHECK(outcome == ExecutionOutcome::situation("held-object-drops"));
    // Navigation succeeded: the sink is in view.
    CHECK(next.truth.test(id("inview", {"agent-n-01", "sink-n-01"})));
    // The held mug dropped: hand empty, mug on the floor, room membership kept.
    CHECK_FALSE(next.truth.test(id("inhand", {"agent-n-01", "mug-n-04"})));
    CHECK(next.truth.test(id("handempty", {"agent-n-01"})));
    CHECK(next.truth.test(id("onfloor", {"mug-n-04", "floor-n-01"})));
    CHECK(next.truth.test(id("ontop", {"mug-n-04", "floor-n-01"})));
    CHECK(next.truth.test(id("inroom", {"mug-n-04", "kitchen"})));
    CHECK_FALSE(next.truth.test(id("inview", {"agent-n-01", "mug-n-04"})));

    SECTION("the same draw without a held object folds into a clean success") {
        WorldState empty_handed{task->ctx.init};
        Rng rng2(seed_with_first_uniform(0.04, 0.06), 0);
        auto [next2, outcome2] = world::execute(wm, empty_handed, find, rng2);
        CHECK(outcome2 == ExecutionOutcome::clean());
        CHECK(next2.truth.test(id("inview", {"agent-n-01", "sink-n-01"})));
    }
}

TEST_CASE("unknown action family is rejected by execute") {
    auto task = load_task("halve_egg.pddl");
    world::FamilyMap empty_map;
    world::WorldModel wm(task->ctx.g(), empty_map, bundled_situations());
    WorldState w{task->ctx.init};
    Rng rng(3, 0);
    CHECK_THROWS_AS(world::execute(wm, w, task->ctx.g().actions[0], rng),
                    world::UnknownActionFamily);
}

TEST_CASE("with zero situation probabilities execute reproduces apply") {
    auto task = load_task("boil_water.pddl", bundled_situations().zeroed());
    const auto& g = task->ctx.g();
    const auto& wm = task->ctx.world_model;

    WorldState w{task->ctx.init};
    planner::SymbolicState s = task->ctx.init;
    Rng rng(99, 0);
    for (std::uint32_t step : task->ctx.initial_plan.steps) {
        const auto& action = g.actions[step];
        auto [next, outcome] = world::execute(wm, w, action, rng);
        CHECK(outcome == ExecutionOutcome::clean());
        s = planner::apply(g, s, action);
        CHECK(next.truth == s);
        w = next;
    }
    CHECK(world::goal_satisfied(w, task->ctx.goal));
}

TEST_CASE("goal_satisfied on the boil-water end-to-end run") {
    auto task = load_task("boil_water.pddl", bundled_situations().zeroed());
    const auto& g = task->ctx.g();
    WorldState w{task->ctx.init};
    Rng rng(5, 0);
    CHECK(world::goal_satisfied(w, {})); // empty goal is vacuously true
    const auto& plan = task->ctx.initial_plan.steps;
    for (std::size_t i = 0; i + 1 < plan.size(); ++i)
        w = world::execute(task->ctx.world_model, w, g.actions[plan[i]], rng).first;
    // Everything but microwave_water has run: not cooked yet.
    CHECK_FALSE(world::goal_satisfied(w, task->ctx.goal));
    w = world::execute(task->ctx.world_model, w, g.actions[plan.back()], rng).first;
    CHECK(world::goal_satisfied(w, task->ctx.goal));
}

TEST_CASE("property: inhand/handempty exclusion survives random execution") {
    auto task = load_task("boil_water.pddl");
    const auto& g = task->ctx.g();
    const auto& wm = task->ctx.world_model;
    auto handempty = g.require_atom_by_name("handempty", {"agent-n-01"});
    auto inhand_pred = g.predicate_index.at("inhand");

    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng pick(seed, 7);
        Rng rng(seed, 0);
        WorldState w{task->ctx.init};
        for (int step = 0; step < 200; ++step) {
            const auto& action = g.actions[pick.below(g.actions.size())];
            w = world::execute(wm, w, action, rng).first;
            std::size_t held = 0;
            for (std::uint32_t atom : wm.atoms_by_predicate[inhand_pred])
                if (w.truth.test(atom)) ++held;
            REQUIRE(held <= 1);
            REQUIRE(w.truth.test(handempty) == (held == 0));
        }
    }
}

TEST_CASE("situation frequencies track configured probabilities (sanity)") {
    auto task = load_task("halve_egg.pddl");
    const auto& g = task->ctx.g();
    const auto& wm = task->ctx.world_model;
    WorldState w{task->ctx.init};
    w.truth.set(g.require_atom_by_name("inview", {"agent-n-01", "carving_knife-n-01"}));
    const auto& graspon =
        action_of(g, "graspon", {"agent-n-01", "carving_knife-n-01", "countertop-n-01"});

    Rng rng(424242, 0);
    int unchanged = 0, drop = 0, clean = 0;
    const int n = 4000;
    for (int i = 0; i < n; ++i) {
        auto [next, outcome] = world::execute(wm, w, graspon, rng);
        if (outcome.kind == ExecutionOutcome::Kind::CleanSuccess) ++clean;
        else if (outcome.label == "unchanged") ++unchanged;
        else if (outcome.label == "drop") ++drop;
    }
    // 3-sigma over n=4000 at p=0.25 is about 0.0205.
    CHECK(std::abs(unchanged / double(n) - 0.25) < 0.021);
    CHECK(std::abs(drop / double(n) - 0.25) < 0.021);
    CHECK(std::abs(clean / double(n) - 0.5) < 0.024);
}
