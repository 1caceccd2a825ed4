#pragma once

// Shared fixtures for the test suites: bundled data loading and task
// context construction.

#include <memory>
#include <optional>
#include <string>

#include "planmon/monitor.hpp"

inline std::string data_path(const std::string& rel) {
    return std::string(PLANMON_DATA_DIR) + "/" + rel;
}

inline std::string data_file(const std::string& rel) {
    return planmon::read_file(data_path(rel));
}

inline planmon::world::SituationSpec bundled_situations() {
    return planmon::world::parse_situations(data_file("situations.cfg"));
}

inline planmon::world::FamilyMap bundled_families() {
    return planmon::world::parse_family_map(data_file("action_families.cfg"));
}

inline planmon::perception::VisibilityTable bundled_visibility() {
    return planmon::perception::parse_visibility(data_file("visibility.cfg"));
}

inline planmon::perception::QuestionTemplates bundled_templates() {
    return planmon::perception::parse_templates(data_file("templates.cfg"));
}

struct TestTask {
    planmon::pddl::Domain domain;
    planmon::pddl::Problem problem;
    planmon::monitor::TaskContext ctx;
};

// Loads a bundled problem with the default configuration tables; situation
// probabilities can be overridden (e.g. zeroed) per test.
inline std::unique_ptr<TestTask> load_task(
    const std::string& problem_file,
    std::optional<planmon::world::SituationSpec> situations = std::nullopt) {
    auto t = std::make_unique<TestTask>();
    t->domain = planmon::pddl::parse_domain(data_file("domains/omnigibson.pddl"));
    t->problem =
        planmon::pddl::parse_problem(data_file("problems/" + problem_file), t->domain);
    t->ctx = planmon::monitor::make_task_context(
        t->domain, t->problem, bundled_families(),
        situations ? *situations : bundled_situations(), bundled_visibility(),
        bundled_templates());
    return t;
}

inline const char* const kBundledProblems[5] = {
    "boil_water.pddl", "bring_in_bottles.pddl", "cook_pie.pddl", "halve_egg.pddl",
    "store_firewood.pddl"};

// Grasp-from-receptacle fixture with an explicit not-closed precondition,
// mirroring the cup-in-cabinet scenario.
inline const char* const kGraspFromDomain = R"PDDL(
(define (domain fig2)
    (:requirements :strips :typing :negative-preconditions)
    (:types agent item - object)
    (:predicates
        (closed ?r - object)
        (inview ?a - agent ?o - object)
        (inside ?o - object ?r - object)
        (handempty ?a - agent)
        (inhand ?a - agent ?o - object))
    (:action graspfrom
        :parameters (?a - agent ?o - item ?r - item)
        :precondition (and (not (closed ?r)) (inview ?a ?o) (inside ?o ?r) (handempty ?a))
        :effect (and (inhand ?a ?o) (not (inview ?a ?o)) (not (handempty ?a))
                     (not (inside ?o ?r))))
)
)PDDL";

inline const char* const kGraspFromProblem = R"PDDL(
(define (problem fig2-scene)
    (:domain fig2)
    (:objects agent - agent cup cabinet - item)
    (:init (closed cabinet) (inside cup cabinet) (handempty agent))
    (:goal (and (inhand agent cup)))
)
)PDDL";
