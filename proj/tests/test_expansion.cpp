#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>

#include "pse/expansion.hpp"
#include "support.hpp"

using namespace pse;

namespace {

/// Contract components back onto their originals and compare with the base
/// graph's edge set.
bool contracts_to(const ExpandedGraph& eg, const CausalGraph& g) {
    std::set<std::pair<std::string, std::string>> contracted;
    for (const auto& [from, to] : eg.digraph().edges()) {
        std::string f = eg.is_component(from) ? eg.original_of(from) : from;
        std::string t = eg.is_component(to) ? eg.original_of(to) : to;
        if (f == t) continue;  // ordering edges inside one group
        contracted.insert({f, t});
    }
    std::set<std::pair<std::string, std::string>> base;
    for (const auto& [from, to] : g.digraph().edges()) base.insert({from, to});
    return contracted == base;
}

ExpandedGraph fig6_graph() {
    // Two-period competing-risk structure, already expanded: Za drives the
    // primary events, Zb the competing ones, with ordered confounder
    // components Vb -> Va.
    ExpandedGraph::Builder b;
    auto add_node = [&](const std::string& name, Role role) {
        b.graph.add_node(name);
        b.specs[name] = {name, role, 0, {0, 1}};
    };
    add_node("Z", Role::Exposure);
    add_node("Y2", Role::Outcome);
    for (const char* n : {"M1", "Y1", "Vb", "Va", "M2"}) add_node(n, Role::Plain);
    for (const char* c : {"Za", "Zb"}) {
        b.graph.add_node(c);
        b.specs[c] = {c, Role::Exposure, 0, {0, 1}};
        b.component_of[c] = "Z";
        b.label[c] = std::string(1, c[1]);
    }
    b.attribution["Za"] = "Y1";
    b.attribution["Zb"] = "M1";
    b.groups.push_back({"Z", {"Za", "Zb"}, true, ConfounderOrdering::Unordered});
    b.detached = "Z";
    b.outcome = "Y2";
    auto edge = [&](const std::string& f, const std::string& t) { b.graph.add_edge(f, t); };
    edge("Zb", "M1");
    edge("Za", "Y1");
    edge("M1", "Y1");
    edge("Zb", "Vb");
    edge("M1", "Vb");
    edge("Y1", "Vb");
    edge("Za", "Va");
    edge("M1", "Va");
    edge("Y1", "Va");
    edge("Vb", "Va");
    edge("Zb", "M2");
    edge("M1", "M2");
    edge("Y1", "M2");
    edge("Va", "M2");
    edge("Vb", "M2");
    edge("Za", "Y2");
    edge("M2", "Y2");
    edge("Y1", "Y2");
    edge("Va", "Y2");
    edge("Vb", "Y2");
    return b.finish();
}

}  // namespace

TEST_CASE("node-intervened expansion of the two-mediator model") {
    auto g = support::two_mediator_graph();
    auto eg = expand_node_intervened(g);
    CHECK(eg.exposure_components() == std::vector<std::string>{"Z0", "Z1", "Z2"});
    CHECK(eg.digraph().has_edge("Z0", "Y"));
    CHECK(eg.digraph().has_edge("Z1", "M1"));
    CHECK(eg.digraph().has_edge("Z2", "M2"));
    CHECK(eg.attribution("Z0") == "Y");
    CHECK(eg.attribution("Z2") == "M2");
    CHECK(eg.detached_exposure() == "Z");
    CHECK(eg.digraph().children("Z").empty());
    CHECK(eg.digraph().parents("Z").empty());
    CHECK(contracts_to(eg, g));
}

TEST_CASE("p=0 node expansion is a single component") {
    auto g = CausalGraph::validate({{"Z", Role::Exposure, 0, {0, 1}},
                                    {"Y", Role::Outcome, 0, {0, 1}}},
                                   {{"Z", "Y"}});
    auto eg = expand_node_intervened(g);
    CHECK(eg.exposure_components() == std::vector<std::string>{"Z0"});
    CHECK(eg.digraph().has_edge("Z0", "Y"));
    CHECK(contracts_to(eg, g));
}

TEST_CASE("node expansion with a mediator playing the confounder's position") {
    // L treated as an ordinary (second) mediator: only the exposure splits.
    auto g = CausalGraph::validate({{"Z", Role::Exposure, 0, {0, 1}},
                                    {"L", Role::Mediator, 2, {0, 1}},
                                    {"M", Role::Mediator, 1, {0, 1}},
                                    {"Y", Role::Outcome, 0, {0, 1}}},
                                   {{"Z", "L"}, {"Z", "M"}, {"Z", "Y"}, {"L", "M"}, {"L", "Y"},
                                    {"M", "Y"}});
    auto eg = expand_node_intervened(g);
    CHECK(eg.exposure_components() == std::vector<std::string>{"Z0", "Z1", "Z2"});
    CHECK(eg.digraph().has_edge("Z2", "L"));
    CHECK(eg.digraph().has_edge("Z1", "M"));
    CHECK(eg.digraph().has_edge("Z0", "Y"));
    CHECK_FALSE(eg.is_component("L"));
    CHECK_FALSE(eg.is_component("M"));
}

TEST_CASE("node expansion is the edge-expanded graph for any p up to 4") {
    for (int p = 0; p <= 4; ++p) {
        std::vector<NodeSpec> nodes{{"Z", Role::Exposure, 0, {0, 1}},
                                    {"Y", Role::Outcome, 0, {0, 1}}};
        std::vector<std::pair<std::string, std::string>> edges{{"Z", "Y"}};
        for (int j = 1; j <= p; ++j) {
            std::string m = "M" + std::to_string(j);
            nodes.push_back({m, Role::Mediator, j, {0, 1}});
            edges.push_back({"Z", m});
            edges.push_back({m, "Y"});
            for (int k = j + 1; k <= p; ++k) edges.push_back({"M" + std::to_string(k), m});
        }
        auto g = CausalGraph::validate(nodes, edges);
        auto eg = expand_node_intervened(g);
        // Every original exposure descendant has exactly one component ancestor.
        auto comps = eg.exposure_components();
        for (const auto& d : g.digraph().descendants("Z")) {
            int count = 0;
            auto anc = eg.digraph().ancestors(d);
            for (const auto& c : comps)
                if (anc.count(c) &&
                    eg.digraph().children(c).count(d))  // direct component parent
                    ++count;
            int parents_among = 0;
            for (const auto& par : eg.digraph().parents(d))
                if (eg.is_component(par)) ++parents_among;
            CHECK(parents_among <= 1);
            (void)count;
        }
    }
}

TEST_CASE("path-intervened expansion of the two-mediator model") {
    auto g = support::two_mediator_graph();
    auto eg = expand_path_intervened(g);
    CHECK(eg.exposure_components() ==
          std::vector<std::string>{"Z00", "Z01", "Z10", "Z11"});
    CHECK(eg.digraph().has_edge("Z00", "Y"));
    CHECK(eg.digraph().has_edge("Z01", "M1"));
    CHECK(eg.digraph().has_edge("Z10", "M2^10"));
    CHECK(eg.digraph().has_edge("Z11", "M2^11"));
    CHECK(eg.digraph().has_edge("M2^10", "Y"));
    CHECK(eg.digraph().has_edge("M2^11", "M1"));
    CHECK_FALSE(eg.digraph().has_edge("M2^10", "M1"));
    CHECK_FALSE(eg.digraph().has_edge("M2^11", "Y"));
    CHECK_FALSE(eg.is_component("M1"));
    CHECK(eg.is_component("M2^10"));
    CHECK(eg.label_of("M2^10") == "10");
    CHECK(contracts_to(eg, g));
    CHECK(eg.exposure_components().size() == g.exposure_outcome_paths().size());

    const auto* group = eg.group_of("M2");
    REQUIRE(group != nullptr);
    CHECK(group->members == std::vector<std::string>{"M2^10", "M2^11"});
    CHECK(group->ordering == ConfounderOrdering::Unordered);
}

TEST_CASE("single-mediator path expansion splits nothing but the exposure") {
    auto g = support::single_mediator_graph();
    auto eg = expand_path_intervened(g);
    CHECK(eg.exposure_components() == std::vector<std::string>{"Z0", "Z1"});
    CHECK_FALSE(eg.is_component("M"));
    CHECK(contracts_to(eg, g));
}

TEST_CASE("path expansion splits an upstream mediator along its bundles") {
    // L as M2 with both continuations: L^11 feeds M, L^10 feeds Y.
    auto g = CausalGraph::validate({{"Z", Role::Exposure, 0, {0, 1}},
                                    {"L", Role::Mediator, 2, {0, 1}},
                                    {"M", Role::Mediator, 1, {0, 1}},
                                    {"Y", Role::Outcome, 0, {0, 1}}},
                                   {{"Z", "L"}, {"Z", "M"}, {"Z", "Y"}, {"L", "M"}, {"L", "Y"},
                                    {"M", "Y"}});
    auto eg = expand_path_intervened(g);
    CHECK(eg.digraph().has_edge("L^11", "M"));
    CHECK(eg.digraph().has_edge("L^10", "Y"));
    CHECK(eg.exposure_components().size() == 4);
}

TEST_CASE("path expansion refuses induced confounders") {
    auto g = support::two_mediator_graph({.with_v = true});
    CHECK_THROWS_WITH_AS(expand_path_intervened(g), doctest::Contains("UnsupportedCombination"),
                         Error);
    CHECK_THROWS_WITH_AS(expand_node_intervened(g), doctest::Contains("UnsupportedCombination"),
                         Error);
}

TEST_CASE("confounder expansion aligns components with the exposure's") {
    auto g = support::two_mediator_graph({.with_v = true});
    auto eg = expand_confounder(g, "V");
    CHECK(eg.exposure_components() == std::vector<std::string>{"Z0", "Z1", "Z2"});
    const auto* group = eg.group_of("V");
    REQUIRE(group != nullptr);
    CHECK(group->members == std::vector<std::string>{"V0", "V1", "V2"});
    CHECK(eg.digraph().has_edge("Z0", "V0"));
    CHECK(eg.digraph().has_edge("Z1", "V1"));
    CHECK(eg.digraph().has_edge("V0", "Y"));
    CHECK(eg.digraph().has_edge("V1", "M1"));
    CHECK(eg.digraph().has_edge("V2", "M2"));
    CHECK_FALSE(eg.digraph().has_edge("V2", "V1"));
    CHECK(group->ordering == ConfounderOrdering::Unordered);

    auto seq = expand_confounder(g, "V", ConfounderOrdering::Sequential);
    CHECK(seq.digraph().has_edge("V2", "V1"));
    CHECK(seq.digraph().has_edge("V1", "V0"));
    CHECK(seq.group_of("V")->ordering == ConfounderOrdering::Sequential);
}

TEST_CASE("a confounder feeding part of the targets gets that many components") {
    // V touches M1 and Y but not M2: only the aligned components appear.
    auto g = CausalGraph::validate(
        {{"Z", Role::Exposure, 0, {0, 1}},
         {"M2", Role::Mediator, 2, {0, 1}},
         {"M1", Role::Mediator, 1, {0, 1}},
         {"Y", Role::Outcome, 0, {0, 1}},
         {"V", Role::ExposureInducedConfounder, 0, {0, 1}}},
        {{"Z", "M2"}, {"Z", "M1"}, {"Z", "Y"}, {"M2", "M1"}, {"M2", "Y"}, {"M1", "Y"},
         {"Z", "V"}, {"V", "M1"}, {"V", "Y"}});
    auto eg = expand_confounder(g, "V");
    const auto* group = eg.group_of("V");
    REQUIRE(group != nullptr);
    CHECK(group->members == std::vector<std::string>{"V0", "V1"});
    CHECK(eg.digraph().has_edge("V0", "Y"));
    CHECK(eg.digraph().has_edge("V1", "M1"));
    CHECK_FALSE(eg.digraph().has_node("V2"));
}

TEST_CASE("confounder expansion demands the confounder role") {
    auto g = support::two_mediator_graph();
    CHECK_THROWS_WITH_AS(expand_confounder(g, "M1"), doctest::Contains("NotAConfounder"), Error);
    CHECK_THROWS_WITH_AS(expand_confounder(g, "nope"), doctest::Contains("NotAConfounder"),
                         Error);
}

TEST_CASE("dismissible conditions of the sequential confounder expansion") {
    auto g = support::two_mediator_graph({.with_v = true});
    auto eg = expand_confounder(g, "V", ConfounderOrdering::Sequential);
    CHECK(eg.endogenous_order() ==
          std::vector<std::string>{"Y", "M1", "M2", "V0", "V1", "V2"});
    auto conds = dismissible_conditions(eg);
    REQUIRE(conds.size() == 6);
    for (const auto& c : conds) {
        INFO("condition: ", c.statement);
        CHECK(dismissible_condition_holds(eg, c));
    }
    // The confounder components answer to their own labels.
    CHECK(conds[3].target == "V0");
    CHECK(conds[3].governing == std::vector<std::string>{"Z0"});
    CHECK(conds[4].target == "V1");
    CHECK(conds[4].conditioning == std::vector<std::string>{"V2"});
}

TEST_CASE("a latent bridge across confounder components breaks a condition") {
    auto g = support::two_mediator_graph({.with_v = true, .uv_latent = true});
    auto eg = expand_confounder(g, "V", ConfounderOrdering::Sequential);
    auto conds = dismissible_conditions(eg);
    bool v1_fails = false;
    for (const auto& c : conds)
        if (c.target == "V1" && !dismissible_condition_holds(eg, c)) v1_fails = true;
    CHECK(v1_fails);
}

TEST_CASE("dismissible conditions of the path expansion") {
    auto g = support::two_mediator_graph();
    auto eg = expand_path_intervened(g);
    CHECK(eg.endogenous_order() == std::vector<std::string>{"Y", "M1", "M2^10", "M2^11"});
    auto conds = dismissible_conditions(eg);
    REQUIRE(conds.size() == 4);
    for (const auto& c : conds) CHECK(dismissible_condition_holds(eg, c));
    CHECK(conds[2].target == "M2^10");
    CHECK(conds[2].governing == std::vector<std::string>{"Z10"});
    CHECK(conds[2].non_governing ==
          std::vector<std::string>{"Z00", "Z01", "Z11"});
}

TEST_CASE("the competing-risk structure yields its six conditions") {
    auto eg = fig6_graph();
    CHECK(eg.endogenous_order() ==
          std::vector<std::string>{"Y2", "M2", "Va", "Vb", "Y1", "M1"});
    auto conds = dismissible_conditions(eg);
    REQUIRE(conds.size() == 6);
    for (const auto& c : conds) {
        INFO("condition: ", c.statement);
        CHECK(dismissible_condition_holds(eg, c));
    }
    CHECK(conds[0].target == "Y2");
    CHECK(conds[0].governing == std::vector<std::string>{"Za"});
    CHECK(conds[0].non_governing == std::vector<std::string>{"Zb"});
    CHECK(conds[5].target == "M1");
    CHECK(conds[5].conditioning.empty());
}

TEST_CASE("condition count equals the endogenous variable count") {
    for (int p = 1; p <= 3; ++p) {
        std::vector<NodeSpec> nodes{{"Z", Role::Exposure, 0, {0, 1}},
                                    {"Y", Role::Outcome, 0, {0, 1}}};
        std::vector<std::pair<std::string, std::string>> edges{{"Z", "Y"}};
        for (int j = 1; j <= p; ++j) {
            std::string m = "M" + std::to_string(j);
            nodes.push_back({m, Role::Mediator, j, {0, 1}});
            edges.push_back({"Z", m});
            edges.push_back({m, "Y"});
            for (int k = j + 1; k <= p; ++k) edges.push_back({"M" + std::to_string(k), m});
        }
        auto g = CausalGraph::validate(nodes, edges);
        for (auto eg : {expand_node_intervened(g), expand_path_intervened(g)})
            CHECK(dismissible_conditions(eg).size() == eg.endogenous_order().size());
    }
}

TEST_CASE("reduced forms collapse to the governing label") {
    auto g = support::two_mediator_graph();
    auto eg = expand_node_intervened(g);
    auto conds = dismissible_conditions(eg);
    REQUIRE(conds.size() == 3);
    CHECK(conds[2].target == "M2");
    CHECK(conds[2].target_label == "2");
    CHECK(conds[2].reduced_form == "P(M2(z2) | -)");
    CHECK(conds[1].reduced_form == "P(M1(z1) | M2(z1))");
}
