#include "pse/regime.hpp"

#include <algorithm>

namespace pse {

std::string approach_name(Approach a) {
    return a == Approach::NodeIntervened ? "node" : "path";
}

namespace labels {

std::vector<std::string> node_labels(int p) {
    std::vector<std::string> out;
    for (int i = 0; i <= p; ++i) out.push_back(std::to_string(i));
    return out;
}

std::string path_label(const CausalGraph& g, const DirectedPath& path) {
    int p = g.mediator_count();
    std::string bits(static_cast<std::size_t>(p), '0');
    for (std::size_t i = 1; i + 1 < path.nodes.size(); ++i) {
        const auto& spec = g.node(path.nodes[i]);
        if (spec.role != Role::Mediator)
            throw Error("UnsupportedCombination",
                        "path-intervened labels need mediator-only paths; '" + spec.name +
                            "' has role " + role_name(spec.role));
        bits[static_cast<std::size_t>(p - spec.mediator_index)] = '1';
    }
    return bits;
}

std::vector<std::string> path_labels(const CausalGraph& g) {
    std::vector<std::string> out;
    for (const auto& path : g.exposure_outcome_paths()) out.push_back(path_label(g, path));
    std::sort(out.begin(), out.end());
    auto dup = std::adjacent_find(out.begin(), out.end());
    if (dup != out.end())
        throw Error("UnsupportedCombination", "two paths share label '" + *dup + "'");
    return out;
}

}  // namespace labels

int InterventionRegime::at(const std::string& label) const {
    auto it = assignment.find(label);
    if (it == assignment.end()) throw Error("MissingLabel", "no value for label '" + label + "'");
    return it->second;
}

void validate_regime(const CausalGraph& g, const InterventionRegime& regime) {
    std::vector<Violation> violations;
    std::vector<std::string> expected = regime.approach == Approach::NodeIntervened
                                            ? labels::node_labels(g.mediator_count())
                                            : labels::path_labels(g);
    std::vector<std::string> given;
    for (const auto& [label, _] : regime.assignment) given.push_back(label);
    if (given != expected) {
        std::string want;
        for (const auto& l : expected) want += (want.empty() ? "" : ",") + l;
        std::string have;
        for (const auto& l : given) have += (have.empty() ? "" : ",") + l;
        violations.push_back({"BadLabels", "regime labels {" + have + "} do not match expected {" +
                                               want + "}"});
    }
    const auto& domain = g.node(g.exposure()).domain;
    for (const auto& [label, value] : regime.assignment)
        if (std::find(domain.begin(), domain.end(), value) == domain.end())
            violations.push_back({"ValueOutOfDomain",
                                  "label '" + label + "' value " + std::to_string(value) +
                                      " not in the exposure domain"});
    if (!violations.empty()) throw ValidationError(std::move(violations));
}

InterventionRegime uniform_regime(const CausalGraph& g, Approach approach, int value) {
    InterventionRegime r;
    r.approach = approach;
    auto ls = approach == Approach::NodeIntervened ? labels::node_labels(g.mediator_count())
                                                   : labels::path_labels(g);
    for (const auto& l : ls) r.assignment[l] = value;
    return r;
}

const MediatorInstance* EstimandPlan::find(int mediator_index, const std::string& suffix) const {
    for (const auto& inst : instances)
        if (inst.mediator_index == mediator_index && inst.suffix == suffix) return &inst;
    return nullptr;
}

std::vector<const MediatorInstance*> EstimandPlan::upstream(const CausalGraph& g,
                                                            int mediator_index,
                                                            const std::string& suffix) const {
    const std::string& target = mediator_index == 0 ? g.outcome() : g.mediator(mediator_index);
    std::vector<const MediatorInstance*> out;
    for (int k = mediator_index + 1; k <= g.mediator_count(); ++k) {
        const std::string& mk = g.mediator(k);
        if (!g.parents(target).count(mk)) continue;
        std::string suffix_k;
        if (approach == Approach::PathIntervened) {
            // Continuation of M_k's path: it enters the target next, then
            // follows the target's own continuation.
            if (mediator_index == 0)
                suffix_k = std::string(static_cast<std::size_t>(k - 1), '0');
            else
                suffix_k = std::string(static_cast<std::size_t>(k - 1 - mediator_index), '0') +
                           "1" + suffix;
        }
        const MediatorInstance* inst = find(k, suffix_k);
        if (!inst) throw Error("Internal", "missing mediator instance for " + mk + "/" + suffix_k);
        out.push_back(inst);
    }
    return out;
}

std::string EstimandPlan::outcome_label(const CausalGraph& g) const {
    if (approach == Approach::NodeIntervened) return "0";
    return std::string(static_cast<std::size_t>(g.mediator_count()), '0');
}

EstimandPlan estimand_plan(const CausalGraph& g, Approach approach) {
    EstimandPlan plan;
    plan.approach = approach;
    int p = g.mediator_count();
    if (approach == Approach::NodeIntervened) {
        for (int j = 1; j <= p; ++j)
            plan.instances.push_back({j, "", std::to_string(j), "m" + std::to_string(j)});
        return plan;
    }
    std::set<std::pair<int, std::string>> seen;
    for (const auto& path : g.exposure_outcome_paths()) {
        std::string label = labels::path_label(g, path);
        for (std::size_t i = 1; i + 1 < path.nodes.size(); ++i) {
            int j = g.node(path.nodes[i]).mediator_index;
            // Bits strictly below j: the downstream continuation of this path.
            std::string suffix = label.substr(static_cast<std::size_t>(p - j + 1));
            seen.insert({j, suffix});
        }
    }
    for (const auto& [j, suffix] : seen) {
        std::string label = std::string(static_cast<std::size_t>(p - j), '0') + "1" + suffix;
        plan.instances.push_back({j, suffix, label, "m" + label});
    }
    std::sort(plan.instances.begin(), plan.instances.end(),
              [](const MediatorInstance& a, const MediatorInstance& b) {
                  return std::tie(a.mediator_index, a.suffix) < std::tie(b.mediator_index, b.suffix);
              });
    return plan;
}

}  // namespace pse
