#include "pse/estimand.hpp"

#include <functional>
#include <map>

namespace pse {

namespace {

/// Does the exposure reach `target` along a directed path avoiding the
/// substituted mediators? The world's exposure intervention matters for the
/// target exactly then (directly or through an induced confounder); a fully
/// mediated exposure drops out, matching the canonical minimal labels.
bool exposure_reaches(const CausalGraph& g, const std::string& target,
                      const std::set<std::string>& substituted) {
    std::set<std::string> seen;
    std::function<bool(const std::string&)> dfs = [&](const std::string& n) {
        if (n == target) return true;
        if (substituted.count(n) || !seen.insert(n).second) return false;
        for (const auto& c : g.children(n))
            if (dfs(c)) return true;
        return false;
    };
    return dfs(g.exposure());
}

}  // namespace

std::map<std::pair<int, std::string>, CfTerm::Ptr> estimand_instance_terms(
    const CausalGraph& g, const InterventionRegime& regime) {
    validate_regime(g, regime);
    EstimandPlan plan = estimand_plan(g, regime.approach);

    // Instance terms bottom-up: higher-index mediators first, so upstream
    // terms exist when a lower one references them.
    std::map<std::pair<int, std::string>, CfTerm::Ptr> built;
    for (auto it = plan.instances.rbegin(); it != plan.instances.rend(); ++it) {
        const auto& inst = *it;
        const std::string& node = g.mediator(inst.mediator_index);
        std::vector<CfTerm::Arg> args;
        std::set<std::string> substituted;
        for (const auto* up : plan.upstream(g, inst.mediator_index, inst.suffix))
            substituted.insert(g.mediator(up->mediator_index));
        if (exposure_reaches(g, node, substituted))
            args.push_back({g.exposure(), regime.at(inst.label), nullptr});
        for (const auto* up : plan.upstream(g, inst.mediator_index, inst.suffix))
            args.push_back({g.mediator(up->mediator_index), std::nullopt,
                            built.at({up->mediator_index, up->suffix})});
        built[{inst.mediator_index, inst.suffix}] =
            CfTerm::make(node, std::move(args), "z" + inst.label);
    }
    return built;
}

CfTerm::Ptr nested_estimand(const CausalGraph& g, const InterventionRegime& regime) {
    EstimandPlan plan = estimand_plan(g, regime.approach);
    auto built = estimand_instance_terms(g, regime);

    std::vector<CfTerm::Arg> args;
    std::string outcome_label = plan.outcome_label(g);
    std::set<std::string> substituted;
    for (const auto* up : plan.upstream(g, 0, ""))
        substituted.insert(g.mediator(up->mediator_index));
    if (exposure_reaches(g, g.outcome(), substituted))
        args.push_back({g.exposure(), regime.at(outcome_label), nullptr});
    for (const auto* up : plan.upstream(g, 0, ""))
        args.push_back({g.mediator(up->mediator_index), std::nullopt,
                        built.at({up->mediator_index, up->suffix})});
    return CfTerm::make(g.outcome(), std::move(args), "z" + outcome_label);
}

CfTerm::Ptr total_effect_term(const CausalGraph& g, int exposure_value) {
    return CfTerm::make(g.outcome(), {{g.exposure(), exposure_value, nullptr}});
}

}  // namespace pse
