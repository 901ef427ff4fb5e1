#include "pse/identify.hpp"

#include <algorithm>

#include "pse/assumptions.hpp"
#include "pse/estimand.hpp"

namespace pse {

std::string semantic_name(EstimandSpec::Semantic s) {
    switch (s) {
        case EstimandSpec::Semantic::Classical: return "classical";
        case EstimandSpec::Semantic::Interventional: return "interventional";
        case EstimandSpec::Semantic::Separable: return "separable";
    }
    return "?";
}

namespace {

void check_size_limits(const CausalGraph& g, Approach approach) {
    int p = g.mediator_count();
    if (approach == Approach::NodeIntervened && p > 6)
        throw Error("UnsupportedCombination", "node-intervened approach supports p <= 6");
    if (approach == Approach::PathIntervened && p > 4)
        throw Error("UnsupportedCombination",
                    "path-intervened approach supports p <= 4 (2^p labels)");
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

/// Baseline confounders in reverse topological order, each with its symbol.
struct BaselineBlock {
    std::vector<std::string> nodes;                 // reverse topological
    std::map<std::string, std::string> symbol;      // node -> sum symbol

    static BaselineBlock of(const CausalGraph& g) {
        BaselineBlock b;
        auto cs = g.nodes_with_role(Role::BaselineConfounder);
        std::set<std::string> cset(cs.begin(), cs.end());
        for (const auto& n : g.topological_order())
            if (cset.count(n)) b.nodes.push_back(n);
        std::reverse(b.nodes.begin(), b.nodes.end());
        for (const auto& c : b.nodes) b.symbol[c] = lower(c);
        return b;
    }

    void add_sums(FormulaAst& ast, const CausalGraph& g) const {
        for (auto it = nodes.rbegin(); it != nodes.rend(); ++it)
            ast.sums.push_back({symbol.at(*it), *it});
        (void)g;
    }

    /// Conditioning entries appended to every factor.
    void condition(FormulaAst::Factor& f) const {
        for (const auto& c : nodes) f.given.push_back({c, symbol.at(c)});
    }

    /// Chained marginal factors P(C_i = c_i | baseline parents).
    void add_factors(FormulaAst& ast, const CausalGraph& g) const {
        for (const auto& c : nodes) {
            FormulaAst::Factor f;
            f.target = c;
            f.target_symbol = symbol.at(c);
            for (const auto& par : g.parents(c))
                if (symbol.count(par)) f.given.push_back({par, symbol.at(par)});
            ast.factors.push_back(std::move(f));
        }
    }
};

CausalGraph drop_nodes(const CausalGraph& g, const std::set<std::string>& dropped) {
    std::vector<NodeSpec> nodes;
    for (const auto& n : g.nodes())
        if (!dropped.count(n.name)) nodes.push_back(n);
    std::vector<std::pair<std::string, std::string>> edges;
    for (const auto& [from, to] : g.digraph().edges())
        if (!dropped.count(from) && !dropped.count(to)) edges.emplace_back(from, to);
    return CausalGraph::validate(std::move(nodes), std::move(edges));
}

void require_exchangeability(const CausalGraph& g, const InterventionRegime& regime,
                             EstimandSpec::Semantic semantic) {
    for (const auto& e : check_exchangeability(g, regime, semantic))
        if (e.graph_verdict == GraphVerdict::Fails)
            throw AssumptionViolated(e.name, e.statement);
}

/// Shared classical/interventional emitter. `v_conditioned_slots` names the
/// factor slots whose conditional keeps the confounder (with a matching
/// weight factor); the classical weighted form uses every slot, the
/// interventional one only the outcome's.
FormulaAst emit_node_or_path(const CausalGraph& g, const InterventionRegime& regime,
                             const std::optional<int>& outcome_value, const std::string& eic,
                             const std::set<std::string>& v_conditioned_slots) {
    EstimandPlan plan = estimand_plan(g, regime.approach);
    BaselineBlock baselines = BaselineBlock::of(g);
    FormulaAst ast;

    std::set<std::string> used_labels;
    auto slot = [&](FormulaAst::Factor& f, const std::string& target, const std::string& label) {
        if (g.parents(target).count(g.exposure())) {
            f.given.push_back({g.exposure(), "z" + label});
            used_labels.insert(label);
        }
    };
    auto v_slot = [&](FormulaAst::Factor& f, const std::string& target, const std::string& label) {
        if (!eic.empty() && v_conditioned_slots.count(label) && g.parents(target).count(eic))
            f.given.push_back({eic, "v" + label});
    };

    // Outcome factor.
    std::string out_label = plan.outcome_label(g);
    FormulaAst::Factor fy;
    fy.target = g.outcome();
    fy.target_symbol = "y";
    slot(fy, g.outcome(), out_label);
    for (const auto* up : plan.upstream(g, 0, ""))
        fy.given.push_back({g.mediator(up->mediator_index), up->symbol});
    v_slot(fy, g.outcome(), out_label);
    baselines.condition(fy);
    ast.factors.push_back(std::move(fy));

    // Mediator factors, one per instance.
    for (const auto& inst : plan.instances) {
        const std::string& node = g.mediator(inst.mediator_index);
        FormulaAst::Factor f;
        f.target = node;
        f.target_symbol = inst.symbol;
        slot(f, node, inst.label);
        for (const auto* up : plan.upstream(g, inst.mediator_index, inst.suffix))
            f.given.push_back({g.mediator(up->mediator_index), up->symbol});
        v_slot(f, node, inst.label);
        baselines.condition(f);
        ast.factors.push_back(std::move(f));
        ast.sums.push_back({inst.symbol, node});
    }

    // Confounder weights P(V = v_l | z_l, C) for each conditioned slot.
    if (!eic.empty()) {
        std::vector<std::string> slots{out_label};
        for (const auto& inst : plan.instances) slots.push_back(inst.label);
        for (const auto& l : slots) {
            if (!v_conditioned_slots.count(l)) continue;
            FormulaAst::Factor f;
            f.target = eic;
            f.target_symbol = "v" + l;
            if (g.parents(eic).count(g.exposure())) {
                f.given.push_back({g.exposure(), "z" + l});
                used_labels.insert(l);
            }
            baselines.condition(f);
            ast.factors.push_back(std::move(f));
            ast.sums.push_back({"v" + l, eic});
        }
    }

    baselines.add_factors(ast, g);
    baselines.add_sums(ast, g);

    for (const auto& l : used_labels)
        ast.bindings.push_back({"z" + l, g.exposure(), regime.at(l)});
    if (outcome_value) ast.bindings.push_back({"y", g.outcome(), *outcome_value});
    return ast;
}

/// Classical / interventional shared frontend: resolves the nuisance
/// confounder handling, checks exchangeability, emits.
FormulaAst identify_ci(const EstimandSpec& spec, bool interventional) {
    const CausalGraph& g = spec.base_graph();
    check_size_limits(g, spec.regime.approach);
    validate_regime(g, spec.regime);

    auto eics = g.nodes_with_role(Role::ExposureInducedConfounder);
    if (eics.size() > 1)
        throw Error("UnsupportedCombination",
                    "at most one exposure-induced confounder is supported");

    if (eics.empty()) {
        require_exchangeability(g, spec.regime,
                                interventional ? EstimandSpec::Semantic::Interventional
                                               : EstimandSpec::Semantic::Classical);
        return emit_node_or_path(g, spec.regime, spec.outcome_value, "", {});
    }

    const std::string& v = eics.front();
    switch (spec.nuisance) {
        case NuisanceHandling::Refuse:
            throw Error("UnsupportedCombination",
                        "exposure-induced confounder '" + v +
                            "' present; choose assume-absent or weight-observed explicitly");
        case NuisanceHandling::AssumeAbsent: {
            CausalGraph reduced = drop_nodes(g, {v});
            InterventionRegime regime = spec.regime;
            require_exchangeability(reduced, regime,
                                    interventional ? EstimandSpec::Semantic::Interventional
                                                   : EstimandSpec::Semantic::Classical);
            return emit_node_or_path(reduced, regime, spec.outcome_value, "", {});
        }
        case NuisanceHandling::WeightObserved: break;
    }

    // Weighted form. The classical path approach has no component alignment
    // for the confounder, so it is refused rather than guessed.
    if (!interventional && spec.regime.approach == Approach::PathIntervened)
        throw Error("UnsupportedCombination",
                    "classical path-intervened identification with an observed "
                    "exposure-induced confounder is not defined");
    for (const auto& par : g.parents(v)) {
        Role r = g.node(par).role;
        if (r != Role::Exposure && r != Role::BaselineConfounder && r != Role::Latent)
            throw Error("UnsupportedCombination",
                        "weighted confounder handling needs pa(" + v +
                            ") within exposure/baseline/latent nodes");
    }
    require_exchangeability(g, spec.regime,
                            interventional ? EstimandSpec::Semantic::Interventional
                                           : EstimandSpec::Semantic::Classical);

    EstimandPlan plan = estimand_plan(g, spec.regime.approach);
    std::set<std::string> v_slots{plan.outcome_label(g)};
    if (!interventional)
        for (const auto& inst : plan.instances) v_slots.insert(inst.label);
    return emit_node_or_path(g, spec.regime, spec.outcome_value, v, v_slots);
}

}  // namespace

FormulaAst identify_classical(const EstimandSpec& spec) { return identify_ci(spec, false); }

FormulaAst identify_interventional(const EstimandSpec& spec) { return identify_ci(spec, true); }

FormulaAst identify_separable(const EstimandSpec& spec) {
    ExpandedGraph eg;
    if (spec.expanded) {
        eg = *spec.expanded;
    } else {
        const CausalGraph& g = spec.base_graph();
        check_size_limits(g, spec.regime.approach);
        auto eics = g.nodes_with_role(Role::ExposureInducedConfounder);
        if (spec.regime.approach == Approach::PathIntervened)
            eg = expand_path_intervened(g);
        else if (eics.empty())
            eg = expand_node_intervened(g);
        else if (eics.size() == 1)
            eg = expand_confounder(g, eics.front(), spec.confounder_ordering);
        else
            throw Error("UnsupportedCombination",
                        "at most one exposure-induced confounder is supported");
        validate_regime(g, spec.regime);
    }

    // Dismissible ledger gate.
    for (const auto& e : check_dismissible(eg))
        if (e.graph_verdict == GraphVerdict::Fails) throw AssumptionViolated(e.name, e.statement);

    // Exchangeability on the expanded SWIG.
    if (spec.graph)
        for (const auto& e :
             check_exchangeability(*spec.graph, spec.regime, EstimandSpec::Semantic::Separable))
            if (e.graph_verdict == GraphVerdict::Fails)
                throw AssumptionViolated(e.name, e.statement);

    // Label -> exposure value, keyed by component label; the regime must
    // cover every exposure component.
    auto value_of_label = [&](const std::string& label) {
        auto it = spec.regime.assignment.find(label);
        if (it == spec.regime.assignment.end())
            throw Error("MissingLabel", "regime has no value for label '" + label + "'");
        return it->second;
    };
    for (const auto& z : eg.exposure_components()) value_of_label(eg.label_of(z));

    // Symbols: components and governed mediators use their label, everything
    // else its lowercased name.
    auto symbol_of = [&](const std::string& node) -> std::string {
        Role r = eg.role(node);
        std::string label;
        if (eg.is_component(node))
            label = eg.label_of(node);
        else {
            auto gov = eg.governing_components(node);
            if (!gov.empty()) label = eg.label_of(gov.front());
        }
        if (r == Role::Mediator && !label.empty()) return "m" + label;
        if (r == Role::ExposureInducedConfounder && !label.empty()) return "v" + label;
        return lower(node);
    };
    // Collapsed actual-world name of an expanded node.
    auto actual_name = [&](const std::string& node) -> std::string {
        if (!eg.is_component(node)) return node;
        const auto* group = eg.group_of(eg.original_of(node));
        if (group && (group->exposure_group || group->ordering == ConfounderOrdering::Unordered))
            return eg.original_of(node);
        return node;
    };

    // Baseline confounders condition every factor and get chained weights.
    std::vector<std::string> baseline_nodes;
    if (spec.graph) baseline_nodes = BaselineBlock::of(*spec.graph).nodes;

    FormulaAst ast;
    std::set<std::string> used_labels;
    auto order = eg.endogenous_order();
    std::set<std::string> endo(order.begin(), order.end());
    for (const auto& node : order) {
        std::string target = actual_name(node);
        std::string sym = node == order.front() ? "y" : symbol_of(node);
        FormulaAst::Factor f;
        f.target = target;
        f.target_symbol = sym;
        for (const auto& z : eg.governing_components(node)) {
            f.given.push_back({actual_name(z), "z" + eg.label_of(z)});
            used_labels.insert(eg.label_of(z));
        }
        for (const auto& par : eg.digraph().parents(node))
            if (endo.count(par)) f.given.push_back({actual_name(par), symbol_of(par)});
        for (const auto& c : baseline_nodes) f.given.push_back({c, lower(c)});
        ast.factors.push_back(std::move(f));
        if (node != order.front()) ast.sums.push_back({sym, target});
    }
    if (spec.graph) {
        BaselineBlock baselines = BaselineBlock::of(*spec.graph);
        baselines.add_factors(ast, *spec.graph);
        baselines.add_sums(ast, *spec.graph);
    }

    const std::string& exposure = eg.detached_exposure();
    for (const auto& l : used_labels)
        ast.bindings.push_back({"z" + l, exposure, value_of_label(l)});
    if (spec.outcome_value)
        ast.bindings.push_back({"y", ast.factors.front().target, *spec.outcome_value});
    return ast;
}

FormulaAst identify(const EstimandSpec& spec) {
    switch (spec.semantic) {
        case EstimandSpec::Semantic::Classical: return identify_classical(spec);
        case EstimandSpec::Semantic::Interventional: return identify_interventional(spec);
        case EstimandSpec::Semantic::Separable: return identify_separable(spec);
    }
    throw Error("UnsupportedCombination", "unknown semantic");
}

FormulaAst g_formula(const CausalGraph& g, int exposure_value, int outcome_value) {
    FormulaAst ast;
    auto topo = g.topological_order();
    std::map<std::string, std::string> symbol;
    for (const auto& n : topo) {
        if (!g.is_observed(n)) continue;
        symbol[n] = n == g.outcome() ? "y" : lower(n);
    }
    for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
        const auto& n = *it;
        if (!g.is_observed(n) || n == g.exposure()) continue;
        FormulaAst::Factor f;
        f.target = n;
        f.target_symbol = symbol.at(n);
        for (const auto& par : g.parents(n)) {
            if (!g.is_observed(par)) continue;
            if (par == g.exposure())
                f.given.push_back({par, "z"});
            else
                f.given.push_back({par, symbol.at(par)});
        }
        ast.factors.push_back(std::move(f));
        if (n != g.outcome()) ast.sums.push_back({symbol.at(n), n});
    }
    ast.bindings.push_back({"z", g.exposure(), exposure_value});
    ast.bindings.push_back({"y", g.outcome(), outcome_value});
    return ast;
}

}  // namespace pse
