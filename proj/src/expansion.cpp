#include "pse/expansion.hpp"

#include <algorithm>
#include <sstream>

namespace pse {

namespace {

std::string render_path(const DirectedPath& p) {
    std::string out;
    for (std::size_t i = 0; i < p.nodes.size(); ++i) {
        if (i) out += "->";
        out += p.nodes[i];
    }
    return out;
}

}  // namespace

const std::string& ExpandedGraph::original_of(const std::string& name) const {
    auto it = component_of_.find(name);
    if (it != component_of_.end()) return it->second;
    if (!graph_.has_node(name)) throw Error("UnknownNode", "node '" + name + "' not in graph");
    auto sp = specs_.find(name);
    return sp->second.name;
}

const ExpandedGraph::ComponentGroup* ExpandedGraph::group_of(const std::string& original) const {
    for (const auto& g : groups_)
        if (g.original == original) return &g;
    return nullptr;
}

std::vector<std::string> ExpandedGraph::exposure_components() const {
    for (const auto& g : groups_)
        if (g.exposure_group) return g.members;
    return {};
}

const std::string& ExpandedGraph::label_of(const std::string& component) const {
    auto it = label_.find(component);
    if (it == label_.end()) throw Error("UnknownNode", "'" + component + "' is not a component");
    return it->second;
}

const std::string& ExpandedGraph::component_for_label(const std::string& label) const {
    for (const auto& c : exposure_components())
        if (label_.at(c) == label) return label_.find(c)->first;
    throw Error("MissingLabel", "no exposure component for label '" + label + "'");
}

const std::string& ExpandedGraph::attribution(const std::string& component) const {
    auto it = attribution_.find(component);
    if (it == attribution_.end()) throw Error("UnknownNode", "'" + component + "' is not a component");
    return it->second;
}

const std::vector<int>& ExpandedGraph::domain(const std::string& name) const {
    auto it = specs_.find(name);
    if (it == specs_.end()) throw Error("UnknownNode", "node '" + name + "' not in graph");
    return it->second.domain;
}

Role ExpandedGraph::role(const std::string& name) const {
    auto it = specs_.find(name);
    if (it == specs_.end()) throw Error("UnknownNode", "node '" + name + "' not in graph");
    return it->second.role;
}

bool ExpandedGraph::is_latent(const std::string& name) const { return role(name) == Role::Latent; }

std::vector<std::string> ExpandedGraph::endogenous_order() const {
    std::set<std::string> exposure_set;
    for (const auto& c : exposure_components()) exposure_set.insert(c);

    std::set<std::string> endo;
    for (const auto& n : graph_.nodes())
        if (!exposure_set.count(n) && n != detached_ && !is_latent(n) &&
            role(n) != Role::BaselineConfounder)
            endo.insert(n);

    // Kahn over the reversed endogenous subgraph: outcome side first, then
    // reverse-topological; ties prefer plain variables over components, then
    // names, which reproduces the usual factor listing Y, M1, M2, V0, V1, V2.
    std::map<std::string, int> pending;  // endogenous children not yet emitted
    for (const auto& n : endo) {
        int k = 0;
        for (const auto& c : graph_.children(n))
            if (endo.count(c)) ++k;
        pending[n] = k;
    }
    auto key = [&](const std::string& n) {
        return std::make_pair(is_component(n) ? 1 : 0, n);
    };
    std::vector<std::string> order;
    std::set<std::string> done;
    while (order.size() < endo.size()) {
        std::string best;
        for (const auto& n : endo)
            if (!done.count(n) && pending[n] == 0 && (best.empty() || key(n) < key(best))) best = n;
        if (best.empty()) throw Error("Cycle", "expanded graph is cyclic");
        order.push_back(best);
        done.insert(best);
        for (const auto& p : graph_.parents(best))
            if (endo.count(p)) --pending[p];
    }
    return order;
}

std::vector<std::string> ExpandedGraph::governing_components(const std::string& node) const {
    std::set<std::string> exposure_set;
    for (const auto& c : exposure_components()) exposure_set.insert(c);
    std::vector<std::string> out;
    for (const auto& p : graph_.parents(node))
        if (exposure_set.count(p)) out.push_back(p);
    return out;
}

ExpandedGraph ExpandedGraph::Builder::finish() const {
    std::vector<Violation> violations;
    if (detached.empty() || !graph.has_node(detached))
        violations.push_back({"MissingExposure", "expanded graph needs the detached exposure"});
    else if (!graph.parents(detached).empty() || !graph.children(detached).empty())
        violations.push_back({"DetachedExposure",
                              "the original exposure '" + detached + "' must keep no edges"});
    if (outcome.empty() || !graph.has_node(outcome))
        violations.push_back({"MissingOutcome", "expanded graph needs an outcome"});
    bool any_exposure_group = false;
    for (const auto& g : groups) {
        if (g.exposure_group) any_exposure_group = true;
        for (const auto& m : g.members) {
            if (!graph.has_node(m))
                violations.push_back({"UnknownNode", "component '" + m + "' not in graph"});
            if (!component_of.count(m) || !label.count(m))
                violations.push_back({"BadComponent", "component '" + m + "' missing metadata"});
        }
    }
    if (!any_exposure_group)
        violations.push_back({"BadComponent", "no exposure component group"});
    if (!graph.find_cycle().empty())
        violations.push_back({"Cycle", "expanded graph contains a cycle"});
    for (const auto& n : graph.nodes())
        if (!specs.count(n))
            violations.push_back({"BadDomain", "node '" + n + "' has no domain"});
    if (!violations.empty()) throw ValidationError(std::move(violations));

    ExpandedGraph eg;
    eg.graph_ = graph;
    eg.detached_ = detached;
    eg.outcome_ = outcome;
    eg.component_of_ = component_of;
    eg.label_ = label;
    eg.attribution_ = attribution;
    eg.specs_ = specs;
    eg.groups_ = groups;
    return eg;
}

namespace {

/// Component name that does not collide with existing nodes.
std::string component_name(const Digraph& g, const std::string& base, const std::string& tag) {
    std::string name = base + tag;
    while (g.has_node(name)) name = "_" + name;
    return name;
}

struct ExpansionContext {
    const CausalGraph& g;
    ExpandedGraph::Builder b;

    /// Copies the base nodes except the ones being replaced by components.
    explicit ExpansionContext(const CausalGraph& graph,
                              const std::set<std::string>& replaced = {})
        : g(graph) {
        for (const auto& n : g.nodes()) {
            if (replaced.count(n.name)) continue;
            b.graph.add_node(n.name);
            b.specs[n.name] = n;
        }
        b.detached = g.exposure();
        b.outcome = g.outcome();
    }

    /// Copies every edge not incident to the exposure.
    void copy_inner_edges() {
        for (const auto& [from, to] : g.digraph().edges())
            if (from != g.exposure() && to != g.exposure()) b.graph.add_edge(from, to);
    }

    std::string add_exposure_component(const std::string& tag, const std::string& label,
                                       const std::string& attribution) {
        std::string name = component_name(b.graph, g.exposure(), tag);
        b.graph.add_node(name);
        NodeSpec spec = g.node(g.exposure());
        spec.name = name;
        b.specs[name] = spec;
        b.component_of[name] = g.exposure();
        b.label[name] = label;
        b.attribution[name] = attribution;
        // Components inherit the exposure's own causes (baseline confounders,
        // latent parents), which keeps any exposure-outcome confounding visible.
        for (const auto& p : g.parents(g.exposure())) b.graph.add_edge(p, name);
        return name;
    }
};

}  // namespace

ExpandedGraph expand_node_intervened(const CausalGraph& g) {
    if (!g.nodes_with_role(Role::ExposureInducedConfounder).empty())
        throw Error("UnsupportedCombination",
                    "node-intervened expansion with an exposure-induced confounder: "
                    "use expand_confounder");
    ExpansionContext ctx(g);
    ctx.copy_inner_edges();

    ExpandedGraph::ComponentGroup group{g.exposure(), {}, true, ConfounderOrdering::Unordered};
    int p = g.mediator_count();
    for (int i = 0; i <= p; ++i) {
        std::string target = i == 0 ? g.outcome() : g.mediator(i);
        std::string name =
            ctx.add_exposure_component(std::to_string(i), std::to_string(i), target);
        group.members.push_back(name);
        if (g.children(g.exposure()).count(target)) ctx.b.graph.add_edge(name, target);
    }
    ctx.b.groups.push_back(group);
    return ctx.b.finish();
}

ExpandedGraph expand_path_intervened(const CausalGraph& g) {
    if (!g.nodes_with_role(Role::ExposureInducedConfounder).empty())
        throw Error("UnsupportedCombination",
                    "path-intervened expansion is undefined with an exposure-induced "
                    "confounder; no component alignment exists");
    int p = g.mediator_count();
    auto paths = g.exposure_outcome_paths();
    if (paths.empty()) throw Error("UnsupportedCombination", "no exposure->outcome path");

    EstimandPlan plan = estimand_plan(g, Approach::PathIntervened);
    // How many instances each mediator has decides whether it is split.
    std::map<int, int> instance_count;
    for (const auto& inst : plan.instances) ++instance_count[inst.mediator_index];

    std::set<std::string> replaced;
    for (const auto& [j, count] : instance_count)
        if (count > 1) replaced.insert(g.mediator(j));
    ExpansionContext ctx(g, replaced);

    // Name of the node standing for mediator instance (j, suffix).
    auto instance_node = [&](int j, const std::string& suffix) -> std::string {
        const MediatorInstance* inst = plan.find(j, suffix);
        if (!inst) throw Error("Internal", "no instance " + std::to_string(j) + "/" + suffix);
        if (instance_count[j] == 1) return g.mediator(j);
        return g.mediator(j) + "^" + inst->label;
    };

    // Mediator components.
    for (const auto& inst : plan.instances) {
        if (instance_count[inst.mediator_index] == 1) continue;
        const std::string& orig = g.mediator(inst.mediator_index);
        std::string name = orig + "^" + inst.label;
        if (ctx.b.graph.has_node(name))
            throw Error("DuplicateName", "component name '" + name + "' already taken");
        ctx.b.graph.add_node(name);
        NodeSpec spec = g.node(orig);
        spec.name = name;
        ctx.b.specs[name] = spec;
        ctx.b.component_of[name] = orig;
        ctx.b.label[name] = inst.label;
    }
    for (const auto& [j, count] : instance_count) {
        if (count == 1) continue;
        ExpandedGraph::ComponentGroup group{g.mediator(j), {}, false, ConfounderOrdering::Unordered};
        for (const auto& inst : plan.instances)
            if (inst.mediator_index == j) group.members.push_back(g.mediator(j) + "^" + inst.label);
        ctx.b.groups.push_back(group);
    }

    // Exposure components, one per path.
    ExpandedGraph::ComponentGroup zgroup{g.exposure(), {}, true, ConfounderOrdering::Unordered};
    std::map<std::string, std::string> z_for_label;
    for (const auto& path : paths) {
        std::string lab = labels::path_label(g, path);
        std::string name = ctx.add_exposure_component(lab, lab, render_path(path));
        zgroup.members.push_back(name);
        z_for_label[lab] = name;
    }
    std::sort(zgroup.members.begin(), zgroup.members.end());
    ctx.b.groups.push_back(zgroup);

    // Route each path's edges through the matching components.
    for (const auto& path : paths) {
        std::string lab = labels::path_label(g, path);
        std::string prev = z_for_label[lab];
        for (std::size_t i = 1; i + 1 < path.nodes.size(); ++i) {
            int j = g.node(path.nodes[i]).mediator_index;
            std::string node = instance_node(j, lab.substr(static_cast<std::size_t>(p - j + 1)));
            if (!ctx.b.graph.has_edge(prev, node)) ctx.b.graph.add_edge(prev, node);
            prev = node;
        }
        if (!ctx.b.graph.has_edge(prev, g.outcome())) ctx.b.graph.add_edge(prev, g.outcome());
    }
    // Mediator-component attributions and non-path in-edges.
    for (const auto& inst : plan.instances) {
        if (instance_count[inst.mediator_index] == 1) continue;
        const std::string& orig = g.mediator(inst.mediator_index);
        std::string name = orig + "^" + inst.label;
        auto targets = ctx.b.graph.children(name);
        ctx.b.attribution[name] = targets.empty() ? "" : *targets.begin();
        for (const auto& par : g.parents(orig))
            if (par != g.exposure() && g.node(par).role != Role::Mediator)
                ctx.b.graph.add_edge(par, name);
    }
    // Remaining inner edges: everything not incident to the exposure or a
    // split mediator.
    auto split = [&](const std::string& n) {
        return g.has_node(n) && g.node(n).role == Role::Mediator &&
               instance_count[g.node(n).mediator_index] > 1;
    };
    for (const auto& [from, to] : g.digraph().edges()) {
        if (from == g.exposure() || to == g.exposure()) continue;
        if (split(from) || split(to)) continue;
        ctx.b.graph.add_edge(from, to);
    }
    return ctx.b.finish();
}

ExpandedGraph expand_confounder(const CausalGraph& g, const std::string& v,
                                ConfounderOrdering ordering) {
    if (!g.has_node(v) || g.node(v).role != Role::ExposureInducedConfounder)
        throw Error("NotAConfounder", "'" + v + "' is not an exposure-induced confounder");
    auto eics = g.nodes_with_role(Role::ExposureInducedConfounder);
    if (eics.size() > 1)
        throw Error("UnsupportedCombination",
                    "confounder expansion supports one exposure-induced confounder");

    ExpansionContext ctx(g, {v});
    for (const auto& [from, to] : g.digraph().edges())
        if (from != g.exposure() && to != g.exposure() && from != v && to != v)
            ctx.b.graph.add_edge(from, to);

    int p = g.mediator_count();
    ExpandedGraph::ComponentGroup zgroup{g.exposure(), {}, true, ConfounderOrdering::Unordered};
    std::vector<std::string> z_components(static_cast<std::size_t>(p) + 1);
    std::vector<std::string> targets(static_cast<std::size_t>(p) + 1);
    for (int i = 0; i <= p; ++i) {
        targets[static_cast<std::size_t>(i)] = i == 0 ? g.outcome() : g.mediator(i);
        std::string name = ctx.add_exposure_component(std::to_string(i), std::to_string(i),
                                                      targets[static_cast<std::size_t>(i)]);
        z_components[static_cast<std::size_t>(i)] = name;
        zgroup.members.push_back(name);
        if (g.children(g.exposure()).count(targets[static_cast<std::size_t>(i)]))
            ctx.b.graph.add_edge(name, targets[static_cast<std::size_t>(i)]);
    }
    ctx.b.groups.push_back(zgroup);

    // One confounder component per exposure component whose attribution v feeds.
    ExpandedGraph::ComponentGroup vgroup{v, {}, false, ordering};
    std::vector<std::string> v_components;
    std::vector<int> v_indices;
    for (int i = 0; i <= p; ++i) {
        if (!g.children(v).count(targets[static_cast<std::size_t>(i)])) continue;
        std::string name = component_name(ctx.b.graph, v, std::to_string(i));
        ctx.b.graph.add_node(name);
        NodeSpec spec = g.node(v);
        spec.name = name;
        ctx.b.specs[name] = spec;
        ctx.b.component_of[name] = v;
        ctx.b.label[name] = std::to_string(i);
        ctx.b.attribution[name] = targets[static_cast<std::size_t>(i)];
        vgroup.members.push_back(name);
        v_components.push_back(name);
        v_indices.push_back(i);
        ctx.b.graph.add_edge(z_components[static_cast<std::size_t>(i)], name);
        ctx.b.graph.add_edge(name, targets[static_cast<std::size_t>(i)]);
        for (const auto& par : g.parents(v))
            if (par != g.exposure()) ctx.b.graph.add_edge(par, name);
    }
    if (v_components.empty())
        throw Error("NotAConfounder", "'" + v + "' feeds no attribution target");
    // Sequential ordering is a total order V_p -> ... -> V_0, matching the
    // chained factorization.
    if (ordering == ConfounderOrdering::Sequential)
        for (std::size_t i = 0; i < v_components.size(); ++i)
            for (std::size_t k = i + 1; k < v_components.size(); ++k)
                ctx.b.graph.add_edge(v_components[k], v_components[i]);
    ctx.b.groups.push_back(vgroup);

    // v's remaining edges: in-edges were copied onto each component above;
    // out-edges to non-attribution children are not attributable.
    for (const auto& child : g.children(v)) {
        bool attributed = std::find(targets.begin(), targets.end(), child) != targets.end();
        if (!attributed)
            throw Error("UnsupportedCombination",
                        "confounder '" + v + "' feeds '" + child +
                            "', which is not an attribution target");
    }
    ctx.b.detached = g.exposure();
    return ctx.b.finish();
}

std::vector<DismissibleCondition> dismissible_conditions(const ExpandedGraph& eg) {
    std::vector<DismissibleCondition> out;
    auto order = eg.endogenous_order();
    std::map<std::string, std::size_t> pos;
    for (std::size_t i = 0; i < order.size(); ++i) pos[order[i]] = i;
    auto exposure = eg.exposure_components();
    std::set<std::string> endo(order.begin(), order.end());

    for (const auto& target : order) {
        DismissibleCondition c;
        c.target = target;
        c.governing = eg.governing_components(target);
        for (const auto& z : exposure)
            if (std::find(c.governing.begin(), c.governing.end(), z) == c.governing.end())
                c.non_governing.push_back(z);

        std::set<std::string> anc = eg.digraph().ancestors(target);
        for (const auto& a : order)
            if (a != target && anc.count(a)) c.conditioning.push_back(a);
        // Conditioning rendered in the canonical factor order.
        std::sort(c.conditioning.begin(), c.conditioning.end(),
                  [&](const std::string& x, const std::string& y) { return pos[x] < pos[y]; });
        // Baseline confounders are background: held fixed in every condition.
        for (const auto& a : anc)
            if (!endo.count(a) && !eg.is_latent(a) && eg.role(a) == Role::BaselineConfounder)
                c.conditioning.push_back(a);

        std::string lab;
        for (const auto& z : c.governing) lab += (lab.empty() ? "" : ",") + eg.label_of(z);
        c.target_label = lab;

        std::ostringstream stmt;
        stmt << target << " _||_ ";
        for (std::size_t i = 0; i < c.non_governing.size(); ++i)
            stmt << (i ? "," : "") << c.non_governing[i];
        stmt << " | ";
        bool first = true;
        for (const auto& z : c.governing) {
            stmt << (first ? "" : ",") << z;
            first = false;
        }
        for (const auto& a : c.conditioning) {
            stmt << (first ? "" : ",") << a;
            first = false;
        }
        c.statement = stmt.str();

        std::ostringstream red;
        red << "P(" << target << (lab.empty() ? "" : "(z" + lab + ")") << " | ";
        first = true;
        for (const auto& a : c.conditioning) {
            red << (first ? "" : ", ") << a << (lab.empty() ? "" : "(z" + lab + ")");
            first = false;
        }
        if (first) red << "-";
        red << ")";
        c.reduced_form = red.str();
        out.push_back(std::move(c));
    }
    return out;
}

bool dismissible_condition_holds(const ExpandedGraph& eg, const DismissibleCondition& c) {
    if (c.non_governing.empty()) return true;
    std::set<std::string> a{c.target};
    std::set<std::string> b(c.non_governing.begin(), c.non_governing.end());
    std::set<std::string> cond(c.conditioning.begin(), c.conditioning.end());
    cond.insert(c.governing.begin(), c.governing.end());
    return d_separated(eg.digraph(), a, b, cond);
}

}  // namespace pse
