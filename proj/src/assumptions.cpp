#include "pse/assumptions.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

#include "json.hpp"
#include "pse/estimand.hpp"

namespace pse {

std::string category_name(AssumptionCategory c) {
    switch (c) {
        case AssumptionCategory::Exchangeability: return "exchangeability";
        case AssumptionCategory::WeakCrossWorld: return "weak-cross-world";
        case AssumptionCategory::StrongCrossWorld: return "strong-cross-world";
        case AssumptionCategory::RandomDrawSubstitution: return "random-draw";
        case AssumptionCategory::ComponentManipulability: return "manipulability";
        case AssumptionCategory::ComponentConsistency: return "consistency";
        case AssumptionCategory::Dismissible: return "dismissible";
    }
    return "?";
}

std::string verdict_name(GraphVerdict v) {
    switch (v) {
        case GraphVerdict::Holds: return "holds";
        case GraphVerdict::Fails: return "fails";
        case GraphVerdict::Untestable: return "untestable";
    }
    return "?";
}

bool AssumptionReport::all_hold() const {
    for (const auto& e : entries) {
        if (e.graph_verdict == GraphVerdict::Fails) return false;
        if (e.numeric_verdict && !e.numeric_verdict->holds) return false;
    }
    return true;
}

std::vector<const AssumptionEntry*> AssumptionReport::in_category(AssumptionCategory c) const {
    std::vector<const AssumptionEntry*> out;
    for (const auto& e : entries)
        if (e.category == c) out.push_back(&e);
    return out;
}

namespace {

/// "m1..mp" style mediator argument lists for rendered statements.
std::string mediator_args(const CausalGraph& g, int from_index) {
    std::string out;
    for (int j = from_index; j <= g.mediator_count(); ++j)
        out += ",m" + std::to_string(j);
    return out;
}

/// One representative domain value for intervention constants.
int rep_value(const CausalGraph& g, const std::string& node) {
    return g.node(node).domain.front();
}

/// Counterfactual term with every intervenable parent fixed to a constant.
CfTerm::Ptr constant_term(const std::string& node, const std::map<std::string, int>& values,
                          const std::string& world) {
    std::vector<CfTerm::Arg> args;
    for (const auto& [n, v] : values) args.push_back({n, v, nullptr});
    return CfTerm::make(node, std::move(args), world);
}

/// All assignments of `vars` over their domains.
void for_each_assignment(const CausalGraph& g, const std::vector<std::string>& vars,
                         const std::function<void(const std::map<std::string, int>&)>& f) {
    std::map<std::string, int> acc;
    std::function<void(std::size_t)> rec = [&](std::size_t i) {
        if (i == vars.size()) {
            f(acc);
            return;
        }
        for (int v : g.node(vars[i]).domain) {
            acc[vars[i]] = v;
            rec(i + 1);
        }
    };
    rec(0);
}

/// Numeric verification that `target`, intervened on `intervened` (all value
/// combinations), is independent of `actual` given `given` actual variables.
NumericVerdict verify_exchangeability(const DiscreteSem& sem, const CausalGraph& g,
                                      const std::string& target,
                                      const std::vector<std::string>& intervened,
                                      const std::string& actual,
                                      const std::set<std::string>& given) {
    NumericVerdict out{true, 0.0, {}};
    for_each_assignment(g, intervened, [&](const std::map<std::string, int>& values) {
        if (!out.holds) return;
        IndependenceQuery q;
        q.left.push_back(constant_term(target, values, ""));
        q.right.push_back(CfTerm::make(actual));
        for (const auto& c : given) q.given.push_back(CfTerm::make(c));
        auto v = numeric_independence(sem, q);
        out.max_deviation = std::max(out.max_deviation, v.max_deviation);
        if (!v.holds) {
            out.holds = false;
            out.witness = q.left.front()->to_string() + " vs " + actual + ": " + v.witness;
        }
    });
    return out;
}

/// d-separation check of one exchangeability statement: split `splits`, test
/// target vs actual given the actual term's observed surviving causes.
bool exchangeability_d_sep(const CausalGraph& g, const std::vector<std::string>& splits,
                           const std::string& target, const std::string& actual,
                           std::set<std::string>* conditioning_out = nullptr) {
    std::map<std::string, int> interventions;
    for (const auto& s : splits) interventions[s] = rep_value(g, s);
    Swig s = split(g, interventions);
    std::set<std::string> conditioning;
    for (const auto& anc : s.split_graph().ancestors(actual))
        if (g.has_node(anc) && g.is_observed(anc) && anc != target) conditioning.insert(anc);
    if (conditioning_out) *conditioning_out = conditioning;
    return s.d_separated({target}, {actual}, conditioning);
}

std::string join(const std::set<std::string>& xs) {
    std::string out;
    for (const auto& x : xs) out += (out.empty() ? "" : ",") + x;
    return out;
}

}  // namespace

/// Exchangeability rows of an expanded graph: each endogenous variable
/// against its governing component, read by d-separation on the SWIG of the
/// expansion. Components are roots, so splitting leaves only their background
/// causes attached.
std::vector<AssumptionEntry> expanded_exchangeability(const ExpandedGraph& eg) {
    std::vector<AssumptionEntry> out;
    std::set<std::string> components;
    for (const auto& zc : eg.exposure_components()) components.insert(zc);

    // Split every exposure component: random halves keep their in-edges,
    // fixed halves take the out-edges.
    std::set<std::string> fixed;
    Digraph sg;
    for (const auto& n : eg.digraph().nodes()) sg.add_node(n);
    for (const auto& zc : components) {
        sg.add_node(zc + "=");
        fixed.insert(zc + "=");
    }
    for (const auto& [from, to] : eg.digraph().edges())
        sg.add_edge(components.count(from) ? from + "=" : from, to);

    for (const auto& node : eg.endogenous_order()) {
        for (const auto& z : eg.governing_components(node)) {
            AssumptionEntry e;
            e.name = "exch:" + node + ":" + z;
            e.category = AssumptionCategory::Exchangeability;
            e.extension = eg.role(node) == Role::ExposureInducedConfounder;
            std::set<std::string> cond = fixed;
            for (const auto& anc : sg.ancestors(z))
                if (eg.digraph().has_node(anc) && !eg.is_latent(anc) && anc != node)
                    cond.insert(anc);
            bool sep = d_separated(sg, {node}, {z}, cond);
            std::ostringstream st;
            st << node << "(z) _||_ " << z;
            std::set<std::string> shown;
            for (const auto& c : cond)
                if (!fixed.count(c)) shown.insert(c);
            if (!shown.empty()) st << " | " << join(shown);
            e.statement = st.str();
            e.graph_verdict = sep ? GraphVerdict::Holds : GraphVerdict::Fails;
            out.push_back(std::move(e));
        }
    }
    return out;
}

std::vector<AssumptionEntry> check_exchangeability(const CausalGraph& g,
                                                   const InterventionRegime& regime,
                                                   EstimandSpec::Semantic semantic,
                                                   const DiscreteSem* sem) {
    std::vector<AssumptionEntry> out;
    int p = g.mediator_count();
    auto mediators = g.mediators();

    if (semantic == EstimandSpec::Semantic::Separable) {
        ExpandedGraph eg;
        auto eics = g.nodes_with_role(Role::ExposureInducedConfounder);
        if (regime.approach == Approach::PathIntervened)
            eg = expand_path_intervened(g);
        else if (eics.empty())
            eg = expand_node_intervened(g);
        else
            eg = expand_confounder(g, eics.front());
        return expanded_exchangeability(eg);
    }

    // Classical / interventional: the assumption-table statements do not
    // depend on the approach.
    std::vector<std::string> targets{g.outcome()};
    if (semantic == EstimandSpec::Semantic::Classical)
        for (const auto& m : mediators) targets.push_back(m);

    auto v_present = g.nodes_with_role(Role::ExposureInducedConfounder);

    for (const auto& target : targets) {
        int tj = target == g.outcome() ? 0 : g.node(target).mediator_index;
        // vs the exposure:
        {
            std::vector<std::string> splits{g.exposure()};
            for (const auto& m : mediators) splits.push_back(m);
            std::set<std::string> cond;
            bool sep = exchangeability_d_sep(g, splits, target, g.exposure(), &cond);
            AssumptionEntry e;
            e.name = "exch:" + target + ":" + g.exposure();
            e.category = AssumptionCategory::Exchangeability;
            std::ostringstream st;
            st << target << "(z" << tj << mediator_args(g, tj + 1) << ") _||_ " << g.exposure();
            if (!cond.empty()) st << " | " << join(cond);
            e.statement = st.str();
            e.graph_verdict = sep ? GraphVerdict::Holds : GraphVerdict::Fails;
            if (sem) {
                auto anc = g.digraph().ancestors(target);
                std::vector<std::string> iv;
                if (anc.count(g.exposure())) iv.push_back(g.exposure());
                for (int k = tj + 1; k <= p; ++k)
                    if (anc.count(g.mediator(k))) iv.push_back(g.mediator(k));
                e.numeric_verdict = verify_exchangeability(*sem, g, target, iv, g.exposure(), cond);
            }
            out.push_back(std::move(e));
        }
        // vs each mediator later in the factor chain:
        for (int k = tj + 1; k <= p; ++k) {
            const std::string& actual = g.mediator(k);
            std::vector<std::string> splits;
            for (int i = 1; i <= k; ++i) splits.push_back(g.mediator(i));
            std::set<std::string> cond;
            bool sep = exchangeability_d_sep(g, splits, target, actual, &cond);
            AssumptionEntry e;
            e.name = "exch:" + target + ":" + actual;
            e.category = AssumptionCategory::Exchangeability;
            std::ostringstream st;
            st << target << "(z" << mediator_args(g, tj == 0 ? 1 : tj + 1) << ") _||_ " << actual;
            if (!cond.empty()) st << " | " << join(cond);
            e.statement = st.str();
            e.graph_verdict = sep ? GraphVerdict::Holds : GraphVerdict::Fails;
            if (sem) {
                auto anc = g.digraph().ancestors(target);
                std::vector<std::string> iv;
                for (int i = 1; i <= k; ++i)
                    if (g.mediator(i) != target && anc.count(g.mediator(i)))
                        iv.push_back(g.mediator(i));
                e.numeric_verdict = verify_exchangeability(*sem, g, target, iv, actual, cond);
            }
            out.push_back(std::move(e));
        }
    }
    // The confounder's own exchangeability enters the weighted formulas.
    for (const auto& v : v_present) {
        std::vector<std::string> splits{g.exposure()};
        for (const auto& m : mediators) splits.push_back(m);
        std::set<std::string> cond;
        bool sep = exchangeability_d_sep(g, splits, v, g.exposure(), &cond);
        AssumptionEntry e;
        e.name = "exch:" + v + ":" + g.exposure();
        e.category = AssumptionCategory::Exchangeability;
        e.extension = true;
        e.statement = v + "(z) _||_ " + g.exposure() + (cond.empty() ? "" : " | " + join(cond));
        e.graph_verdict = sep ? GraphVerdict::Holds : GraphVerdict::Fails;
        out.push_back(std::move(e));
    }
    (void)regime;
    return out;
}

namespace {

/// Shared backend for the weak/strong cross-world driver checks.
AssumptionEntry cross_world_driver(const CausalGraph& g, const DiscreteSem* sem,
                                   const std::string& node, AssumptionCategory category) {
    AssumptionEntry e;
    e.name = (category == AssumptionCategory::WeakCrossWorld ? "weak-cwi:" : "strong-cwi:") + node;
    e.category = category;
    e.statement = node + "(z) _||_ " + node + "(z')";

    bool latent_parent = false;
    for (const auto& par : g.parents(node))
        if (g.node(par).role == Role::Latent) latent_parent = true;
    bool shared_noise = sem && !sem->node(node).latent &&
                        sem->node(node).noise_mode == NoiseMode::WorldShared;

    if (latent_parent || shared_noise)
        e.graph_verdict = GraphVerdict::Fails;
    else if (sem)
        e.graph_verdict = GraphVerdict::Holds;
    else
        e.graph_verdict = GraphVerdict::Untestable;  // no declared noise sharing

    if (sem) {
        // Cross-world enumeration over every pair of distinct exposure values.
        NumericVerdict nv{true, 0.0, {}};
        const auto& dom = g.node(g.exposure()).domain;
        for (std::size_t a = 0; a < dom.size() && nv.holds; ++a)
            for (std::size_t b = a + 1; b < dom.size() && nv.holds; ++b) {
                IndependenceQuery q;
                q.left.push_back(CfTerm::make(node, {{g.exposure(), dom[a], nullptr}}, "w0"));
                q.right.push_back(CfTerm::make(node, {{g.exposure(), dom[b], nullptr}}, "w1"));
                auto v = numeric_independence(*sem, q);
                nv.max_deviation = std::max(nv.max_deviation, v.max_deviation);
                if (!v.holds) {
                    nv.holds = false;
                    nv.witness = node + "(" + std::to_string(dom[a]) + ") vs " + node + "(" +
                                 std::to_string(dom[b]) + "): " + v.witness;
                }
            }
        e.numeric_verdict = nv;
    }
    return e;
}

}  // namespace

std::vector<AssumptionEntry> check_weak_cwi(const CausalGraph& g, const DiscreteSem* sem) {
    std::vector<AssumptionEntry> out;
    auto eics = g.nodes_with_role(Role::ExposureInducedConfounder);
    if (eics.empty()) {
        AssumptionEntry e;
        e.name = "weak-cwi";
        e.category = AssumptionCategory::WeakCrossWorld;
        e.statement = "no exposure-induced confounder";
        e.graph_verdict = GraphVerdict::Holds;
        out.push_back(std::move(e));
        return out;
    }
    for (const auto& v : eics)
        out.push_back(cross_world_driver(g, sem, v, AssumptionCategory::WeakCrossWorld));
    return out;
}

std::vector<AssumptionEntry> check_strong_cwi(const CausalGraph& g, const DiscreteSem* sem) {
    std::vector<AssumptionEntry> out;
    if (g.mediator_count() <= 1) {
        AssumptionEntry e;
        e.name = "strong-cwi";
        e.category = AssumptionCategory::StrongCrossWorld;
        e.statement = "at most one mediator";
        e.graph_verdict = GraphVerdict::Holds;
        out.push_back(std::move(e));
        return out;
    }
    for (int j = 2; j <= g.mediator_count(); ++j)
        out.push_back(
            cross_world_driver(g, sem, g.mediator(j), AssumptionCategory::StrongCrossWorld));
    return out;
}

std::vector<AssumptionEntry> check_dismissible(const ExpandedGraph& eg,
                                               const DiscreteSem* component_sem,
                                               const DiscreteSem* original_sem) {
    std::vector<AssumptionEntry> out;
    auto exposure = eg.exposure_components();

    // Component manipulability.
    for (const auto& group : eg.groups()) {
        if (!group.exposure_group && group.ordering == ConfounderOrdering::Sequential) continue;
        if (group.members.size() < 2 && !group.exposure_group) continue;
        AssumptionEntry e;
        e.name = "cwcm:" + group.original;
        e.category = AssumptionCategory::ComponentManipulability;
        std::string st;
        for (std::size_t i = 0; i < group.members.size(); ++i)
            st += (i ? " _||_ " : "") + group.members[i];
        e.statement = st;
        std::set<std::string> cond;
        if (!group.exposure_group) cond.insert(exposure.begin(), exposure.end());
        for (const auto& m : group.members)
            for (const auto& par : eg.digraph().parents(m))
                if (!eg.is_latent(par) && !cond.count(par) &&
                    std::find(group.members.begin(), group.members.end(), par) ==
                        group.members.end() &&
                    eg.role(par) == Role::BaselineConfounder)
                    cond.insert(par);
        bool sep = true;
        for (std::size_t i = 0; i < group.members.size() && sep; ++i)
            for (std::size_t k = i + 1; k < group.members.size() && sep; ++k) {
                std::set<std::string> c = cond;
                c.erase(group.members[i]);
                c.erase(group.members[k]);
                sep = d_separated(eg.digraph(), {group.members[i]}, {group.members[k]}, c);
            }
        e.graph_verdict = sep ? GraphVerdict::Holds : GraphVerdict::Fails;
        out.push_back(std::move(e));
    }

    // Component consistency: untestable graphically, checked by collapsing
    // the component sem and comparing laws. A sequential group declares
    // genuinely distinct actual variables, so the expanded model refines the
    // original rather than reproducing it; the law comparison then has no
    // target.
    bool refines = false;
    for (const auto& group : eg.groups())
        if (!group.exposure_group && group.ordering == ConfounderOrdering::Sequential)
            refines = true;
    for (const auto& group : eg.groups()) {
        if (!group.exposure_group && group.ordering == ConfounderOrdering::Sequential) continue;
        AssumptionEntry e;
        e.name = "swcc:" + group.original;
        e.category = AssumptionCategory::ComponentConsistency;
        std::string st = group.original;
        for (const auto& m : group.members) st += " = " + m;
        e.statement = st + (group.exposure_group ? " (actual world)" : " (single world)");
        e.graph_verdict = GraphVerdict::Untestable;
        if (component_sem) {
            NumericVerdict nv{true, 0.0, {}};
            try {
                // Equal component inputs must reproduce the collapsed law.
                JointDistribution collapsed = collapsed_law(*component_sem, eg);
                if (original_sem && !refines) {
                    JointDistribution orig = observational_distribution(*original_sem);
                    for (const auto& var : orig.variables()) {
                        if (!collapsed.has_variable(var)) {
                            nv.holds = false;
                            nv.witness = "collapsed law misses '" + var + "'";
                            break;
                        }
                    }
                    if (nv.holds) {
                        orig.for_each([&](const std::vector<int>& values, double p) {
                            std::map<std::string, int> a;
                            for (std::size_t i = 0; i < orig.variables().size(); ++i)
                                a[orig.variables()[i]] = values[i];
                            double q = collapsed.probability(a);
                            double dev = std::abs(p - q);
                            nv.max_deviation = std::max(nv.max_deviation, dev);
                            if (dev > 1e-12 && nv.holds) {
                                nv.holds = false;
                                std::ostringstream os;
                                for (const auto& [k, v] : a) os << k << "=" << v << " ";
                                nv.witness = os.str();
                            }
                        });
                    }
                }
            } catch (const Error& err) {
                nv.holds = false;
                nv.witness = err.what();
            }
            e.numeric_verdict = nv;
        }
        out.push_back(std::move(e));
    }

    // Dismissible conditions.
    for (const auto& c : dismissible_conditions(eg)) {
        AssumptionEntry e;
        e.name = "dismiss:" + c.target;
        e.category = AssumptionCategory::Dismissible;
        e.statement = c.statement;
        e.graph_verdict =
            dismissible_condition_holds(eg, c) ? GraphVerdict::Holds : GraphVerdict::Fails;
        if (component_sem && !c.non_governing.empty()) {
            // Invariance of the conditional law across non-governing values.
            NumericVerdict nv{true, 0.0, {}};
            const auto& zdom = eg.domain(exposure.front());
            std::vector<std::map<std::string, int>> assignments;
            std::vector<std::size_t> idx(exposure.size(), 0);
            while (true) {
                std::map<std::string, int> a;
                for (std::size_t i = 0; i < exposure.size(); ++i)
                    a[exposure[i]] = zdom[idx[i]];
                assignments.push_back(a);
                std::size_t k = exposure.size();
                bool done = exposure.empty();
                while (k > 0) {
                    --k;
                    if (++idx[k] < zdom.size()) break;
                    idx[k] = 0;
                    if (k == 0) done = true;
                }
                if (done) break;
            }
            auto governing_key = [&](const std::map<std::string, int>& a) {
                std::string key;
                for (const auto& z : c.governing) key += std::to_string(a.at(z)) + ",";
                return key;
            };
            std::map<std::string, std::vector<std::size_t>> classes;
            for (std::size_t i = 0; i < assignments.size(); ++i)
                classes[governing_key(assignments[i])].push_back(i);
            std::vector<JointDistribution> laws;
            laws.reserve(assignments.size());
            for (const auto& a : assignments) laws.push_back(law_under_do(*component_sem, a));

            for (const auto& [key, members] : classes) {
                if (members.size() < 2) continue;
                // Compare conditional laws of the target given conditioning.
                std::vector<std::string> cond_vars(c.conditioning.begin(), c.conditioning.end());
                std::function<void(std::size_t, std::map<std::string, int>&)> rec =
                    [&](std::size_t i, std::map<std::string, int>& acc) {
                        if (!nv.holds) return;
                        if (i == cond_vars.size()) {
                            for (int tv : eg.domain(c.target)) {
                                std::optional<double> ref;
                                for (std::size_t m : members) {
                                    auto p = laws[m].conditional(c.target, tv, acc);
                                    if (!p) continue;
                                    if (!ref) {
                                        ref = *p;
                                        continue;
                                    }
                                    double dev = std::abs(*p - *ref);
                                    nv.max_deviation = std::max(nv.max_deviation, dev);
                                    if (dev > 1e-10 && nv.holds) {
                                        nv.holds = false;
                                        std::ostringstream os;
                                        os << c.target << "=" << tv;
                                        for (const auto& [k2, v2] : acc)
                                            os << " " << k2 << "=" << v2;
                                        nv.witness = os.str();
                                    }
                                }
                            }
                            return;
                        }
                        for (int v : eg.domain(cond_vars[i])) {
                            acc[cond_vars[i]] = v;
                            rec(i + 1, acc);
                        }
                        acc.erase(cond_vars[i]);
                    };
                std::map<std::string, int> acc;
                rec(0, acc);
            }
            e.numeric_verdict = nv;
        }
        out.push_back(std::move(e));
    }
    return out;
}

AssumptionReport assumption_ledger(const EstimandSpec& spec, const DiscreteSem* sem,
                                   const DiscreteSem* component_sem) {
    AssumptionReport report;
    report.semantic = spec.semantic;
    report.approach = spec.regime.approach;

    if (spec.semantic == EstimandSpec::Semantic::Separable) {
        ExpandedGraph eg;
        if (spec.expanded) {
            eg = *spec.expanded;
        } else {
            const CausalGraph& g = spec.base_graph();
            auto eics = g.nodes_with_role(Role::ExposureInducedConfounder);
            if (spec.regime.approach == Approach::PathIntervened)
                eg = expand_path_intervened(g);
            else if (eics.empty())
                eg = expand_node_intervened(g);
            else
                eg = expand_confounder(g, eics.front(), spec.confounder_ordering);
        }
        auto exch = expanded_exchangeability(eg);
        report.entries.insert(report.entries.end(), exch.begin(), exch.end());
        // Directly declared expansions carry their own component sem in the
        // document's sem slot.
        const DiscreteSem* csem = component_sem ? component_sem : (spec.expanded ? sem : nullptr);
        const DiscreteSem* orig = spec.expanded ? nullptr : sem;
        auto dismiss = check_dismissible(eg, csem, orig);
        report.entries.insert(report.entries.end(), dismiss.begin(), dismiss.end());
        return report;
    }

    auto exch = check_exchangeability(spec.base_graph(), spec.regime, spec.semantic, sem);
    report.entries.insert(report.entries.end(), exch.begin(), exch.end());

    const CausalGraph& g = spec.base_graph();
    int p = g.mediator_count();

    if (spec.semantic == EstimandSpec::Semantic::Interventional) {
        for (int j = p; j >= 1; --j) {
            AssumptionEntry e;
            e.name = "draw:" + g.mediator(j);
            e.category = AssumptionCategory::RandomDrawSubstitution;
            e.statement = "P(W" + std::to_string(j) + "(.)) = P(" + g.mediator(j) + "(.))";
            e.graph_verdict = GraphVerdict::Holds;  // definitional
            report.entries.push_back(std::move(e));
        }
        return report;
    }

    // Classical: cross-world statement rows, pairwise over the counterfactual
    // factors Y, M_1, ..., M_p.
    bool path = spec.regime.approach == Approach::PathIntervened;
    auto eics = g.nodes_with_role(Role::ExposureInducedConfounder);
    bool v_latent = false;
    for (const auto& v : eics)
        for (const auto& par : g.parents(v))
            if (g.node(par).role == Role::Latent) v_latent = true;
    bool v_shared = false;
    if (sem)
        for (const auto& v : eics)
            if (sem->node(v).noise_mode == NoiseMode::WorldShared) v_shared = true;

    auto weak_verdict = [&]() {
        if (eics.empty()) return GraphVerdict::Holds;
        if (v_latent || v_shared) return GraphVerdict::Fails;
        return sem ? GraphVerdict::Holds : GraphVerdict::Untestable;
    };
    auto strong_verdict = [&](int shared_mediator) {
        GraphVerdict weak = weak_verdict();
        if (weak == GraphVerdict::Fails) return GraphVerdict::Fails;
        const std::string& m = g.mediator(shared_mediator);
        bool latent = false;
        for (const auto& par : g.parents(m))
            if (g.node(par).role == Role::Latent) latent = true;
        bool shared = sem && sem->node(m).noise_mode == NoiseMode::WorldShared;
        if (latent || shared) return GraphVerdict::Fails;
        if (!sem) return GraphVerdict::Untestable;
        return weak;
    };

    struct Side {
        std::string name;  // rendered term
        int index;         // 0 = outcome
    };
    std::vector<Side> sides;
    if (!path) {
        sides.push_back({g.outcome() + "(z0" + mediator_args(g, 1) + ")", 0});
        for (int j = 1; j <= p; ++j)
            sides.push_back({g.mediator(j) + "(z" + std::to_string(j) + mediator_args(g, j + 1) +
                                 ")",
                             j});
    } else {
        EstimandPlan plan = estimand_plan(g, Approach::PathIntervened);
        sides.push_back({g.outcome() + "(z" + plan.outcome_label(g) + ",...)", 0});
        for (int j = 1; j <= p; ++j) {
            std::string zeros(static_cast<std::size_t>(j - 1), '0');
            std::string lab = std::string(static_cast<std::size_t>(p - j), '0') + "1" + zeros;
            sides.push_back({g.mediator(j) + "(z" + lab + ",...)", j});
        }
    }
    for (std::size_t a = 0; a < sides.size(); ++a)
        for (std::size_t b = a + 1; b < sides.size(); ++b) {
            AssumptionEntry e;
            // A pair of mediator factors shares a mediator instance only in
            // the path approach, which is what makes it strong.
            bool strong = path && sides[a].index != 0 && sides[b].index != 0;
            e.category = strong ? AssumptionCategory::StrongCrossWorld
                                : AssumptionCategory::WeakCrossWorld;
            e.name = std::string(strong ? "strong-cw:" : "weak-cw:") +
                     (sides[a].index == 0 ? g.outcome() : g.mediator(sides[a].index)) + ":" +
                     (sides[b].index == 0 ? g.outcome() : g.mediator(sides[b].index));
            e.statement = sides[a].name + " _||_ " + sides[b].name;
            e.graph_verdict = strong ? strong_verdict(std::max(sides[a].index, sides[b].index))
                                     : weak_verdict();
            if (sem) {
                // Verify the statement itself with the regime's labels, over
                // every assignment of the constant mediator arguments. The
                // outcome side takes constant mediator arguments; mediator
                // sides are constant-argument in the node approach and fully
                // nested in the path approach, which is exactly what makes
                // the shared-instance pair strong there.
                EstimandPlan plan = estimand_plan(g, spec.regime.approach);
                auto nested_terms = estimand_instance_terms(g, spec.regime);
                auto term_for = [&](int index,
                                    const std::map<std::string, int>& constants) -> CfTerm::Ptr {
                    if (index == 0) {
                        std::map<std::string, int> vals;
                        if (g.parents(g.outcome()).count(g.exposure()))
                            vals[g.exposure()] = spec.regime.at(plan.outcome_label(g));
                        for (const auto* up : plan.upstream(g, 0, ""))
                            vals[g.mediator(up->mediator_index)] =
                                constants.at(g.mediator(up->mediator_index));
                        return constant_term(g.outcome(), vals, "z" + plan.outcome_label(g));
                    }
                    for (const auto& inst : plan.instances) {
                        if (inst.mediator_index != index) continue;
                        if (path) return nested_terms.at({index, inst.suffix});
                        std::map<std::string, int> vals;
                        if (g.parents(g.mediator(index)).count(g.exposure()))
                            vals[g.exposure()] = spec.regime.at(inst.label);
                        for (const auto* up : plan.upstream(g, index, inst.suffix))
                            vals[g.mediator(up->mediator_index)] =
                                constants.at(g.mediator(up->mediator_index));
                        return constant_term(g.mediator(index), vals, "z" + inst.label);
                    }
                    throw Error("Internal", "no instance for mediator");
                };
                NumericVerdict nv{true, 0.0, {}};
                for_each_assignment(g, g.mediators(), [&](const std::map<std::string, int>& consts) {
                    if (!nv.holds) return;
                    IndependenceQuery q;
                    q.left.push_back(term_for(sides[a].index, consts));
                    q.right.push_back(term_for(sides[b].index, consts));
                    auto v = numeric_independence(*sem, q);
                    nv.max_deviation = std::max(nv.max_deviation, v.max_deviation);
                    if (!v.holds) {
                        nv.holds = false;
                        nv.witness = v.witness;
                    }
                });
                e.numeric_verdict = nv;
            }
            report.entries.push_back(std::move(e));
        }

    // Driver rows when the relevant variables exist.
    if (!eics.empty()) {
        auto weak = check_weak_cwi(g, sem);
        for (auto& e : weak) {
            e.extension = true;
            report.entries.push_back(std::move(e));
        }
    }
    if (path && p >= 2) {
        auto strong = check_strong_cwi(g, sem);
        for (auto& e : strong) {
            e.extension = true;
            report.entries.push_back(std::move(e));
        }
    }
    return report;
}

std::string render_report_text(const AssumptionReport& r) {
    std::ostringstream os;
    os << "assumption ledger: semantic=" << semantic_name(r.semantic)
       << " approach=" << approach_name(r.approach) << "\n";
    const AssumptionCategory order[] = {
        AssumptionCategory::Exchangeability,        AssumptionCategory::WeakCrossWorld,
        AssumptionCategory::StrongCrossWorld,       AssumptionCategory::RandomDrawSubstitution,
        AssumptionCategory::ComponentManipulability, AssumptionCategory::ComponentConsistency,
        AssumptionCategory::Dismissible,
    };
    for (auto cat : order) {
        auto entries = r.in_category(cat);
        if (entries.empty()) continue;
        os << "[" << category_name(cat) << "]\n";
        for (const auto* e : entries) {
            os << "  " << (e->graph_verdict == GraphVerdict::Holds
                               ? "holds     "
                               : e->graph_verdict == GraphVerdict::Fails ? "FAILS     "
                                                                         : "untestable");
            os << " ";
            std::ostringstream stmt;
            stmt << e->statement;
            os << stmt.str();
            if (e->numeric_verdict) {
                if (e->numeric_verdict->holds)
                    os << "  [numeric: holds, max dev " << e->numeric_verdict->max_deviation
                       << "]";
                else
                    os << "  [numeric: FAILS at " << e->numeric_verdict->witness << "]";
            }
            if (e->extension) os << "  (extension)";
            os << "\n";
        }
    }
    os << (r.all_hold() ? "verdict: all assumptions hold\n" : "verdict: violations present\n");
    return os.str();
}

std::string render_report_json(const AssumptionReport& r) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["semantic"] = semantic_name(r.semantic);
    j["approach"] = approach_name(r.approach);
    j["all_hold"] = r.all_hold();
    j["entries"] = nlohmann::json::array();
    for (const auto& e : r.entries) {
        nlohmann::json je;
        je["name"] = e.name;
        je["category"] = category_name(e.category);
        je["statement"] = e.statement;
        je["graph_verdict"] = verdict_name(e.graph_verdict);
        if (e.numeric_verdict) {
            je["numeric_verdict"] = e.numeric_verdict->holds ? "holds" : "fails";
            je["max_deviation"] = e.numeric_verdict->max_deviation;
            if (!e.numeric_verdict->witness.empty()) je["witness"] = e.numeric_verdict->witness;
        }
        if (e.extension) je["extension"] = true;
        j["entries"].push_back(std::move(je));
    }
    return j.dump(2);
}

}  // namespace pse
