#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pse/graph.hpp"
#include "pse/regime.hpp"

namespace pse {

enum class ConfounderOrdering { Unordered, Sequential };

/// DAG in which the exposure (and possibly mediators / exposure-induced
/// confounders) is replaced by separately manipulable components. The
/// original exposure node is kept as detached metadata with no edges.
class ExpandedGraph {
public:
    struct ComponentGroup {
        std::string original;              // node the components decompose
        std::vector<std::string> members;  // component names, canonical order
        bool exposure_group = false;
        // Sequential groups are distinct actual variables (ordering edges
        // permitted); unordered groups are SWCC-collapsible copies of one
        // original variable.
        ConfounderOrdering ordering = ConfounderOrdering::Unordered;
    };

    const Digraph& digraph() const { return graph_; }
    const std::string& detached_exposure() const { return detached_; }
    const std::string& outcome() const { return outcome_; }

    bool is_component(const std::string& name) const { return component_of_.count(name) != 0; }
    /// Original node a component stands for; identity for ordinary nodes.
    const std::string& original_of(const std::string& name) const;
    const std::vector<ComponentGroup>& groups() const { return groups_; }
    const ComponentGroup* group_of(const std::string& original) const;

    std::vector<std::string> exposure_components() const;
    /// Regime label a component answers to ("0".."p", binary strings, or the
    /// component's own suffix for directly constructed graphs).
    const std::string& label_of(const std::string& component) const;
    const std::string& component_for_label(const std::string& label) const;

    /// What a component feeds: a node name (node approach / confounders) or a
    /// path label rendered as a string.
    const std::string& attribution(const std::string& component) const;

    const std::vector<int>& domain(const std::string& name) const;
    Role role(const std::string& name) const;  // role of the original node
    bool is_latent(const std::string& name) const;

    /// Endogenous variables (everything except exposure components, the
    /// detached exposure, and latents) in the canonical factorization order:
    /// outcome first, then reverse-topological with deterministic ties.
    std::vector<std::string> endogenous_order() const;

    /// Exposure components that are parents of the node: the components whose
    /// label governs its law.
    std::vector<std::string> governing_components(const std::string& node) const;

    struct Builder;
    bool operator==(const ExpandedGraph&) const = default;

private:
    friend struct Builder;
    Digraph graph_;
    std::string detached_;
    std::string outcome_;
    std::map<std::string, std::string> component_of_;
    std::map<std::string, std::string> label_;        // component -> regime label
    std::map<std::string, std::string> attribution_;  // component -> target node / path
    std::map<std::string, NodeSpec> specs_;           // every node incl. components
    std::vector<ComponentGroup> groups_;
};

/// Mutable assembly used by the expand_* operations and by the DSL when a
/// document declares components directly.
struct ExpandedGraph::Builder {
    Digraph graph;
    std::string detached;
    std::string outcome;
    std::map<std::string, std::string> component_of;
    std::map<std::string, std::string> label;
    std::map<std::string, std::string> attribution;
    std::map<std::string, NodeSpec> specs;
    std::vector<ComponentGroup> groups;

    ExpandedGraph finish() const;  // validates expanded-graph invariants
};

/// Exposure replaced by Z_0..Z_p: Z_0 -> outcome (and any other non-mediator
/// children), Z_j -> M_j. Requires no exposure-induced confounder; use
/// expand_confounder for those graphs.
ExpandedGraph expand_node_intervened(const CausalGraph& g);

/// Exposure replaced by one component per exposure->outcome path; a mediator
/// with several outgoing path bundles is split into one component per bundle,
/// each keeping the in-edges and exactly its bundle's out-edges.
ExpandedGraph expand_path_intervened(const CausalGraph& g);

/// Node-intervened expansion in which the exposure-induced confounder v is
/// also split, one component per exposure component whose attribution v
/// feeds; V_i answers to label i. Sequential ordering adds V_p -> ... -> V_0
/// edges and marks the group as distinct actual variables.
ExpandedGraph expand_confounder(const CausalGraph& g, const std::string& v,
                                ConfounderOrdering ordering = ConfounderOrdering::Unordered);

/// Invariance of one variable's law to all non-governing exposure components.
struct DismissibleCondition {
    std::string target;                    // component or endogenous variable
    std::string target_label;              // label(s) governing it, rendered
    std::vector<std::string> governing;    // governing exposure components
    std::vector<std::string> non_governing;
    std::vector<std::string> conditioning;  // endogenous ancestors, canonical order
    std::string statement;                  // invariance equality, rendered
    std::string reduced_form;               // single-label conditional law, rendered

    bool operator==(const DismissibleCondition&) const = default;
};

/// One condition per endogenous variable (mediator/confounder components
/// included, exposure components excluded), conditioning on its endogenous
/// ancestors.
std::vector<DismissibleCondition> dismissible_conditions(const ExpandedGraph& eg);

/// d-separation check of one condition on the expanded graph.
bool dismissible_condition_holds(const ExpandedGraph& eg, const DismissibleCondition& c);

}  // namespace pse
