#pragma once

#include <map>
#include <string>
#include <vector>

#include "pse/graph.hpp"

namespace pse {

enum class Approach { NodeIntervened, PathIntervened };

std::string approach_name(Approach a);

/// Intervention labels. Node approach: "0".."p", where label j targets the
/// effect routed through M_j (label 0 = direct effect). Path approach: binary
/// strings of length p, leftmost bit = M_p; bit 1 means the path passes
/// through that mediator, so "0...0" is the direct path.
namespace labels {

std::vector<std::string> node_labels(int p);

/// Binary label of a directed exposure->outcome path whose interior nodes are
/// all mediators. Throws UnsupportedCombination if an interior node is not a
/// mediator.
std::string path_label(const CausalGraph& g, const DirectedPath& path);

/// Labels of all actual exposure->outcome paths, sorted. Equals all 2^p
/// strings exactly when the mediator DAG is complete.
std::vector<std::string> path_labels(const CausalGraph& g);

}  // namespace labels

struct InterventionRegime {
    Approach approach = Approach::NodeIntervened;
    std::map<std::string, int> assignment;  // label -> exposure value

    int at(const std::string& label) const;
    bool operator==(const InterventionRegime&) const = default;
};

/// Checks the regime's label set against the graph (node: exactly {0..p};
/// path: exactly the actual path labels) and every value against the exposure
/// domain. Throws ValidationError.
void validate_regime(const CausalGraph& g, const InterventionRegime& regime);

/// Regime with every label set to one exposure value.
InterventionRegime uniform_regime(const CausalGraph& g, Approach approach, int value);

/// One copy of a mediator in the estimand. The node approach has one instance
/// per mediator; the path approach has one per (mediator, downstream
/// continuation), e.g. M2 appears as m10 (feeding Y) and m11 (feeding M1).
struct MediatorInstance {
    int mediator_index = 0;   // j, 1-based; M_1 nearest the outcome
    std::string suffix;       // continuation bits below j (path approach), "" for node
    std::string label;        // regime label governing this instance
    std::string symbol;       // sum symbol, e.g. "m1" or "m10"

    bool operator==(const MediatorInstance&) const = default;
};

struct EstimandPlan {
    Approach approach = Approach::NodeIntervened;
    std::vector<MediatorInstance> instances;  // sorted by (mediator_index, suffix)

    const MediatorInstance* find(int mediator_index, const std::string& suffix) const;
    /// Instances of mediator-parents of M_j conditioning instance (j, suffix);
    /// mediator_index 0 means the outcome.
    std::vector<const MediatorInstance*> upstream(const CausalGraph& g, int mediator_index,
                                                  const std::string& suffix) const;
    /// Label for the outcome slot ("0" node approach, all-zeros path approach).
    std::string outcome_label(const CausalGraph& g) const;
};

/// Instance layout shared by the identification formulas, the counterfactual
/// estimand, and the interventional oracle.
EstimandPlan estimand_plan(const CausalGraph& g, Approach approach);

}  // namespace pse
