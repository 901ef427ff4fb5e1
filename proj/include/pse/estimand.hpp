#pragma once

#include "pse/graph.hpp"
#include "pse/regime.hpp"
#include "pse/sem.hpp"

namespace pse {

/// Nested counterfactual estimand of a regime, e.g. the node-approach
/// two-mediator term Y{z0, M1[z1, M2(z2)], M2(z2)}. Shared mediator instances
/// are shared sub-terms; each instance carries its label as the world tag.
CfTerm::Ptr nested_estimand(const CausalGraph& g, const InterventionRegime& regime);

/// The nested term of each mediator instance, keyed by (index, suffix).
std::map<std::pair<int, std::string>, CfTerm::Ptr> estimand_instance_terms(
    const CausalGraph& g, const InterventionRegime& regime);

/// Plain single intervention term Y(z), untagged.
CfTerm::Ptr total_effect_term(const CausalGraph& g, int exposure_value);

}  // namespace pse
