#pragma once

#include <optional>
#include <variant>

#include "pse/expansion.hpp"
#include "pse/formula.hpp"
#include "pse/graph.hpp"
#include "pse/regime.hpp"

namespace pse {

/// How an exposure-induced confounder enters the identification formula:
/// pretend it is absent, weight the factors by its observed law, or refuse.
enum class NuisanceHandling { AssumeAbsent, WeightObserved, Refuse };

struct EstimandSpec {
    enum class Semantic { Classical, Interventional, Separable };

    Semantic semantic = Semantic::Classical;
    InterventionRegime regime;
    std::optional<CausalGraph> graph;       // absent only for directly built expansions
    std::optional<ExpandedGraph> expanded;  // separable semantics
    std::optional<int> outcome_value;       // nullopt = full law (evaluate per value)
    NuisanceHandling nuisance = NuisanceHandling::Refuse;
    ConfounderOrdering confounder_ordering = ConfounderOrdering::Unordered;

    const CausalGraph& base_graph() const {
        if (!graph) throw Error("UnsupportedCombination", "estimand needs a causal graph");
        return *graph;
    }
};

std::string semantic_name(EstimandSpec::Semantic s);

class AssumptionViolated : public Error {
public:
    AssumptionViolated(const std::string& entry_name, const std::string& statement)
        : Error("AssumptionViolated", entry_name + " fails: " + statement),
          entry_name_(entry_name) {}
    const std::string& entry_name() const { return entry_name_; }

private:
    std::string entry_name_;
};

/// Identification under the classical (cross-world) assumptions.
FormulaAst identify_classical(const EstimandSpec& spec);

/// Identification under the interventional (random-draw) semantics. Same
/// factorization as the classical one except that with an observed confounder
/// only the outcome factor is confounder-conditioned and weighted.
FormulaAst identify_interventional(const EstimandSpec& spec);

/// Identification via dismissible component conditions on the expanded graph;
/// component labels map back to exposure values through component
/// consistency. The spec's `expanded` is used when present, otherwise the
/// expansion is derived from the regime.
FormulaAst identify_separable(const EstimandSpec& spec);

FormulaAst identify(const EstimandSpec& spec);

/// g-formula for P(outcome = y | do(exposure = z)): all labels collapsed.
FormulaAst g_formula(const CausalGraph& g, int exposure_value, int outcome_value);

}  // namespace pse
