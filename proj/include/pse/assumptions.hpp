#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pse/expansion.hpp"
#include "pse/graph.hpp"
#include "pse/identify.hpp"
#include "pse/regime.hpp"
#include "pse/sem.hpp"
#include "pse/swig.hpp"

namespace pse {

enum class AssumptionCategory {
    Exchangeability,
    WeakCrossWorld,
    StrongCrossWorld,
    RandomDrawSubstitution,
    ComponentManipulability,
    ComponentConsistency,
    Dismissible,
};

std::string category_name(AssumptionCategory c);

enum class GraphVerdict { Holds, Fails, Untestable };

std::string verdict_name(GraphVerdict v);

struct NumericVerdict {
    bool holds = false;
    double max_deviation = 0.0;
    std::string witness;
};

struct AssumptionEntry {
    std::string name;
    AssumptionCategory category = AssumptionCategory::Exchangeability;
    std::string statement;  // rendered independence / equality
    GraphVerdict graph_verdict = GraphVerdict::Untestable;
    std::optional<NumericVerdict> numeric_verdict;
    bool extension = false;  // rows the ledger adds beyond the standard table
};

struct AssumptionReport {
    EstimandSpec::Semantic semantic = EstimandSpec::Semantic::Classical;
    Approach approach = Approach::NodeIntervened;
    std::vector<AssumptionEntry> entries;

    bool all_hold() const;  // no graph or numeric failure
    std::vector<const AssumptionEntry*> in_category(AssumptionCategory c) const;
};

/// Exchangeability rows: for each factor of the target formula, the required
/// (counterfactual independent of actual | conditioning) statement with its
/// d-separation verdict on the appropriate SWIG.
std::vector<AssumptionEntry> check_exchangeability(const CausalGraph& g,
                                                   const InterventionRegime& regime,
                                                   EstimandSpec::Semantic semantic,
                                                   const DiscreteSem* sem = nullptr);

/// Weak cross-world independence: fails when an exposure-induced confounder
/// has a latent parent or world-shared noise; numeric check V(z) indep V(z').
std::vector<AssumptionEntry> check_weak_cwi(const CausalGraph& g,
                                            const DiscreteSem* sem = nullptr);

/// Strong cross-world independence: same for mediators M_j, j != 1.
std::vector<AssumptionEntry> check_strong_cwi(const CausalGraph& g,
                                              const DiscreteSem* sem = nullptr);

/// Dismissible-condition rows plus component manipulability / consistency.
std::vector<AssumptionEntry> check_dismissible(const ExpandedGraph& eg,
                                               const DiscreteSem* component_sem = nullptr,
                                               const DiscreteSem* original_sem = nullptr);

/// Full ledger for one semantic x approach, mirroring the assumption table's
/// row groups.
AssumptionReport assumption_ledger(const EstimandSpec& spec, const DiscreteSem* sem = nullptr,
                                   const DiscreteSem* component_sem = nullptr);

std::string render_report_text(const AssumptionReport& r);
std::string render_report_json(const AssumptionReport& r);

}  // namespace pse
