#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pse/formula.hpp"
#include "pse/identify.hpp"
#include "pse/sem.hpp"

namespace pse {

struct EvalOptions {
    /// Zero-probability conditioning events contribute zero; strict mode
    /// reports them as positivity diagnostics instead of staying silent.
    bool strict = false;
    double smoothing = 0.0;  // add-lambda smoothing for plug-in evaluation
};

struct EvalResult {
    double value = 0.0;
    std::vector<std::string> warnings;  // positivity diagnostics
};

/// Exact sum-product evaluation of a formula against a joint law.
EvalResult evaluate(const FormulaAst& ast, const JointDistribution& law,
                    const EvalOptions& options = {});

/// Plug-in evaluation with empirical conditional frequencies.
EvalResult evaluate_plugin(const FormulaAst& ast, const Dataset& data,
                           const EvalOptions& options = {});

struct PseContrast {
    EstimandSpec::Semantic semantic = EstimandSpec::Semantic::Classical;
    Approach approach = Approach::NodeIntervened;
    InterventionRegime regime_a;
    InterventionRegime regime_b;
    std::vector<std::string> switched_labels;
    double value = 0.0;
    std::string provenance;  // "exact" or "plugin(n)"
};

PseContrast pse_contrast(const EstimandSpec& spec, const InterventionRegime& regime_a,
                         const InterventionRegime& regime_b, const JointDistribution& law);

PseContrast pse_contrast_plugin(const EstimandSpec& spec, const InterventionRegime& regime_a,
                                const InterventionRegime& regime_b, const Dataset& data);

}  // namespace pse
