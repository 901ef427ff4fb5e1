#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pse/graph.hpp"

namespace pse {

/// Symbolic sum-product identification formula. Factors are observational
/// conditionals; every exposure slot and the outcome value are bound to
/// concrete values through `bindings`, sum symbols range over their
/// variable's domain.
struct FormulaAst {
    struct SumVar {
        std::string symbol;
        std::string variable;  // domain source
        bool operator==(const SumVar&) const = default;
    };
    struct Cond {
        std::string variable;
        std::string symbol;  // sum symbol or bound symbol
        bool operator==(const Cond&) const = default;
    };
    struct Factor {
        std::string target;
        std::string target_symbol;
        std::vector<Cond> given;
        bool operator==(const Factor&) const = default;
    };
    struct Binding {
        std::string symbol;
        std::string variable;
        int value = 0;
        bool operator==(const Binding&) const = default;
    };

    std::vector<SumVar> sums;
    std::vector<Factor> factors;
    std::vector<Binding> bindings;

    std::optional<int> bound_value(const std::string& symbol) const;
    bool operator==(const FormulaAst&) const = default;
};

/// Canonical form: factors and conditioning sorted, bound symbols replaced by
/// value literals, sum symbols renamed by first appearance. Equal estimands
/// normalize to identical ASTs.
FormulaAst normalize_formula(const FormulaAst& ast);

enum class FormulaFormat { Text, LatexLike, Json };

std::string render_formula(const FormulaAst& ast, FormulaFormat format);

/// Inverse of the Json rendering.
FormulaAst parse_formula_json(const std::string& text);

}  // namespace pse
