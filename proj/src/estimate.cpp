#include "pse/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

namespace pse {

namespace {

struct SymbolTable {
    std::map<std::string, int> values;  // current sum assignment + bindings

    int resolve(const std::string& symbol) const {
        auto it = values.find(symbol);
        if (it == values.end())
            throw Error("VariableMismatch", "unbound symbol '" + symbol + "'");
        return it->second;
    }
};

}  // namespace

EvalResult evaluate(const FormulaAst& ast, const JointDistribution& law,
                    const EvalOptions& options) {
    for (const auto& f : ast.factors) {
        if (!law.has_variable(f.target))
            throw Error("VariableMismatch", "law has no variable '" + f.target + "'");
        for (const auto& c : f.given)
            if (!law.has_variable(c.variable))
                throw Error("VariableMismatch", "law has no variable '" + c.variable + "'");
    }

    SymbolTable symbols;
    for (const auto& b : ast.bindings) symbols.values[b.symbol] = b.value;

    EvalResult result;
    std::set<std::string> warned;
    std::function<void(std::size_t, double)> rec = [&](std::size_t i, double partial) {
        if (i == ast.sums.size()) {
            double term = partial;
            for (const auto& f : ast.factors) {
                std::map<std::string, int> given;
                for (const auto& c : f.given) given[c.variable] = symbols.resolve(c.symbol);
                auto p = law.conditional(f.target, symbols.resolve(f.target_symbol), given);
                if (!p) {
                    // Zero-probability conditioning event: the term carries no
                    // mass; strict mode surfaces the positivity gap.
                    if (options.strict) {
                        std::ostringstream os;
                        os << "positivity: empty conditioning event for P(" << f.target << "|";
                        for (const auto& [k, v] : given) os << " " << k << "=" << v;
                        os << " )";
                        if (warned.insert(os.str()).second) result.warnings.push_back(os.str());
                    }
                    term = 0.0;
                    break;
                }
                term *= *p;
                if (term == 0.0) break;
            }
            result.value += term;
            return;
        }
        for (int v : law.domain(ast.sums[i].variable)) {
            symbols.values[ast.sums[i].symbol] = v;
            rec(i + 1, partial);
        }
        symbols.values.erase(ast.sums[i].symbol);
    };
    rec(0, 1.0);
    return result;
}

namespace {

std::vector<int> column_domain(const Dataset& data, std::size_t col) {
    std::vector<int> values;
    for (const auto& row : data.rows) values.push_back(row[col]);
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    return values;
}

}  // namespace

EvalResult evaluate_plugin(const FormulaAst& ast, const Dataset& data,
                           const EvalOptions& options) {
    if (data.rows.empty()) throw Error("EmptyDataset", "cannot evaluate on an empty dataset");
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < data.columns.size(); ++i) col[data.columns[i]] = i;
    for (const auto& f : ast.factors) {
        if (!col.count(f.target))
            throw Error("VariableMismatch", "dataset has no column '" + f.target + "'");
        for (const auto& c : f.given)
            if (!col.count(c.variable))
                throw Error("VariableMismatch", "dataset has no column '" + c.variable + "'");
    }

    std::map<std::string, int> symbols;
    for (const auto& b : ast.bindings) symbols[b.symbol] = b.value;

    auto freq = [&](const std::string& target, int value,
                    const std::map<std::string, int>& given) -> std::optional<double> {
        std::size_t num = 0, den = 0;
        std::size_t tcol = col.at(target);
        for (const auto& row : data.rows) {
            bool match = true;
            for (const auto& [var, v] : given)
                if (row[col.at(var)] != v) {
                    match = false;
                    break;
                }
            if (!match) continue;
            ++den;
            if (row[tcol] == value) ++num;
        }
        if (options.smoothing > 0.0) {
            double k = static_cast<double>(column_domain(data, tcol).size());
            return (num + options.smoothing) / (den + options.smoothing * k);
        }
        if (den == 0) return std::nullopt;
        return static_cast<double>(num) / static_cast<double>(den);
    };

    EvalResult result;
    std::function<void(std::size_t)> rec = [&](std::size_t i) {
        if (i == ast.sums.size()) {
            double term = 1.0;
            for (const auto& f : ast.factors) {
                std::map<std::string, int> given;
                for (const auto& c : f.given) {
                    auto it = symbols.find(c.symbol);
                    if (it == symbols.end())
                        throw Error("VariableMismatch", "unbound symbol '" + c.symbol + "'");
                    given[c.variable] = it->second;
                }
                auto it = symbols.find(f.target_symbol);
                if (it == symbols.end())
                    throw Error("VariableMismatch", "unbound symbol '" + f.target_symbol + "'");
                auto p = freq(f.target, it->second, given);
                if (!p) {
                    std::ostringstream os;
                    os << "positivity: empty stratum for P(" << f.target << "|";
                    for (const auto& [k, v] : given) os << " " << k << "=" << v;
                    os << " )";
                    result.warnings.push_back(os.str());
                    term = 0.0;
                    break;
                }
                term *= *p;
                if (term == 0.0) break;
            }
            result.value += term;
            return;
        }
        for (int v : column_domain(data, col.at(ast.sums[i].variable))) {
            symbols[ast.sums[i].symbol] = v;
            rec(i + 1);
        }
        symbols.erase(ast.sums[i].symbol);
    };
    rec(0);
    return result;
}

namespace {

std::vector<std::string> switched(const InterventionRegime& a, const InterventionRegime& b) {
    std::vector<std::string> out;
    for (const auto& [label, value] : a.assignment) {
        auto it = b.assignment.find(label);
        if (it == b.assignment.end() || it->second != value) out.push_back(label);
    }
    for (const auto& [label, value] : b.assignment)
        if (!a.assignment.count(label)) out.push_back(label);
    return out;
}

}  // namespace

PseContrast pse_contrast(const EstimandSpec& spec, const InterventionRegime& regime_a,
                         const InterventionRegime& regime_b, const JointDistribution& law) {
    PseContrast c;
    c.semantic = spec.semantic;
    c.approach = regime_a.approach;
    c.regime_a = regime_a;
    c.regime_b = regime_b;
    c.switched_labels = switched(regime_a, regime_b);

    EstimandSpec sa = spec;
    sa.regime = regime_a;
    EstimandSpec sb = spec;
    sb.regime = regime_b;
    c.value = evaluate(identify(sa), law).value - evaluate(identify(sb), law).value;
    c.provenance = "exact";
    return c;
}

PseContrast pse_contrast_plugin(const EstimandSpec& spec, const InterventionRegime& regime_a,
                                const InterventionRegime& regime_b, const Dataset& data) {
    PseContrast c;
    c.semantic = spec.semantic;
    c.approach = regime_a.approach;
    c.regime_a = regime_a;
    c.regime_b = regime_b;
    c.switched_labels = switched(regime_a, regime_b);

    EstimandSpec sa = spec;
    sa.regime = regime_a;
    EstimandSpec sb = spec;
    sb.regime = regime_b;
    c.value = evaluate_plugin(identify(sa), data).value -
              evaluate_plugin(identify(sb), data).value;
    c.provenance = "plugin(" + std::to_string(data.rows.size()) + ")";
    return c;
}

}  // namespace pse
