#include "pse/formula.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "json.hpp"

namespace pse {

std::optional<int> FormulaAst::bound_value(const std::string& symbol) const {
    for (const auto& b : bindings)
        if (b.symbol == symbol) return b.value;
    return std::nullopt;
}

namespace {

std::string factor_string(const FormulaAst::Factor& f) {
    std::string out = "P(" + f.target + "=" + f.target_symbol;
    if (!f.given.empty()) {
        out += "|";
        for (std::size_t i = 0; i < f.given.size(); ++i) {
            if (i) out += ",";
            out += f.given[i].variable + "=" + f.given[i].symbol;
        }
    }
    return out + ")";
}

}  // namespace

FormulaAst normalize_formula(const FormulaAst& ast) {
    FormulaAst out = ast;

    // Bound symbols become literal values, so formulas that name their labels
    // differently but bind them equally coincide.
    auto resolve = [&](std::string& sym) {
        if (auto v = ast.bound_value(sym)) sym = "=" + std::to_string(*v);
    };
    for (auto& f : out.factors) {
        resolve(f.target_symbol);
        for (auto& c : f.given) resolve(c.symbol);
        std::sort(f.given.begin(), f.given.end(), [](const auto& a, const auto& b) {
            return std::tie(a.variable, a.symbol) < std::tie(b.variable, b.symbol);
        });
    }
    out.bindings.clear();

    // Alpha-rename sum symbols by first appearance over the sorted factors.
    std::sort(out.factors.begin(), out.factors.end(),
              [](const auto& a, const auto& b) { return factor_string(a) < factor_string(b); });
    std::map<std::string, std::string> rename;
    std::map<std::string, std::string> sum_var;
    for (const auto& s : out.sums) sum_var[s.symbol] = s.variable;
    auto visit = [&](const std::string& sym) {
        if (!sum_var.count(sym) || rename.count(sym)) return;
        rename[sym] = "x" + std::to_string(rename.size());
    };
    for (const auto& f : out.factors) {
        visit(f.target_symbol);
        for (const auto& c : f.given) visit(c.symbol);
    }
    for (auto& f : out.factors) {
        if (auto it = rename.find(f.target_symbol); it != rename.end())
            f.target_symbol = it->second;
        for (auto& c : f.given)
            if (auto it = rename.find(c.symbol); it != rename.end()) c.symbol = it->second;
        std::sort(f.given.begin(), f.given.end(), [](const auto& a, const auto& b) {
            return std::tie(a.variable, a.symbol) < std::tie(b.variable, b.symbol);
        });
    }
    std::sort(out.factors.begin(), out.factors.end(),
              [](const auto& a, const auto& b) { return factor_string(a) < factor_string(b); });

    std::vector<FormulaAst::SumVar> sums;
    for (const auto& s : out.sums) {
        auto it = rename.find(s.symbol);
        // Sum variables never referenced by a factor are dropped; they sum to
        // one by themselves.
        if (it != rename.end()) sums.push_back({it->second, s.variable});
    }
    std::sort(sums.begin(), sums.end(),
              [](const auto& a, const auto& b) { return a.symbol < b.symbol; });
    out.sums = std::move(sums);
    return out;
}

std::string render_formula(const FormulaAst& ast, FormulaFormat format) {
    if (format == FormulaFormat::Json) {
        nlohmann::json j;
        j["schema_version"] = 1;
        j["sums"] = nlohmann::json::array();
        for (const auto& s : ast.sums) j["sums"].push_back({{"symbol", s.symbol}, {"variable", s.variable}});
        j["factors"] = nlohmann::json::array();
        for (const auto& f : ast.factors) {
            nlohmann::json jf;
            jf["target"] = f.target;
            jf["target_symbol"] = f.target_symbol;
            jf["given"] = nlohmann::json::array();
            for (const auto& c : f.given)
                jf["given"].push_back({{"variable", c.variable}, {"symbol", c.symbol}});
            j["factors"].push_back(std::move(jf));
        }
        j["bindings"] = nlohmann::json::array();
        for (const auto& b : ast.bindings)
            j["bindings"].push_back(
                {{"symbol", b.symbol}, {"variable", b.variable}, {"value", b.value}});
        return j.dump(2);
    }

    std::ostringstream os;
    bool latex = format == FormulaFormat::LatexLike;
    for (const auto& s : ast.sums) {
        if (latex)
            os << "\\sum_{" << s.symbol << "} ";
        else
            os << "sum_" << s.symbol << " ";
    }
    for (std::size_t i = 0; i < ast.factors.size(); ++i) {
        const auto& f = ast.factors[i];
        if (i) os << " ";
        os << "P(" << f.target << "=" << f.target_symbol;
        if (!f.given.empty()) {
            os << (latex ? " \\mid " : " | ");
            for (std::size_t k = 0; k < f.given.size(); ++k) {
                if (k) os << ", ";
                os << f.given[k].variable << "=" << f.given[k].symbol;
            }
        }
        os << ")";
    }
    if (!ast.bindings.empty()) {
        os << (latex ? " \\quad [" : "   [");
        for (std::size_t i = 0; i < ast.bindings.size(); ++i) {
            if (i) os << ", ";
            os << ast.bindings[i].symbol << ":=" << ast.bindings[i].value;
        }
        os << "]";
    }
    return os.str();
}

FormulaAst parse_formula_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    if (!j.contains("schema_version") || j["schema_version"].get<int>() != 1)
        throw Error("BadFormula", "unsupported formula schema");
    FormulaAst ast;
    for (const auto& s : j.at("sums"))
        ast.sums.push_back({s.at("symbol").get<std::string>(), s.at("variable").get<std::string>()});
    for (const auto& jf : j.at("factors")) {
        FormulaAst::Factor f;
        f.target = jf.at("target").get<std::string>();
        f.target_symbol = jf.at("target_symbol").get<std::string>();
        for (const auto& c : jf.at("given"))
            f.given.push_back(
                {c.at("variable").get<std::string>(), c.at("symbol").get<std::string>()});
        ast.factors.push_back(std::move(f));
    }
    for (const auto& b : j.at("bindings"))
        ast.bindings.push_back({b.at("symbol").get<std::string>(),
                                b.at("variable").get<std::string>(), b.at("value").get<int>()});
    return ast;
}

}  // namespace pse
