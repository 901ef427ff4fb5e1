// Command-line front end: validates spec files, builds SWIGs and expanded
// graphs, checks assumption ledgers, emits identification formulas, and
// compares them against the exact counterfactual oracles.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "pse/assumptions.hpp"
#include "pse/dsl.hpp"
#include "pse/estimand.hpp"
#include "pse/estimate.hpp"
#include "pse/identify.hpp"
#include "pse/swig.hpp"

using namespace pse;

namespace {

constexpr double kAgreementTolerance = 1e-9;

struct Options {
    std::string spec_path;
    std::string semantic;
    std::string approach;
    std::string labels;
    std::string do_assignment;
    std::string format = "text";
    std::optional<int> outcome_value;
    std::string nuisance;
    std::string vorder;
    std::uint64_t seed = 0;
    std::size_t n = 0;
    std::string csv_path;
};

int fail_usage(const std::string& message) {
    std::cerr << "usage error: " << message << "\n";
    return 2;
}

int fail_analysis(const std::string& message) {
    std::cerr << "error: " << message << "\n";
    return 1;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in.good()) throw CLI::ValidationError("cannot open '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::map<std::string, int> parse_assignment(const std::string& text,
                                            const std::vector<std::string>& positional_keys) {
    std::map<std::string, int> out;
    if (text.empty()) return out;
    std::vector<std::string> pieces;
    std::string cur;
    for (char c : text) {
        if (c == ',') {
            pieces.push_back(cur);
            cur.clear();
        } else if (!std::isspace(static_cast<unsigned char>(c))) {
            cur += c;
        }
    }
    pieces.push_back(cur);
    bool keyed = text.find(':') != std::string::npos || text.find('=') != std::string::npos;
    if (keyed) {
        for (const auto& p : pieces) {
            auto sep = p.find_first_of(":=");
            if (sep == std::string::npos)
                throw Error("BadLabels", "expected key:value in '" + p + "'");
            out[p.substr(0, sep)] = std::stoi(p.substr(sep + 1));
        }
    } else {
        if (pieces.size() != positional_keys.size())
            throw Error("BadLabels", "expected " + std::to_string(positional_keys.size()) +
                                         " positional label values");
        for (std::size_t i = 0; i < pieces.size(); ++i)
            out[positional_keys[i]] = std::stoi(pieces[i]);
    }
    return out;
}

/// Queries to run: the command line overrides the file's query lines.
std::vector<QuerySpec> select_queries(const SpecDocument& doc, const Options& opt) {
    std::vector<QuerySpec> out;
    if (opt.semantic.empty() && opt.labels.empty() && opt.approach.empty()) {
        out = doc.queries;
        if (!out.empty()) return out;
        throw Error("BadLabels", "no query lines in the spec and none given on the command line");
    }
    QuerySpec q;
    if (!doc.queries.empty()) q = doc.queries.front();
    if (!opt.semantic.empty()) {
        if (opt.semantic == "classical")
            q.semantic = EstimandSpec::Semantic::Classical;
        else if (opt.semantic == "interventional")
            q.semantic = EstimandSpec::Semantic::Interventional;
        else if (opt.semantic == "separable")
            q.semantic = EstimandSpec::Semantic::Separable;
        else
            throw Error("BadLabels", "unknown semantic '" + opt.semantic + "'");
    }
    if (!opt.approach.empty()) {
        if (opt.approach == "node")
            q.approach = Approach::NodeIntervened;
        else if (opt.approach == "path")
            q.approach = Approach::PathIntervened;
        else
            throw Error("BadLabels", "unknown approach '" + opt.approach + "'");
    }
    if (!opt.labels.empty()) {
        std::vector<std::string> keys;
        if (doc.graph)
            keys = q.approach == Approach::NodeIntervened
                       ? labels::node_labels(doc.graph->mediator_count())
                       : labels::path_labels(*doc.graph);
        else if (doc.expanded)
            for (const auto& z : doc.expanded->exposure_components())
                keys.push_back(doc.expanded->label_of(z));
        q.labels = parse_assignment(opt.labels, keys);
        q.contrast.reset();
    }
    if (opt.outcome_value) q.outcome_value = *opt.outcome_value;
    if (!opt.nuisance.empty()) {
        if (opt.nuisance == "refuse")
            q.nuisance = NuisanceHandling::Refuse;
        else if (opt.nuisance == "assume-absent")
            q.nuisance = NuisanceHandling::AssumeAbsent;
        else if (opt.nuisance == "weight")
            q.nuisance = NuisanceHandling::WeightObserved;
        else
            throw Error("BadLabels", "unknown nuisance handling '" + opt.nuisance + "'");
    }
    if (!opt.vorder.empty()) {
        if (opt.vorder == "sequential")
            q.confounder_ordering = ConfounderOrdering::Sequential;
        else if (opt.vorder == "unordered")
            q.confounder_ordering = ConfounderOrdering::Unordered;
        else
            throw Error("BadLabels", "unknown vorder '" + opt.vorder + "'");
    }
    out.push_back(q);
    return out;
}

EstimandSpec to_estimand(const SpecDocument& doc, const QuerySpec& q) {
    EstimandSpec s;
    s.semantic = q.semantic;
    s.regime = {q.approach, q.labels};
    s.graph = doc.graph;
    s.expanded = doc.expanded;
    s.outcome_value = q.outcome_value;
    s.nuisance = q.nuisance;
    s.confounder_ordering = q.confounder_ordering;
    return s;
}

/// Expansion used by a separable query; from the document when it declares
/// components, derived otherwise.
ExpandedGraph expansion_for(const SpecDocument& doc, const QuerySpec& q) {
    if (doc.expanded) return *doc.expanded;
    const CausalGraph& g = *doc.graph;
    auto eics = g.nodes_with_role(Role::ExposureInducedConfounder);
    if (q.approach == Approach::PathIntervened) return expand_path_intervened(g);
    if (eics.empty()) return expand_node_intervened(g);
    return expand_confounder(g, eics.front(), q.confounder_ordering);
}

std::map<std::string, int> component_assignment(const ExpandedGraph& eg,
                                                const std::map<std::string, int>& by_label) {
    std::map<std::string, int> out;
    for (const auto& z : eg.exposure_components()) {
        auto it = by_label.find(eg.label_of(z));
        if (it == by_label.end())
            throw Error("MissingLabel", "no value for label '" + eg.label_of(z) + "'");
        out[z] = it->second;
    }
    return out;
}

double oracle_value(const SpecDocument& doc, const QuerySpec& q,
                    const std::map<std::string, int>& labels) {
    const DiscreteSem& sem = *doc.sem;
    int y = q.outcome_value;
    switch (q.semantic) {
        case EstimandSpec::Semantic::Classical: {
            InterventionRegime regime{q.approach, labels};
            return oracle_nested(sem, nested_estimand(*doc.graph, regime), y);
        }
        case EstimandSpec::Semantic::Interventional: {
            InterventionRegime regime{q.approach, labels};
            return oracle_interventional(sem, *doc.graph, regime, y);
        }
        case EstimandSpec::Semantic::Separable: {
            auto eg = expansion_for(doc, q);
            if (doc.expanded)
                return oracle_separable(sem, eg, component_assignment(eg, labels),
                                        eg.outcome(), y);
            auto csem = expand_sem(sem, *doc.graph, eg);
            return oracle_separable(csem, eg, component_assignment(eg, labels), eg.outcome(), y);
        }
    }
    throw Error("Internal", "unknown semantic");
}

JointDistribution evaluation_law(const SpecDocument& doc, const QuerySpec& q) {
    if (q.semantic == EstimandSpec::Semantic::Separable) {
        auto eg = expansion_for(doc, q);
        if (doc.expanded) return collapsed_law(*doc.sem, eg);
        auto csem = expand_sem(*doc.sem, *doc.graph, eg);
        return collapsed_law(csem, eg);
    }
    return observational_distribution(*doc.sem);
}

AssumptionReport ledger_for(const SpecDocument& doc, const QuerySpec& q) {
    EstimandSpec s = to_estimand(doc, q);
    const DiscreteSem* sem = doc.sem ? &*doc.sem : nullptr;
    if (q.semantic != EstimandSpec::Semantic::Separable || !doc.sem || doc.expanded)
        return assumption_ledger(s, sem);
    // Separable ledgers on plain documents also verify the derived component
    // sem numerically.
    auto eg = expansion_for(doc, q);
    auto csem = expand_sem(*doc.sem, *doc.graph, eg);
    return assumption_ledger(s, sem, &csem);
}

std::string format_double(double v) {
    std::ostringstream os;
    os.precision(15);
    os << v;
    return os.str();
}

nlohmann::json labels_json(const std::map<std::string, int>& labels) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [k, v] : labels) j[k] = v;
    return j;
}

int cmd_validate(const SpecDocument& doc, const Options& opt) {
    if (opt.format == "json") {
        nlohmann::json j;
        j["schema_version"] = 1;
        j["valid"] = true;
        if (doc.graph) {
            j["kind"] = "graph";
            j["exposure"] = doc.graph->exposure();
            j["outcome"] = doc.graph->outcome();
            j["mediators"] = doc.graph->mediator_count();
            j["nodes"] = doc.graph->digraph().nodes().size();
        } else {
            j["kind"] = "expanded";
            j["components"] = doc.expanded->exposure_components();
        }
        j["has_sem"] = doc.sem.has_value();
        j["queries"] = doc.queries.size();
        std::cout << j.dump(2) << "\n";
        return 0;
    }
    if (doc.graph) {
        std::cout << "valid causal graph: exposure " << doc.graph->exposure() << ", outcome "
                  << doc.graph->outcome() << ", " << doc.graph->mediator_count()
                  << " mediator(s), " << doc.graph->digraph().nodes().size() << " node(s)\n";
    } else {
        std::cout << "valid expanded graph: outcome " << doc.expanded->outcome()
                  << ", exposure components";
        for (const auto& c : doc.expanded->exposure_components()) std::cout << " " << c;
        std::cout << "\n";
    }
    std::cout << (doc.sem ? "sem: declared\n" : "sem: none\n");
    std::cout << "queries: " << doc.queries.size() << "\n";
    return 0;
}

int cmd_swig(const SpecDocument& doc, const Options& opt) {
    if (!doc.graph) return fail_analysis("swig needs a plain causal graph");
    std::map<std::string, int> iv = parse_assignment(opt.do_assignment, {});
    Swig s = split(*doc.graph, iv);
    if (opt.format == "json") {
        nlohmann::json j;
        j["schema_version"] = 1;
        j["interventions"] = labels_json(iv);
        j["edges"] = nlohmann::json::array();
        for (const auto& [from, to] : s.split_graph().edges())
            j["edges"].push_back({{"from", from}, {"to", to}});
        j["labels"] = nlohmann::json::object();
        for (const auto& n : doc.graph->digraph().nodes())
            if (!s.label_of(n).empty()) j["labels"][n] = s.labeled(n).to_string();
        j["independencies"] = nlohmann::json::array();
        for (const auto& stmt : counterfactual_independencies(s))
            j["independencies"].push_back(stmt.to_string());
        std::cout << j.dump(2) << "\n";
        return 0;
    }
    std::cout << "split graph edges:\n";
    for (const auto& [from, to] : s.split_graph().edges())
        std::cout << "  " << from << " -> " << to << "\n";
    std::cout << "counterfactual labels:\n";
    for (const auto& n : doc.graph->digraph().nodes())
        if (!s.label_of(n).empty()) std::cout << "  " << s.labeled(n).to_string() << "\n";
    std::cout << "independence statements:\n";
    for (const auto& stmt : counterfactual_independencies(s))
        std::cout << "  " << stmt.to_string() << "\n";
    return 0;
}

int cmd_expand(const SpecDocument& doc, const Options& opt) {
    QuerySpec q;
    if (!doc.queries.empty()) q = doc.queries.front();
    if (!opt.approach.empty())
        q.approach = opt.approach == "path" ? Approach::PathIntervened : Approach::NodeIntervened;
    if (!opt.vorder.empty() && opt.vorder == "sequential")
        q.confounder_ordering = ConfounderOrdering::Sequential;
    auto eg = expansion_for(doc, q);
    auto conditions = dismissible_conditions(eg);
    if (opt.format == "json") {
        nlohmann::json j;
        j["schema_version"] = 1;
        j["detached_exposure"] = eg.detached_exposure();
        j["groups"] = nlohmann::json::array();
        for (const auto& g : eg.groups()) {
            nlohmann::json jg;
            jg["original"] = g.original;
            jg["members"] = g.members;
            jg["exposure"] = g.exposure_group;
            jg["ordering"] =
                g.ordering == ConfounderOrdering::Sequential ? "sequential" : "unordered";
            j["groups"].push_back(std::move(jg));
        }
        j["edges"] = nlohmann::json::array();
        for (const auto& [from, to] : eg.digraph().edges())
            j["edges"].push_back({{"from", from}, {"to", to}});
        j["dismissible_conditions"] = nlohmann::json::array();
        for (const auto& c : conditions)
            j["dismissible_conditions"].push_back(
                {{"target", c.target},
                 {"statement", c.statement},
                 {"reduced_form", c.reduced_form},
                 {"holds", dismissible_condition_holds(eg, c)}});
        std::cout << j.dump(2) << "\n";
        return 0;
    }
    std::cout << "expanded graph (detached exposure: " << eg.detached_exposure() << ")\n";
    for (const auto& g : eg.groups()) {
        std::cout << "  group " << g.original << " ->";
        for (const auto& m : g.members) std::cout << " " << m;
        std::cout << (g.ordering == ConfounderOrdering::Sequential ? "  [ordered]" : "") << "\n";
    }
    std::cout << "edges:\n";
    for (const auto& [from, to] : eg.digraph().edges())
        std::cout << "  " << from << " -> " << to << "\n";
    std::cout << "dismissible conditions:\n";
    for (const auto& c : conditions)
        std::cout << "  " << (dismissible_condition_holds(eg, c) ? "holds " : "FAILS ")
                  << c.statement << "\n";
    return 0;
}

int cmd_check(const SpecDocument& doc, const Options& opt) {
    auto queries = select_queries(doc, opt);
    bool all_green = true;
    nlohmann::json out = nlohmann::json::array();
    for (const auto& q : queries) {
        auto report = ledger_for(doc, q);
        all_green = all_green && report.all_hold();
        if (opt.format == "json")
            out.push_back(nlohmann::json::parse(render_report_json(report)));
        else
            std::cout << render_report_text(report) << "\n";
    }
    if (opt.format == "json")
        std::cout << nlohmann::json{{"schema_version", 1}, {"reports", out}}.dump(2) << "\n";
    return all_green ? 0 : 1;
}

int cmd_identify(const SpecDocument& doc, const Options& opt) {
    auto queries = select_queries(doc, opt);
    for (const auto& q : queries) {
        auto ast = identify(to_estimand(doc, q));
        if (opt.format == "json")
            std::cout << render_formula(ast, FormulaFormat::Json) << "\n";
        else if (opt.format == "latex")
            std::cout << render_formula(ast, FormulaFormat::LatexLike) << "\n";
        else
            std::cout << render_formula(ast, FormulaFormat::Text) << "\n";
    }
    return 0;
}

int cmd_estimate(const SpecDocument& doc, const Options& opt) {
    if (!doc.sem) return fail_analysis("estimate needs a sem section");
    auto queries = select_queries(doc, opt);
    nlohmann::json results = nlohmann::json::array();
    for (const auto& q : queries) {
        auto spec = to_estimand(doc, q);
        auto ast = identify(spec);
        double value = 0.0;
        std::string provenance;
        if (opt.n > 0) {
            auto data = sample(*doc.sem, opt.n, opt.seed);
            if (!opt.csv_path.empty()) {
                std::ofstream csv(opt.csv_path);
                csv << to_csv(data);
            }
            value = evaluate_plugin(ast, data).value;
            provenance = "plugin(" + std::to_string(opt.n) + ")";
        } else {
            value = evaluate(ast, evaluation_law(doc, q)).value;
            provenance = "exact";
        }
        std::optional<double> contrast_value;
        if (q.contrast) {
            QuerySpec qc = q;
            qc.labels = *q.contrast;
            qc.contrast.reset();
            auto ast2 = identify(to_estimand(doc, qc));
            double v2 = opt.n > 0 ? evaluate_plugin(ast2, sample(*doc.sem, opt.n, opt.seed)).value
                                  : evaluate(ast2, evaluation_law(doc, qc)).value;
            contrast_value = value - v2;
        }
        if (opt.format == "json") {
            nlohmann::json j;
            j["semantic"] = semantic_name(q.semantic);
            j["approach"] = approach_name(q.approach);
            j["labels"] = labels_json(q.labels);
            j["value"] = value;
            j["provenance"] = provenance;
            if (contrast_value) j["contrast"] = *contrast_value;
            results.push_back(std::move(j));
        } else {
            std::cout << semantic_name(q.semantic) << " " << approach_name(q.approach)
                      << ": estimate = " << format_double(value) << " [" << provenance << "]";
            if (contrast_value) std::cout << ", contrast = " << format_double(*contrast_value);
            std::cout << "\n";
        }
    }
    if (opt.format == "json")
        std::cout << nlohmann::json{{"schema_version", 1}, {"results", results}}.dump(2) << "\n";
    return 0;
}

int cmd_oracle(const SpecDocument& doc, const Options& opt) {
    if (!doc.sem) return fail_analysis("oracle needs a sem section");
    auto queries = select_queries(doc, opt);
    nlohmann::json results = nlohmann::json::array();
    for (const auto& q : queries) {
        double value = oracle_value(doc, q, q.labels);
        if (opt.format == "json") {
            results.push_back({{"semantic", semantic_name(q.semantic)},
                               {"approach", approach_name(q.approach)},
                               {"labels", labels_json(q.labels)},
                               {"value", value}});
        } else {
            std::cout << semantic_name(q.semantic) << " " << approach_name(q.approach)
                      << ": oracle = " << format_double(value) << "\n";
        }
    }
    if (opt.format == "json")
        std::cout << nlohmann::json{{"schema_version", 1}, {"results", results}}.dump(2) << "\n";
    return 0;
}

int cmd_compare(const SpecDocument& doc, const Options& opt) {
    if (!doc.sem) return fail_analysis("compare needs a sem section");
    auto queries = select_queries(doc, opt);
    bool ok = true;
    nlohmann::json results = nlohmann::json::array();
    for (const auto& q : queries) {
        auto report = ledger_for(doc, q);
        std::optional<double> formula_value;
        std::optional<double> oracle;
        std::string identify_error;
        try {
            auto ast = identify(to_estimand(doc, q));
            formula_value = evaluate(ast, evaluation_law(doc, q)).value;
        } catch (const Error& e) {
            identify_error = e.what();
        }
        oracle = oracle_value(doc, q, q.labels);
        double deviation = formula_value && oracle ? std::abs(*formula_value - *oracle) : 0.0;
        bool agree = formula_value && deviation <= kAgreementTolerance;
        bool green = report.all_hold() && agree;
        ok = ok && green;

        if (opt.format == "json") {
            nlohmann::json j;
            j["semantic"] = semantic_name(q.semantic);
            j["approach"] = approach_name(q.approach);
            j["labels"] = labels_json(q.labels);
            if (formula_value) j["formula_value"] = *formula_value;
            if (!identify_error.empty()) j["identify_error"] = identify_error;
            if (oracle) j["oracle_value"] = *oracle;
            j["deviation"] = deviation;
            j["agree"] = agree;
            j["ledger"] = nlohmann::json::parse(render_report_json(report));
            results.push_back(std::move(j));
        } else {
            std::cout << "== " << semantic_name(q.semantic) << " x " << approach_name(q.approach)
                      << " ==\n";
            if (formula_value)
                std::cout << "formula value: " << format_double(*formula_value) << "\n";
            else
                std::cout << "identification refused: " << identify_error << "\n";
            std::cout << "oracle value:  " << format_double(*oracle) << "\n";
            if (formula_value)
                std::cout << "deviation:     " << format_double(deviation)
                          << (agree ? "  (agree)" : "  (DISAGREE)") << "\n";
            std::cout << render_report_text(report) << "\n";
        }
    }
    if (opt.format == "json")
        std::cout << nlohmann::json{{"schema_version", 1},
                                    {"agree_tolerance", kAgreementTolerance},
                                    {"results", results}}
                         .dump(2)
                  << "\n";
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"path-specific effect identification engine"};
    app.require_subcommand(1);

    Options opt;
    std::vector<CLI::App*> subs;
    for (const char* name : {"validate", "swig", "expand", "check", "identify", "estimate",
                             "oracle", "compare"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("spec", opt.spec_path, "spec file")->required();
        sub->add_option("--semantic", opt.semantic, "classical|interventional|separable");
        sub->add_option("--approach", opt.approach, "node|path");
        sub->add_option("--labels", opt.labels, "label assignment, e.g. 1,0,1 or 0:1,1:0,2:1");
        sub->add_option("--do", opt.do_assignment, "interventions for swig, e.g. Z=1,M1=0");
        sub->add_option("--format", opt.format, "text|json|latex");
        sub->add_option("--y", opt.outcome_value, "outcome value");
        sub->add_option("--nuisance", opt.nuisance, "refuse|assume-absent|weight");
        sub->add_option("--vorder", opt.vorder, "unordered|sequential");
        sub->add_option("--seed", opt.seed, "sampling seed");
        sub->add_option("--n", opt.n, "sample size for plug-in estimation");
        sub->add_option("--dump-csv", opt.csv_path, "write the sampled dataset as csv");
        subs.push_back(sub);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return 2;
    }

    std::string command = app.get_subcommands().front()->get_name();
    std::string text;
    try {
        text = read_file(opt.spec_path);
    } catch (const CLI::Error&) {
        return fail_usage("cannot open '" + opt.spec_path + "'");
    }

    try {
        SpecDocument doc = parse_spec(text);
        if (command == "validate") return cmd_validate(doc, opt);
        if (command == "swig") return cmd_swig(doc, opt);
        if (command == "expand") return cmd_expand(doc, opt);
        if (command == "check") return cmd_check(doc, opt);
        if (command == "identify") return cmd_identify(doc, opt);
        if (command == "estimate") return cmd_estimate(doc, opt);
        if (command == "oracle") return cmd_oracle(doc, opt);
        if (command == "compare") return cmd_compare(doc, opt);
        return fail_usage("unknown command '" + command + "'");
    } catch (const ParseError& e) {
        for (const auto& d : e.diagnostics()) std::cerr << opt.spec_path << ":" << d.to_string() << "\n";
        return 1;
    } catch (const Error& e) {
        return fail_analysis(e.what());
    } catch (const std::exception& e) {
        return fail_analysis(e.what());
    }
}
