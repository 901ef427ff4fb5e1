#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pse/expansion.hpp"
#include "pse/graph.hpp"
#include "pse/identify.hpp"
#include "pse/regime.hpp"
#include "pse/sem.hpp"

namespace pse {

struct SourcePos {
    int line = 0;
    int col = 0;
};

struct Diagnostic {
    SourcePos pos;
    std::string code;
    std::string message;

    std::string to_string() const;
};

class ParseError : public Error {
public:
    explicit ParseError(std::vector<Diagnostic> diagnostics);
    const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }

private:
    std::vector<Diagnostic> diagnostics_;
};

/// One query line of a spec document.
struct QuerySpec {
    EstimandSpec::Semantic semantic = EstimandSpec::Semantic::Classical;
    Approach approach = Approach::NodeIntervened;
    std::map<std::string, int> labels;                 // regime assignment
    std::optional<std::map<std::string, int>> contrast;  // second regime
    int outcome_value = 1;
    NuisanceHandling nuisance = NuisanceHandling::Refuse;
    ConfounderOrdering confounder_ordering = ConfounderOrdering::Unordered;
    SourcePos pos;
};

/// Parsed spec file: graph (plain or expanded), optional SEM, queries.
struct SpecDocument {
    // Plain documents:
    std::optional<CausalGraph> graph;
    // Documents that declare components directly:
    std::optional<ExpandedGraph> expanded;
    std::optional<DiscreteSem> sem;  // over the plain or expanded structure
    std::vector<QuerySpec> queries;

    bool is_expanded() const { return expanded.has_value(); }
};

/// Line-oriented grammar:
///   node <name> role=<role> [order=<k>] domain={v,...}
///   component <name> of=<node> [group=ordered|swcc]
///   edge <A> -> <B>
///   noise <node> [mode=shared|fresh] dist={v:p, ...}
///   mech <node> table={<parents...> <noise> -> <value>; ...}
///   query <semantic> <approach> labels={l:v, ...} [y=<v>] [contrast={...}]
///         [nuisance=refuse|assume-absent|weight] [vorder=unordered|sequential]
/// Comments start with '#'. Parent columns of a mech table follow the node's
/// parents sorted by name; the noise column is last.
SpecDocument parse_spec(const std::string& text);

/// Canonical rendering; parse(serialize(doc)) reproduces the document.
std::string serialize_spec(const SpecDocument& doc);

}  // namespace pse
