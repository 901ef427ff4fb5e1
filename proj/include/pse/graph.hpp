#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace pse {

/// Error with a stable machine-readable code plus human-readable detail.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(code + ": " + message), code_(std::move(code)) {}
    const std::string& code() const { return code_; }

private:
    std::string code_;
};

struct Violation {
    std::string code;
    std::string message;
};

/// Thrown by validation routines; carries every violation found, not just the first.
class ValidationError : public Error {
public:
    explicit ValidationError(std::vector<Violation> violations)
        : Error(violations.empty() ? "Invalid" : violations.front().code, join(violations)),
          violations_(std::move(violations)) {}
    const std::vector<Violation>& violations() const { return violations_; }

private:
    static std::string join(const std::vector<Violation>& vs);
    std::vector<Violation> violations_;
};

enum class Role {
    Exposure,
    Mediator,
    Outcome,
    BaselineConfounder,
    ExposureInducedConfounder,
    Latent,
    Plain,  // endogenous node of an expanded graph with no original-graph role
};

std::string role_name(Role r);

struct NodeSpec {
    std::string name;
    Role role = Role::Plain;
    int mediator_index = 0;       // >= 1 when role == Mediator; M_1 is nearest the outcome
    std::vector<int> domain;      // finite ordered value set

    bool operator==(const NodeSpec&) const = default;
};

/// Plain directed graph over named nodes. Underlies both causal graphs and
/// expanded graphs; d-separation and path enumeration operate at this level.
class Digraph {
public:
    Digraph() = default;

    void add_node(const std::string& name);
    void add_edge(const std::string& from, const std::string& to);

    bool has_node(const std::string& name) const { return adj_.count(name) != 0; }
    bool has_edge(const std::string& from, const std::string& to) const;

    std::vector<std::string> nodes() const;  // sorted by name
    std::vector<std::pair<std::string, std::string>> edges() const;

    const std::set<std::string>& parents(const std::string& name) const;
    const std::set<std::string>& children(const std::string& name) const;

    std::set<std::string> ancestors(const std::string& name) const;    // excludes the node itself
    std::set<std::string> descendants(const std::string& name) const;  // excludes the node itself

    /// Linear extension of the edge relation, ties broken by node name.
    std::vector<std::string> topological_order() const;

    /// Nodes on a cycle, empty if acyclic.
    std::vector<std::string> find_cycle() const;

    bool operator==(const Digraph&) const = default;

private:
    struct Adjacency {
        std::set<std::string> parents;
        std::set<std::string> children;
        bool operator==(const Adjacency&) const = default;
    };
    std::map<std::string, Adjacency> adj_;
    const Adjacency& at(const std::string& name) const;
};

/// True iff every path between a and b is blocked given c (standard
/// reachability over active trails).
bool d_separated(const Digraph& g, const std::set<std::string>& a,
                 const std::set<std::string>& b, const std::set<std::string>& c);

struct DirectedPath {
    std::vector<std::string> nodes;
    bool operator==(const DirectedPath&) const = default;
    auto operator<=>(const DirectedPath&) const = default;
};

/// All directed paths from `from` to `to`, lexicographic by node sequence.
std::vector<DirectedPath> causal_paths(const Digraph& g, const std::string& from,
                                       const std::string& to);

/// Role-annotated causal DAG. Immutable after validation; all member
/// functions are const and safe for concurrent use.
class CausalGraph {
public:
    /// Checks every structural invariant and either returns the graph or
    /// throws ValidationError listing all violations.
    static CausalGraph validate(std::vector<NodeSpec> nodes,
                                std::vector<std::pair<std::string, std::string>> edges);

    const Digraph& digraph() const { return graph_; }
    const std::vector<NodeSpec>& nodes() const { return nodes_; }
    const NodeSpec& node(const std::string& name) const;
    bool has_node(const std::string& name) const { return index_.count(name) != 0; }

    const std::string& exposure() const { return exposure_; }
    const std::string& outcome() const { return outcome_; }
    int mediator_count() const { return mediator_count_; }          // p
    const std::string& mediator(int index) const;                    // M_index, 1-based
    std::vector<std::string> mediators() const;                      // M_1..M_p
    std::vector<std::string> nodes_with_role(Role r) const;          // sorted by name

    bool is_observed(const std::string& name) const;  // all non-latent nodes

    const std::set<std::string>& parents(const std::string& n) const { return graph_.parents(n); }
    const std::set<std::string>& children(const std::string& n) const { return graph_.children(n); }
    std::vector<std::string> topological_order() const { return graph_.topological_order(); }

    bool d_separated(const std::set<std::string>& a, const std::set<std::string>& b,
                     const std::set<std::string>& c) const;

    std::vector<DirectedPath> causal_paths(const std::string& from, const std::string& to) const;

    /// Directed exposure->outcome paths, lexicographic.
    std::vector<DirectedPath> exposure_outcome_paths() const;

    bool operator==(const CausalGraph&) const = default;

private:
    CausalGraph() = default;
    std::vector<NodeSpec> nodes_;
    std::map<std::string, std::size_t> index_;
    Digraph graph_;
    std::string exposure_;
    std::string outcome_;
    int mediator_count_ = 0;
};

}  // namespace pse
