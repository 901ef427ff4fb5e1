#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "pse/graph.hpp"

namespace pse {

/// Variable with an optional counterfactual label: the intervened ancestors
/// and their values, e.g. Y(Z=1, M1=0).
struct LabeledVar {
    std::string node;
    std::vector<std::pair<std::string, int>> label;  // sorted by node name

    std::string to_string() const;
    bool operator==(const LabeledVar&) const = default;
    auto operator<=>(const LabeledVar&) const = default;
};

struct IndependenceStatement {
    std::vector<LabeledVar> left;
    std::vector<LabeledVar> right;
    std::vector<LabeledVar> given;

    std::string to_string() const;
    bool operator==(const IndependenceStatement&) const = default;
};

/// Single-world intervention graph: each intervened node is split into a
/// random half (keeps incoming edges) and a fixed half (keeps outgoing
/// edges, no incoming). Fixed halves are constants, so d-separation treats
/// them as always conditioned.
class Swig {
public:
    const CausalGraph& base() const { return *base_; }
    const std::map<std::string, int>& interventions() const { return interventions_; }

    const Digraph& split_graph() const { return split_; }
    static std::string fixed_half(const std::string& node);  // derived node name

    /// Counterfactual label of a random node: the intervened ancestors whose
    /// fixed halves reach it, canonicalized to the minimal ancestral set.
    std::vector<std::pair<std::string, int>> label_of(const std::string& node) const;
    LabeledVar labeled(const std::string& node) const;

    /// d-separation between random halves, conditioning allowed on random
    /// halves only; fixed halves are implicitly conditioned.
    bool d_separated(const std::set<std::string>& a, const std::set<std::string>& b,
                     const std::set<std::string>& c) const;

    /// The graph with labels dropped (used to compose splits).
    CausalGraph as_graph() const { return *base_; }

private:
    friend Swig split(const CausalGraph&, const std::map<std::string, int>&);
    std::shared_ptr<const CausalGraph> base_;
    std::map<std::string, int> interventions_;
    Digraph split_;
    std::set<std::string> fixed_;
};

Swig split(const CausalGraph& g, const std::map<std::string, int>& interventions);

/// Exchangeability-pattern statements readable from the SWIG: for every
/// labeled random node T and every actual-world term A among the exposure and
/// mediators, T independent of A given the observed split-graph ancestors of
/// A's random half. Only statements that d-separation certifies are emitted.
std::vector<IndependenceStatement> counterfactual_independencies(const Swig& s);

}  // namespace pse
