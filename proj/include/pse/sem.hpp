#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "pse/expansion.hpp"
#include "pse/graph.hpp"
#include "pse/regime.hpp"

namespace pse {

/// WorldShared: one noise draw reused across every intervention world of the
/// node (FFRCISTG). WorldFresh: an independent draw per counterfactual world,
/// so M(z) and M(z') are exactly independent for distinct worlds.
enum class NoiseMode { WorldShared, WorldFresh };

struct NoiseSpec {
    std::vector<int> values;
    std::vector<double> probs;  // same length, sums to 1 within 1e-12
};

/// Exact distribution over a fixed variable list (mixed-radix dense table).
class JointDistribution {
public:
    JointDistribution() = default;
    JointDistribution(std::vector<std::string> vars, std::vector<std::vector<int>> domains);

    const std::vector<std::string>& variables() const { return vars_; }
    const std::vector<int>& domain(const std::string& var) const;
    bool has_variable(const std::string& var) const { return index_.count(var) != 0; }

    double& cell(const std::vector<int>& values);
    double probability(const std::map<std::string, int>& assignment) const;  // marginal of a partial assignment
    /// P(target = value | given); nullopt when the conditioning event has
    /// probability zero.
    std::optional<double> conditional(const std::string& target, int value,
                                      const std::map<std::string, int>& given) const;

    double total() const;
    void normalize();
    std::size_t size() const { return p_.size(); }
    const std::vector<double>& raw() const { return p_; }

    /// Enumerate assignments in mixed-radix order (last variable fastest).
    template <typename F>
    void for_each(F&& f) const {
        std::vector<int> values(vars_.size(), 0);
        for (std::size_t idx = 0; idx < p_.size(); ++idx) {
            std::size_t rest = idx;
            for (std::size_t k = vars_.size(); k-- > 0;) {
                values[k] = domains_[k][rest % domains_[k].size()];
                rest /= domains_[k].size();
            }
            f(values, p_[idx]);
        }
    }

private:
    std::vector<std::string> vars_;
    std::vector<std::vector<int>> domains_;
    std::map<std::string, std::size_t> index_;
    std::vector<double> p_;
};

/// Nested counterfactual term: a variable under an assignment of intervened
/// ancestors to constants or further terms. `world` tags the counterfactual
/// world the term lives in; distinct tags are distinct worlds for
/// world-fresh noise even when the assigned values coincide (the label z_10
/// and z_11 worlds stay independent even if both labels carry the same
/// exposure value). Untagged terms unify by their value signature, which
/// yields the composition axiom Y(z, M(z)) = Y(z).
struct CfTerm {
    using Ptr = std::shared_ptr<const CfTerm>;

    struct Arg {
        std::string node;
        std::optional<int> value;
        Ptr term;
        bool operator==(const Arg& o) const;
    };

    std::string node;
    std::vector<Arg> args;  // sorted by node name
    std::string world;

    static Ptr make(std::string node, std::vector<Arg> args = {}, std::string world = {});
    std::string to_string() const;  // canonical rendering, also the unification key
    bool operator==(const CfTerm& o) const;
};

struct SemNode {
    std::string name;
    std::vector<int> domain;
    bool latent = false;

    std::vector<double> latent_probs;  // latent nodes only

    // Endogenous nodes only:
    std::vector<std::string> parents;  // sorted by name; axis order of the table
    NoiseSpec noise;
    NoiseMode noise_mode = NoiseMode::WorldShared;
    std::vector<int> mechanism;  // mixed-radix table over (parents..., noise) -> domain value
    // Component sems: members of one group share a noise field keyed by the
    // member's realized inputs, so equal inputs give equal draws
    // (single-world component consistency) and distinct inputs independent
    // ones (component manipulability).
    std::string noise_group;
    std::vector<std::string> noise_key_parents;  // field key axes; defaults to parents
};

/// Finite structural equation model with exact enumeration. Immutable after
/// construction; enumeration folds run in a fixed order so results are
/// bitwise-reproducible.
class DiscreteSem {
public:
    static DiscreteSem build(Digraph structure, std::vector<SemNode> nodes);
    /// Convenience: structure and domains from a causal graph.
    static DiscreteSem build(const CausalGraph& g, std::vector<SemNode> nodes);

    const Digraph& structure() const { return graph_; }
    const SemNode& node(const std::string& name) const;
    bool has_node(const std::string& name) const { return index_.count(name) != 0; }
    std::vector<std::string> observed_nodes() const;  // topological order, latents excluded
    std::vector<std::string> latent_nodes() const;

    int mechanism_value(const SemNode& n, const std::vector<int>& parent_values,
                        int noise_value) const;

    /// Total size of the exogenous space (latents x noise copies for one
    /// world); enumeration refuses above the cap.
    static constexpr std::uint64_t kEnumerationCap = 10'000'000;

private:
    Digraph graph_;
    std::vector<SemNode> nodes_;
    std::map<std::string, std::size_t> index_;
};

/// Exact observational law over the observed nodes (latents marginalized).
JointDistribution observational_distribution(const DiscreteSem& sem);

/// Law of the single world where the do-assignment holds and everything else
/// runs naturally. Columns of do-assigned nodes carry the assigned values.
JointDistribution law_under_do(const DiscreteSem& sem, const std::map<std::string, int>& do_map);

/// Exact law of a set of counterfactual terms evaluated jointly (variables
/// named by the terms' canonical strings).
JointDistribution counterfactual_joint(const DiscreteSem& sem, const std::vector<CfTerm::Ptr>& terms);

/// P(term's node = value) under the term's interventions.
double oracle_nested(const DiscreteSem& sem, const CfTerm::Ptr& query, int value);

/// Interventional estimand: mediators replaced by sequential random draws
/// from their single-world counterfactual laws, pushed through the outcome
/// world.
double oracle_interventional(const DiscreteSem& sem, const CausalGraph& g,
                             const InterventionRegime& regime, int outcome_value);

/// Plain intervention on a component sem: assignment fixes every exposure
/// component.
double oracle_separable(const DiscreteSem& component_sem, const ExpandedGraph& eg,
                        const std::map<std::string, int>& assignment,
                        const std::string& event_node, int event_value);

struct IndependenceQuery {
    std::vector<CfTerm::Ptr> left;
    std::vector<CfTerm::Ptr> right;
    std::vector<CfTerm::Ptr> given;
};

struct IndependenceVerdict {
    bool holds = false;
    double max_deviation = 0.0;
    std::string witness;  // offending assignment when it fails

    static IndependenceVerdict pass(double dev) { return {true, dev, {}}; }
};

/// Exact factorization check P(L,R|G) = P(L|G) P(R|G) within 1e-10.
IndependenceVerdict numeric_independence(const DiscreteSem& sem, const IndependenceQuery& q);

struct Dataset {
    std::vector<std::string> columns;
    std::vector<std::vector<int>> rows;
};

Dataset sample(const DiscreteSem& sem, std::size_t n, std::uint64_t seed);
std::string to_csv(const Dataset& d);

/// Component sem over an expanded graph: components inherit the original
/// node's mechanism restricted to their in-edges; members of one unordered
/// group share a value-keyed noise field, sequential groups draw fresh noise
/// per member.
DiscreteSem expand_sem(const DiscreteSem& sem, const CausalGraph& g, const ExpandedGraph& eg);

/// Actual-world law of a component sem: exposure components collapse onto the
/// detached exposure, unordered (SWCC) groups onto their original variable,
/// sequential groups stay distinct.
JointDistribution collapsed_law(const DiscreteSem& component_sem, const ExpandedGraph& eg);

}  // namespace pse
