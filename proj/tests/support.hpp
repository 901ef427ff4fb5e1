#pragma once

// Shared fixtures: canonical graphs, random sems with dyadic CPTs, and the
// brute-force probability oracles the d-separation tests check against.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "pse/graph.hpp"
#include "pse/sem.hpp"

namespace support {

struct Rng {
    std::mt19937_64 gen;
    explicit Rng(std::uint64_t seed) : gen(seed) {}
    int uniform(int n) { return static_cast<int>(gen() % static_cast<std::uint64_t>(n)); }
    bool coin() { return uniform(2) == 1; }
};

/// The two-mediator model: Z -> M2 -> M1 -> Y with all shortcut edges
/// (Z->M1, Z->Y, M2->Y). Options add an exposure-induced confounder V feeding
/// M1, M2, Y, a baseline confounder C into everything, and latent common
/// causes on V or M2.
struct TwoMediatorOptions {
    bool with_v = false;
    bool with_c = false;
    bool uv_latent = false;   // latent parent of V
    bool um2_latent = false;  // latent parent of M2
};

inline pse::CausalGraph two_mediator_graph(const TwoMediatorOptions& o = {}) {
    using pse::Role;
    std::vector<pse::NodeSpec> nodes{
        {"Z", Role::Exposure, 0, {0, 1}},
        {"M2", Role::Mediator, 2, {0, 1}},
        {"M1", Role::Mediator, 1, {0, 1}},
        {"Y", Role::Outcome, 0, {0, 1}},
    };
    std::vector<std::pair<std::string, std::string>> edges{
        {"Z", "M2"}, {"Z", "M1"}, {"Z", "Y"}, {"M2", "M1"}, {"M2", "Y"}, {"M1", "Y"},
    };
    if (o.with_v) {
        nodes.push_back({"V", Role::ExposureInducedConfounder, 0, {0, 1}});
        edges.insert(edges.end(), {{"Z", "V"}, {"V", "M2"}, {"V", "M1"}, {"V", "Y"}});
    }
    if (o.with_c) {
        nodes.push_back({"C", Role::BaselineConfounder, 0, {0, 1}});
        edges.insert(edges.end(), {{"C", "Z"}, {"C", "M2"}, {"C", "M1"}, {"C", "Y"}});
    }
    if (o.uv_latent) {
        nodes.push_back({"UV", Role::Latent, 0, {0, 1}});
        edges.push_back({"UV", "V"});
    }
    if (o.um2_latent) {
        nodes.push_back({"UM2", Role::Latent, 0, {0, 1}});
        edges.push_back({"UM2", "M2"});
    }
    return pse::CausalGraph::validate(std::move(nodes), std::move(edges));
}

inline pse::CausalGraph single_mediator_graph(bool with_v = false) {
    using pse::Role;
    std::vector<pse::NodeSpec> nodes{
        {"Z", Role::Exposure, 0, {0, 1}},
        {"M", Role::Mediator, 1, {0, 1}},
        {"Y", Role::Outcome, 0, {0, 1}},
    };
    std::vector<std::pair<std::string, std::string>> edges{{"Z", "M"}, {"Z", "Y"}, {"M", "Y"}};
    if (with_v) {
        nodes.push_back({"V", Role::ExposureInducedConfounder, 0, {0, 1}});
        edges.insert(edges.end(), {{"Z", "V"}, {"V", "M"}, {"V", "Y"}});
    }
    return pse::CausalGraph::validate(std::move(nodes), std::move(edges));
}

/// Dyadic probability vector of the given length: multiples of 1/64 summing
/// to one exactly, with every entry positive.
inline std::vector<double> dyadic_probs(Rng& rng, std::size_t n) {
    while (true) {
        std::vector<int> cuts{0, 64};
        for (std::size_t i = 1; i < n; ++i) cuts.push_back(1 + rng.uniform(63));
        std::sort(cuts.begin(), cuts.end());
        std::vector<double> probs;
        bool ok = true;
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
            int width = cuts[i + 1] - cuts[i];
            if (width == 0) ok = false;
            probs.push_back(width / 64.0);
        }
        if (ok) return probs;
    }
}

/// Random mechanism node: 4-valued noise with dyadic probabilities and a
/// random table whose noise image covers the full domain for every parent
/// combination. That keeps every conditional strictly positive (on a 1/64
/// grid), which the identification formulas assume.
inline pse::SemNode random_sem_node(Rng& rng, const pse::CausalGraph& g, const std::string& name,
                                    pse::NoiseMode mode) {
    pse::SemNode n;
    n.name = name;
    const auto& spec = g.node(name);
    n.domain = spec.domain;
    if (spec.role == pse::Role::Latent) {
        n.latent = true;
        n.latent_probs = dyadic_probs(rng, n.domain.size());
        return n;
    }
    n.parents.assign(g.parents(name).begin(), g.parents(name).end());
    n.noise.values = {0, 1, 2, 3};
    n.noise.probs = dyadic_probs(rng, 4);
    n.noise_mode = mode;
    std::size_t combos = 1;
    for (const auto& p : n.parents) combos *= g.node(p).domain.size();
    for (std::size_t c = 0; c < combos; ++c) {
        std::vector<int> row(4);
        while (true) {
            std::set<int> image;
            for (auto& v : row) {
                v = n.domain[static_cast<std::size_t>(
                    rng.uniform(static_cast<int>(n.domain.size())))];
                image.insert(v);
            }
            if (image.size() == n.domain.size()) break;
        }
        n.mechanism.insert(n.mechanism.end(), row.begin(), row.end());
    }
    return n;
}

/// Random sem over a graph; `fresh` nodes draw world-fresh noise, everything
/// else world-shared.
inline pse::DiscreteSem random_sem(Rng& rng, const pse::CausalGraph& g,
                                   const std::set<std::string>& fresh) {
    std::vector<pse::SemNode> nodes;
    for (const auto& name : g.topological_order())
        nodes.push_back(random_sem_node(
            rng, g, name,
            fresh.count(name) ? pse::NoiseMode::WorldFresh : pse::NoiseMode::WorldShared));
    return pse::DiscreteSem::build(g, std::move(nodes));
}

inline pse::DiscreteSem random_sem_all_fresh(Rng& rng, const pse::CausalGraph& g) {
    std::set<std::string> fresh;
    for (const auto& n : g.topological_order()) fresh.insert(n);
    return random_sem(rng, g, fresh);
}

// ---------------------------------------------------------------------------
// Brute-force oracles, independent of the library's enumeration engines.

/// Random DAG over n binary nodes named A..; each forward pair gets an edge
/// with probability 1/2.
struct RandomDag {
    std::vector<std::string> names;
    std::vector<std::pair<std::string, std::string>> edges;
    std::map<std::string, std::vector<std::string>> parents;
};

inline RandomDag random_dag(Rng& rng, int n) {
    RandomDag d;
    for (int i = 0; i < n; ++i) d.names.push_back(std::string(1, static_cast<char>('A' + i)));
    for (int i = 0; i < n; ++i)
        for (int k = i + 1; k < n; ++k)
            if (rng.coin()) {
                d.edges.emplace_back(d.names[static_cast<std::size_t>(i)],
                                     d.names[static_cast<std::size_t>(k)]);
                d.parents[d.names[static_cast<std::size_t>(k)]].push_back(
                    d.names[static_cast<std::size_t>(i)]);
            }
    return d;
}

/// Exact joint law of a random binary CPT parameterization of the DAG,
/// assembled directly by the chain rule.
struct BruteLaw {
    std::vector<std::string> names;
    std::vector<double> p;  // 2^n cells, mixed radix over names

    double prob(const std::map<std::string, int>& assignment) const {
        double total = 0.0;
        for (std::size_t idx = 0; idx < p.size(); ++idx) {
            bool match = true;
            for (const auto& [name, v] : assignment) {
                std::size_t pos = static_cast<std::size_t>(
                    std::find(names.begin(), names.end(), name) - names.begin());
                int bit = static_cast<int>((idx >> (names.size() - 1 - pos)) & 1u);
                if (bit != v) {
                    match = false;
                    break;
                }
            }
            if (match) total += p[idx];
        }
        return total;
    }
};

inline BruteLaw brute_law(Rng& rng, const RandomDag& d) {
    BruteLaw law;
    law.names = d.names;
    // CPT: P(X=1 | parent combo), dyadic.
    std::map<std::string, std::vector<double>> cpt;
    for (const auto& name : d.names) {
        std::size_t n_parents = d.parents.count(name) ? d.parents.at(name).size() : 0;
        std::vector<double> table;
        for (std::size_t c = 0; c < (1u << n_parents); ++c)
            table.push_back((1 + rng.uniform(63)) / 64.0);
        cpt[name] = table;
    }
    std::size_t cells = 1u << d.names.size();
    law.p.assign(cells, 0.0);
    for (std::size_t idx = 0; idx < cells; ++idx) {
        double prob = 1.0;
        for (std::size_t pos = 0; pos < d.names.size(); ++pos) {
            const std::string& name = d.names[pos];
            int value = static_cast<int>((idx >> (d.names.size() - 1 - pos)) & 1u);
            std::size_t combo = 0;
            if (d.parents.count(name))
                for (const auto& par : d.parents.at(name)) {
                    std::size_t ppos = static_cast<std::size_t>(
                        std::find(d.names.begin(), d.names.end(), par) - d.names.begin());
                    combo = (combo << 1) |
                            static_cast<std::size_t>((idx >> (d.names.size() - 1 - ppos)) & 1u);
                }
            double p1 = cpt.at(name)[combo];
            prob *= value == 1 ? p1 : 1.0 - p1;
        }
        law.p[idx] = prob;
    }
    return law;
}

/// Exact conditional-independence test on a brute law.
inline bool conditionally_independent(const BruteLaw& law, const std::set<std::string>& a,
                                      const std::set<std::string>& b,
                                      const std::set<std::string>& c, double tol) {
    std::vector<std::string> av(a.begin(), a.end()), bv(b.begin(), b.end()),
        cv(c.begin(), c.end());
    std::size_t na = av.size(), nb = bv.size(), nc = cv.size();
    for (std::size_t ci = 0; ci < (1u << nc); ++ci) {
        std::map<std::string, int> cond;
        for (std::size_t i = 0; i < nc; ++i)
            cond[cv[i]] = static_cast<int>((ci >> i) & 1u);
        double pc = law.prob(cond);
        if (pc <= 0.0) continue;
        for (std::size_t ai = 0; ai < (1u << na); ++ai)
            for (std::size_t bi = 0; bi < (1u << nb); ++bi) {
                auto joint = cond;
                auto am = cond;
                auto bm = cond;
                for (std::size_t i = 0; i < na; ++i) {
                    int v = static_cast<int>((ai >> i) & 1u);
                    joint[av[i]] = v;
                    am[av[i]] = v;
                }
                for (std::size_t i = 0; i < nb; ++i) {
                    int v = static_cast<int>((bi >> i) & 1u);
                    joint[bv[i]] = v;
                    bm[bv[i]] = v;
                }
                double lhs = law.prob(joint) / pc;
                double rhs = (law.prob(am) / pc) * (law.prob(bm) / pc);
                if (std::abs(lhs - rhs) > tol) return false;
            }
    }
    return true;
}

}  // namespace support
