#include "pse/graph.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <sstream>

namespace pse {

std::string ValidationError::join(const std::vector<Violation>& vs) {
    std::ostringstream os;
    for (std::size_t i = 0; i < vs.size(); ++i) {
        if (i) os << "; ";
        os << vs[i].message;
    }
    return os.str();
}

std::string role_name(Role r) {
    switch (r) {
        case Role::Exposure: return "exposure";
        case Role::Mediator: return "mediator";
        case Role::Outcome: return "outcome";
        case Role::BaselineConfounder: return "baseline";
        case Role::ExposureInducedConfounder: return "induced";
        case Role::Latent: return "latent";
        case Role::Plain: return "var";
    }
    return "?";
}

void Digraph::add_node(const std::string& name) { adj_[name]; }

void Digraph::add_edge(const std::string& from, const std::string& to) {
    if (!has_node(from)) throw Error("UnknownNode", "edge endpoint '" + from + "' not declared");
    if (!has_node(to)) throw Error("UnknownNode", "edge endpoint '" + to + "' not declared");
    adj_[from].children.insert(to);
    adj_[to].parents.insert(from);
}

const Digraph::Adjacency& Digraph::at(const std::string& name) const {
    auto it = adj_.find(name);
    if (it == adj_.end()) throw Error("UnknownNode", "node '" + name + "' not in graph");
    return it->second;
}

bool Digraph::has_edge(const std::string& from, const std::string& to) const {
    auto it = adj_.find(from);
    return it != adj_.end() && it->second.children.count(to) != 0;
}

std::vector<std::string> Digraph::nodes() const {
    std::vector<std::string> out;
    out.reserve(adj_.size());
    for (const auto& [name, _] : adj_) out.push_back(name);
    return out;
}

std::vector<std::pair<std::string, std::string>> Digraph::edges() const {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& [name, a] : adj_)
        for (const auto& c : a.children) out.emplace_back(name, c);
    return out;
}

const std::set<std::string>& Digraph::parents(const std::string& name) const {
    return at(name).parents;
}

const std::set<std::string>& Digraph::children(const std::string& name) const {
    return at(name).children;
}

namespace {

std::set<std::string> closure(const Digraph& g, const std::string& start,
                              const std::set<std::string>& (Digraph::*step)(const std::string&) const) {
    std::set<std::string> seen;
    std::deque<std::string> frontier{start};
    while (!frontier.empty()) {
        std::string n = frontier.front();
        frontier.pop_front();
        for (const auto& next : (g.*step)(n))
            if (seen.insert(next).second) frontier.push_back(next);
    }
    return seen;
}

}  // namespace

std::set<std::string> Digraph::ancestors(const std::string& name) const {
    at(name);
    return closure(*this, name, &Digraph::parents);
}

std::set<std::string> Digraph::descendants(const std::string& name) const {
    at(name);
    return closure(*this, name, &Digraph::children);
}

std::vector<std::string> Digraph::topological_order() const {
    std::map<std::string, int> in_degree;
    for (const auto& [name, a] : adj_) in_degree[name] = static_cast<int>(a.parents.size());
    // std::set keeps the ready frontier name-sorted, which breaks ties deterministically.
    std::set<std::string> ready;
    for (const auto& [name, d] : in_degree)
        if (d == 0) ready.insert(name);
    std::vector<std::string> order;
    order.reserve(adj_.size());
    while (!ready.empty()) {
        std::string n = *ready.begin();
        ready.erase(ready.begin());
        order.push_back(n);
        for (const auto& c : at(n).children)
            if (--in_degree[c] == 0) ready.insert(c);
    }
    if (order.size() != adj_.size()) throw Error("Cycle", "graph contains a directed cycle");
    return order;
}

std::vector<std::string> Digraph::find_cycle() const {
    std::map<std::string, int> state;  // 0 unvisited, 1 on stack, 2 done
    std::vector<std::string> stack;
    std::vector<std::string> cycle;

    std::function<bool(const std::string&)> visit = [&](const std::string& n) {
        state[n] = 1;
        stack.push_back(n);
        for (const auto& c : at(n).children) {
            if (state[c] == 1) {
                auto it = std::find(stack.begin(), stack.end(), c);
                cycle.assign(it, stack.end());
                return true;
            }
            if (state[c] == 0 && visit(c)) return true;
        }
        stack.pop_back();
        state[n] = 2;
        return false;
    };

    for (const auto& [name, _] : adj_)
        if (state[name] == 0 && visit(name)) return cycle;
    return {};
}

bool d_separated(const Digraph& g, const std::set<std::string>& a,
                 const std::set<std::string>& b, const std::set<std::string>& c) {
    for (const auto& sets : {a, b, c})
        for (const auto& n : sets)
            if (!g.has_node(n)) throw Error("UnknownNode", "node '" + n + "' not in graph");

    // Conditioning set plus its ancestors; a collider is open iff it is in here.
    std::set<std::string> anc_c;
    for (const auto& n : c) {
        anc_c.insert(n);
        auto anc = g.ancestors(n);
        anc_c.insert(anc.begin(), anc.end());
    }

    // Reachability over active trails: states are (node, direction of arrival),
    // direction true = arrived via an edge into the node.
    std::set<std::pair<std::string, bool>> visited;
    std::deque<std::pair<std::string, bool>> frontier;
    for (const auto& n : a) {
        frontier.emplace_back(n, false);  // treat sources as entered "from below"
        frontier.emplace_back(n, true);
    }
    while (!frontier.empty()) {
        auto [n, arrived_via_in_edge] = frontier.front();
        frontier.pop_front();
        if (!visited.insert({n, arrived_via_in_edge}).second) continue;
        if (b.count(n) && !c.count(n)) return false;

        bool conditioned = c.count(n) != 0;
        if (!arrived_via_in_edge) {
            // Came from a child (or start): may go up to parents and down to children
            // unless conditioned.
            if (!conditioned) {
                for (const auto& p : g.parents(n)) frontier.emplace_back(p, false);
                for (const auto& ch : g.children(n)) frontier.emplace_back(ch, true);
            }
        } else {
            // Came from a parent: chain continues down unless conditioned; collider
            // opens back up only if this node has a conditioned descendant (anc_c).
            if (!conditioned)
                for (const auto& ch : g.children(n)) frontier.emplace_back(ch, true);
            if (anc_c.count(n))
                for (const auto& p : g.parents(n)) frontier.emplace_back(p, false);
        }
    }
    return true;
}

std::vector<DirectedPath> causal_paths(const Digraph& g, const std::string& from,
                                       const std::string& to) {
    if (!g.has_node(from)) throw Error("UnknownNode", "node '" + from + "' not in graph");
    if (!g.has_node(to)) throw Error("UnknownNode", "node '" + to + "' not in graph");

    std::vector<DirectedPath> out;
    std::vector<std::string> current{from};
    std::function<void(const std::string&)> dfs = [&](const std::string& n) {
        if (n == to) {
            out.push_back({current});
            return;
        }
        for (const auto& c : g.children(n)) {  // std::set iterates sorted: lexicographic output
            current.push_back(c);
            dfs(c);
            current.pop_back();
        }
    };
    dfs(from);
    std::sort(out.begin(), out.end());
    return out;
}

CausalGraph CausalGraph::validate(std::vector<NodeSpec> nodes,
                                  std::vector<std::pair<std::string, std::string>> edges) {
    std::vector<Violation> violations;

    CausalGraph g;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const auto& n = nodes[i];
        if (g.index_.count(n.name))
            violations.push_back({"DuplicateName", "node '" + n.name + "' declared twice"});
        else {
            g.index_[n.name] = i;
            g.graph_.add_node(n.name);
        }
        if (n.role != Role::Latent && n.domain.size() < 2)
            violations.push_back({"BadDomain", "observed node '" + n.name +
                                                   "' needs a domain of at least 2 values"});
        if (n.role == Role::Latent && n.domain.empty())
            violations.push_back({"BadDomain", "latent node '" + n.name + "' needs a domain"});
    }
    g.nodes_ = std::move(nodes);

    for (const auto& [from, to] : edges) {
        try {
            g.graph_.add_edge(from, to);
        } catch (const Error& e) {
            violations.push_back({e.code(), e.what()});
        }
    }

    if (auto cycle = g.graph_.find_cycle(); !cycle.empty()) {
        std::string msg = "directed cycle:";
        for (const auto& n : cycle) msg += " " + n;
        violations.push_back({"Cycle", msg});
    }

    std::vector<std::string> exposures, outcomes;
    std::map<int, std::string> mediators;
    for (const auto& n : g.nodes_) {
        switch (n.role) {
            case Role::Exposure: exposures.push_back(n.name); break;
            case Role::Outcome: outcomes.push_back(n.name); break;
            case Role::Mediator:
                if (n.mediator_index < 1)
                    violations.push_back({"BadMediatorOrder",
                                          "mediator '" + n.name + "' needs order >= 1"});
                else if (mediators.count(n.mediator_index))
                    violations.push_back({"BadMediatorOrder",
                                          "duplicate mediator order " +
                                              std::to_string(n.mediator_index)});
                else
                    mediators[n.mediator_index] = n.name;
                break;
            case Role::Plain:
                violations.push_back({"BadRole", "role 'var' is reserved for expanded graphs ('" +
                                                     n.name + "')"});
                break;
            default: break;
        }
    }
    if (exposures.size() != 1)
        violations.push_back({"MissingExposure", "need exactly one exposure node, have " +
                                                     std::to_string(exposures.size())});
    if (outcomes.size() != 1)
        violations.push_back({"MissingOutcome", "need exactly one outcome node, have " +
                                                    std::to_string(outcomes.size())});
    for (int k = 1; k <= static_cast<int>(mediators.size()); ++k)
        if (!mediators.count(k))
            violations.push_back({"BadMediatorOrder",
                                  "mediator orders must be contiguous 1..p, missing " +
                                      std::to_string(k)});

    for (const auto& n : g.nodes_)
        if (n.role == Role::Latent && !g.graph_.parents(n.name).empty())
            violations.push_back({"LatentWithParents",
                                  "latent '" + n.name + "' must have no parents"});

    if (!violations.empty()) throw ValidationError(std::move(violations));

    g.exposure_ = exposures.front();
    g.outcome_ = outcomes.front();
    g.mediator_count_ = static_cast<int>(mediators.size());

    // Structural checks that need the DAG machinery.
    for (const auto& [idx, name] : mediators) {
        bool on_path = false;
        for (const auto& p : pse::causal_paths(g.graph_, g.exposure_, g.outcome_))
            if (std::find(p.nodes.begin(), p.nodes.end(), name) != p.nodes.end()) {
                on_path = true;
                break;
            }
        if (!on_path)
            violations.push_back({"MediatorOffPath", "mediator '" + name +
                                                         "' lies on no exposure->outcome path"});
    }
    // Index order must agree with topology: M_p before ... before M_1 before Y.
    {
        auto order = g.graph_.topological_order();
        std::map<std::string, std::size_t> pos;
        for (std::size_t i = 0; i < order.size(); ++i) pos[order[i]] = i;
        for (int k = 1; k < static_cast<int>(mediators.size()); ++k) {
            const auto& lower = mediators.at(k);       // closer to Y
            const auto& higher = mediators.at(k + 1);  // closer to Z
            if (g.graph_.has_edge(lower, higher) ||
                (g.graph_.descendants(lower).count(higher) != 0))
                violations.push_back({"BadMediatorOrder",
                                      "mediator '" + higher + "' (order " + std::to_string(k + 1) +
                                          ") must not descend from '" + lower + "'"});
            else if (pos[higher] > pos[lower] && g.graph_.ancestors(lower).count(higher) == 0) {
                // Unrelated mediators are fine in either textual order; only a
                // topological conflict is an error, which the branch above catches.
            }
        }
        if (pos.count(g.outcome_))
            for (const auto& [idx, name] : mediators)
                if (g.graph_.descendants(g.outcome_).count(name))
                    violations.push_back({"BadMediatorOrder",
                                          "mediator '" + name + "' descends from the outcome"});
    }

    if (!violations.empty()) throw ValidationError(std::move(violations));
    return g;
}

const NodeSpec& CausalGraph::node(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw Error("UnknownNode", "node '" + name + "' not in graph");
    return nodes_[it->second];
}

const std::string& CausalGraph::mediator(int index) const {
    for (const auto& n : nodes_)
        if (n.role == Role::Mediator && n.mediator_index == index) return n.name;
    throw Error("UnknownNode", "no mediator with order " + std::to_string(index));
}

std::vector<std::string> CausalGraph::mediators() const {
    std::vector<std::string> out(static_cast<std::size_t>(mediator_count_));
    for (const auto& n : nodes_)
        if (n.role == Role::Mediator) out[static_cast<std::size_t>(n.mediator_index - 1)] = n.name;
    return out;
}

std::vector<std::string> CausalGraph::nodes_with_role(Role r) const {
    std::vector<std::string> out;
    for (const auto& n : nodes_)
        if (n.role == r) out.push_back(n.name);
    std::sort(out.begin(), out.end());
    return out;
}

bool CausalGraph::is_observed(const std::string& name) const {
    return node(name).role != Role::Latent;
}

bool CausalGraph::d_separated(const std::set<std::string>& a, const std::set<std::string>& b,
                              const std::set<std::string>& c) const {
    std::set<std::string> seen;
    for (const auto* s : {&a, &b, &c})
        for (const auto& n : *s)
            if (!seen.insert(n).second)
                throw Error("OverlappingSets", "node '" + n + "' appears in two query sets");
    return pse::d_separated(graph_, a, b, c);
}

std::vector<DirectedPath> CausalGraph::causal_paths(const std::string& from,
                                                    const std::string& to) const {
    return pse::causal_paths(graph_, from, to);
}

std::vector<DirectedPath> CausalGraph::exposure_outcome_paths() const {
    return causal_paths(exposure_, outcome_);
}

}  // namespace pse
