#include "pse/sem.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>

namespace pse {

// ---------------------------------------------------------------------------
// JointDistribution

JointDistribution::JointDistribution(std::vector<std::string> vars,
                                     std::vector<std::vector<int>> domains)
    : vars_(std::move(vars)), domains_(std::move(domains)) {
    if (vars_.size() != domains_.size())
        throw Error("VariableMismatch", "variable/domain count mismatch");
    std::size_t cells = 1;
    for (std::size_t i = 0; i < vars_.size(); ++i) {
        index_[vars_[i]] = i;
        if (domains_[i].empty()) throw Error("BadDomain", "empty domain for " + vars_[i]);
        cells *= domains_[i].size();
    }
    if (index_.size() != vars_.size()) throw Error("DuplicateName", "duplicate variable");
    p_.assign(cells, 0.0);
}

const std::vector<int>& JointDistribution::domain(const std::string& var) const {
    auto it = index_.find(var);
    if (it == index_.end()) throw Error("VariableMismatch", "no variable '" + var + "'");
    return domains_[it->second];
}

double& JointDistribution::cell(const std::vector<int>& values) {
    if (values.size() != vars_.size()) throw Error("VariableMismatch", "bad assignment size");
    std::size_t idx = 0;
    for (std::size_t i = 0; i < vars_.size(); ++i) {
        auto it = std::find(domains_[i].begin(), domains_[i].end(), values[i]);
        if (it == domains_[i].end())
            throw Error("ValueOutOfDomain", "value out of domain for " + vars_[i]);
        idx = idx * domains_[i].size() +
              static_cast<std::size_t>(it - domains_[i].begin());
    }
    return p_[idx];
}

double JointDistribution::probability(const std::map<std::string, int>& assignment) const {
    for (const auto& [var, _] : assignment)
        if (!index_.count(var)) throw Error("VariableMismatch", "no variable '" + var + "'");
    double total = 0.0;
    for_each([&](const std::vector<int>& values, double p) {
        for (const auto& [var, v] : assignment)
            if (values[index_.at(var)] != v) return;
        total += p;
    });
    return total;
}

std::optional<double> JointDistribution::conditional(const std::string& target, int value,
                                                     const std::map<std::string, int>& given) const {
    double denom = probability(given);
    if (denom <= 0.0) return std::nullopt;
    auto joint = given;
    joint[target] = value;
    return probability(joint) / denom;
}

double JointDistribution::total() const {
    double t = 0.0;
    for (double x : p_) t += x;
    return t;
}

void JointDistribution::normalize() {
    double t = total();
    if (t <= 0.0) throw Error("BadDistribution", "cannot normalize a zero distribution");
    for (double& x : p_) x /= t;
}

// ---------------------------------------------------------------------------
// CfTerm

bool CfTerm::Arg::operator==(const Arg& o) const {
    if (node != o.node || value != o.value) return false;
    if (!term != !o.term) return false;
    return !term || *term == *o.term;
}

bool CfTerm::operator==(const CfTerm& o) const {
    return node == o.node && world == o.world && args == o.args;
}

CfTerm::Ptr CfTerm::make(std::string node, std::vector<Arg> args, std::string world) {
    auto t = std::make_shared<CfTerm>();
    t->node = std::move(node);
    t->args = std::move(args);
    t->world = std::move(world);
    std::sort(t->args.begin(), t->args.end(),
              [](const Arg& a, const Arg& b) { return a.node < b.node; });
    return t;
}

std::string CfTerm::to_string() const {
    std::string out = node;
    if (args.empty() && world.empty()) return out;
    out += "(";
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (i) out += ",";
        out += args[i].node + ":";
        out += args[i].value ? std::to_string(*args[i].value) : args[i].term->to_string();
    }
    if (!world.empty()) out += "; @" + world;
    return out + ")";
}

// ---------------------------------------------------------------------------
// DiscreteSem

namespace {

void check_distribution(const std::string& where, const std::vector<double>& probs) {
    double total = 0.0;
    for (double p : probs) {
        if (p < 0.0 || !std::isfinite(p))
            throw Error("BadDistribution", where + ": negative or non-finite probability");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw Error("BadDistribution", where + ": probabilities sum to " + std::to_string(total));
}

}  // namespace

DiscreteSem DiscreteSem::build(Digraph structure, std::vector<SemNode> nodes) {
    DiscreteSem sem;
    sem.graph_ = std::move(structure);
    sem.nodes_ = std::move(nodes);
    for (std::size_t i = 0; i < sem.nodes_.size(); ++i) {
        auto& n = sem.nodes_[i];
        if (!sem.graph_.has_node(n.name))
            throw Error("UnknownNode", "sem node '" + n.name + "' not in structure");
        if (!sem.index_.emplace(n.name, i).second)
            throw Error("DuplicateName", "sem node '" + n.name + "' declared twice");
        if (n.domain.empty()) throw Error("BadDomain", "node '" + n.name + "' has empty domain");
        if (n.latent) {
            if (n.latent_probs.size() != n.domain.size())
                throw Error("BadDistribution", "latent '" + n.name + "' distribution arity");
            check_distribution("latent " + n.name, n.latent_probs);
            continue;
        }
        std::vector<std::string> structural(sem.graph_.parents(n.name).begin(),
                                            sem.graph_.parents(n.name).end());
        auto sorted = n.parents;
        std::sort(sorted.begin(), sorted.end());
        if (sorted != n.parents)
            throw Error("BadMechanism", "parents of '" + n.name + "' must be listed sorted");
        if (sorted != structural)
            throw Error("BadMechanism", "mechanism parents of '" + n.name +
                                            "' do not match the graph");
        if (n.noise.values.empty() || n.noise.values.size() != n.noise.probs.size())
            throw Error("BadDistribution", "noise of '" + n.name + "' malformed");
        check_distribution("noise " + n.name, n.noise.probs);
    }
    // Mechanism totality: table size and value ranges, resolved once every
    // node is indexed.
    for (auto& n : sem.nodes_) {
        if (n.latent) continue;
        std::size_t rows = 1;
        for (const auto& p : n.parents) rows *= sem.node(p).domain.size();
        rows *= n.noise.values.size();
        if (n.mechanism.size() != rows)
            throw Error("BadMechanism", "mechanism table of '" + n.name + "' has " +
                                            std::to_string(n.mechanism.size()) + " rows, needs " +
                                            std::to_string(rows));
        for (int v : n.mechanism)
            if (std::find(n.domain.begin(), n.domain.end(), v) == n.domain.end())
                throw Error("BadMechanism", "mechanism of '" + n.name +
                                                "' emits a value outside its domain");
        if (!n.noise_group.empty() && n.noise_key_parents.empty())
            n.noise_key_parents = n.parents;
    }
    sem.graph_.topological_order();  // throws on cycles
    return sem;
}

DiscreteSem DiscreteSem::build(const CausalGraph& g, std::vector<SemNode> nodes) {
    return build(g.digraph(), std::move(nodes));
}

const SemNode& DiscreteSem::node(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw Error("UnknownNode", "sem has no node '" + name + "'");
    return nodes_[it->second];
}

std::vector<std::string> DiscreteSem::observed_nodes() const {
    std::vector<std::string> out;
    for (const auto& n : graph_.topological_order())
        if (!node(n).latent) out.push_back(n);
    return out;
}

std::vector<std::string> DiscreteSem::latent_nodes() const {
    std::vector<std::string> out;
    for (const auto& n : graph_.topological_order())
        if (node(n).latent) out.push_back(n);
    return out;
}

int DiscreteSem::mechanism_value(const SemNode& n, const std::vector<int>& parent_values,
                                 int noise_value) const {
    std::size_t idx = 0;
    if (parent_values.size() != n.parents.size())
        throw Error("BadMechanism", "parent arity mismatch for '" + n.name + "'");
    for (std::size_t i = 0; i < n.parents.size(); ++i) {
        const auto& dom = node(n.parents[i]).domain;
        auto it = std::find(dom.begin(), dom.end(), parent_values[i]);
        if (it == dom.end())
            throw Error("ValueOutOfDomain", "parent value out of domain for '" + n.name + "'");
        idx = idx * dom.size() + static_cast<std::size_t>(it - dom.begin());
    }
    auto nit = std::find(n.noise.values.begin(), n.noise.values.end(), noise_value);
    if (nit == n.noise.values.end())
        throw Error("ValueOutOfDomain", "noise value out of domain for '" + n.name + "'");
    idx = idx * n.noise.values.size() + static_cast<std::size_t>(nit - n.noise.values.begin());
    return n.mechanism[idx];
}

// ---------------------------------------------------------------------------
// Exogenous cell enumeration shared by both evaluation engines.

namespace {

struct ExoCell {
    std::string id;
    std::vector<int> values;
    std::vector<double> probs;
};

class CellEnumerator {
public:
    void add(const std::string& id, std::vector<int> values, std::vector<double> probs) {
        if (index_.count(id)) return;
        index_[id] = cells_.size();
        cells_.push_back({id, std::move(values), std::move(probs)});
    }
    bool has(const std::string& id) const { return index_.count(id) != 0; }
    int value(const std::string& id) const { return cells_[index_.at(id)].values[current_[index_.at(id)]]; }

    std::uint64_t space() const {
        std::uint64_t n = 1;
        for (const auto& c : cells_) {
            n *= c.values.size();
            if (n > DiscreteSem::kEnumerationCap) return n;
        }
        return n;
    }

    /// Folds f over every exogenous assignment with its probability, in a
    /// fixed mixed-radix order.
    template <typename F>
    void enumerate(F&& f) {
        if (space() > DiscreteSem::kEnumerationCap)
            throw Error("EnumerationCap",
                        "exogenous space exceeds the enumeration cap; use sampling");
        current_.assign(cells_.size(), 0);
        while (true) {
            double p = 1.0;
            for (std::size_t i = 0; i < cells_.size(); ++i) p *= cells_[i].probs[current_[i]];
            if (p > 0.0) f(p);
            std::size_t k = cells_.size();
            while (k > 0) {
                --k;
                if (++current_[k] < cells_[k].values.size()) break;
                current_[k] = 0;
                if (k == 0) return;
            }
            if (cells_.empty()) return;
        }
    }

private:
    std::vector<ExoCell> cells_;
    std::map<std::string, std::size_t> index_;
    std::vector<std::size_t> current_;
};

std::string tuple_key(const std::vector<int>& values) {
    std::string out;
    for (int v : values) out += std::to_string(v) + ",";
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Single-world engine: interventional law of a sem under a do-assignment.

JointDistribution law_under_do(const DiscreteSem& sem, const std::map<std::string, int>& do_map) {
    auto topo = sem.structure().topological_order();
    std::vector<std::string> observed = sem.observed_nodes();
    std::vector<std::vector<int>> domains;
    for (const auto& n : observed) domains.push_back(sem.node(n).domain);
    JointDistribution law(observed, domains);

    CellEnumerator cells;
    for (const auto& name : topo) {
        const SemNode& n = sem.node(name);
        if (do_map.count(name)) continue;
        if (n.latent) {
            cells.add("L|" + name, n.domain, n.latent_probs);
        } else if (n.noise_group.empty()) {
            cells.add("N|" + name, n.noise.values, n.noise.probs);
        } else {
            // Shared noise field: one independent coordinate per input tuple,
            // so components with equal inputs draw equal noise.
            std::vector<std::vector<int>> key_domains;
            for (const auto& p : n.noise_key_parents) key_domains.push_back(sem.node(p).domain);
            std::vector<std::size_t> idx(key_domains.size(), 0);
            while (true) {
                std::vector<int> tuple;
                for (std::size_t i = 0; i < key_domains.size(); ++i)
                    tuple.push_back(key_domains[i][idx[i]]);
                cells.add("F|" + n.noise_group + "|" + tuple_key(tuple), n.noise.values,
                          n.noise.probs);
                std::size_t k = key_domains.size();
                bool done = key_domains.empty();
                while (k > 0) {
                    --k;
                    if (++idx[k] < key_domains[k].size()) break;
                    idx[k] = 0;
                    if (k == 0) done = true;
                }
                if (done) break;
            }
        }
    }

    std::map<std::string, int> values;
    cells.enumerate([&](double p) {
        values.clear();
        for (const auto& name : topo) {
            const SemNode& n = sem.node(name);
            auto it = do_map.find(name);
            if (it != do_map.end()) {
                values[name] = it->second;
                continue;
            }
            if (n.latent) {
                values[name] = cells.value("L|" + name);
                continue;
            }
            std::vector<int> pv;
            pv.reserve(n.parents.size());
            for (const auto& par : n.parents) pv.push_back(values.at(par));
            int noise;
            if (n.noise_group.empty()) {
                noise = cells.value("N|" + name);
            } else {
                std::vector<int> key;
                for (const auto& par : n.noise_key_parents) key.push_back(values.at(par));
                noise = cells.value("F|" + n.noise_group + "|" + tuple_key(key));
            }
            values[name] = sem.mechanism_value(n, pv, noise);
        }
        std::vector<int> row;
        row.reserve(observed.size());
        for (const auto& name : observed) row.push_back(values.at(name));
        law.cell(row) += p;
    });
    return law;
}

JointDistribution observational_distribution(const DiscreteSem& sem) {
    return law_under_do(sem, {});
}

// ---------------------------------------------------------------------------
// Counterfactual engine: evaluates nested terms across worlds.

namespace {

/// A world is the intervention context of one term: the assignment of
/// intervened nodes to constants or sub-terms, plus an optional tag.
struct World {
    const CfTerm* term = nullptr;
    std::map<std::string, const CfTerm::Arg*> assigned;
};

class CfEvaluator {
public:
    CfEvaluator(const DiscreteSem& sem, const std::vector<CfTerm::Ptr>& queries) : sem_(sem) {
        for (const auto& q : queries) roots_.push_back(register_term(q));
        for (const auto& [key, w] : worlds_) collect_cells(w, w.term->node);
    }

    /// Joint law over the query terms, variables named by canonical strings.
    JointDistribution joint() {
        std::vector<std::string> names;
        std::vector<std::vector<int>> domains;
        for (const auto* t : roots_) {
            names.push_back(t->to_string());
            domains.push_back(sem_.node(t->node).domain);
        }
        // Duplicate roots collapse onto one column.
        std::vector<std::string> unique_names;
        std::vector<std::vector<int>> unique_domains;
        for (std::size_t i = 0; i < names.size(); ++i)
            if (std::find(unique_names.begin(), unique_names.end(), names[i]) ==
                unique_names.end()) {
                unique_names.push_back(names[i]);
                unique_domains.push_back(domains[i]);
            }
        JointDistribution law(unique_names, unique_domains);
        cells_.enumerate([&](double p) {
            memo_.clear();
            std::vector<int> row;
            row.reserve(unique_names.size());
            std::map<std::string, int> seen;
            for (const auto* t : roots_) {
                std::string name = t->to_string();
                if (!seen.count(name)) seen[name] = eval_term(t);
            }
            for (const auto& name : unique_names) row.push_back(seen.at(name));
            law.cell(row) += p;
        });
        return law;
    }

private:
    const DiscreteSem& sem_;
    std::vector<const CfTerm*> roots_;
    std::map<std::string, World> worlds_;  // canonical term string -> world
    CellEnumerator cells_;
    std::map<std::string, int> memo_;  // per-assignment value cache

    const CfTerm* register_term(const CfTerm::Ptr& t) {
        std::string key = t->to_string();
        auto it = worlds_.find(key);
        if (it != worlds_.end()) return it->second.term;
        if (!sem_.has_node(t->node)) throw Error("IllTypedQuery", "no node '" + t->node + "'");
        if (sem_.node(t->node).latent)
            throw Error("IllTypedQuery", "cannot query latent '" + t->node + "'");
        World w;
        w.term = t.get();
        keep_alive_.push_back(t);
        for (const auto& arg : t->args) {
            if (!sem_.has_node(arg.node))
                throw Error("IllTypedQuery", "no node '" + arg.node + "'");
            if (!arg.value && !arg.term)
                throw Error("IllTypedQuery", "argument '" + arg.node + "' has no value");
            if (arg.value) {
                const auto& dom = sem_.node(arg.node).domain;
                if (std::find(dom.begin(), dom.end(), *arg.value) == dom.end())
                    throw Error("ValueOutOfDomain", "intervention value out of domain for '" +
                                                        arg.node + "'");
            }
            if (!sem_.structure().ancestors(t->node).count(arg.node) && arg.node != t->node)
                throw Error("IllTypedQuery", "'" + arg.node + "' is not an ancestor of '" +
                                                 t->node + "'");
            w.assigned[arg.node] = &arg;
            if (arg.term) register_term(arg.term);
        }
        auto [pos, _] = worlds_.emplace(key, std::move(w));
        // Re-point assigned args at the stored copy's storage.
        pos->second.assigned.clear();
        for (const auto& arg : pos->second.term->args) pos->second.assigned[arg.node] = &arg;
        return pos->second.term;
    }

    /// Unification key of node's evaluation inside world w. Nodes with no
    /// intervened ancestor evaluate in the actual world everywhere; tagged
    /// worlds are opaque; untagged worlds unify by the ancestral restriction
    /// of their assignment.
    std::string unify_key(const std::string& node, const World& w) {
        auto anc = sem_.structure().ancestors(node);
        bool affected = false;
        for (const auto& [n, _] : w.assigned)
            if (anc.count(n)) {
                affected = true;
                break;
            }
        if (!affected) return "";
        if (!w.term->world.empty()) return "s:" + w.term->world;
        std::string key = "r:";
        for (const auto& [n, arg] : w.assigned) {
            if (!anc.count(n)) continue;
            key += n + ":";
            key += arg->value ? std::to_string(*arg->value) : arg->term->to_string();
            key += ";";
        }
        return key;
    }

    void collect_cells(const World& w, const std::string& node) {
        auto it = w.assigned.find(node);
        if (it != w.assigned.end()) {
            if (it->second->term) collect_cells(worlds_.at(it->second->term->to_string()),
                                                it->second->term->node);
            return;
        }
        const SemNode& n = sem_.node(node);
        if (n.latent) {
            cells_.add("L|" + node, n.domain, n.latent_probs);
            return;
        }
        std::string key = n.noise_mode == NoiseMode::WorldShared ? "" : unify_key(node, w);
        cells_.add("N|" + node + "|" + key, n.noise.values, n.noise.probs);
        for (const auto& par : sem_.structure().parents(node)) collect_cells(w, par);
    }

    int eval_term(const CfTerm* t) { return eval_node(t->node, worlds_.at(t->to_string())); }

    int eval_node(const std::string& node, const World& w) {
        auto it = w.assigned.find(node);
        if (it != w.assigned.end())
            return it->second->value ? *it->second->value : eval_term(it->second->term.get());

        const SemNode& n = sem_.node(node);
        if (n.latent) return cells_.value("L|" + node);

        std::string key = unify_key(node, w);
        std::string memo_key = node + "\x1f" + key;
        // Assigned ancestors give this node a world-specific value even when
        // the noise key unifies, so tagged worlds memoize per world.
        if (auto m = memo_.find(memo_key); m != memo_.end()) return m->second;

        std::vector<int> pv;
        pv.reserve(n.parents.size());
        for (const auto& par : n.parents) pv.push_back(eval_node(par, w));
        std::string noise_key = n.noise_mode == NoiseMode::WorldShared ? "" : key;
        int noise = cells_.value("N|" + node + "|" + noise_key);
        int value = sem_.mechanism_value(n, pv, noise);
        memo_[memo_key] = value;
        return value;
    }

    std::vector<CfTerm::Ptr> keep_alive_;
};

}  // namespace

JointDistribution counterfactual_joint(const DiscreteSem& sem,
                                       const std::vector<CfTerm::Ptr>& terms) {
    CfEvaluator eval(sem, terms);
    return eval.joint();
}

double oracle_nested(const DiscreteSem& sem, const CfTerm::Ptr& query, int value) {
    JointDistribution law = counterfactual_joint(sem, {query});
    return law.probability({{query->to_string(), value}});
}

// ---------------------------------------------------------------------------
// Interventional oracle

double oracle_interventional(const DiscreteSem& sem, const CausalGraph& g,
                             const InterventionRegime& regime, int outcome_value) {
    validate_regime(g, regime);
    EstimandPlan plan = estimand_plan(g, regime.approach);
    const std::string& exposure = g.exposure();

    // Single-world laws per label, each conditioning source for the draws.
    std::map<std::string, JointDistribution> world_laws;
    auto world_law = [&](const std::string& label) -> const JointDistribution& {
        auto it = world_laws.find(label);
        if (it == world_laws.end())
            it = world_laws.emplace(label, law_under_do(sem, {{exposure, regime.at(label)}})).first;
        return it->second;
    };

    auto baselines = g.nodes_with_role(Role::BaselineConfounder);
    JointDistribution obs = observational_distribution(sem);

    // Enumerate baseline-confounder strata, then mediator draws.
    std::vector<std::vector<int>> c_domains;
    for (const auto& c : baselines) c_domains.push_back(g.node(c).domain);

    double total = 0.0;
    std::vector<std::size_t> c_idx(baselines.size(), 0);
    while (true) {
        std::map<std::string, int> c_assign;
        for (std::size_t i = 0; i < baselines.size(); ++i)
            c_assign[baselines[i]] = c_domains[i][c_idx[i]];
        double c_weight = baselines.empty() ? 1.0 : obs.probability(c_assign);

        if (c_weight > 0.0) {
            // Enumerate instance value vectors.
            std::vector<std::vector<int>> w_domains;
            for (const auto& inst : plan.instances)
                w_domains.push_back(g.node(g.mediator(inst.mediator_index)).domain);
            std::vector<std::size_t> w_idx(plan.instances.size(), 0);
            while (true) {
                std::map<std::string, int> w;  // instance symbol -> value
                for (std::size_t i = 0; i < plan.instances.size(); ++i)
                    w[plan.instances[i].symbol] = w_domains[i][w_idx[i]];

                double weight = 1.0;
                // Sequential draws from the single-world conditional laws.
                for (const auto& inst : plan.instances) {
                    const auto& law = world_law(inst.label);
                    std::map<std::string, int> given = c_assign;
                    for (const auto* up : plan.upstream(g, inst.mediator_index, inst.suffix))
                        given[g.mediator(up->mediator_index)] = w.at(up->symbol);
                    auto k = law.conditional(g.mediator(inst.mediator_index),
                                             w.at(inst.symbol), given);
                    weight *= k.value_or(0.0);
                    if (weight == 0.0) break;
                }
                if (weight > 0.0) {
                    // Outcome world: exposure at the outcome label, mediator
                    // parents externally set to their drawn values.
                    std::map<std::string, int> do_map{
                        {exposure, regime.at(plan.outcome_label(g))}};
                    for (const auto* up : plan.upstream(g, 0, ""))
                        do_map[g.mediator(up->mediator_index)] = w.at(up->symbol);
                    JointDistribution ylaw = law_under_do(sem, do_map);
                    std::map<std::string, int> event = c_assign;
                    event[g.outcome()] = outcome_value;
                    double y_prob = ylaw.probability(event);
                    double c_prob = baselines.empty() ? 1.0 : ylaw.probability(c_assign);
                    if (c_prob > 0.0) total += c_weight * weight * (y_prob / c_prob);
                }

                std::size_t k = plan.instances.size();
                bool done = plan.instances.empty();
                while (k > 0) {
                    --k;
                    if (++w_idx[k] < w_domains[k].size()) break;
                    w_idx[k] = 0;
                    if (k == 0) done = true;
                }
                if (done) break;
            }
        }

        std::size_t k = baselines.size();
        bool done = baselines.empty();
        while (k > 0) {
            --k;
            if (++c_idx[k] < c_domains[k].size()) break;
            c_idx[k] = 0;
            if (k == 0) done = true;
        }
        if (done) break;
    }
    return total;
}

// ---------------------------------------------------------------------------
// Separable oracle

double oracle_separable(const DiscreteSem& component_sem, const ExpandedGraph& eg,
                        const std::map<std::string, int>& assignment,
                        const std::string& event_node, int event_value) {
    for (const auto& z : eg.exposure_components())
        if (!assignment.count(z))
            throw Error("MissingLabel", "assignment misses exposure component '" + z + "'");
    for (const auto& [node, value] : assignment) {
        if (!component_sem.has_node(node))
            throw Error("UnknownNode", "no component '" + node + "'");
        const auto& dom = component_sem.node(node).domain;
        if (std::find(dom.begin(), dom.end(), value) == dom.end())
            throw Error("ValueOutOfDomain", "value out of domain for '" + node + "'");
    }
    JointDistribution law = law_under_do(component_sem, assignment);
    return law.probability({{event_node, event_value}});
}

// ---------------------------------------------------------------------------
// Numeric independence

IndependenceVerdict numeric_independence(const DiscreteSem& sem, const IndependenceQuery& q) {
    std::vector<CfTerm::Ptr> all;
    for (const auto* side : {&q.left, &q.right, &q.given})
        for (const auto& t : *side) all.push_back(t);
    JointDistribution joint = counterfactual_joint(sem, all);

    auto names = [&](const std::vector<CfTerm::Ptr>& ts) {
        std::vector<std::string> out;
        for (const auto& t : ts) out.push_back(t->to_string());
        return out;
    };
    auto left = names(q.left), right = names(q.right), given = names(q.given);

    // Enumerate assignments of the given block, then check the product rule
    // cell by cell.
    double max_dev = 0.0;
    std::string witness;
    std::function<void(std::size_t, std::map<std::string, int>&)> visit_given;
    std::function<void(const std::vector<std::string>&, std::size_t, std::map<std::string, int>&,
                       const std::function<void(std::map<std::string, int>&)>&)>
        visit;
    visit = [&](const std::vector<std::string>& vars, std::size_t i,
                std::map<std::string, int>& acc,
                const std::function<void(std::map<std::string, int>&)>& f) {
        if (i == vars.size()) {
            f(acc);
            return;
        }
        for (int v : joint.domain(vars[i])) {
            acc[vars[i]] = v;
            visit(vars, i + 1, acc, f);
        }
        acc.erase(vars[i]);
    };

    std::map<std::string, int> g_acc;
    visit(given, 0, g_acc, [&](std::map<std::string, int>& g_assign) {
        double pg = given.empty() ? 1.0 : joint.probability(g_assign);
        if (pg <= 0.0) return;
        std::map<std::string, int> acc = g_assign;
        visit(left, 0, acc, [&](std::map<std::string, int>& la) {
            std::map<std::string, int> l_only(la);
            double pl = joint.probability(l_only) / pg;
            std::map<std::string, int> acc2 = la;
            visit(right, 0, acc2, [&](std::map<std::string, int>& lra) {
                std::map<std::string, int> r_only = g_assign;
                for (const auto& r : right) r_only[r] = lra.at(r);
                double pr = joint.probability(r_only) / pg;
                double plr = joint.probability(lra) / pg;
                double dev = std::abs(plr - pl * pr);
                if (dev > max_dev) {
                    max_dev = dev;
                    if (dev > 1e-10) {
                        std::ostringstream os;
                        for (const auto& [k, v] : lra) os << k << "=" << v << " ";
                        witness = os.str();
                    }
                }
            });
        });
    });
    if (max_dev > 1e-10) return {false, max_dev, witness};
    return IndependenceVerdict::pass(max_dev);
}

// ---------------------------------------------------------------------------
// Sampling

Dataset sample(const DiscreteSem& sem, std::size_t n, std::uint64_t seed) {
    if (n < 1) throw Error("BadArgument", "need n >= 1");
    std::mt19937_64 rng(seed);
    auto uniform = [&]() { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
    auto draw = [&](const std::vector<int>& values, const std::vector<double>& probs) {
        double u = uniform();
        double acc = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i) {
            acc += probs[i];
            if (u < acc) return values[i];
        }
        return values.back();
    };

    auto topo = sem.structure().topological_order();
    Dataset d;
    d.columns = sem.observed_nodes();
    d.rows.reserve(n);
    std::map<std::string, int> values;
    for (std::size_t i = 0; i < n; ++i) {
        values.clear();
        for (const auto& name : topo) {
            const SemNode& nd = sem.node(name);
            if (nd.latent) {
                values[name] = draw(nd.domain, nd.latent_probs);
                continue;
            }
            std::vector<int> pv;
            for (const auto& par : nd.parents) pv.push_back(values.at(par));
            values[name] = sem.mechanism_value(nd, pv, draw(nd.noise.values, nd.noise.probs));
        }
        std::vector<int> row;
        for (const auto& c : d.columns) row.push_back(values.at(c));
        d.rows.push_back(std::move(row));
    }
    return d;
}

std::string to_csv(const Dataset& d) {
    std::ostringstream os;
    for (std::size_t i = 0; i < d.columns.size(); ++i) os << (i ? "," : "") << d.columns[i];
    os << "\n";
    for (const auto& row : d.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
        os << "\n";
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// Component sems

DiscreteSem expand_sem(const DiscreteSem& sem, const CausalGraph& g, const ExpandedGraph& eg) {
    Digraph structure = eg.digraph();
    // The detached exposure keeps its generative role for the actual world.
    for (const auto& p : g.parents(g.exposure())) structure.add_edge(p, g.exposure());

    std::vector<SemNode> nodes;
    for (const auto& name : structure.topological_order()) {
        std::string orig = eg.original_of(name);
        SemNode base = sem.node(orig);
        SemNode n = base;
        n.name = name;
        if (base.latent) {
            nodes.push_back(std::move(n));
            continue;
        }

        std::vector<std::string> actual(structure.parents(name).begin(),
                                        structure.parents(name).end());
        // Map each structural parent onto an axis of the original mechanism.
        std::map<std::string, std::string> axis_of;  // actual parent -> original axis
        std::vector<std::string> extra;              // parents the mechanism ignores
        for (const auto& par : actual) {
            std::string par_orig = eg.digraph().has_node(par) ? eg.original_of(par) : par;
            if (std::find(base.parents.begin(), base.parents.end(), par_orig) !=
                base.parents.end())
                axis_of[par] = par_orig;
            else
                extra.push_back(par);  // e.g. sequential ordering edges
        }
        for (const auto& axis : base.parents) {
            int uses = 0;
            for (const auto& [par, a] : axis_of)
                if (a == axis) ++uses;
            if (uses > 1)
                throw Error("BadMechanism", "two parents of '" + name +
                                                "' map onto original axis '" + axis + "'");
        }

        n.parents = actual;
        // Rebuild the table over the actual (sorted) parent axes; missing
        // original axes are impossible here because components inherit every
        // original in-edge, and extra parents are value-ignored.
        std::vector<std::vector<int>> pdoms;
        for (const auto& par : actual)
            pdoms.push_back(eg.digraph().has_node(par) ? eg.domain(par) : sem.node(par).domain);
        std::size_t rows = n.noise.values.size();
        for (const auto& d : pdoms) rows *= d.size();
        n.mechanism.assign(rows, base.domain.front());

        std::vector<std::size_t> idx(actual.size(), 0);
        while (true) {
            for (std::size_t u = 0; u < n.noise.values.size(); ++u) {
                // Original-axis parent values for this row.
                std::vector<int> orig_pv(base.parents.size(), 0);
                for (std::size_t i = 0; i < actual.size(); ++i) {
                    auto it = axis_of.find(actual[i]);
                    if (it == axis_of.end()) continue;
                    std::size_t axis = static_cast<std::size_t>(
                        std::find(base.parents.begin(), base.parents.end(), it->second) -
                        base.parents.begin());
                    orig_pv[axis] = pdoms[i][idx[i]];
                }
                // Absent axes default to the first domain value; they only
                // occur when the original had no such cause, which build()
                // rules out for expansion-produced graphs.
                int value = sem.mechanism_value(base, orig_pv, n.noise.values[u]);
                std::size_t row = 0;
                for (std::size_t i = 0; i < actual.size(); ++i)
                    row = row * pdoms[i].size() + idx[i];
                row = row * n.noise.values.size() + u;
                n.mechanism[row] = value;
            }
            std::size_t k = actual.size();
            bool done = actual.empty();
            while (k > 0) {
                --k;
                if (++idx[k] < pdoms[k].size()) break;
                idx[k] = 0;
                if (k == 0) done = true;
            }
            if (done) break;
        }

        // Unordered component groups share one value-keyed noise field.
        if (eg.is_component(name)) {
            const auto* group = eg.group_of(orig);
            if (group && group->ordering == ConfounderOrdering::Unordered &&
                group->members.size() > 1 && !group->exposure_group) {
                n.noise_group = orig;
                n.noise_key_parents.clear();
                for (const auto& axis : base.parents) {
                    for (const auto& [par, a] : axis_of)
                        if (a == axis) n.noise_key_parents.push_back(par);
                }
            }
        }
        nodes.push_back(std::move(n));
    }
    return DiscreteSem::build(std::move(structure), std::move(nodes));
}

JointDistribution collapsed_law(const DiscreteSem& component_sem, const ExpandedGraph& eg) {
    // Name in the actual world: exposure components and unordered groups
    // collapse onto their original; everything else keeps its name.
    auto collapse_name = [&](const std::string& n) -> std::string {
        if (!eg.is_component(n)) return n;
        const auto& orig = eg.original_of(n);
        const auto* group = eg.group_of(orig);
        if (group && (group->exposure_group || group->ordering == ConfounderOrdering::Unordered))
            return orig;
        return n;
    };

    // Kernel of a source node over collapsed, sorted parent axes.
    auto collapsed_kernel = [&](const SemNode& src)
        -> std::pair<std::vector<std::string>, std::vector<int>> {
        std::map<std::string, std::string> mapped;  // collapsed parent -> source parent
        for (const auto& p : src.parents) {
            std::string cp = collapse_name(p);
            if (!mapped.emplace(cp, p).second)
                throw Error("BadMechanism", "parents of '" + src.name +
                                                "' collapse onto the same variable '" + cp + "'");
        }
        std::vector<std::string> new_parents;
        for (const auto& [cp, _] : mapped) new_parents.push_back(cp);
        std::vector<std::vector<int>> dst_doms;
        for (const auto& cp : new_parents)
            dst_doms.push_back(component_sem.node(mapped.at(cp)).domain);
        std::size_t rows = src.noise.values.size();
        for (const auto& d : dst_doms) rows *= d.size();
        std::vector<int> table(rows, 0);
        std::vector<std::size_t> idx(new_parents.size(), 0);
        while (true) {
            for (std::size_t u = 0; u < src.noise.values.size(); ++u) {
                std::vector<int> src_pv(src.parents.size(), 0);
                for (std::size_t i = 0; i < new_parents.size(); ++i) {
                    const std::string& sp = mapped.at(new_parents[i]);
                    std::size_t axis = static_cast<std::size_t>(
                        std::find(src.parents.begin(), src.parents.end(), sp) -
                        src.parents.begin());
                    src_pv[axis] = dst_doms[i][idx[i]];
                }
                std::size_t row = 0;
                for (std::size_t i = 0; i < new_parents.size(); ++i)
                    row = row * dst_doms[i].size() + idx[i];
                row = row * src.noise.values.size() + u;
                table[row] = component_sem.mechanism_value(src, src_pv, src.noise.values[u]);
            }
            std::size_t k = new_parents.size();
            bool done = new_parents.empty();
            while (k > 0) {
                --k;
                if (++idx[k] < dst_doms[k].size()) break;
                idx[k] = 0;
                if (k == 0) done = true;
            }
            if (done) break;
        }
        return {std::move(new_parents), std::move(table)};
    };

    Digraph structure;
    std::vector<SemNode> nodes;
    std::map<std::string, std::size_t> emitted;  // collapsed name -> index in nodes
    std::vector<std::pair<std::string, std::string>> edges;

    for (const auto& name : component_sem.structure().topological_order()) {
        std::string actual = collapse_name(name);
        const SemNode& src = component_sem.node(name);
        if (auto it = emitted.find(actual); it != emitted.end()) {
            // Sibling component: equal inputs must induce the same law
            // (single-world component consistency at the kernel level).
            const SemNode& rep = nodes[it->second];
            if (src.latent != rep.latent ||
                (src.latent && src.latent_probs != rep.latent_probs))
                throw Error("BadMechanism", "components of '" + actual + "' disagree");
            if (!src.latent) {
                auto [parents, table] = collapsed_kernel(src);
                if (parents != rep.parents || table != rep.mechanism ||
                    src.noise.values != rep.noise.values || src.noise.probs != rep.noise.probs)
                    throw Error("BadMechanism",
                                "components of '" + actual + "' have incompatible kernels");
            }
            continue;
        }
        emitted[actual] = nodes.size();
        structure.add_node(actual);
        SemNode n = src;
        n.name = actual;
        n.noise_group.clear();
        n.noise_key_parents.clear();
        if (!src.latent) {
            auto [parents, table] = collapsed_kernel(src);
            n.parents = parents;
            n.mechanism = std::move(table);
            for (const auto& cp : parents) edges.emplace_back(cp, actual);
        }
        nodes.push_back(std::move(n));
    }
    for (const auto& [from, to] : edges) structure.add_edge(from, to);
    DiscreteSem collapsed = DiscreteSem::build(std::move(structure), std::move(nodes));
    return observational_distribution(collapsed);
}

}  // namespace pse
