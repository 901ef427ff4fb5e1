#include "pse/swig.hpp"

#include <algorithm>
#include <sstream>

namespace pse {

std::string LabeledVar::to_string() const {
    if (label.empty()) return node;
    std::string out = node + "(";
    for (std::size_t i = 0; i < label.size(); ++i) {
        if (i) out += ",";
        out += label[i].first + "=" + std::to_string(label[i].second);
    }
    return out + ")";
}

std::string IndependenceStatement::to_string() const {
    auto render = [](const std::vector<LabeledVar>& vs) {
        std::string out;
        for (std::size_t i = 0; i < vs.size(); ++i) {
            if (i) out += ",";
            out += vs[i].to_string();
        }
        return out;
    };
    std::string out = render(left) + " _||_ " + render(right);
    if (!given.empty()) out += " | " + render(given);
    return out;
}

std::string Swig::fixed_half(const std::string& node) { return node + "="; }

Swig split(const CausalGraph& g, const std::map<std::string, int>& interventions) {
    for (const auto& [node, value] : interventions) {
        if (!g.has_node(node)) throw Error("UnknownNode", "cannot intervene on '" + node + "'");
        const auto& spec = g.node(node);
        if (spec.role == Role::Latent)
            throw Error("UnknownNode", "cannot intervene on latent '" + node + "'");
        if (std::find(spec.domain.begin(), spec.domain.end(), value) == spec.domain.end())
            throw Error("ValueOutOfDomain", "value " + std::to_string(value) +
                                                " not in the domain of '" + node + "'");
    }

    Swig s;
    s.base_ = std::make_shared<CausalGraph>(g);
    s.interventions_ = interventions;
    for (const auto& n : g.digraph().nodes()) s.split_.add_node(n);
    for (const auto& [node, _] : interventions) {
        s.split_.add_node(Swig::fixed_half(node));
        s.fixed_.insert(Swig::fixed_half(node));
    }
    for (const auto& [from, to] : g.digraph().edges()) {
        // Random halves keep incoming edges; out-edges of an intervened node
        // leave from its fixed half. Fixed halves never gain incoming edges.
        std::string source = interventions.count(from) ? Swig::fixed_half(from) : from;
        s.split_.add_edge(source, to);
    }
    return s;
}

std::vector<std::pair<std::string, int>> Swig::label_of(const std::string& node) const {
    if (!base_->has_node(node)) throw Error("UnknownNode", "node '" + node + "' not in graph");
    std::vector<std::pair<std::string, int>> out;
    for (const auto& [intervened, value] : interventions_) {
        const std::string fixed = fixed_half(intervened);
        if (split_.has_edge(fixed, node) || split_.descendants(fixed).count(node))
            out.emplace_back(intervened, value);
    }
    return out;
}

LabeledVar Swig::labeled(const std::string& node) const { return {node, label_of(node)}; }

bool Swig::d_separated(const std::set<std::string>& a, const std::set<std::string>& b,
                       const std::set<std::string>& c) const {
    for (const auto* s : {&a, &b, &c})
        for (const auto& n : *s) {
            if (fixed_.count(n))
                throw Error("FixedHalf", "query may only mention random halves, got '" + n + "'");
            if (!base_->has_node(n)) throw Error("UnknownNode", "node '" + n + "' not in graph");
        }
    // Fixed halves are constants: treat them as conditioned, which blocks
    // every fork through them. They have no parents, so this opens nothing.
    std::set<std::string> cond = c;
    cond.insert(fixed_.begin(), fixed_.end());
    return pse::d_separated(split_, a, b, cond);
}

std::vector<IndependenceStatement> counterfactual_independencies(const Swig& s) {
    const CausalGraph& g = s.base();
    std::vector<IndependenceStatement> out;
    if (s.interventions().empty()) return out;

    // Actual-world terms: the exposure and each mediator (their random halves).
    std::vector<std::string> actual_terms{g.exposure()};
    for (const auto& m : g.mediators()) actual_terms.push_back(m);

    for (const auto& spec : g.nodes()) {
        if (spec.role == Role::Latent) continue;
        LabeledVar left = s.labeled(spec.name);
        if (left.label.empty()) continue;  // not counterfactual in this world
        for (const auto& actual : actual_terms) {
            if (actual == spec.name) continue;
            // Exchangeability pattern: the counterfactual is separated from
            // the actual term once the term's own observed causes are held
            // fixed. Causes whose influence the split already cut (they flow
            // through a fixed half) are not needed.
            std::set<std::string> conditioning;
            for (const auto& anc : s.split_graph().ancestors(actual)) {
                if (s.split_graph().has_node(anc) && g.has_node(anc) && g.is_observed(anc) &&
                    anc != spec.name)
                    conditioning.insert(anc);
            }
            if (!s.d_separated({spec.name}, {actual}, conditioning)) continue;
            IndependenceStatement stmt;
            stmt.left = {left};
            stmt.right = {s.labeled(actual)};
            for (const auto& cnd : conditioning) stmt.given.push_back(s.labeled(cnd));
            std::sort(stmt.given.begin(), stmt.given.end());
            out.push_back(std::move(stmt));
        }
    }
    std::sort(out.begin(), out.end(), [](const IndependenceStatement& x, const IndependenceStatement& y) {
        return std::tie(x.left, x.right, x.given) < std::tie(y.left, y.right, y.given);
    });
    return out;
}

}  // namespace pse
