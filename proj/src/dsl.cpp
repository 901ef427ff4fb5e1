#include "pse/dsl.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <sstream>

namespace pse {

std::string Diagnostic::to_string() const {
    std::ostringstream os;
    os << "line " << pos.line << ":" << pos.col << ": " << code << ": " << message;
    return os.str();
}

namespace {

std::string join_diagnostics(const std::vector<Diagnostic>& ds) {
    std::string out;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (i) out += "\n";
        out += ds[i].to_string();
    }
    return out;
}

}  // namespace

ParseError::ParseError(std::vector<Diagnostic> diagnostics)
    : Error("SyntaxError", join_diagnostics(diagnostics)), diagnostics_(std::move(diagnostics)) {}

namespace {

struct Line {
    int number = 0;
    std::string text;
};

/// Strips comments and joins physical lines until braces balance.
std::vector<Line> logical_lines(const std::string& text, std::vector<Diagnostic>& diags) {
    std::vector<Line> out;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    Line pending;
    int depth = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
        while (!raw.empty() && std::isspace(static_cast<unsigned char>(raw.back()))) raw.pop_back();
        std::size_t start = 0;
        while (start < raw.size() && std::isspace(static_cast<unsigned char>(raw[start]))) ++start;
        std::string content = raw.substr(start);
        if (content.empty() && depth == 0) continue;
        if (depth == 0) {
            pending = {lineno, content};
        } else {
            pending.text += " " + content;
        }
        for (char ch : content) {
            if (ch == '{') ++depth;
            if (ch == '}') --depth;
        }
        if (depth < 0) {
            diags.push_back({{lineno, 1}, "SyntaxError", "unbalanced '}'"});
            depth = 0;
            continue;
        }
        if (depth == 0 && !pending.text.empty()) {
            out.push_back(pending);
            pending = {};
        }
    }
    if (depth != 0) diags.push_back({{pending.number, 1}, "SyntaxError", "unclosed '{'"});
    return out;
}

struct Token {
    std::string text;
    int col = 0;
};

/// Splits a logical line into words; a '{...}' block stays one token glued to
/// the preceding 'key=' prefix.
std::vector<Token> tokenize(const Line& line, std::vector<Diagnostic>& diags) {
    std::vector<Token> out;
    const std::string& s = line.text;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        if (i >= s.size()) break;
        std::size_t start = i;
        int depth = 0;
        while (i < s.size() && (depth > 0 || !std::isspace(static_cast<unsigned char>(s[i])))) {
            if (s[i] == '{') ++depth;
            if (s[i] == '}') --depth;
            ++i;
        }
        if (depth != 0)
            diags.push_back({{line.number, static_cast<int>(start) + 1}, "SyntaxError",
                             "unbalanced braces in token"});
        out.push_back({s.substr(start, i - start), static_cast<int>(start) + 1});
    }
    return out;
}

struct Parser {
    std::vector<Diagnostic> diags;

    struct RawNode {
        std::string name;
        Role role = Role::Plain;
        int order = 0;
        std::vector<int> domain;
        SourcePos pos;
    };
    struct RawComponent {
        std::string name;
        std::string of;
        std::vector<int> domain;  // optional override
        std::optional<ConfounderOrdering> ordering;
        SourcePos pos;
    };
    struct RawNoise {
        std::string node;
        std::optional<NoiseMode> mode;
        std::vector<std::pair<int, double>> dist;
        SourcePos pos;
    };
    struct RawMech {
        std::string node;
        std::vector<std::pair<std::vector<int>, int>> rows;
        SourcePos pos;
    };

    std::vector<RawNode> nodes;
    std::vector<RawComponent> components;
    std::vector<std::pair<std::string, std::string>> edges;
    std::vector<SourcePos> edge_pos;
    std::vector<RawNoise> noises;
    std::vector<RawMech> mechs;
    std::vector<QuerySpec> queries;

    void error(SourcePos pos, const std::string& code, const std::string& message) {
        diags.push_back({pos, code, message});
    }

    static bool is_identifier(const std::string& s) {
        if (s.empty()) return false;
        for (char c : s)
            if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '^')
                return false;
        return !std::isdigit(static_cast<unsigned char>(s[0]));
    }

    std::optional<int> parse_int(const std::string& s, SourcePos pos) {
        try {
            std::size_t used = 0;
            int v = std::stoi(s, &used);
            if (used != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (...) {
            error(pos, "SyntaxError", "expected an integer, got '" + s + "'");
            return std::nullopt;
        }
    }

    std::optional<double> parse_double(const std::string& s, SourcePos pos) {
        try {
            std::size_t used = 0;
            double v = std::stod(s, &used);
            if (used != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (...) {
            error(pos, "SyntaxError", "expected a number, got '" + s + "'");
            return std::nullopt;
        }
    }

    /// Content of a "{...}" block.
    std::optional<std::string> block(const std::string& s, SourcePos pos) {
        if (s.size() < 2 || s.front() != '{' || s.back() != '}') {
            error(pos, "SyntaxError", "expected '{...}', got '" + s + "'");
            return std::nullopt;
        }
        return s.substr(1, s.size() - 2);
    }

    static std::vector<std::string> split(const std::string& s, char sep) {
        std::vector<std::string> out;
        std::string cur;
        for (char c : s) {
            if (c == sep) {
                out.push_back(cur);
                cur.clear();
            } else {
                cur += c;
            }
        }
        out.push_back(cur);
        for (auto& piece : out) {
            while (!piece.empty() && std::isspace(static_cast<unsigned char>(piece.front())))
                piece.erase(piece.begin());
            while (!piece.empty() && std::isspace(static_cast<unsigned char>(piece.back())))
                piece.pop_back();
        }
        std::erase_if(out, [](const std::string& p) { return p.empty(); });
        return out;
    }

    std::vector<int> parse_domain(const std::string& body, SourcePos pos) {
        std::vector<int> out;
        for (const auto& piece : split(body, ','))
            if (auto v = parse_int(piece, pos)) out.push_back(*v);
        return out;
    }

    std::map<std::string, std::string> keyvals(const std::vector<Token>& tokens, std::size_t from,
                                               int lineno, const std::set<std::string>& allowed) {
        std::map<std::string, std::string> out;
        for (std::size_t i = from; i < tokens.size(); ++i) {
            auto eq = tokens[i].text.find('=');
            if (eq == std::string::npos) {
                error({lineno, tokens[i].col}, "SyntaxError",
                      "expected key=value, got '" + tokens[i].text + "'");
                continue;
            }
            std::string key = tokens[i].text.substr(0, eq);
            if (!allowed.count(key))
                error({lineno, tokens[i].col}, "SyntaxError", "unknown key '" + key + "'");
            else if (!out.emplace(key, tokens[i].text.substr(eq + 1)).second)
                error({lineno, tokens[i].col}, "SyntaxError", "duplicate key '" + key + "'");
        }
        return out;
    }

    void parse_line(const Line& line) {
        auto tokens = tokenize(line, diags);
        if (tokens.empty()) return;
        const std::string& head = tokens[0].text;
        SourcePos pos{line.number, tokens[0].col};
        if (head == "node")
            parse_node(tokens, line.number);
        else if (head == "component")
            parse_component(tokens, line.number);
        else if (head == "edge")
            parse_edge(tokens, line.number);
        else if (head == "noise")
            parse_noise(tokens, line.number);
        else if (head == "mech")
            parse_mech(tokens, line.number);
        else if (head == "query")
            parse_query(tokens, line.number);
        else
            error(pos, "SyntaxError", "unknown directive '" + head + "'");
    }

    void parse_node(const std::vector<Token>& tokens, int lineno) {
        if (tokens.size() < 2 || !is_identifier(tokens[1].text)) {
            error({lineno, 1}, "SyntaxError", "usage: node <name> role=<role> domain={...}");
            return;
        }
        RawNode n;
        n.name = tokens[1].text;
        n.pos = {lineno, tokens[1].col};
        auto kv = keyvals(tokens, 2, lineno, {"role", "order", "domain"});
        if (auto it = kv.find("role"); it != kv.end()) {
            static const std::map<std::string, Role> roles{
                {"exposure", Role::Exposure},
                {"mediator", Role::Mediator},
                {"outcome", Role::Outcome},
                {"baseline", Role::BaselineConfounder},
                {"induced", Role::ExposureInducedConfounder},
                {"latent", Role::Latent},
                {"var", Role::Plain},
            };
            auto rit = roles.find(it->second);
            if (rit == roles.end())
                error(n.pos, "SyntaxError", "unknown role '" + it->second + "'");
            else
                n.role = rit->second;
        } else {
            error(n.pos, "SyntaxError", "node needs role=<role>");
        }
        if (auto it = kv.find("order"); it != kv.end())
            if (auto v = parse_int(it->second, n.pos)) n.order = *v;
        if (auto it = kv.find("domain"); it != kv.end()) {
            if (auto body = block(it->second, n.pos)) n.domain = parse_domain(*body, n.pos);
        } else {
            error(n.pos, "SyntaxError", "node needs domain={...}");
        }
        nodes.push_back(std::move(n));
    }

    void parse_component(const std::vector<Token>& tokens, int lineno) {
        if (tokens.size() < 2 || !is_identifier(tokens[1].text)) {
            error({lineno, 1}, "SyntaxError", "usage: component <name> of=<node>");
            return;
        }
        RawComponent c;
        c.name = tokens[1].text;
        c.pos = {lineno, tokens[1].col};
        auto kv = keyvals(tokens, 2, lineno, {"of", "group", "domain"});
        if (auto it = kv.find("of"); it != kv.end())
            c.of = it->second;
        else
            error(c.pos, "SyntaxError", "component needs of=<node>");
        if (auto it = kv.find("group"); it != kv.end()) {
            if (it->second == "ordered")
                c.ordering = ConfounderOrdering::Sequential;
            else if (it->second == "swcc")
                c.ordering = ConfounderOrdering::Unordered;
            else
                error(c.pos, "SyntaxError", "group must be 'ordered' or 'swcc'");
        }
        if (auto it = kv.find("domain"); it != kv.end())
            if (auto body = block(it->second, c.pos)) c.domain = parse_domain(*body, c.pos);
        components.push_back(std::move(c));
    }

    void parse_edge(const std::vector<Token>& tokens, int lineno) {
        if (tokens.size() != 4 || tokens[2].text != "->") {
            error({lineno, 1}, "SyntaxError", "usage: edge <A> -> <B>");
            return;
        }
        edges.emplace_back(tokens[1].text, tokens[3].text);
        edge_pos.push_back({lineno, tokens[1].col});
    }

    void parse_noise(const std::vector<Token>& tokens, int lineno) {
        if (tokens.size() < 2) {
            error({lineno, 1}, "SyntaxError", "usage: noise <node> [mode=...] dist={v:p,...}");
            return;
        }
        RawNoise n;
        n.node = tokens[1].text;
        n.pos = {lineno, tokens[1].col};
        auto kv = keyvals(tokens, 2, lineno, {"mode", "dist"});
        if (auto it = kv.find("mode"); it != kv.end()) {
            if (it->second == "shared")
                n.mode = NoiseMode::WorldShared;
            else if (it->second == "fresh")
                n.mode = NoiseMode::WorldFresh;
            else
                error(n.pos, "SyntaxError", "mode must be 'shared' or 'fresh'");
        }
        if (auto it = kv.find("dist"); it != kv.end()) {
            if (auto body = block(it->second, n.pos)) {
                for (const auto& piece : split(*body, ',')) {
                    auto colon = piece.find(':');
                    if (colon == std::string::npos) {
                        error(n.pos, "SyntaxError", "dist entries are value:probability");
                        continue;
                    }
                    auto v = parse_int(piece.substr(0, colon), n.pos);
                    auto p = parse_double(piece.substr(colon + 1), n.pos);
                    if (v && p) n.dist.emplace_back(*v, *p);
                }
            }
        } else {
            error(n.pos, "SyntaxError", "noise needs dist={value:probability,...}");
        }
        noises.push_back(std::move(n));
    }

    void parse_mech(const std::vector<Token>& tokens, int lineno) {
        if (tokens.size() < 2) {
            error({lineno, 1}, "SyntaxError", "usage: mech <node> table={... -> v; ...}");
            return;
        }
        RawMech m;
        m.node = tokens[1].text;
        m.pos = {lineno, tokens[1].col};
        auto kv = keyvals(tokens, 2, lineno, {"table"});
        if (auto it = kv.find("table"); it != kv.end()) {
            if (auto body = block(it->second, m.pos)) {
                for (const auto& row : split(*body, ';')) {
                    auto arrow = row.find("->");
                    if (arrow == std::string::npos) {
                        error(m.pos, "SyntaxError", "table rows are '<inputs> -> <value>'");
                        continue;
                    }
                    std::vector<int> inputs;
                    bool ok = true;
                    {
                        std::istringstream is(row.substr(0, arrow));
                        std::string w;
                        while (is >> w) {
                            if (auto v = parse_int(w, m.pos))
                                inputs.push_back(*v);
                            else
                                ok = false;
                        }
                    }
                    std::string rhs = row.substr(arrow + 2);
                    while (!rhs.empty() && std::isspace(static_cast<unsigned char>(rhs.front())))
                        rhs.erase(rhs.begin());
                    auto value = parse_int(rhs, m.pos);
                    if (ok && value) m.rows.emplace_back(std::move(inputs), *value);
                }
            }
        } else {
            error(m.pos, "SyntaxError", "mech needs table={...}");
        }
        mechs.push_back(std::move(m));
    }

    void parse_query(const std::vector<Token>& tokens, int lineno) {
        if (tokens.size() < 3) {
            error({lineno, 1}, "SyntaxError",
                  "usage: query <semantic> <approach> labels={...} [y=<v>]");
            return;
        }
        QuerySpec q;
        q.pos = {lineno, tokens[0].col};
        const std::string& sem = tokens[1].text;
        if (sem == "classical")
            q.semantic = EstimandSpec::Semantic::Classical;
        else if (sem == "interventional")
            q.semantic = EstimandSpec::Semantic::Interventional;
        else if (sem == "separable")
            q.semantic = EstimandSpec::Semantic::Separable;
        else
            error(q.pos, "SyntaxError", "semantic must be classical|interventional|separable");
        const std::string& app = tokens[2].text;
        if (app == "node")
            q.approach = Approach::NodeIntervened;
        else if (app == "path")
            q.approach = Approach::PathIntervened;
        else
            error(q.pos, "SyntaxError", "approach must be node|path");

        auto kv = keyvals(tokens, 3, lineno, {"labels", "y", "contrast", "nuisance", "vorder"});
        auto parse_labels = [&](const std::string& body) {
            std::map<std::string, int> out;
            for (const auto& piece : split(body, ',')) {
                auto colon = piece.find(':');
                if (colon == std::string::npos) {
                    error(q.pos, "SyntaxError", "labels are label:value pairs");
                    continue;
                }
                auto v = parse_int(piece.substr(colon + 1), q.pos);
                if (v) out[piece.substr(0, colon)] = *v;
            }
            return out;
        };
        if (auto it = kv.find("labels"); it != kv.end()) {
            if (auto body = block(it->second, q.pos)) q.labels = parse_labels(*body);
        } else {
            error(q.pos, "SyntaxError", "query needs labels={...}");
        }
        if (auto it = kv.find("contrast"); it != kv.end())
            if (auto body = block(it->second, q.pos)) q.contrast = parse_labels(*body);
        if (auto it = kv.find("y"); it != kv.end())
            if (auto v = parse_int(it->second, q.pos)) q.outcome_value = *v;
        if (auto it = kv.find("nuisance"); it != kv.end()) {
            if (it->second == "refuse")
                q.nuisance = NuisanceHandling::Refuse;
            else if (it->second == "assume-absent")
                q.nuisance = NuisanceHandling::AssumeAbsent;
            else if (it->second == "weight")
                q.nuisance = NuisanceHandling::WeightObserved;
            else
                error(q.pos, "SyntaxError", "nuisance must be refuse|assume-absent|weight");
        }
        if (auto it = kv.find("vorder"); it != kv.end()) {
            if (it->second == "sequential")
                q.confounder_ordering = ConfounderOrdering::Sequential;
            else if (it->second == "unordered")
                q.confounder_ordering = ConfounderOrdering::Unordered;
            else
                error(q.pos, "SyntaxError", "vorder must be unordered|sequential");
        }
        queries.push_back(std::move(q));
    }

    SpecDocument finish() {
        SpecDocument doc;
        if (!diags.empty()) throw ParseError(std::move(diags));

        std::map<std::string, const RawNode*> node_by_name;
        for (const auto& n : nodes) node_by_name[n.name] = &n;

        if (components.empty()) {
            std::vector<NodeSpec> specs;
            for (const auto& n : nodes) specs.push_back({n.name, n.role, n.order, n.domain});
            try {
                doc.graph = CausalGraph::validate(std::move(specs), edges);
            } catch (const ValidationError& e) {
                for (const auto& v : e.violations())
                    error({nodes.empty() ? 1 : nodes.front().pos.line, 1}, v.code, v.message);
            }
        } else {
            build_expanded(doc, node_by_name);
        }
        if (!diags.empty()) throw ParseError(std::move(diags));

        if (!noises.empty() || !mechs.empty()) build_sem(doc);
        if (!diags.empty()) throw ParseError(std::move(diags));

        doc.queries = queries;
        return doc;
    }

    void build_expanded(SpecDocument& doc, std::map<std::string, const RawNode*>& node_by_name) {
        ExpandedGraph::Builder b;
        for (const auto& n : nodes) {
            b.graph.add_node(n.name);
            b.specs[n.name] = {n.name, n.role, n.order, n.domain};
            if (n.role == Role::Exposure) b.detached = n.name;
            if (n.role == Role::Outcome) b.outcome = n.name;
        }
        std::map<std::string, ExpandedGraph::ComponentGroup> groups;
        for (const auto& c : components) {
            if (b.graph.has_node(c.name)) {
                error(c.pos, "DuplicateName", "component '" + c.name + "' already declared");
                continue;
            }
            b.graph.add_node(c.name);
            std::vector<int> domain = c.domain;
            Role role = Role::Plain;
            if (auto it = node_by_name.find(c.of); it != node_by_name.end()) {
                if (domain.empty()) domain = it->second->domain;
                role = it->second->role;
            }
            if (domain.empty()) {
                error(c.pos, "BadDomain",
                      "component '" + c.name + "' needs domain={...} ('" + c.of +
                          "' is not declared)");
                continue;
            }
            b.specs[c.name] = {c.name, role, 0, domain};
            b.component_of[c.name] = c.of;
            std::string label = c.name;
            if (label.rfind(c.of, 0) == 0 && label.size() > c.of.size())
                label = label.substr(c.of.size());
            if (!label.empty() && label.front() == '_') label.erase(label.begin());
            b.label[c.name] = label;
            auto& g = groups[c.of];
            g.original = c.of;
            g.members.push_back(c.name);
            bool exposure_group =
                node_by_name.count(c.of) && node_by_name[c.of]->role == Role::Exposure;
            g.exposure_group = exposure_group;
            if (c.ordering)
                g.ordering = *c.ordering;
            else if (!exposure_group)
                g.ordering = ConfounderOrdering::Sequential;  // distinct actual variables
        }
        for (std::size_t i = 0; i < edges.size(); ++i) {
            try {
                b.graph.add_edge(edges[i].first, edges[i].second);
            } catch (const Error& e) {
                error(edge_pos[i], e.code(), e.what());
            }
        }
        for (auto& [orig, g] : groups) {
            std::sort(g.members.begin(), g.members.end());
            b.groups.push_back(g);
        }
        for (const auto& c : components) {
            auto children = b.graph.has_node(c.name) ? b.graph.children(c.name)
                                                     : std::set<std::string>{};
            b.attribution[c.name] = children.empty() ? "" : *children.begin();
        }
        if (!diags.empty()) return;
        try {
            doc.expanded = b.finish();
        } catch (const ValidationError& e) {
            for (const auto& v : e.violations()) error({1, 1}, v.code, v.message);
        }
    }

    void build_sem(SpecDocument& doc) {
        const Digraph* structure = nullptr;
        if (doc.graph)
            structure = &doc.graph->digraph();
        else if (doc.expanded)
            structure = &doc.expanded->digraph();
        if (!structure) return;

        std::map<std::string, const RawNoise*> noise_by_node;
        for (const auto& n : noises) {
            if (!noise_by_node.emplace(n.node, &n).second)
                error(n.pos, "DuplicateName", "noise for '" + n.node + "' declared twice");
            if (!structure->has_node(n.node))
                error(n.pos, "UnknownNode", "noise for undeclared node '" + n.node + "'");
        }
        std::map<std::string, const RawMech*> mech_by_node;
        for (const auto& m : mechs) {
            if (!mech_by_node.emplace(m.node, &m).second)
                error(m.pos, "DuplicateName", "mech for '" + m.node + "' declared twice");
            if (!structure->has_node(m.node))
                error(m.pos, "UnknownNode", "mech for undeclared node '" + m.node + "'");
        }
        if (!diags.empty()) return;

        auto role_of = [&](const std::string& name) -> Role {
            if (doc.graph) return doc.graph->node(name).role;
            return doc.expanded->role(name);
        };
        auto domain_of = [&](const std::string& name) -> std::vector<int> {
            if (doc.graph) return doc.graph->node(name).domain;
            return doc.expanded->domain(name);
        };

        // Exposure components reuse the detached exposure's noise and
        // mechanism; in the actual world they are that variable.
        auto source_node = [&](const std::string& name) -> std::string {
            if (doc.expanded && doc.expanded->is_component(name)) {
                const auto& orig = doc.expanded->original_of(name);
                const auto* group = doc.expanded->group_of(orig);
                if (group && group->exposure_group && !noise_by_node.count(name)) return orig;
            }
            return name;
        };

        std::vector<SemNode> sem_nodes;
        for (const auto& name : structure->topological_order()) {
            std::string src = source_node(name);
            SemNode sn;
            sn.name = name;
            sn.domain = domain_of(name);
            sn.latent = role_of(name) == Role::Latent;
            const RawNoise* noise = noise_by_node.count(src) ? noise_by_node.at(src) : nullptr;
            const RawMech* mech = mech_by_node.count(src) ? mech_by_node.at(src) : nullptr;
            if (!noise) {
                error({1, 1}, "SemanticError", "node '" + name + "' has no noise declaration");
                continue;
            }
            if (sn.latent) {
                sn.latent_probs.assign(sn.domain.size(), 0.0);
                for (const auto& [v, p] : noise->dist) {
                    auto it = std::find(sn.domain.begin(), sn.domain.end(), v);
                    if (it == sn.domain.end())
                        error(noise->pos, "SemanticError", "latent dist value out of domain");
                    else
                        sn.latent_probs[static_cast<std::size_t>(it - sn.domain.begin())] = p;
                }
                sem_nodes.push_back(std::move(sn));
                continue;
            }
            for (const auto& [v, p] : noise->dist) {
                sn.noise.values.push_back(v);
                sn.noise.probs.push_back(p);
            }
            sn.noise_mode = noise->mode.value_or(NoiseMode::WorldShared);
            sn.parents.assign(structure->parents(name).begin(), structure->parents(name).end());
            if (!mech) {
                error(noise->pos, "SemanticError", "node '" + name + "' has no mech declaration");
                continue;
            }
            std::vector<std::vector<int>> axes;
            for (const auto& p : sn.parents) axes.push_back(domain_of(p));
            axes.push_back(sn.noise.values);
            std::size_t rows = 1;
            for (const auto& a : axes) rows *= a.size();
            sn.mechanism.assign(rows, sn.domain.front());
            std::vector<bool> filled(rows, false);
            for (const auto& [inputs, value] : mech->rows) {
                if (inputs.size() != axes.size()) {
                    error(mech->pos, "SemanticError",
                          "mech row arity for '" + name + "': expected " +
                              std::to_string(axes.size()) + " inputs (parents sorted by name, "
                              "then noise)");
                    continue;
                }
                std::size_t idx = 0;
                bool ok = true;
                for (std::size_t i = 0; i < axes.size(); ++i) {
                    auto it = std::find(axes[i].begin(), axes[i].end(), inputs[i]);
                    if (it == axes[i].end()) {
                        error(mech->pos, "SemanticError", "mech input out of domain");
                        ok = false;
                        break;
                    }
                    idx = idx * axes[i].size() + static_cast<std::size_t>(it - axes[i].begin());
                }
                if (!ok) continue;
                if (filled[idx])
                    error(mech->pos, "SemanticError", "duplicate mech row for '" + name + "'");
                filled[idx] = true;
                sn.mechanism[idx] = value;
            }
            for (std::size_t i = 0; i < rows; ++i)
                if (!filled[i]) {
                    error(mech->pos, "SemanticError",
                          "mech table for '" + name + "' is not total (" +
                              std::to_string(std::count(filled.begin(), filled.end(), false)) +
                              " rows missing)");
                    break;
                }
            sem_nodes.push_back(std::move(sn));
        }
        if (!diags.empty()) return;
        try {
            doc.sem = DiscreteSem::build(*structure, std::move(sem_nodes));
        } catch (const Error& e) {
            error({1, 1}, "SemanticError", e.what());
        }
    }
};

}  // namespace

SpecDocument parse_spec(const std::string& text) {
    Parser parser;
    std::vector<Diagnostic> line_diags;
    auto lines = logical_lines(text, line_diags);
    parser.diags = std::move(line_diags);
    for (const auto& line : lines) parser.parse_line(line);
    return parser.finish();
}

namespace {

std::string format_prob(double p) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", p);
    std::string s = buf;
    // Shorten when exactly representable (keeps files readable).
    for (int precision = 1; precision < 17; ++precision) {
        char shorter[40];
        std::snprintf(shorter, sizeof shorter, "%.*g", precision, p);
        if (std::stod(shorter) == p) return shorter;
    }
    return s;
}

std::string domain_string(const std::vector<int>& domain) {
    std::string out = "{";
    for (std::size_t i = 0; i < domain.size(); ++i)
        out += (i ? "," : "") + std::to_string(domain[i]);
    return out + "}";
}

void serialize_sem_node(std::ostringstream& os, const SemNode& n,
                        const std::vector<std::vector<int>>& parent_domains) {
    if (n.latent) {
        os << "noise " << n.name << " dist={";
        for (std::size_t i = 0; i < n.domain.size(); ++i)
            os << (i ? ", " : "") << n.domain[i] << ":" << format_prob(n.latent_probs[i]);
        os << "}\n";
        return;
    }
    os << "noise " << n.name
       << " mode=" << (n.noise_mode == NoiseMode::WorldShared ? "shared" : "fresh") << " dist={";
    for (std::size_t i = 0; i < n.noise.values.size(); ++i)
        os << (i ? ", " : "") << n.noise.values[i] << ":" << format_prob(n.noise.probs[i]);
    os << "}\n";
    os << "mech " << n.name << " table={";
    std::vector<std::vector<int>> axes = parent_domains;
    axes.push_back(n.noise.values);
    std::vector<std::size_t> idx(axes.size(), 0);
    std::size_t row = 0;
    bool first = true;
    while (true) {
        os << (first ? "" : "; ");
        first = false;
        for (std::size_t i = 0; i < axes.size(); ++i) os << axes[i][idx[i]] << " ";
        os << "-> " << n.mechanism[row];
        ++row;
        std::size_t k = axes.size();
        bool done = axes.empty();
        while (k > 0) {
            --k;
            if (++idx[k] < axes[k].size()) break;
            idx[k] = 0;
            if (k == 0) done = true;
        }
        if (done) break;
    }
    os << "}\n";
}

}  // namespace

std::string serialize_spec(const SpecDocument& doc) {
    std::ostringstream os;
    if (doc.graph) {
        for (const auto& n : doc.graph->nodes()) {
            os << "node " << n.name << " role=" << role_name(n.role);
            if (n.role == Role::Mediator) os << " order=" << n.mediator_index;
            os << " domain=" << domain_string(n.domain) << "\n";
        }
        for (const auto& [from, to] : doc.graph->digraph().edges())
            os << "edge " << from << " -> " << to << "\n";
    } else if (doc.expanded) {
        const auto& eg = *doc.expanded;
        for (const auto& name : eg.digraph().nodes()) {
            if (eg.is_component(name)) continue;
            os << "node " << name << " role=" << role_name(eg.role(name))
               << " domain=" << domain_string(eg.domain(name)) << "\n";
        }
        for (const auto& group : eg.groups())
            for (const auto& m : group.members) {
                os << "component " << m << " of=" << group.original;
                if (!group.exposure_group)
                    os << " group="
                       << (group.ordering == ConfounderOrdering::Sequential ? "ordered" : "swcc");
                bool original_declared = eg.digraph().has_node(group.original);
                if (!original_declared) os << " domain=" << domain_string(eg.domain(m));
                os << "\n";
            }
        for (const auto& [from, to] : eg.digraph().edges())
            os << "edge " << from << " -> " << to << "\n";
    }
    if (doc.sem) {
        for (const auto& name : doc.sem->structure().topological_order()) {
            const SemNode& n = doc.sem->node(name);
            // Exposure components serialize through their original.
            if (doc.expanded && doc.expanded->is_component(name)) {
                const auto* group = doc.expanded->group_of(doc.expanded->original_of(name));
                if (group && group->exposure_group) continue;
            }
            std::vector<std::vector<int>> pdoms;
            for (const auto& p : n.parents) pdoms.push_back(doc.sem->node(p).domain);
            serialize_sem_node(os, n, pdoms);
        }
    }
    for (const auto& q : doc.queries) {
        os << "query " << semantic_name(q.semantic) << " " << approach_name(q.approach)
           << " labels={";
        bool first = true;
        for (const auto& [l, v] : q.labels) {
            os << (first ? "" : ", ") << l << ":" << v;
            first = false;
        }
        os << "} y=" << q.outcome_value;
        if (q.contrast) {
            os << " contrast={";
            first = true;
            for (const auto& [l, v] : *q.contrast) {
                os << (first ? "" : ", ") << l << ":" << v;
                first = false;
            }
            os << "}";
        }
        if (q.nuisance != NuisanceHandling::Refuse)
            os << " nuisance="
               << (q.nuisance == NuisanceHandling::AssumeAbsent ? "assume-absent" : "weight");
        if (q.confounder_ordering == ConfounderOrdering::Sequential) os << " vorder=sequential";
        os << "\n";
    }
    return os.str();
}

}  // namespace pse
