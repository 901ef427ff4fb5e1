// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one pass/fail line per criterion. Exit code is the number of
// failed criteria.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "pse/assumptions.hpp"
#include "pse/estimand.hpp"
#include "pse/estimate.hpp"
#include "pse/identify.hpp"
#include "support.hpp"

using namespace pse;

namespace {

int failures = 0;

void report(int criterion, const std::string& name, bool pass, const std::string& detail = "") {
    std::printf("%s criterion %2d: %s%s%s\n", pass ? "PASS" : "FAIL", criterion, name.c_str(),
                detail.empty() ? "" : " -- ", detail.c_str());
    if (!pass) ++failures;
}

EstimandSpec make_spec(const CausalGraph& g, EstimandSpec::Semantic semantic,
                       const InterventionRegime& regime, NuisanceHandling nuisance,
                       int y = 1) {
    EstimandSpec s;
    s.semantic = semantic;
    s.graph = g;
    s.regime = regime;
    s.outcome_value = y;
    s.nuisance = nuisance;
    return s;
}

InterventionRegime random_node_regime(support::Rng& rng, int p) {
    InterventionRegime r;
    r.approach = Approach::NodeIntervened;
    for (int i = 0; i <= p; ++i) r.assignment[std::to_string(i)] = rng.uniform(2);
    return r;
}

InterventionRegime random_path_regime(support::Rng& rng) {
    InterventionRegime r;
    r.approach = Approach::PathIntervened;
    for (const char* l : {"00", "01", "10", "11"}) r.assignment[l] = rng.uniform(2);
    return r;
}

// --------------------------------------------------------------------------

void criterion_1(support::Rng& rng, std::vector<DiscreteSem>& bank) {
    auto g = support::two_mediator_graph();
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        auto sem = support::random_sem_all_fresh(rng, g);
        bank.push_back(sem);
        auto law = observational_distribution(sem);
        for (int k = 0; k < 5; ++k) {
            auto regime = random_node_regime(rng, 2);
            auto spec = make_spec(g, EstimandSpec::Semantic::Classical, regime,
                                  NuisanceHandling::Refuse);
            double formula = evaluate(identify_classical(spec), law).value;
            double oracle = oracle_nested(sem, nested_estimand(g, regime), 1);
            worst = std::max(worst, std::abs(formula - oracle));
        }
    }
    std::ostringstream os;
    os << "max |formula - oracle| = " << worst;
    report(1, "classical node formula equals the nested oracle (no confounder)",
           worst <= 1e-12, os.str());
}

void criterion_2(support::Rng& rng, std::vector<DiscreteSem>& bank) {
    auto g = support::two_mediator_graph({.with_v = true});
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        auto sem = support::random_sem_all_fresh(rng, g);  // fresh V noise
        bank.push_back(sem);
        auto law = observational_distribution(sem);
        for (int k = 0; k < 5; ++k) {
            auto regime = random_node_regime(rng, 2);
            auto spec = make_spec(g, EstimandSpec::Semantic::Classical, regime,
                                  NuisanceHandling::WeightObserved);
            double formula = evaluate(identify_classical(spec), law).value;
            double oracle = oracle_nested(sem, nested_estimand(g, regime), 1);
            worst = std::max(worst, std::abs(formula - oracle));
        }
    }
    std::ostringstream os;
    os << "max |formula - oracle| = " << worst;
    report(2, "weighted classical formula equals the oracle under fresh confounder noise",
           worst <= 1e-12, os.str());
}

void criterion_3(support::Rng& rng, std::vector<DiscreteSem>& bank) {
    auto g = support::two_mediator_graph({.with_v = true});
    double best_bias = 0.0;
    bool cwi_flagged = false;
    for (int trial = 0; trial < 60 && best_bias <= 0.01; ++trial) {
        std::set<std::string> fresh{"Z", "M1", "M2", "Y"};  // V stays world-shared
        auto sem = support::random_sem(rng, g, fresh);
        bank.push_back(sem);
        auto law = observational_distribution(sem);
        auto regime = random_node_regime(rng, 2);
        auto spec = make_spec(g, EstimandSpec::Semantic::Classical, regime,
                              NuisanceHandling::AssumeAbsent);
        double formula = evaluate(identify_classical(spec), law).value;
        double oracle = oracle_nested(sem, nested_estimand(g, regime), 1);
        double bias = std::abs(formula - oracle);
        if (bias > best_bias) best_bias = bias;
        auto entries = check_weak_cwi(g, &sem);
        cwi_flagged = !entries.empty() && entries[0].graph_verdict == GraphVerdict::Fails;
    }
    std::ostringstream os;
    os << "witness bias = " << best_bias;
    report(3, "world-shared confounder noise produces a bias witness and a red weak-CWI check",
           best_bias > 0.01 && cwi_flagged, os.str());
}

void criterion_4(support::Rng& rng, std::vector<DiscreteSem>& bank) {
    auto g = support::two_mediator_graph();
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        auto sem = support::random_sem_all_fresh(rng, g);
        auto law = observational_distribution(sem);
        for (int k = 0; k < 5; ++k) {
            auto regime = random_path_regime(rng);
            auto spec = make_spec(g, EstimandSpec::Semantic::Classical, regime,
                                  NuisanceHandling::Refuse);
            double formula = evaluate(identify_classical(spec), law).value;
            double oracle = oracle_nested(sem, nested_estimand(g, regime), 1);
            worst = std::max(worst, std::abs(formula - oracle));
        }
    }

    double best_bias = 0.0;
    bool cwi_flagged = false;
    for (int trial = 0; trial < 60 && best_bias <= 0.01; ++trial) {
        std::set<std::string> fresh{"Z", "M1", "Y"};  // M2 stays world-shared
        auto sem = support::random_sem(rng, g, fresh);
        bank.push_back(sem);
        auto law = observational_distribution(sem);
        auto regime = random_path_regime(rng);
        regime.assignment["10"] = 0;  // coupled copies need distinct upstream labels
        regime.assignment["11"] = 1;
        auto spec = make_spec(g, EstimandSpec::Semantic::Classical, regime,
                              NuisanceHandling::Refuse);
        double formula = evaluate(identify_classical(spec), law).value;
        double oracle = oracle_nested(sem, nested_estimand(g, regime), 1);
        best_bias = std::max(best_bias, std::abs(formula - oracle));
        auto entries = check_strong_cwi(g, &sem);
        cwi_flagged = !entries.empty() && entries[0].graph_verdict == GraphVerdict::Fails;
    }
    std::ostringstream os;
    os << "max agree dev = " << worst << ", witness bias = " << best_bias;
    report(4,
           "path formula equals the oracle under fresh mediator noise; shared noise biases it",
           worst <= 1e-12 && best_bias > 0.01 && cwi_flagged, os.str());
}

void criterion_5(support::Rng& rng, const std::vector<DiscreteSem>& bank) {
    double worst = 0.0;
    std::size_t checked = 0;
    for (const auto& sem : bank) {
        bool with_v = sem.has_node("V");
        auto g = support::two_mediator_graph({.with_v = with_v});
        auto law = observational_distribution(sem);
        std::vector<InterventionRegime> regimes{random_node_regime(rng, 2)};
        if (!with_v) regimes.push_back(random_path_regime(rng));
        for (const auto& regime : regimes) {
            auto spec = make_spec(g, EstimandSpec::Semantic::Interventional, regime,
                                  with_v ? NuisanceHandling::WeightObserved
                                         : NuisanceHandling::Refuse);
            double formula = evaluate(identify_interventional(spec), law).value;
            double oracle = oracle_interventional(sem, g, regime, 1);
            worst = std::max(worst, std::abs(formula - oracle));
            ++checked;
        }
    }
    std::ostringstream os;
    os << checked << " comparisons, max dev = " << worst;
    report(5, "interventional formulas equal their oracle regardless of noise modes",
           worst <= 1e-12 && checked >= 100, os.str());
}

void criterion_6(support::Rng& rng) {
    auto g = support::two_mediator_graph({.with_v = true});
    double best_gap = 0.0;
    for (int trial = 0; trial < 60 && best_gap <= 0.01; ++trial) {
        std::set<std::string> fresh{"Z", "M1", "M2", "Y"};
        auto sem = support::random_sem(rng, g, fresh);
        for (int z : {0, 1}) {
            auto regime = uniform_regime(g, Approach::NodeIntervened, z);
            double interventional = oracle_interventional(sem, g, regime, 1);
            double total = oracle_nested(sem, total_effect_term(g, z), 1);
            best_gap = std::max(best_gap, std::abs(interventional - total));
        }
    }
    std::ostringstream os;
    os << "witness gap = " << best_gap;
    report(6, "the interventional semantics misses the total effect under shared confounder noise",
           best_gap > 0.01, os.str());
}

void criterion_7(support::Rng& rng) {
    double worst_agree = 0.0;
    double worst_collapse = 0.0;

    // Plain node and path expansions: formula vs component oracle, plus the
    // all-equal-labels collapse onto the original intervention.
    auto g = support::two_mediator_graph();
    for (int trial = 0; trial < 20; ++trial) {
        auto sem = support::random_sem(rng, g, {});
        for (auto approach : {Approach::NodeIntervened, Approach::PathIntervened}) {
            auto eg = approach == Approach::NodeIntervened ? expand_node_intervened(g)
                                                           : expand_path_intervened(g);
            auto csem = expand_sem(sem, g, eg);
            auto law = collapsed_law(csem, eg);
            InterventionRegime regime;
            if (approach == Approach::NodeIntervened) {
                regime = random_node_regime(rng, 2);
            } else {
                regime = random_path_regime(rng);
                regime.assignment["10"] = rng.uniform(2);
                regime.assignment["11"] = 1 - regime.assignment["10"];
            }
            auto spec = make_spec(g, EstimandSpec::Semantic::Separable, regime,
                                  NuisanceHandling::Refuse);
            std::map<std::string, int> assignment;
            for (const auto& z : eg.exposure_components())
                assignment[z] = regime.assignment.at(eg.label_of(z));
            double formula = evaluate(identify_separable(spec), law).value;
            double oracle = oracle_separable(csem, eg, assignment, "Y", 1);
            worst_agree = std::max(worst_agree, std::abs(formula - oracle));

            for (int z : {0, 1}) {
                std::map<std::string, int> equal;
                for (const auto& c : eg.exposure_components()) equal[c] = z;
                double collapsed = oracle_separable(csem, eg, equal, "Y", 1);
                double original = oracle_nested(sem, total_effect_term(g, z), 1);
                worst_collapse = std::max(worst_collapse, std::abs(collapsed - original));
            }
        }
    }

    // Sequential confounder components: the chained factorization.
    auto gv = support::two_mediator_graph({.with_v = true});
    auto egv = expand_confounder(gv, "V", ConfounderOrdering::Sequential);
    for (int trial = 0; trial < 20; ++trial) {
        auto sem = support::random_sem(rng, gv, {});
        auto csem = expand_sem(sem, gv, egv);
        auto law = collapsed_law(csem, egv);
        auto regime = random_node_regime(rng, 2);
        auto spec = make_spec(gv, EstimandSpec::Semantic::Separable, regime,
                              NuisanceHandling::Refuse);
        spec.confounder_ordering = ConfounderOrdering::Sequential;
        std::map<std::string, int> assignment;
        for (const auto& z : egv.exposure_components())
            assignment[z] = regime.assignment.at(egv.label_of(z));
        double formula = evaluate(identify_separable(spec), law).value;
        double oracle = oracle_separable(csem, egv, assignment, "Y", 1);
        worst_agree = std::max(worst_agree, std::abs(formula - oracle));
    }

    // Component-consistent confounder components collapse onto one variable.
    auto egu = expand_confounder(gv, "V", ConfounderOrdering::Unordered);
    for (int trial = 0; trial < 10; ++trial) {
        auto sem = support::random_sem(rng, gv, {});
        auto csem = expand_sem(sem, gv, egu);
        for (int z : {0, 1}) {
            std::map<std::string, int> equal;
            for (const auto& c : egu.exposure_components()) equal[c] = z;
            double collapsed = oracle_separable(csem, egu, equal, "Y", 1);
            double original = oracle_nested(sem, total_effect_term(gv, z), 1);
            worst_collapse = std::max(worst_collapse, std::abs(collapsed - original));
        }
    }

    std::ostringstream os;
    os << "max agree dev = " << worst_agree << ", max collapse dev = " << worst_collapse;
    report(7, "separable formulas equal the component oracle; equal labels collapse exactly",
           worst_agree <= 1e-12 && worst_collapse <= 1e-12, os.str());
}

void criterion_8(support::Rng& rng) {
    auto g = support::two_mediator_graph();
    bool all_equal = true;
    for (auto approach : {Approach::NodeIntervened, Approach::PathIntervened}) {
        for (int trial = 0; trial < 5; ++trial) {
            InterventionRegime regime = approach == Approach::NodeIntervened
                                            ? random_node_regime(rng, 2)
                                            : random_path_regime(rng);
            auto spec = make_spec(g, EstimandSpec::Semantic::Classical, regime,
                                  NuisanceHandling::Refuse);
            auto classical =
                render_formula(normalize_formula(identify(spec)), FormulaFormat::Json);
            spec.semantic = EstimandSpec::Semantic::Interventional;
            auto interventional =
                render_formula(normalize_formula(identify(spec)), FormulaFormat::Json);
            spec.semantic = EstimandSpec::Semantic::Separable;
            auto separable =
                render_formula(normalize_formula(identify(spec)), FormulaFormat::Json);
            all_equal = all_equal && classical == interventional && classical == separable;
        }
    }
    report(8, "the three semantics normalize to byte-identical formulas on confounder-free graphs",
           all_equal);
}

void criterion_9(support::Rng& rng) {
    auto g = support::two_mediator_graph();
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        auto sem = support::random_sem_all_fresh(rng, g);
        auto law = observational_distribution(sem);
        auto spec = make_spec(g, EstimandSpec::Semantic::Classical,
                              uniform_regime(g, Approach::NodeIntervened, 1),
                              NuisanceHandling::Refuse);
        std::vector<std::map<std::string, int>> ladder{
            {{"0", 1}, {"1", 1}, {"2", 1}},
            {{"0", 0}, {"1", 1}, {"2", 1}},
            {{"0", 0}, {"1", 0}, {"2", 1}},
            {{"0", 0}, {"1", 0}, {"2", 0}},
        };
        double total = 0.0;
        for (std::size_t i = 0; i + 1 < ladder.size(); ++i)
            total += pse_contrast(spec, {Approach::NodeIntervened, ladder[i]},
                                  {Approach::NodeIntervened, ladder[i + 1]}, law)
                         .value;
        double expected = oracle_nested(sem, total_effect_term(g, 1), 1) -
                          oracle_nested(sem, total_effect_term(g, 0), 1);
        worst = std::max(worst, std::abs(total - expected));
    }
    std::ostringstream os;
    os << "max dev = " << worst;
    report(9, "node-intervened contrasts telescope to the total effect", worst <= 1e-12,
           os.str());
}

void criterion_10(support::Rng& rng) {
    int violations = 0;
    int pairs = 0;
    int separations = 0;
    while (pairs < 220) {
        auto dag = support::random_dag(rng, 6);
        Digraph d;
        for (const auto& n : dag.names) d.add_node(n);
        for (const auto& [from, to] : dag.edges) d.add_edge(from, to);
        auto law = support::brute_law(rng, dag);
        ++pairs;
        for (int q = 0; q < 10; ++q) {
            std::set<std::string> a, b, c;
            for (const auto& n : dag.names) switch (rng.uniform(4)) {
                    case 0: a.insert(n); break;
                    case 1: b.insert(n); break;
                    case 2: c.insert(n); break;
                    default: break;
                }
            if (a.empty() || b.empty()) continue;
            if (!d_separated(d, a, b, c)) continue;
            ++separations;
            if (!support::conditionally_independent(law, a, b, c, 1e-12)) ++violations;
        }
    }
    std::ostringstream os;
    os << pairs << " graph/cpt pairs, " << separations << " separations, " << violations
       << " violations";
    report(10, "d-separation is sound against exact conditional independence",
           violations == 0 && separations > 100, os.str());
}

void criterion_11() {
    auto g = support::two_mediator_graph();
    auto count = [&](const AssumptionReport& r, AssumptionCategory c) {
        std::size_t n = 0;
        for (const auto& e : r.entries)
            if (e.category == c && !e.extension) ++n;
        return n;
    };
    InterventionRegime node{Approach::NodeIntervened, {{"0", 1}, {"1", 0}, {"2", 1}}};
    InterventionRegime path{Approach::PathIntervened,
                            {{"00", 1}, {"01", 0}, {"10", 0}, {"11", 1}}};

    auto cn = assumption_ledger(
        make_spec(g, EstimandSpec::Semantic::Classical, node, NuisanceHandling::Refuse));
    auto cp = assumption_ledger(
        make_spec(g, EstimandSpec::Semantic::Classical, path, NuisanceHandling::Refuse));
    auto in = assumption_ledger(
        make_spec(g, EstimandSpec::Semantic::Interventional, node, NuisanceHandling::Refuse));
    auto sn = assumption_ledger(
        make_spec(g, EstimandSpec::Semantic::Separable, node, NuisanceHandling::Refuse));
    auto sp = assumption_ledger(
        make_spec(g, EstimandSpec::Semantic::Separable, path, NuisanceHandling::Refuse));

    bool ok = true;
    ok = ok && count(cn, AssumptionCategory::Exchangeability) == 6;
    ok = ok && count(cn, AssumptionCategory::WeakCrossWorld) == 3;
    ok = ok && count(cn, AssumptionCategory::StrongCrossWorld) == 0;
    ok = ok && count(cp, AssumptionCategory::Exchangeability) == 6;
    ok = ok && count(cp, AssumptionCategory::WeakCrossWorld) == 2;
    ok = ok && count(cp, AssumptionCategory::StrongCrossWorld) == 1;
    ok = ok && count(in, AssumptionCategory::Exchangeability) == 3;
    ok = ok && count(in, AssumptionCategory::RandomDrawSubstitution) == 2;
    ok = ok && count(sn, AssumptionCategory::Exchangeability) == 3;
    ok = ok && count(sn, AssumptionCategory::ComponentManipulability) == 1;
    ok = ok && count(sn, AssumptionCategory::ComponentConsistency) == 1;
    ok = ok && count(sn, AssumptionCategory::Dismissible) == 3;
    ok = ok && count(sp, AssumptionCategory::Exchangeability) == 4;
    ok = ok && count(sp, AssumptionCategory::ComponentManipulability) == 2;
    ok = ok && count(sp, AssumptionCategory::ComponentConsistency) == 2;
    ok = ok && count(sp, AssumptionCategory::Dismissible) == 4;
    report(11, "ledger entry sets match the assumption table's row groups", ok);
}

int run_cli(const std::string& args, std::string* output = nullptr) {
    std::string command = std::string(PSE_CLI_PATH) + " " + args + " > /tmp/pse_accept_out.txt 2>&1";
    int rc = std::system(command.c_str());
    if (output) {
        std::ifstream in("/tmp/pse_accept_out.txt");
        std::ostringstream os;
        os << in.rdbuf();
        *output = os.str();
    }
    return WEXITSTATUS(rc);
}

void criterion_12() {
    std::string specs = PSE_SPECS_DIR;
    bool ok = true;
    std::ostringstream detail;
    for (const char* clean : {"fig3.spec", "fig6.spec", "fig8.spec", "fig10.spec", "fig12.spec"}) {
        int rc = run_cli("compare " + specs + "/" + clean);
        if (rc != 0) {
            ok = false;
            detail << clean << " exited " << rc << "; ";
        }
    }
    for (const char* red : {"fig3_uv.spec", "fig3_um2.spec"}) {
        std::string out;
        int rc = run_cli("compare " + specs + "/" + red, &out);
        bool expected_entry = std::string(red) == "fig3_uv.spec"
                                  ? out.find("weak-cross-world") != std::string::npos &&
                                        out.find("FAILS") != std::string::npos
                                  : out.find("strong-cross-world") != std::string::npos &&
                                        out.find("FAILS") != std::string::npos;
        if (rc != 1 || !expected_entry) {
            ok = false;
            detail << red << " exited " << rc << "; ";
        }
    }
    // Determinism: identical inputs and seed give byte-identical reports.
    std::string a, b;
    run_cli("compare " + specs + "/fig3.spec --format json", &a);
    run_cli("compare " + specs + "/fig3.spec --format json", &b);
    std::string e1, e2;
    run_cli("estimate " + specs + "/fig3.spec --n 2000 --seed 42 --format json", &e1);
    run_cli("estimate " + specs + "/fig3.spec --n 2000 --seed 42 --format json", &e2);
    if (a != b || a.empty()) {
        ok = false;
        detail << "compare output not deterministic; ";
    }
    if (e1 != e2 || e1.empty()) {
        ok = false;
        detail << "sampled estimate not seed-deterministic; ";
    }
    report(12, "cli compare matches the expected exit codes and is deterministic", ok,
           detail.str());
}

}  // namespace

int main() {
    support::Rng rng(987654321);
    std::vector<DiscreteSem> bank;  // sems reused by criterion 5

    criterion_1(rng, bank);
    criterion_2(rng, bank);
    criterion_3(rng, bank);
    criterion_4(rng, bank);
    criterion_5(rng, bank);
    criterion_6(rng);
    criterion_7(rng);
    criterion_8(rng);
    criterion_9(rng);
    criterion_10(rng);
    criterion_11();
    criterion_12();

    if (failures == 0)
        std::printf("acceptance: all 12 criteria pass\n");
    else
        std::printf("acceptance: %d criterion(s) FAILED\n", failures);
    return failures;
}
