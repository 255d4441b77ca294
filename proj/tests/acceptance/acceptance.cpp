// Acceptance run: one PASS/FAIL line per criterion. Tolerances and replica
// counts are fixed here; `--only 1,4` runs a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "properties.hpp"
#include "rdhybrid/experiments.hpp"
#include "rdhybrid/oracles.hpp"
#include "rdhybrid/partition.hpp"
#include "rdhybrid/rates.hpp"

using namespace rdhybrid;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        pass = pass && ok;
        if (!ok) detail << "[failed: " << what << "] ";
    }
};

std::string model_path(const std::string& name) { return std::string(RDHYBRID_SOURCE_DIR) + "/models/" + name; }

// ---- 1: analytic identities -------------------------------------------------

Outcome analytic_identities() {
    Outcome o;
    double worst_root = 0.0;
    for (double sigma : {1e-4, 1e-2, 1.0}) {
        const double scale = 1.0 / (4.0 * kPi * sigma);
        worst_root = std::max(worst_root, std::abs(g3(h_star(sigma), sigma)) / scale);
    }
    o.require(worst_root <= 1e-12, "G3(h*) = 0");

    const double sigma = 0.005, D = 2.0;
    double worst_hstar = 0.0, worst_ck = 0.0;
    for (double k_a : {0.001, 0.1, 1.0, 10.0}) {
        const double h = h_star(sigma);
        worst_hstar = std::max(worst_hstar, std::abs(meso_rate(k_a, D, sigma, h) * h * h * h / k_a - 1.0));
        const double big = 1e5;
        const double V = big * big * big;
        worst_ck = std::max(worst_ck, std::abs(meso_rate(k_a, D, sigma, big) / collins_kimball(k_a, D, sigma, V) - 1.0));
    }
    o.require(worst_hstar <= 1e-12, "meso_rate(h*) = k_a / h*^3");
    o.require(worst_ck <= 1e-4, "large-h meso rate = Collins-Kimball");

    const double eps = 0.025;
    std::size_t band_violations = 0, points = 0;
    for (double k_a = 1e-3; k_a <= 1e3; k_a *= 1.3) {
        for (double h = 1.001 * h_star(sigma); h < 2.0; h *= 1.1) {
            const double W = resolution_error_W(k_a, D, sigma, h).W;
            const double bare = k_a / (h * h * h);
            const double k = meso_rate(k_a, D, sigma, h);
            band_violations += (W < eps) != (bare / (1.0 + eps) < k && k <= bare);
            ++points;
        }
    }
    o.require(band_violations == 0, "W band");
    o.detail << "G3 root rel " << worst_root << ", h* rate rel " << worst_hstar << ", CK rel " << worst_ck
             << ", W band " << band_violations << "/" << points << " violations";
    return o;
}

// ---- 2: contact survival against the PDE oracle -----------------------------

Outcome survival_vs_pde() {
    Outcome o;
    std::vector<double> t;
    for (int i = 0; i <= 50; ++i) t.push_back(1e-7 * std::pow(1e5, i / 50.0));
    for (double k_a : {0.1, 1.0}) {
        const auto pde = pde_survival(0.005, 0.005, k_a, 2.0, t);
        double worst = 0.0;
        for (std::size_t i = 0; i < t.size(); ++i) worst = std::max(worst, std::abs(pde[i] - contact_survival(k_a, 2.0, 0.005, t[i])));
        o.require(worst < 1e-3, "k_a = " + std::to_string(k_a));
        o.detail << "k_a " << k_a << ": max |dS| " << worst << "  ";
    }
    return o;
}

// ---- 3: mean binding time, meso against micro --------------------------------

Outcome binding_time() {
    Outcome o;
    RunSettings run;
    run.seed = 2024;
    // 4e4 replicas: at 1e4 the standard error of the difference (about 1.4%)
    // is too close to the 2% tolerance to separate a pass from noise.
    run.replicas = 40000;
    const auto rows = binding_time_experiment(20, run);
    const auto& meso = rows[0].stats;
    const auto& micro = rows[1].stats;
    const double rel = std::abs(meso.mean / micro.mean - 1.0);
    o.require(meso.censored == 0 && micro.censored == 0, "no censored replicas");
    o.require(rel < 0.02, "relative difference < 2%");
    o.detail << "meso " << meso.mean << " +- " << meso.se << ", micro " << micro.mean << " +- " << micro.se
             << " (n = " << micro.n << "), rel diff " << rel;
    return o;
}

// ---- 4: rebind-time distributions -------------------------------------------

Outcome rebind_distributions() {
    Outcome o;
    RunSettings run;
    run.seed = 99;
    run.replicas = 10000;
    const auto rows = rebind_experiment({1.0, 0.1}, 20, run);
    for (const auto& r : rows) {
        if (r.solver == SolverKind::Micro) continue;
        o.detail << to_string(r.solver) << "(k_a " << r.k_a << ") L1 " << r.l1_vs_micro << "  ";
        if (r.solver == SolverKind::Hybrid) o.require(r.l1_vs_micro < 0.05, "hybrid L1 < 0.05 at k_a " + std::to_string(r.k_a));
        if (r.solver == SolverKind::Meso && r.k_a == 1.0) o.require(r.l1_vs_micro > 0.15, "meso L1 > 0.15 at k_a 1");
    }
    return o;
}

// ---- 5: splitting-step convergence ------------------------------------------

Outcome dt_convergence_chain() {
    Outcome o;
    RunSettings run;
    run.seed = 7;
    run.replicas = 1000;
    const Model m = chain_model(1);
    const std::size_t s4 = static_cast<std::size_t>(*m.find_species("S4"));
    const DtConvergence res = dt_convergence(m, s4, {0.1, 0.001}, run, 1000, 1000);
    // rows: meso, micro, hybrid(0.1), hybrid(0.001)
    const auto& micro = res.boot[1];
    const auto& coarse = res.boot[2];
    const auto& fine = res.boot[3];
    std::vector<double> gain, gap;
    for (std::size_t b = 0; b < fine.size(); ++b) {
        gain.push_back(coarse[b] - fine[b]);
        gap.push_back(fine[b] - micro[b]);
    }
    const double lower = quantile(gain, 0.05);
    const double e_fine = res.rows[3].E, e_micro = res.rows[1].E;
    const double se_gap = standard_deviation(gap);
    o.require(lower > 0.0, "E(0.001) < E(0.1) at 95% confidence");
    o.require(std::abs(e_fine - e_micro) <= 3.0 * se_gap, "E(0.001) within 3 SE of the micro floor");
    for (const auto& r : res.rows) o.detail << r.label << (std::isnan(r.dt_split) ? "" : "(" + std::to_string(r.dt_split).substr(0, 5) + ")") << " E " << r.E << " +- " << r.E_se << "  ";
    o.detail << "5th pct of E(0.1)-E(0.001) " << lower << ", |E(0.001)-E_micro| " << std::abs(e_fine - e_micro)
             << " vs 3 SE " << 3.0 * se_gap;
    return o;
}

// ---- 6: partitioner worked examples -----------------------------------------

Outcome partition_examples() {
    Outcome o;
    auto micro_set = [](const Model& m) {
        const Network net(m);
        const CartesianMesh mesh(m.domain, m.config.voxels);
        const SplitPlan plan = build_split(net, mesh, partition_options(m));
        std::set<std::string> out;
        for (SpeciesId s = 0; s < plan.policy.size(); ++s)
            if (plan.policy[s].kind == PolicyKind::AlwaysMicro) out.insert(net.spec(s).name);
        return out;
    };
    const auto relay = micro_set(load_model(model_path("relay_activation.json")));
    const auto two_step = micro_set(load_model(model_path("relay_two_step.json")));
    const Model case6 = chain_model(6);
    const Network net6(case6);
    const bool all_meso = !build_split(net6, CartesianMesh(case6.domain, case6.config.voxels), partition_options(case6)).any_micro();
    o.require(relay == std::set<std::string>{"S1"}, "activation relay -> {S1}");
    o.require(two_step == std::set<std::string>{"S1"}, "two-step relay -> {S1}");
    o.require(all_meso, "chain case 6 -> all meso");
    o.detail << "activation relay {" << (relay.empty() ? "" : *relay.begin()) << "}, two-step relay {"
             << (two_step.empty() ? "" : *two_step.begin()) << "}, case 6 " << (all_meso ? "all meso" : "has micro");
    return o;
}

// ---- 7: two-resolution system -------------------------------------------------

Outcome two_resolution() {
    Outcome o;
    RunSettings run;
    run.seed = 31;
    run.replicas = 100;
    const auto res = two_resolution_experiment({20, 40, 80}, run, 200, 200);
    double worst_hybrid = 0.0, best_meso = kInf;
    for (const auto& r : res.rows) {
        o.detail << r.label << "(" << r.voxels << ") E " << r.E << " +- " << r.E_se << "  ";
        if (r.label == "hybrid") worst_hybrid = std::max(worst_hybrid, r.E);
        else best_meso = std::min(best_meso, r.E);
    }
    o.require(worst_hybrid < best_meso, "every hybrid E below the best meso E");
    return o;
}

// ---- 8: property suites -------------------------------------------------------

Outcome property_suites() {
    Outcome o;
    std::vector<props::Result> results;
    for (SolverKind s : {SolverKind::Micro, SolverKind::Meso, SolverKind::BdOracle}) results.push_back(props::free_diffusion_msd(s));
    results.push_back(props::uniform_meso_occupancy());
    results.push_back(props::uniform_micro_positions());
    results.push_back(props::switch_uniformity());
    results.push_back(props::hard_sphere_invariant(SolverKind::Micro));
    for (SolverKind s : {SolverKind::Meso, SolverKind::Micro, SolverKind::Hybrid, SolverKind::BdOracle}) {
        results.push_back(props::mass_bookkeeping(s));
        results.push_back(props::seed_reproducibility(s));
    }
    std::size_t failed = 0;
    for (const auto& r : results) {
        if (!r.pass) {
            ++failed;
            o.detail << "[" << r.detail << "] ";
        }
    }
    o.require(failed == 0, "all properties");
    o.detail << results.size() - failed << "/" << results.size() << " properties pass";
    return o;
}

// ---- 9: mesh-sweep accounting -------------------------------------------------

Outcome mesh_sweep_accounting() {
    Outcome o;
    RunSettings run;
    run.seed = 5;
    run.replicas = 1;
    const std::vector<std::int64_t> voxels{8, 12, 16, 24, 32};
    const SweepResult res = mesh_sweep(mesh_sweep_model, voxels, run, 0);
    double worst = 0.0;
    bool monotone = true;
    for (std::size_t i = 0; i < res.rows.size(); ++i) {
        const auto& r = res.rows[i];
        const double parts = r.t_meso + r.t_micro + r.t_switch;
        worst = std::max(worst, std::abs(parts / r.t_total - 1.0));
        if (i > 0) monotone = monotone && r.micro_species <= res.rows[i - 1].micro_species;
        o.detail << "h " << r.h << ": " << r.micro_species << " micro species, mean micro census "
                 << r.mean_micro_population << ", total " << r.t_total << " s  ";
    }
    o.require(worst <= 0.05, "column sums within 5% of the total");
    o.require(monotone, "micro species non-increasing as h shrinks");
    o.detail << "worst accounting gap " << worst;
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> only;
    for (int i = 1; i + 1 < argc; ++i) {
        if (std::string(argv[i]) == "--only") {
            std::stringstream ss(argv[i + 1]);
            for (std::string item; std::getline(ss, item, ',');) only.insert(std::stoi(item));
        }
    }
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"analytic identities", analytic_identities},
        {"contact survival vs PDE oracle", survival_vs_pde},
        {"mean binding time, meso vs micro", binding_time},
        {"rebind-time distributions", rebind_distributions},
        {"splitting-step convergence", dt_convergence_chain},
        {"partitioner worked examples", partition_examples},
        {"two-resolution system", two_resolution},
        {"property suites", property_suites},
        {"mesh-sweep accounting", mesh_sweep_accounting},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!only.empty() && !only.count(id)) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail << "exception: " << e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("%s  %d. %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(),
                    o.detail.str().c_str(), secs);
        std::fflush(stdout);
        failed += !o.pass;
    }
    return failed == 0 ? 0 : 1;
}
