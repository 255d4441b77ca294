#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "rdhybrid/csv.hpp"
#include "rdhybrid/experiments.hpp"
#include "rdhybrid/oracles.hpp"
#include "rdhybrid/partition.hpp"
#include "rdhybrid/rates.hpp"
#include "rdhybrid/runner.hpp"

using namespace rdhybrid;
namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kInputError = 1, kUnresolvable = 2, kNumerical = 3 };

struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Manifest {
    std::string model;
    std::string out = ".";
    std::optional<std::uint64_t> seed;
    std::size_t replicas = 0;
    unsigned threads = 0;
    std::optional<double> dt_split;
    std::optional<double> epsilon;
    std::optional<double> kfactor;
    std::vector<std::int64_t> voxels;
    std::string solver;
    std::string experiment;
    bool force_meso = false;
    std::vector<std::string> force_micro;
    bool trajectories = false;
    std::size_t oracle_replicas = 0;
};

void add_common(CLI::App* sub, Manifest& m) {
    sub->add_option("--model", m.model, "Model JSON file");
    sub->add_option("--out", m.out, "Output directory");
    sub->add_option("--seed", m.seed, "Master seed (default: the model's rng_seed)");
    sub->add_option("--replicas", m.replicas, "Number of replicas")->check(CLI::PositiveNumber);
    sub->add_option("--threads", m.threads, "Worker threads (0: all cores)");
    sub->add_option("--dt-split", m.dt_split, "Splitting time step")->check(CLI::PositiveNumber);
    sub->add_option("--epsilon", m.epsilon, "Resolution threshold on W")->check(CLI::PositiveNumber);
    sub->add_option("--kfactor", m.kfactor, "Factor K in t_m")->check(CLI::PositiveNumber);
    sub->add_option("--voxels", m.voxels, "Voxels along x (comma-separated list for sweeps)")
        ->delimiter(',')
        ->check(CLI::PositiveNumber);
    sub->add_option("--solver", m.solver, "meso | micro | hybrid | bd-oracle");
    sub->add_option("--experiment", m.experiment,
                    "rebind | binding-time | eps-sweep | dt-convergence | mesh-sweep | two-resolution");
    sub->add_flag("--force-meso", m.force_meso, "Put every species on the mesoscale");
    sub->add_option("--force-micro", m.force_micro, "Species kept on the microscale")->delimiter(',');
}

std::int64_t single_voxels(const Manifest& m) {
    if (m.voxels.size() > 1) throw InputError("--voxels takes a single value for this command");
    return m.voxels.empty() ? 0 : m.voxels.front();
}

Model load_with_overrides(const Manifest& m) {
    if (m.model.empty()) throw InputError("--model is required");
    Model model = load_model(m.model);
    if (const auto nx = single_voxels(m)) model.config.voxels = nx;
    if (m.dt_split) model.config.dt_split = *m.dt_split;
    if (m.epsilon) model.config.epsilon = *m.epsilon;
    if (m.kfactor) model.config.K = *m.kfactor;
    if (!m.solver.empty()) model.config.solver = solver_from_string(m.solver);
    if (m.seed) model.config.rng_seed = *m.seed;
    return model;
}

PartitionOptions partition_with_overrides(const Model& model, const Manifest& m) {
    PartitionOptions p = partition_options(model);
    p.force_meso = m.force_meso;
    for (const auto& name : m.force_micro) {
        const auto id = model.find_species(name);
        if (!id) throw InputError("--force-micro: unknown species '" + name + "'");
        p.force_micro.push_back(*id);
    }
    return p;
}

std::ofstream open_out(const Manifest& m, const std::string& name) {
    fs::create_directories(m.out);
    const fs::path path = fs::path(m.out) / name;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot write " + path.string());
    std::cerr << "wrote " << path.string() << "\n";
    return f;
}

RunSettings settings(const Manifest& m, std::uint64_t seed) {
    RunSettings r;
    r.seed = seed;
    r.threads = m.threads;
    r.replicas = m.replicas;
    return r;
}

void print_plan(std::ostream& os, const Network& net, const SplitPlan& plan) {
    for (SpeciesId s = 0; s < net.species_count(); ++s) {
        const auto& p = plan.policy[s];
        os << "  " << std::left << std::setw(10) << net.spec(s).name << to_string(p.kind);
        if (p.kind == PolicyKind::MicroUntilAge) os << " t_m=" << p.t_m;
        os << "\n";
    }
}

int cmd_partition(const Manifest& m) {
    const Model model = load_with_overrides(m);
    const Network net(model);
    const CartesianMesh mesh(model.domain, model.config.voxels);
    const RateTable rates = build_rate_table(net, mesh);
    const auto popts = partition_with_overrides(model, m);
    const SplitPlan plan = build_split(net, mesh, popts);
    const std::uint64_t seed = model.config.rng_seed;

    std::cout << "h = " << mesh.h() << ", epsilon = " << popts.epsilon << ", K = " << popts.K << "\n";
    auto f = open_out(m, "partition.csv");
    CsvWriter csv(f, {"reaction", "label", "sigma", "D", "k_a", "h", "h_star", "W", "below_optimal", "resolved", "E_hybrid"},
                  seed, "hybrid");
    std::cout << "bimolecular reactions:\n";
    for (const auto& rr : plan.reactions) {
        const auto& rate = rates.reactions[rr.reaction];
        const auto& ch = net.reactions()[rr.reaction];
        // Largest t_m among the plan's dissociation products feeding this reaction.
        double tm = 0.0;
        for (SpeciesId s : ch.reactants)
            if (plan.policy[s].kind == PolicyKind::MicroUntilAge) tm = std::max(tm, plan.policy[s].t_m);
        const double e = rr.resolved ? 0.0 : estimate_e_hybrid(rate.k_a, rate.D, rate.sigma, mesh.h(), tm);
        std::cout << "  " << std::left << std::setw(16) << ch.label << " W = " << rr.W
                  << (rr.resolved ? "  resolved" : "  under-resolved") << (rr.below_optimal ? " (h < h*)" : "")
                  << "\n";
        csv << static_cast<std::uint64_t>(rr.reaction) << ch.label << rate.sigma << rate.D << rate.k_a << mesh.h()
            << rate.h_star << rr.W << static_cast<std::int64_t>(rr.below_optimal) << static_cast<std::int64_t>(rr.resolved)
            << e;
        csv.end_row();
    }
    std::cout << "plan:\n";
    print_plan(std::cout, net, plan);
    auto g = open_out(m, "plan.csv");
    CsvWriter pcsv(g, {"species", "policy", "t_m"}, seed, "hybrid");
    for (SpeciesId s = 0; s < net.species_count(); ++s) {
        pcsv << net.spec(s).name << to_string(plan.policy[s].kind) << plan.policy[s].t_m;
        pcsv.end_row();
    }
    return kOk;
}

int cmd_rates(const Manifest& m) {
    const Model model = load_with_overrides(m);
    const Network net(model);
    const CartesianMesh mesh(model.domain, model.config.voxels);
    const RateTable rates = build_rate_table(net, mesh);
    auto f = open_out(m, "rates.csv");
    CsvWriter csv(f, {"reaction", "label", "kind", "rate", "sigma", "D", "h", "h_star", "k_meso", "W", "below_optimal"},
                  model.config.rng_seed, "meso");
    std::cout << "h = " << mesh.h() << "\n";
    for (SpeciesId s = 0; s < net.species_count(); ++s)
        std::cout << "  jump " << net.spec(s).name << ": " << rates.jump[s] << "\n";
    for (const auto& r : rates.reactions) {
        const auto& ch = net.reactions()[r.reaction];
        const bool bi = ch.kind == ReactionKind::Bimolecular;
        std::cout << "  " << std::left << std::setw(16) << ch.label << (bi ? " k_meso = " : " k = ") << r.k_meso;
        if (bi) std::cout << "  h* = " << r.h_star << "  W = " << r.W.W << (r.denominator_ok ? "" : "  (no meso rate)");
        std::cout << "\n";
        csv << static_cast<std::uint64_t>(r.reaction) << ch.label << (bi ? "bimolecular" : "unimolecular") << ch.rate;
        if (bi) csv << r.sigma << r.D << r.h << r.h_star << r.k_meso << r.W.W << static_cast<std::int64_t>(r.W.below_optimal);
        else csv << "" << "" << r.h << "" << r.k_meso << "" << "";
        csv.end_row();
    }
    return kOk;
}

void write_ensemble(const Manifest& m, const std::vector<TrajectoryResult>& runs, const Prepared& prep,
                    std::uint64_t seed) {
    const char* solver = to_string(prep.solver);
    const auto& names = prep.net->species();
    const MeanTable mean = mean_counts(runs);
    auto f = open_out(m, "mean.csv");
    CsvWriter csv(f, {"time", "species", "mean", "se"}, seed, solver);
    const double n = static_cast<double>(runs.size());
    for (std::size_t k = 0; k < prep.sample_times.size(); ++k)
        for (std::size_t s = 0; s < names.size(); ++s) {
            double ss = 0.0;
            for (const auto& r : runs) {
                const double d = static_cast<double>(r.samples.counts[k][s]) - mean[k][s];
                ss += d * d;
            }
            const double se = runs.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
            csv << prep.sample_times[k] << names[s].name << mean[k][s] << se;
            csv.end_row();
        }
    if (m.trajectories) {
        auto g = open_out(m, "trajectories.csv");
        CsvWriter t(g, {"replica", "time", "species", "count"}, seed, solver);
        for (std::size_t r = 0; r < runs.size(); ++r)
            for (std::size_t k = 0; k < prep.sample_times.size(); ++k)
                for (std::size_t s = 0; s < names.size(); ++s) {
                    t << static_cast<std::uint64_t>(r) << prep.sample_times[k] << names[s].name
                      << runs[r].samples.counts[k][s];
                    t.end_row();
                }
    }
    auto h = open_out(m, "timings.csv");
    CsvWriter t(h, {"replica", "meso_s", "micro_s", "switching_s", "total_s", "reactions"}, seed, solver);
    for (std::size_t r = 0; r < runs.size(); ++r) {
        const auto& tm = runs[r].timings;
        t << static_cast<std::uint64_t>(r) << tm.meso << tm.micro << tm.switching << tm.total << runs[r].reactions;
        t.end_row();
    }
}

void write_sweep(const Manifest& m, const SweepResult& res, std::uint64_t seed) {
    auto f = open_out(m, "sweep.csv");
    CsvWriter csv(f, {"voxels", "h", "micro_species", "t_meso", "t_micro", "t_switch", "t_total", "mean_micro",
                      "mean_meso", "E"},
                  seed, "hybrid");
    for (const auto& r : res.rows) {
        csv << r.voxels << r.h << static_cast<std::uint64_t>(r.micro_species) << r.t_meso << r.t_micro << r.t_switch
            << r.t_total << r.mean_micro_population << r.mean_meso_population << r.E;
        csv.end_row();
    }
    auto g = open_out(m, "census.csv");
    CsvWriter c(g, {"voxels", "time", "micro", "meso"}, seed, "hybrid");
    for (std::size_t i = 0; i < res.rows.size(); ++i)
        for (const auto& p : res.census[i]) {
            c << res.rows[i].voxels << p.t << p.micro << p.meso;
            c.end_row();
        }
}

int run_experiment(const Manifest& m) {
    const std::uint64_t seed = m.seed.value_or(1);
    const RunSettings run = settings(m, seed);
    const std::string& e = m.experiment;
    if (e == "rebind") {
        const auto rows = rebind_experiment({1.0, 0.1}, m.voxels.empty() ? 20 : single_voxels(m), run);
        auto f = open_out(m, "rebind.csv");
        CsvWriter csv(f, {"solver", "k_a", "voxels", "bin_lo", "bin_hi", "fraction"}, seed, "micro,hybrid,meso");
        auto g = open_out(m, "rebind_summary.csv");
        CsvWriter sum(g, {"solver", "k_a", "voxels", "samples", "censored", "mean", "se", "l1_vs_micro"}, seed,
                      "micro,hybrid,meso");
        for (const auto& r : rows) {
            for (std::size_t b = 0; b < r.histogram.fraction.size(); ++b) {
                csv << to_string(r.solver) << r.k_a << r.voxels << r.histogram.edges[b] << r.histogram.edges[b + 1]
                    << r.histogram.fraction[b];
                csv.end_row();
            }
            sum << to_string(r.solver) << r.k_a << r.voxels << static_cast<std::uint64_t>(r.stats.n)
                << static_cast<std::uint64_t>(r.stats.censored) << r.stats.mean << r.stats.se << r.l1_vs_micro;
            sum.end_row();
            std::cout << to_string(r.solver) << " k_a=" << r.k_a << " mean=" << r.stats.mean << " L1=" << r.l1_vs_micro
                      << "\n";
        }
    } else if (e == "binding-time") {
        const auto rows = binding_time_experiment(m.voxels.empty() ? 20 : single_voxels(m), run);
        auto f = open_out(m, "binding_time.csv");
        CsvWriter csv(f, {"solver", "samples", "censored", "mean", "se"}, seed, "meso,micro");
        for (const auto& r : rows) {
            csv << to_string(r.solver) << static_cast<std::uint64_t>(r.stats.n)
                << static_cast<std::uint64_t>(r.stats.censored) << r.stats.mean << r.stats.se;
            csv.end_row();
            std::cout << to_string(r.solver) << " mean binding time " << r.stats.mean << " +- " << r.stats.se << "\n";
        }
    } else if (e == "eps-sweep") {
        const std::vector<std::int64_t> nx = m.voxels.empty() ? std::vector<std::int64_t>{10, 20, 30, 40, 50} : m.voxels;
        const auto rows = eps_sweep({0.001, 0.003, 0.01, 0.03, 0.1, 0.3, 1.0}, nx, run);
        auto f = open_out(m, "eps_sweep.csv");
        CsvWriter csv(f, {"k2", "voxels", "h", "W", "E", "E_se"}, seed, "meso,micro");
        for (const auto& r : rows) {
            csv << r.k2 << r.voxels << r.h << r.W << r.E << r.E_se;
            csv.end_row();
        }
    } else if (e == "dt-convergence") {
        const Model base = m.model.empty() ? chain_model(1) : load_with_overrides(m);
        const auto res = dt_convergence(base, base.species.size() - 1, {0.1, 0.01, 0.001}, run);
        auto f = open_out(m, "dt_convergence.csv");
        CsvWriter csv(f, {"solver", "dt_split", "voxels", "E", "E_se"}, seed, "meso,micro,hybrid,bd-oracle");
        for (const auto& r : res.rows) {
            csv << r.label << r.dt_split << r.voxels << r.E << r.E_se;
            csv.end_row();
            std::cout << r.label << " dt=" << r.dt_split << " E=" << r.E << " +- " << r.E_se << "\n";
        }
    } else if (e == "two-resolution") {
        const std::vector<std::int64_t> nx = m.voxels.empty() ? std::vector<std::int64_t>{20, 40, 80} : m.voxels;
        const auto res = two_resolution_experiment(nx, run);
        auto f = open_out(m, "two_resolution.csv");
        CsvWriter csv(f, {"solver", "voxels", "E", "E_se"}, seed, "meso,hybrid,bd-oracle");
        for (const auto& r : res.rows) {
            csv << r.label << r.voxels << r.E << r.E_se;
            csv.end_row();
        }
    } else if (e == "mesh-sweep") {
        const std::vector<std::int64_t> nx =
            m.voxels.empty() ? std::vector<std::int64_t>{8, 10, 16, 20, 32, 40} : m.voxels;
        write_sweep(m, mesh_sweep(mesh_sweep_model, nx, run, m.oracle_replicas), seed);
    } else {
        throw InputError("unknown experiment '" + e + "'");
    }
    return kOk;
}

int cmd_simulate(const Manifest& m) {
    if (!m.experiment.empty()) return run_experiment(m);
    const Model model = load_with_overrides(m);
    const auto popts = partition_with_overrides(model, m);
    const Prepared prep = prepare(model, model.config.solver, popts);
    const std::uint64_t seed = model.config.rng_seed;
    const auto runs = run_replicas(prep, seed, m.replicas ? m.replicas : 1, m.threads);
    write_ensemble(m, runs, prep, seed);
    return kOk;
}

int cmd_sweep(const Manifest& m) {
    const std::vector<std::int64_t> nx = m.voxels.empty() ? std::vector<std::int64_t>{8, 10, 16, 20, 32, 40} : m.voxels;
    std::function<Model(std::int64_t)> model_at = mesh_sweep_model;
    std::uint64_t seed = m.seed.value_or(1);
    if (!m.model.empty()) {
        Manifest single = m;
        single.voxels.clear();
        const Model base = load_with_overrides(single);
        seed = base.config.rng_seed;
        model_at = [base](std::int64_t n) {
            Model x = base;
            x.config.voxels = n;
            return x;
        };
    }
    const auto res = mesh_sweep(model_at, nx, settings(m, seed), m.oracle_replicas);
    for (const auto& r : res.rows)
        std::cout << "voxels=" << r.voxels << " h=" << r.h << " micro species=" << r.micro_species
                  << " total=" << r.t_total << "s\n";
    write_sweep(m, res, seed);
    return kOk;
}

struct OracleArgs {
    double sigma = 0.005;
    double D = 2.0;
    double k_a = 1.0;
    double r0 = 0.0;  // 0: contact
    double t_min = 1e-7;
    double t_max = 1e-2;
    std::size_t points = 41;
};

int cmd_oracle(const Manifest& m, const std::string& mode, const OracleArgs& a) {
    const std::uint64_t seed = m.seed.value_or(1);
    if (mode == "pde") {
        if (!(a.sigma > 0 && a.D > 0 && a.k_a >= 0 && a.t_min > 0 && a.t_max > a.t_min && a.points >= 2))
            throw InputError("oracle pde: need sigma, D > 0, k_a >= 0, 0 < t-min < t-max, points >= 2");
        const double r0 = a.r0 > 0 ? a.r0 : a.sigma;
        std::vector<double> times;
        for (std::size_t i = 0; i < a.points; ++i)
            times.push_back(a.t_min * std::pow(a.t_max / a.t_min, static_cast<double>(i) / static_cast<double>(a.points - 1)));
        const auto pde = pde_survival(r0, a.sigma, a.k_a, a.D, times);
        auto f = open_out(m, "oracle_survival.csv");
        CsvWriter csv(f, {"time", "survival_pde", "survival_contact_formula"}, seed, "pde");
        for (std::size_t i = 0; i < times.size(); ++i) {
            csv << times[i] << pde[i] << (r0 == a.sigma ? contact_survival(a.k_a, a.D, a.sigma, times[i]) : NAN);
            csv.end_row();
        }
        return kOk;
    }
    if (mode == "bd") {
        Manifest bd = m;
        bd.solver = "bd-oracle";
        return cmd_simulate(bd);
    }
    throw InputError("oracle mode must be 'pde' or 'bd'");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hybrid mesoscopic/microscopic reaction-diffusion simulator"};
    app.require_subcommand(1);
    Manifest m;
    auto* partition = app.add_subcommand("partition", "Resolution table and scale plan for a model");
    auto* simulate = app.add_subcommand("simulate", "Run replicas or a named experiment");
    auto* sweep = app.add_subcommand("sweep", "Timing decomposition over a list of mesh resolutions");
    auto* oracle = app.add_subcommand("oracle", "Reference solutions: radial PDE or Brownian dynamics");
    auto* rates = app.add_subcommand("rates", "Mesoscopic rates and W for each reaction");
    for (auto* sub : {partition, simulate, sweep, oracle, rates}) add_common(sub, m);
    simulate->add_flag("--trajectories", m.trajectories, "Also write per-replica trajectories");
    oracle->add_flag("--trajectories", m.trajectories, "Also write per-replica trajectories");
    for (auto* sub : {simulate, sweep})
        sub->add_option("--oracle-replicas", m.oracle_replicas, "Oracle replicas for sweep errors (0: none)");

    std::string mode = "pde";
    OracleArgs oa;
    oracle->add_option("mode", mode, "pde | bd");
    oracle->add_option("--sigma", oa.sigma, "Contact radius");
    oracle->add_option("--D", oa.D, "Relative diffusion constant");
    oracle->add_option("--ka", oa.k_a, "Intrinsic association rate");
    oracle->add_option("--r0", oa.r0, "Initial separation (default: contact)");
    oracle->add_option("--t-min", oa.t_min, "First output time");
    oracle->add_option("--t-max", oa.t_max, "Last output time");
    oracle->add_option("--points", oa.points, "Log-spaced output times");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kInputError;
    }

    try {
        if (*partition) return cmd_partition(m);
        if (*simulate) return cmd_simulate(m);
        if (*sweep) return cmd_sweep(m);
        if (*oracle) return cmd_oracle(m, mode, oa);
        if (*rates) return cmd_rates(m);
    } catch (const UnresolvableReaction& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUnresolvable;
    } catch (const NonPositiveDenominator& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kNumerical;
    } catch (const GridResolutionError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kNumerical;
    } catch (const ModelError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kInputError;
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kInputError;
    } catch (const std::invalid_argument& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kInputError;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kInputError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kNumerical;
    }
    return kOk;
}
