#include "properties.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rdhybrid/hybrid.hpp"
#include "rdhybrid/micro.hpp"
#include "rdhybrid/npm.hpp"
#include "rdhybrid/oracles.hpp"
#include "rdhybrid/runner.hpp"
#include "rdhybrid/special.hpp"

namespace rdhybrid::props {

namespace {

SpeciesSpec make_species(const std::string& name, double D, double sigma, std::int64_t count) {
    SpeciesSpec s;
    s.name = name;
    s.D = D;
    s.sigma = sigma;
    s.initial_count = count;
    return s;
}

Model diffusion_model(double side, std::int64_t voxels, std::int64_t count, Vec3 start, double t_final) {
    Model m;
    m.domain.upper = {side, side, side};
    SpeciesSpec a = make_species("A", 1.0, 0.001, count);
    a.initial_placement = {PlacementKind::FixedPoint, start};
    m.species = {a};
    m.config.t_final = t_final;
    m.config.voxels = voxels;
    m.config.sample_times = {0.0, t_final};
    return m;
}

Model reversible_model(std::int64_t voxels) {
    Model m;
    m.domain.upper = {0.2, 0.2, 0.2};
    m.species = {make_species("A", 1.0, 0.01, 30), make_species("B", 1.0, 0.01, 30), make_species("C", 0.5, 0.01, 10)};
    ReactionSpec bind;
    bind.reactants = {"A", "B"};
    bind.products = {"C"};
    bind.rate = 0.5;
    ReactionSpec split;
    split.reactants = {"C"};
    split.products = {"A", "B"};
    split.rate = 20.0;
    m.reactions = {bind, split};
    m.config.t_final = 0.2;
    m.config.dt_split = 1e-3;
    m.config.voxels = voxels;
    m.config.sample_times = uniform_sample_times(0.2, 201);
    return m;
}

std::string fmt(double x) {
    std::ostringstream s;
    s.precision(4);
    s << x;
    return s.str();
}

// Upper alpha quantile of chi-square with k degrees of freedom (Wilson-Hilferty).
double chi2_critical(double k, double alpha) {
    const double z = normal_upper_quantile(alpha);
    const double a = 2.0 / (9.0 * k);
    return k * std::pow(1.0 - a + z * std::sqrt(a), 3.0);
}

}  // namespace

double ks_uniform(std::vector<double> x) {
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double lo = static_cast<double>(i) / n;
        const double hi = static_cast<double>(i + 1) / n;
        d = std::max({d, std::abs(x[i] - lo), std::abs(hi - x[i])});
    }
    return d;
}

Result free_diffusion_msd(SolverKind solver, std::size_t samples, double tolerance) {
    const double T = 0.01;
    const Vec3 x0{2.05, 2.05, 2.05};
    const Model model = diffusion_model(4.0, 40, static_cast<std::int64_t>(samples), x0, T);
    const Network net(model);
    const CartesianMesh mesh(model.domain, model.config.voxels);
    const RateTable rates = build_rate_table(net, mesh);
    Rng rng(17);
    IdSource ids;
    auto init = initial_particles(net, mesh.domain(), rng, ids);
    std::vector<Vec3> end;
    std::size_t next = 0;
    switch (solver) {
        case SolverKind::Meso: {
            NpmSolver npm(net, mesh, rates, rng, ids);
            for (auto p : init) {
                p.voxel = mesh.locate(p.pos);
                npm.add(p);
            }
            npm.run(T, nullptr, next);
            for (auto s : npm.live_slots()) end.push_back(mesh.voxel_center(npm.particle(s).voxel));
            break;
        }
        case SolverKind::Micro: {
            MicroSolver micro(net, mesh, rates, rng, ids);
            for (const auto& p : init) micro.add(p);
            micro.run(T, nullptr, next, nullptr);
            for (const auto& p : micro.live_particles()) end.push_back(p.pos);
            break;
        }
        case SolverKind::BdOracle: {
            BdSimulator bd(net, mesh.domain(), rng, ids);
            for (const auto& p : init) bd.add(p);
            bd.run(T, nullptr, next);
            for (const auto& p : bd.live_particles()) end.push_back(p.pos);
            break;
        }
        case SolverKind::Hybrid:
            return {false, "hybrid has no free-diffusion MSD check"};
    }
    double msd = 0.0;
    for (const auto& p : end) msd += dot(p - x0, p - x0);
    msd /= static_cast<double>(end.size());
    const double expected = 6.0 * T;
    const double rel = std::abs(msd / expected - 1.0);
    return {end.size() == samples && rel < tolerance,
            std::string(to_string(solver)) + " MSD " + fmt(msd) + " vs " + fmt(expected) + " (rel " + fmt(rel) + ")"};
}

Result uniform_meso_occupancy(std::size_t particles) {
    const Model model = diffusion_model(1.0, 4, static_cast<std::int64_t>(particles), {0.1, 0.1, 0.1}, 2.0);
    const Network net(model);
    const CartesianMesh mesh(model.domain, model.config.voxels);
    const RateTable rates = build_rate_table(net, mesh);
    Rng rng(5);
    IdSource ids;
    NpmSolver npm(net, mesh, rates, rng, ids);
    for (auto p : initial_particles(net, mesh.domain(), rng, ids)) {
        p.voxel = mesh.locate(p.pos);
        npm.add(p);
    }
    std::size_t next = 0;
    npm.run(model.config.t_final, nullptr, next);
    const double expected = static_cast<double>(particles) / static_cast<double>(mesh.size());
    double chi2 = 0.0;
    for (VoxelIndex v = 0; v < mesh.size(); ++v) {
        const double d = static_cast<double>(npm.voxel_count(v, 0)) - expected;
        chi2 += d * d / expected;
    }
    const double crit = chi2_critical(static_cast<double>(mesh.size() - 1), 1e-3);
    return {chi2 < crit, "chi2 " + fmt(chi2) + " < " + fmt(crit)};
}

Result uniform_micro_positions(std::size_t particles) {
    const Model model = diffusion_model(1.0, 4, static_cast<std::int64_t>(particles), {0.1, 0.1, 0.1}, 2.0);
    const Network net(model);
    const CartesianMesh mesh(model.domain, model.config.voxels);
    const RateTable rates = build_rate_table(net, mesh);
    Rng rng(6);
    IdSource ids;
    MicroSolver micro(net, mesh, rates, rng, ids);
    for (const auto& p : initial_particles(net, mesh.domain(), rng, ids)) micro.add(p);
    std::size_t next = 0;
    // Several windows so that wall reflections are exercised repeatedly.
    for (int k = 1; k <= 20; ++k) micro.run(0.1 * k, nullptr, next, nullptr);
    std::vector<double> occupancy(static_cast<std::size_t>(mesh.size()), 0.0);
    for (const auto& p : micro.live_particles()) occupancy[static_cast<std::size_t>(mesh.locate(p.pos))] += 1.0;
    const double expected = static_cast<double>(particles) / static_cast<double>(mesh.size());
    double chi2 = 0.0;
    for (double n : occupancy) chi2 += (n - expected) * (n - expected) / expected;
    const double crit = chi2_critical(static_cast<double>(mesh.size() - 1), 1e-3);
    return {chi2 < crit, "chi2 " + fmt(chi2) + " < " + fmt(crit)};
}

Result switch_uniformity(std::size_t switches) {
    BoxDomain box;
    const CartesianMesh mesh(box, 10);
    Rng rng(3);
    const VoxelIndex v = mesh.index(3, 7, 5);
    const Vec3 lo = mesh.voxel_lower(v);
    std::vector<std::vector<double>> x(3);
    std::size_t outside = 0;
    for (std::size_t i = 0; i < switches; ++i) {
        Particle p;
        p.voxel = v;
        const Particle q = switch_to_micro(p, mesh, rng);
        if (mesh.locate(q.pos) != v || q.voxel != v) ++outside;
        for (int a = 0; a < 3; ++a) x[a].push_back((q.pos[a] - lo[a]) / mesh.h());
    }
    const double crit = 1.95 / std::sqrt(static_cast<double>(switches));
    double worst = 0.0;
    for (auto& axis : x) worst = std::max(worst, ks_uniform(axis));
    return {worst < crit && outside == 0,
            "KS " + fmt(worst) + " < " + fmt(crit) + ", " + std::to_string(outside) + " outside the voxel"};
}

Result hard_sphere_invariant(SolverKind solver) {
    Model m;
    m.domain.upper = {0.2, 0.2, 0.2};
    m.species = {make_species("A", 1.0, 0.005, 150), make_species("B", 1.0, 0.005, 150),
                 make_species("C", 1.0, 0.005, 0)};
    ReactionSpec bind;
    bind.reactants = {"A", "B"};
    bind.products = {"C"};
    bind.rate = 0.001;
    m.reactions = {bind};
    m.config.voxels = 4;
    const Network net(m);
    const CartesianMesh mesh(m.domain, m.config.voxels);
    const RateTable rates = build_rate_table(net, mesh);
    Rng rng(9);
    IdSource ids;
    const auto init = initial_particles(net, mesh.domain(), rng, ids);
    const double sigma = 0.01 * (1.0 - 1e-9);
    double closest = kInf;
    std::size_t checks = 0;
    auto check = [&](const std::vector<Particle>& ps) {
        for (std::size_t i = 0; i < ps.size(); ++i)
            for (std::size_t k = i + 1; k < ps.size(); ++k)
                if (net.reactive(ps[i].species, ps[k].species)) closest = std::min(closest, norm(ps[i].pos - ps[k].pos));
        ++checks;
    };
    std::size_t next = 0;
    if (solver == SolverKind::Micro) {
        MicroSolver micro(net, mesh, rates, rng, ids);
        // Start from a non-overlapping configuration.
        std::vector<Particle> placed;
        for (auto p : init) {
            bool ok = false;
            while (!ok) {
                ok = true;
                for (const auto& q : placed)
                    if (net.reactive(p.species, q.species) && norm(p.pos - q.pos) < 0.0101) ok = false;
                if (!ok)
                    for (int a = 0; a < 3; ++a) p.pos[a] = rng.uniform(0.0, 0.2);
            }
            placed.push_back(p);
            micro.add(p);
        }
        for (int k = 1; k <= 100; ++k) {
            micro.run(2e-4 * k, nullptr, next, nullptr);
            check(micro.live_particles());
        }
    } else {
        return {false, "hard-sphere check is defined for the micro solver"};
    }
    return {closest >= sigma, "closest reactive pair " + fmt(closest) + " >= 0.01 over " + std::to_string(checks) + " updates"};
}

Result mass_bookkeeping(SolverKind solver, std::size_t replicas) {
    const Model m = reversible_model(2);
    const Prepared prep = prepare(m, solver, partition_options(m));
    std::size_t bad = 0;
    std::size_t census_bad = 0;
    std::uint64_t reactions = 0;
    bool any_micro_and_meso = false;
    for (std::size_t r = 0; r < replicas; ++r) {
        const auto res = run_trajectory(prep, 21, r);
        reactions += res.reactions;
        std::int64_t total_prev = -1;
        for (const auto& row : res.samples.counts) {
            if (row[0] + row[2] != 40 || row[1] + row[2] != 40) ++bad;
            total_prev = row[0] + row[1] + row[2];
        }
        (void)total_prev;
        for (const auto& c : res.census) {
            // Every census total is reachable: A + B + C = 80 - C, so C = 80 - total.
            const std::int64_t total = c.micro + c.meso;
            if (total < 40 || total > 80) ++census_bad;
            if (c.micro > 0 && c.meso > 0) any_micro_and_meso = true;
        }
    }
    const bool mixed_ok = solver != SolverKind::Hybrid || any_micro_and_meso;
    return {bad == 0 && census_bad == 0 && reactions > 0 && mixed_ok,
            std::string(to_string(solver)) + ": " + std::to_string(bad) + " bad samples, " +
                std::to_string(census_bad) + " bad census points, " + std::to_string(reactions) + " reactions" +
                (solver == SolverKind::Hybrid ? (any_micro_and_meso ? ", both scales populated" : ", one scale only")
                                              : "")};
}

Result seed_reproducibility(SolverKind solver) {
    const Model m = reversible_model(2);
    const Prepared prep = prepare(m, solver, partition_options(m));
    const auto a = run_ensemble(prep, 99, 4, 1, true);
    const auto b = run_ensemble(prep, 99, 4, 3, true);
    const auto c = run_ensemble(prep, 100, 4, 1, true);
    bool same = true;
    for (std::size_t r = 0; r < 4; ++r) same = same && a.trajectories[r].samples.counts == b.trajectories[r].samples.counts;
    bool differs = false;
    for (std::size_t r = 0; r < 4; ++r) differs = differs || a.trajectories[r].samples.counts != c.trajectories[r].samples.counts;
    return {same && differs, std::string(to_string(solver)) + (same ? ": identical across thread counts" : ": differs across thread counts") +
                                 (differs ? ", other seed differs" : ", other seed identical")};
}

}  // namespace rdhybrid::props
