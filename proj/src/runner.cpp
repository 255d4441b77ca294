#include "rdhybrid/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace rdhybrid {

PartitionOptions partition_options(const Model& model) {
    PartitionOptions p;
    p.epsilon = model.config.epsilon;
    p.K = model.config.K;
    p.t_m_override = model.config.t_m_override;
    return p;
}

Prepared prepare(const Model& model, SolverKind solver, const PartitionOptions& partition) {
    Prepared prep;
    prep.model = model;
    prep.solver = solver;
    prep.net = std::make_shared<const Network>(model);
    prep.mesh = std::make_shared<const CartesianMesh>(model.domain, model.config.voxels);
    prep.rates = std::make_shared<const RateTable>(build_rate_table(*prep.net, *prep.mesh));
    const std::size_t n = prep.net->species_count();
    switch (solver) {
        case SolverKind::Meso:
            prep.plan = SplitPlan::uniform(n, PolicyKind::AlwaysMeso);
            break;
        case SolverKind::Micro:
        case SolverKind::BdOracle:
            prep.plan = SplitPlan::uniform(n, PolicyKind::AlwaysMicro);
            break;
        case SolverKind::Hybrid:
            prep.plan = build_split(*prep.net, *prep.mesh, partition);
            break;
    }
    prep.sample_times = model.config.sample_times.empty() ? uniform_sample_times(model.config.t_final, 101)
                                                          : model.config.sample_times;
    return prep;
}

std::vector<Particle> initial_particles(const Network& net, const BoxDomain& box, Rng& rng, IdSource& ids) {
    std::vector<Particle> out;
    for (SpeciesId s = 0; s < net.species_count(); ++s) {
        const auto& spec = net.spec(s);
        for (std::int64_t k = 0; k < spec.initial_count; ++k) {
            Particle p;
            p.id = ids.take();
            p.species = s;
            p.birth = -kInf;
            if (spec.initial_placement.kind == PlacementKind::FixedPoint) {
                p.pos = spec.initial_placement.point;
            } else {
                for (int a = 0; a < 3; ++a) p.pos[a] = rng.uniform(box.lower[a], box.upper[a]);
            }
            out.push_back(p);
        }
    }
    return out;
}

namespace {

void add_final(SampleBuffer& samples, std::size_t& next, double t_final, const std::vector<std::int64_t>& counts) {
    for (; next < samples.times.size() && samples.times[next] <= t_final; ++next)
        for (std::size_t s = 0; s < counts.size(); ++s) samples.counts[next][s] += counts[s];
}

}  // namespace

TrajectoryResult run_trajectory(const Prepared& prep, std::uint64_t seed, std::uint64_t replica,
                                const TrajectoryOptions& opts) {
    const Network& net = *prep.net;
    const CartesianMesh& mesh = *prep.mesh;
    const double T = prep.model.config.t_final;
    Rng rng = Rng::for_replica(seed, replica);
    TrajectoryResult res;
    res.samples = SampleBuffer(prep.sample_times, net.species_count());
    IdSource ids;
    std::vector<Particle> init = opts.initial ? opts.initial(prep, rng, ids) : initial_particles(net, mesh.domain(), rng, ids);
    std::size_t next = 0;

    bool stop = false;
    const auto observe = [&](const ReactionRecord& r) {
        ++res.reactions;
        if (opts.stop_on && !stop && opts.stop_on(r)) {
            stop = true;
            res.stopped = true;
            res.stop_time = r.t;
        }
    };

    switch (prep.solver) {
        case SolverKind::Meso: {
            NpmSolver npm(net, mesh, *prep.rates, rng, ids);
            npm.on_reaction = [&](const ReactionRecord& r) {
                observe(r);
                if (stop) npm.stop_requested = true;
            };
            for (auto p : init) {
                p.voxel = mesh.locate(p.pos);
                p.scale = Scale::Meso;
                npm.add(p);
            }
            const auto t0 = std::chrono::steady_clock::now();
            npm.run(T, &res.samples, next);
            res.timings.meso = res.timings.total =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            if (!stop) add_final(res.samples, next, T, npm.counts());
            res.census.push_back({T, 0, npm.population()});
            break;
        }
        case SolverKind::Micro: {
            MicroSolver micro(net, mesh, *prep.rates, rng, ids, opts.micro);
            micro.on_reaction = [&](const ReactionRecord& r) {
                observe(r);
                if (stop) micro.stop_requested = true;
            };
            for (auto p : init) micro.add(p);
            const auto t0 = std::chrono::steady_clock::now();
            micro.run(T, &res.samples, next, nullptr);
            res.timings.micro = res.timings.total =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            if (!stop) add_final(res.samples, next, T, micro.counts());
            res.census.push_back({T, micro.population(), 0});
            break;
        }
        case SolverKind::Hybrid: {
            HybridEngine eng(net, mesh, *prep.rates, prep.plan, prep.model.config.dt_split, rng, opts.micro);
            eng.set_on_reaction([&](const ReactionRecord& r) {
                observe(r);
                if (stop) eng.stop();
            });
            for (const auto& p : init) eng.add(p);
            eng.run(T, res.samples);
            res.timings = eng.timings();
            res.census = eng.census();
            break;
        }
        case SolverKind::BdOracle: {
            BdSimulator bd(net, mesh.domain(), rng, ids, opts.bd);
            bd.on_reaction = [&](const ReactionRecord& r) {
                observe(r);
                if (stop) bd.stop_requested = true;
            };
            for (const auto& p : init) bd.add(p);
            const auto t0 = std::chrono::steady_clock::now();
            bd.run(T, &res.samples, next);
            res.timings.micro = res.timings.total =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            if (!stop) {
                std::vector<std::int64_t> counts(net.species_count());
                for (SpeciesId s = 0; s < counts.size(); ++s) counts[s] = bd.count(s);
                add_final(res.samples, next, T, counts);
            }
            res.census.push_back({T, bd.population(), 0});
            break;
        }
    }
    return res;
}

void parallel_replicas(std::size_t replicas, unsigned threads, const std::function<void(std::size_t)>& body) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(replicas, 1)));
    if (threads <= 1) {
        for (std::size_t r = 0; r < replicas; ++r) body(r);
        return;
    }
    std::atomic<std::size_t> counter{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w)
        pool.emplace_back([&] {
            for (std::size_t r = counter++; r < replicas; r = counter++) {
                try {
                    body(r);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                    counter = replicas;
                }
            }
        });
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

EnsembleResult run_ensemble(const Prepared& prep, std::uint64_t seed, std::size_t replicas, unsigned threads,
                            bool keep_trajectories, const TrajectoryOptions& opts) {
    std::vector<TrajectoryResult> runs(replicas);
    parallel_replicas(replicas, threads, [&](std::size_t r) { runs[r] = run_trajectory(prep, seed, r, opts); });

    EnsembleResult out;
    out.times = prep.sample_times;
    for (const auto& s : prep.net->species()) out.species.push_back(s.name);
    out.replicas = replicas;
    const std::size_t ns = out.species.size();
    std::vector<std::vector<double>> sum(out.times.size(), std::vector<double>(ns, 0.0));
    auto sum2 = sum;
    for (const auto& run : runs) {
        for (std::size_t k = 0; k < out.times.size(); ++k)
            for (std::size_t s = 0; s < ns; ++s) {
                const double x = static_cast<double>(run.samples.counts[k][s]);
                sum[k][s] += x;
                sum2[k][s] += x * x;
            }
        out.timings.meso += run.timings.meso;
        out.timings.micro += run.timings.micro;
        out.timings.switching += run.timings.switching;
        out.timings.total += run.timings.total;
    }
    out.mean = sum;
    out.se = sum;
    const double n = static_cast<double>(replicas);
    for (std::size_t k = 0; k < out.times.size(); ++k)
        for (std::size_t s = 0; s < ns; ++s) {
            const double m = n > 0 ? sum[k][s] / n : 0.0;
            const double var = n > 1 ? std::max(0.0, (sum2[k][s] - n * m * m) / (n - 1.0)) : 0.0;
            out.mean[k][s] = m;
            out.se[k][s] = n > 0 ? std::sqrt(var / n) : 0.0;
        }
    if (keep_trajectories) out.trajectories = std::move(runs);
    return out;
}

}  // namespace rdhybrid
