#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "rdhybrid/hybrid.hpp"
#include "rdhybrid/mesh.hpp"
#include "rdhybrid/micro.hpp"
#include "rdhybrid/model.hpp"
#include "rdhybrid/npm.hpp"
#include "rdhybrid/oracles.hpp"
#include "rdhybrid/partition.hpp"
#include "rdhybrid/rates.hpp"

namespace rdhybrid {

// Everything a trajectory needs that does not depend on the replica.
struct Prepared {
    Model model;
    SolverKind solver = SolverKind::Hybrid;
    std::shared_ptr<const Network> net;
    std::shared_ptr<const CartesianMesh> mesh;
    std::shared_ptr<const RateTable> rates;
    SplitPlan plan;
    std::vector<double> sample_times;
};

// Builds network, mesh, rates and split plan for the given solver. Throws
// ModelError for invalid models and UnresolvableReaction from the partitioner.
Prepared prepare(const Model& model, SolverKind solver, const PartitionOptions& partition);
// Partition options taken from the model's config block.
PartitionOptions partition_options(const Model& model);

// Initial placement as written in the model. Initial particles are treated as
// arbitrarily old: they take the plan's long-time scale.
std::vector<Particle> initial_particles(const Network& net, const BoxDomain& box, Rng& rng, IdSource& ids);

struct TrajectoryOptions {
    MicroOptions micro;
    BdOptions bd;
    // Optional custom initial state; the model's placement is used when empty.
    std::function<std::vector<Particle>(const Prepared&, Rng&, IdSource&)> initial;
    // Called on every reaction; returning true stops the trajectory.
    std::function<bool(const ReactionRecord&)> stop_on;
};

struct TrajectoryResult {
    SampleBuffer samples;
    Timings timings;
    std::vector<CensusPoint> census;
    std::uint64_t reactions = 0;
    bool stopped = false;
    double stop_time = kInf;
};

TrajectoryResult run_trajectory(const Prepared& prep, std::uint64_t seed, std::uint64_t replica,
                                const TrajectoryOptions& opts = {});

struct EnsembleResult {
    std::vector<double> times;
    std::vector<std::string> species;
    std::size_t replicas = 0;
    std::vector<std::vector<double>> mean;  // [sample][species]
    std::vector<std::vector<double>> se;    // standard error of the mean
    std::vector<TrajectoryResult> trajectories;  // kept when requested
    Timings timings;                             // summed over replicas
};

// Replicas run on `threads` workers (0: hardware concurrency). Replica r uses
// Rng::for_replica(seed, r), and aggregation is done in replica order, so the
// result does not depend on the thread count.
EnsembleResult run_ensemble(const Prepared& prep, std::uint64_t seed, std::size_t replicas, unsigned threads,
                            bool keep_trajectories, const TrajectoryOptions& opts = {});

// Generic replica-parallel map with the same determinism guarantee.
void parallel_replicas(std::size_t replicas, unsigned threads, const std::function<void(std::size_t)>& body);

}  // namespace rdhybrid
