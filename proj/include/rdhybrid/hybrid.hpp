#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "rdhybrid/mesh.hpp"
#include "rdhybrid/micro.hpp"
#include "rdhybrid/model.hpp"
#include "rdhybrid/npm.hpp"
#include "rdhybrid/partition.hpp"
#include "rdhybrid/random.hpp"
#include "rdhybrid/rates.hpp"

namespace rdhybrid {

// Uniform position inside the particle's voxel; id and birth are kept.
Particle switch_to_micro(Particle p, const CartesianMesh& mesh, Rng& rng);
// Voxel containing the particle's position (lower-inclusive faces).
Particle switch_to_meso(Particle p, const CartesianMesh& mesh);

struct Timings {
    double meso = 0.0;
    double micro = 0.0;
    double switching = 0.0;
    double total = 0.0;
};

struct CensusPoint {
    double t = 0.0;
    std::int64_t micro = 0;
    std::int64_t meso = 0;
};

// Alternates mesoscopic and microscopic substeps of length dt_split. Scales
// are reassigned from the split plan at every synchronization point; during
// the micro substep the meso state is frozen except for partners consumed by
// micro-meso reactions.
class HybridEngine {
public:
    HybridEngine(const Network& net, const CartesianMesh& mesh, const RateTable& rates, SplitPlan plan,
                 double dt_split, Rng& rng, MicroOptions micro_opts = {});

    // Adds a particle on the scale the plan assigns at its current age
    // (now() - birth).
    void add(Particle p);

    // Runs from now() to t_final; samples are written into `samples`.
    void run(double t_final, SampleBuffer& samples);

    double now() const { return now_; }
    const SplitPlan& plan() const { return plan_; }
    NpmSolver& meso() { return *meso_; }
    MicroSolver& micro() { return *micro_; }
    IdSource& ids() { return ids_; }
    const Timings& timings() const { return timings_; }
    const std::vector<CensusPoint>& census() const { return census_; }
    std::uint64_t switches_to_micro() const { return n_to_micro_; }
    std::uint64_t switches_to_meso() const { return n_to_meso_; }

    // Invoked on every reaction of either scale; setting stop() ends the run
    // after the current event.
    void set_on_reaction(std::function<void(const ReactionRecord&)> f);
    void stop();
    bool stopped() const { return stopped_; }

    // Scale assignment at the current time (Algorithm step "assign").
    void synchronize();

private:
    const Network& net_;
    const CartesianMesh& mesh_;
    SplitPlan plan_;
    double dt_split_;
    Rng& rng_;
    IdSource ids_;
    std::unique_ptr<NpmSolver> meso_;
    std::unique_ptr<MicroSolver> micro_;
    double now_ = 0.0;
    bool stopped_ = false;
    Timings timings_;
    std::vector<CensusPoint> census_;
    std::uint64_t n_to_micro_ = 0;
    std::uint64_t n_to_meso_ = 0;
};

}  // namespace rdhybrid
