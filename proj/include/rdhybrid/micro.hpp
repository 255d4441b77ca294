#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "rdhybrid/mesh.hpp"
#include "rdhybrid/model.hpp"
#include "rdhybrid/npm.hpp"
#include "rdhybrid/pair_kernel.hpp"
#include "rdhybrid/random.hpp"
#include "rdhybrid/rates.hpp"

namespace rdhybrid {

struct MicroOptions {
    double p_protect = 1e-3;
    // Pairs closer than cutoff_factor * sigma use the analytic kernel, others
    // the Brownian fallback.
    double cutoff_factor = 3.0;
    // Brownian fallback step: per-step RMS displacement <= sigma * bd_rms_fraction
    // near contact.
    double bd_rms_fraction = 0.2;
    // Far from contact the fallback step may grow to (r - sigma) / (2 z).
    bool adaptive_fallback = true;
    // Disable the analytic kernel entirely (pure Brownian pairs), for A/B tests.
    bool force_fallback = false;
};

// Frozen mesoscopic partners seen by micro particles during a hybrid micro
// substep.
class MesoPartners {
public:
    virtual ~MesoPartners() = default;
    virtual std::int64_t count(VoxelIndex v, SpeciesId s) const = 0;
    // Total count of species s over the mesh.
    virtual std::int64_t total(SpeciesId s) const = 0;
    // Removes one particle of species s from voxel v at time t.
    virtual void consume(VoxelIndex v, SpeciesId s, double t) = 0;
};

// Reflects p into the box (specular per axis) and keeps it strictly inside.
Vec3 reflect_into_box(Vec3 p, const BoxDomain& box);

struct MicroDomain {
    static constexpr std::size_t kNone = static_cast<std::size_t>(-1);
    std::size_t a = 0;
    std::size_t b = kNone;  // kNone for singles
    double dt = 0.0;        // protective substep
    bool is_pair() const { return b != kNone; }
};

// Synchronous windowed GFRD-style propagator. Each substep decomposes the
// particles into singles and mutual-nearest-neighbour reactive pairs,
// chooses one global step that keeps cross-domain encounters unlikely, and
// advances every domain independently over it.
class MicroSolver {
public:
    MicroSolver(const Network& net, const CartesianMesh& mesh, const RateTable& rates, Rng& rng, IdSource& ids,
                MicroOptions opts = {});

    double now() const { return now_; }
    void set_now(double t) { now_ = t; }
    double z() const { return z_; }
    const MicroOptions& options() const { return opts_; }

    // Inserts a micro particle at p.pos (voxel is recomputed). Returns its index.
    std::size_t add(Particle p);
    // Creates a particle of species s at pos born at time t.
    std::size_t spawn(SpeciesId s, const Vec3& pos, double t);
    void remove(std::size_t index);
    bool alive(std::size_t index) const { return alive_[index] != 0; }
    const Particle& particle(std::size_t index) const { return parts_[index]; }
    std::size_t slots() const { return parts_.size(); }
    // Removes and returns the live particles matching pred.
    std::vector<Particle> extract_if(const std::function<bool(const Particle&)>& pred);
    std::vector<Particle> live_particles() const;

    std::int64_t count(SpeciesId s) const { return counts_[s]; }
    const std::vector<std::int64_t>& counts() const { return counts_; }
    std::int64_t population() const { return population_; }

    // Domains for the current configuration; dt is capped by `window`.
    std::vector<MicroDomain> decompose(double window) const;

    // Advances to t_end; samples with now() <= time < t_end are added to
    // `samples`. meso may be null (no micro-meso reactions).
    void run(double t_end, SampleBuffer* samples, std::size_t& next_sample, MesoPartners* meso);

    std::uint64_t steps() const { return n_steps_; }
    std::uint64_t analytic_pair_steps() const { return n_analytic_; }
    std::uint64_t fallback_substeps() const { return n_fallback_; }

    std::function<void(const ReactionRecord&)> on_reaction;
    bool stop_requested = false;

private:
    struct PairGeom {
        PairParams params;
        double D_com = 0.0;
        double wa = 0.0;  // r_a = R + wa * r
        double wb = 0.0;  // r_b = R - wb * r
    };

    PairGeom pair_geom(std::size_t a, std::size_t b) const;
    double gap(std::size_t i, std::size_t k) const;
    double wall_cap(std::size_t a, std::size_t b) const;
    // Calls f(i, k) for candidate reactive pairs; all pairs closer than
    // `reach` are included (reach = inf: every pair).
    void for_each_candidate_pair(const std::vector<std::size_t>& reactive,
                                 const std::function<void(std::size_t, std::size_t)>& f, double& reach) const;
    double micro_meso_rate(std::size_t i, const MesoPartners* meso) const;
    double global_step(const std::vector<MicroDomain>& domains, double horizon, const MesoPartners* meso) const;

    void process_single(std::size_t i, double t0, double t1, MesoPartners* meso);
    void process_pair(std::size_t a, std::size_t b, double t0, double t1, MesoPartners* meso);
    void process_group(const std::vector<std::size_t>& group, double t0, double t1, MesoPartners* meso);
    // Fires the competing non-pair event of particle i at time t; returns the
    // indices of the products. Micro-meso partners are taken from voxel v.
    std::vector<std::size_t> fire_particle_event(std::size_t i, double t, bool micro_meso, MesoPartners* meso,
                                                 VoxelIndex v);
    std::vector<std::size_t> fire_pair_reaction(std::size_t a, std::size_t b, const Vec3& where, double t);
    std::vector<std::size_t> place_products(const std::vector<SpeciesId>& products, const Vec3& where, double t);
    void move_free(std::size_t i, double dt);
    void resolve_overlaps(double dt);
    void set_position(std::size_t i, const Vec3& p);

    const Network& net_;
    const CartesianMesh& mesh_;
    const RateTable& rates_;
    Rng& rng_;
    IdSource& ids_;
    MicroOptions opts_;
    double z_;
    std::vector<Particle> parts_;
    std::vector<char> alive_;
    std::vector<Vec3> step_start_;
    std::vector<std::size_t> domain_of_;
    std::vector<std::int64_t> counts_;
    std::int64_t population_ = 0;
    double now_ = 0.0;
    std::uint64_t n_steps_ = 0;
    std::uint64_t n_analytic_ = 0;
    std::uint64_t n_fallback_ = 0;
};

}  // namespace rdhybrid
