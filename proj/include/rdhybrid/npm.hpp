#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "rdhybrid/mesh.hpp"
#include "rdhybrid/model.hpp"
#include "rdhybrid/random.hpp"
#include "rdhybrid/rates.hpp"
#include "rdhybrid/types.hpp"

namespace rdhybrid {

// Trajectory-wide particle id counter shared by the solvers of one run.
struct IdSource {
    ParticleId next = 0;
    ParticleId take() { return next++; }
};

struct ReactionRecord {
    double t = 0.0;
    std::size_t reaction = 0;
    Scale scale = Scale::Meso;
};

// Counts per species sampled at fixed times. Samples are recorded when the
// simulation clock passes them; the state sampled is the one holding at the
// sample time (events exactly at a sample time are applied first).
struct SampleBuffer {
    std::vector<double> times;
    std::vector<std::vector<std::int64_t>> counts;  // [sample][species]

    SampleBuffer() = default;
    SampleBuffer(std::vector<double> t, std::size_t species)
        : times(std::move(t)), counts(times.size(), std::vector<std::int64_t>(species, 0)) {}
};

enum class MesoEventKind : std::uint8_t { Diffusion, Unimolecular, Pair };

// Next-particle method on a Cartesian mesh: every particle owns its next
// diffusion event and (if applicable) unimolecular event, and every
// co-located reactive pair owns a pair event. Events sit in one binary heap
// and are invalidated lazily through per-slot generation counters.
class NpmSolver {
public:
    using Slot = std::uint32_t;
    static constexpr Slot kNoSlot = 0xffffffffu;

    NpmSolver(const Network& net, const CartesianMesh& mesh, const RateTable& rates, Rng& rng, IdSource& ids);

    double now() const { return now_; }
    void set_now(double t) { now_ = t; }

    // Inserts a meso particle at its voxel and schedules its events from now().
    Slot add(Particle p);
    // Creates a new particle of species s in voxel v born at now().
    Slot spawn(SpeciesId s, VoxelIndex v);
    Particle remove(Slot slot);
    bool alive(Slot slot) const { return slot < slots_.size() && slots_[slot].alive; }
    const Particle& particle(Slot slot) const { return slots_[slot].p; }

    // Advances to t_end (or until a stop is requested). Samples with
    // now() <= time < t_end are written into `samples` (may be null),
    // starting at index `next_sample`, which is advanced.
    void run(double t_end, SampleBuffer* samples, std::size_t& next_sample);
    // Executes the next valid event if it happens before t_end. Returns false
    // when none does.
    bool step(double t_end);

    std::int64_t count(SpeciesId s) const { return counts_[s]; }
    const std::vector<std::int64_t>& counts() const { return counts_; }
    std::int64_t population() const { return population_; }
    std::int64_t voxel_count(VoxelIndex v, SpeciesId s) const;
    // Live particle slots (unspecified order).
    std::vector<Slot> live_slots() const;
    // Live slots in voxel v.
    template <class F>
    void for_each_in_voxel(VoxelIndex v, F&& f) const {
        for (Slot q = head_[v]; q != kNoSlot; q = slots_[q].next) f(q);
    }

    std::size_t queue_size() const { return heap_.size(); }
    std::uint64_t diffusion_events() const { return n_diffusion_; }
    std::uint64_t reaction_events() const { return n_reaction_; }
    std::uint64_t stale_pops() const { return n_stale_; }

    std::function<void(const ReactionRecord&)> on_reaction;
    bool stop_requested = false;

private:
    struct SlotData {
        Particle p;
        bool alive = false;
        std::uint32_t loc_gen = 0;   // bumped on move and on death
        std::uint32_t life_gen = 0;  // bumped on death
        Slot next = kNoSlot;
        Slot prev = kNoSlot;
    };
    struct Event {
        double t;
        std::uint64_t seq;
        MesoEventKind kind;
        Slot a;
        Slot b;
        std::uint32_t gen_a;
        std::uint32_t gen_b;
    };
    struct Later {
        bool operator()(const Event& x, const Event& y) const {
            return x.t > y.t || (x.t == y.t && x.seq > y.seq);
        }
    };

    bool valid(const Event& e) const;
    void push(double t, MesoEventKind kind, Slot a, Slot b);
    void schedule_particle(Slot s);
    void schedule_pairs_with_residents(Slot s);
    void link(Slot s);
    void unlink(Slot s);
    void execute(const Event& e);
    void fire_reaction(std::size_t reaction, VoxelIndex v, Slot a, Slot b);
    void compact();

    const Network& net_;
    const CartesianMesh& mesh_;
    Rng& rng_;
    IdSource& ids_;
    std::vector<double> diffusion_rate_;  // per species, per face
    std::vector<double> k_meso_;          // per reaction (unimolecular: k)
    std::vector<double> pair_total_;      // [a * n + b]
    std::vector<SlotData> slots_;
    std::vector<Slot> free_;
    std::vector<Slot> head_;
    std::vector<std::int64_t> counts_;
    std::int64_t population_ = 0;
    std::vector<Event> heap_;  // binary heap ordered by Later
    std::size_t compact_threshold_ = 4096;
    std::uint64_t seq_ = 0;
    double now_ = 0.0;
    std::uint64_t n_diffusion_ = 0;
    std::uint64_t n_reaction_ = 0;
    std::uint64_t n_stale_ = 0;
};

}  // namespace rdhybrid
