#include "rdhybrid/hybrid.hpp"

#include <chrono>

namespace rdhybrid {

Particle switch_to_micro(Particle p, const CartesianMesh& mesh, Rng& rng) {
    const Vec3 lo = mesh.voxel_lower(p.voxel);
    const double h = mesh.h();
    p.pos = {lo.x + h * rng.uniform(), lo.y + h * rng.uniform(), lo.z + h * rng.uniform()};
    p.scale = Scale::Micro;
    return p;
}

Particle switch_to_meso(Particle p, const CartesianMesh& mesh) {
    p.voxel = mesh.locate(p.pos);
    p.scale = Scale::Meso;
    return p;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// Frozen meso state seen from the micro substep. Consumed partners are
// removed from the meso solver and from the meso part of the samples taken
// after the consumption time within the current window.
class FrozenMeso final : public MesoPartners {
public:
    FrozenMeso(NpmSolver& npm, SampleBuffer& samples, std::size_t first, std::size_t last)
        : npm_(npm), samples_(samples), first_(first), last_(last) {}

    std::int64_t count(VoxelIndex v, SpeciesId s) const override { return npm_.voxel_count(v, s); }
    std::int64_t total(SpeciesId s) const override { return npm_.count(s); }
    void consume(VoxelIndex v, SpeciesId s, double t) override {
        NpmSolver::Slot victim = NpmSolver::kNoSlot;
        npm_.for_each_in_voxel(v, [&](NpmSolver::Slot q) {
            if (victim == NpmSolver::kNoSlot && npm_.particle(q).species == s) victim = q;
        });
        if (victim == NpmSolver::kNoSlot) return;
        npm_.remove(victim);
        for (std::size_t k = first_; k < last_; ++k)
            if (samples_.times[k] > t) --samples_.counts[k][s];
    }

private:
    NpmSolver& npm_;
    SampleBuffer& samples_;
    std::size_t first_;
    std::size_t last_;
};

}  // namespace

HybridEngine::HybridEngine(const Network& net, const CartesianMesh& mesh, const RateTable& rates, SplitPlan plan,
                           double dt_split, Rng& rng, MicroOptions micro_opts)
    : net_(net), mesh_(mesh), plan_(std::move(plan)), dt_split_(dt_split), rng_(rng) {
    meso_ = std::make_unique<NpmSolver>(net, mesh, rates, rng, ids_);
    micro_ = std::make_unique<MicroSolver>(net, mesh, rates, rng, ids_, micro_opts);
}

void HybridEngine::add(Particle p) {
    if (p.id >= ids_.next) ids_.next = p.id + 1;
    if (plan_.scale_for(p.species, now_ - p.birth) == Scale::Micro) {
        micro_->add(p);
    } else {
        p.voxel = mesh_.locate(p.pos);
        meso_->set_now(now_);
        meso_->add(p);
    }
}

void HybridEngine::set_on_reaction(std::function<void(const ReactionRecord&)> f) {
    meso_->on_reaction = f;
    micro_->on_reaction = std::move(f);
}

void HybridEngine::stop() {
    stopped_ = true;
    meso_->stop_requested = true;
    micro_->stop_requested = true;
}

void HybridEngine::synchronize() {
    const double t = now_;
    auto to_meso = micro_->extract_if([&](const Particle& p) { return plan_.scale_for(p.species, t - p.birth) == Scale::Meso; });
    meso_->set_now(t);
    for (auto& p : to_meso) {
        meso_->add(switch_to_meso(p, mesh_));
        ++n_to_meso_;
    }
    for (NpmSolver::Slot s : meso_->live_slots()) {
        const Particle& p = meso_->particle(s);
        if (plan_.scale_for(p.species, t - p.birth) != Scale::Micro) continue;
        micro_->add(switch_to_micro(meso_->remove(s), mesh_, rng_));
        ++n_to_micro_;
    }
}

void HybridEngine::run(double t_final, SampleBuffer& samples) {
    const auto run_start = Clock::now();
    std::size_t next = 0;
    while (next < samples.times.size() && samples.times[next] < now_) ++next;
    const bool any_micro = plan_.any_micro() || micro_->population() > 0;

    while (now_ < t_final && !stopped_) {
        const double t_end = std::min(t_final, now_ + dt_split_);
        const double window = t_end - now_;
        // Guard against a last window shorter than rounding noise.
        const double t_next = window < 1e-12 * dt_split_ ? t_final : t_end;

        auto t0 = Clock::now();
        if (any_micro) synchronize();
        timings_.switching += seconds_since(t0);
        census_.push_back({now_, micro_->population(), meso_->population()});

        std::size_t meso_next = next;
        t0 = Clock::now();
        meso_->set_now(now_);
        meso_->run(t_next, &samples, meso_next);
        timings_.meso += seconds_since(t0);
        if (stopped_) break;

        t0 = Clock::now();
        if (any_micro) {
            std::size_t micro_next = next;
            FrozenMeso frozen(*meso_, samples, next, meso_next);
            micro_->set_now(now_);
            micro_->run(t_next, &samples, micro_next, &frozen);
        }
        timings_.micro += seconds_since(t0);
        next = meso_next;
        now_ = t_next;
    }
    if (!stopped_) {
        // Samples at t_final itself.
        for (; next < samples.times.size() && samples.times[next] <= t_final; ++next)
            for (std::size_t s = 0; s < net_.species_count(); ++s)
                samples.counts[next][s] += meso_->count(s) + micro_->count(s);
        census_.push_back({now_, micro_->population(), meso_->population()});
    }
    timings_.total += seconds_since(run_start);
}

}  // namespace rdhybrid
