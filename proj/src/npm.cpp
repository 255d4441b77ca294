#include "rdhybrid/npm.hpp"

#include <algorithm>

namespace rdhybrid {

NpmSolver::NpmSolver(const Network& net, const CartesianMesh& mesh, const RateTable& rates, Rng& rng, IdSource& ids)
    : net_(net), mesh_(mesh), rng_(rng), ids_(ids) {
    const std::size_t n = net.species_count();
    for (SpeciesId s = 0; s < n; ++s) diffusion_rate_.push_back(jump_rate(net.spec(s).D, mesh.h()));
    k_meso_.assign(net.reactions().size(), 0.0);
    pair_total_.assign(n * n, 0.0);
    for (std::size_t i = 0; i < net.reactions().size(); ++i) {
        const auto& ch = net.reactions()[i];
        const auto& rr = rates.reactions[i];
        if (ch.kind == ReactionKind::Bimolecular && !rr.denominator_ok)
            throw NonPositiveDenominator("reaction " + ch.label + " has no mesoscopic rate at h = " +
                                         std::to_string(mesh.h()) + " (mesh far below the critical size)");
        k_meso_[i] = rr.k_meso;
        if (ch.kind == ReactionKind::Bimolecular) {
            const SpeciesId a = ch.reactants[0];
            const SpeciesId b = ch.reactants[1];
            pair_total_[a * n + b] += k_meso_[i];
            if (a != b) pair_total_[b * n + a] += k_meso_[i];
        }
    }
    head_.assign(static_cast<std::size_t>(mesh.size()), kNoSlot);
    counts_.assign(n, 0);
}

bool NpmSolver::valid(const Event& e) const {
    const auto& a = slots_[e.a];
    switch (e.kind) {
        case MesoEventKind::Diffusion: return a.alive && a.loc_gen == e.gen_a;
        case MesoEventKind::Unimolecular: return a.alive && a.life_gen == e.gen_a;
        case MesoEventKind::Pair: {
            const auto& b = slots_[e.b];
            return a.alive && b.alive && a.loc_gen == e.gen_a && b.loc_gen == e.gen_b;
        }
    }
    return false;
}

void NpmSolver::push(double t, MesoEventKind kind, Slot a, Slot b) {
    if (!(t < kInf)) return;
    Event e{t, seq_++, kind, a, b, 0, 0};
    if (kind == MesoEventKind::Unimolecular) e.gen_a = slots_[a].life_gen;
    else e.gen_a = slots_[a].loc_gen;
    if (kind == MesoEventKind::Pair) e.gen_b = slots_[b].loc_gen;
    heap_.push_back(e);
    std::push_heap(heap_.begin(), heap_.end(), Later{});
    if (heap_.size() > compact_threshold_) compact();
}

void NpmSolver::compact() {
    std::erase_if(heap_, [this](const Event& e) { return !valid(e); });
    std::make_heap(heap_.begin(), heap_.end(), Later{});
    compact_threshold_ = std::max<std::size_t>(4096, 4 * heap_.size());
}

void NpmSolver::link(Slot s) {
    auto& d = slots_[s];
    const auto v = static_cast<std::size_t>(d.p.voxel);
    d.prev = kNoSlot;
    d.next = head_[v];
    if (head_[v] != kNoSlot) slots_[head_[v]].prev = s;
    head_[v] = s;
}

void NpmSolver::unlink(Slot s) {
    auto& d = slots_[s];
    if (d.prev != kNoSlot) slots_[d.prev].next = d.next;
    else head_[static_cast<std::size_t>(d.p.voxel)] = d.next;
    if (d.next != kNoSlot) slots_[d.next].prev = d.prev;
    d.next = d.prev = kNoSlot;
}

void NpmSolver::schedule_particle(Slot s) {
    const auto& p = slots_[s].p;
    std::array<VoxelIndex, 6> nb{};
    const int faces = mesh_.neighbors(p.voxel, nb);
    const double rate = diffusion_rate_[p.species] * faces;
    if (rate > 0.0) push(now_ + rng_.exponential(rate), MesoEventKind::Diffusion, s, 0);
    schedule_pairs_with_residents(s);
}

void NpmSolver::schedule_pairs_with_residents(Slot s) {
    const auto& p = slots_[s].p;
    if (!net_.has_partners(p.species)) return;
    const std::size_t n = net_.species_count();
    for (Slot q = head_[static_cast<std::size_t>(p.voxel)]; q != kNoSlot; q = slots_[q].next) {
        if (q == s) continue;
        const double rate = pair_total_[p.species * n + slots_[q].p.species];
        if (rate > 0.0) push(now_ + rng_.exponential(rate), MesoEventKind::Pair, s, q);
    }
}

NpmSolver::Slot NpmSolver::add(Particle p) {
    p.scale = Scale::Meso;
    Slot s;
    if (!free_.empty()) {
        s = free_.back();
        free_.pop_back();
    } else {
        s = static_cast<Slot>(slots_.size());
        slots_.emplace_back();
    }
    auto& d = slots_[s];
    d.p = p;
    d.alive = true;
    link(s);
    ++counts_[p.species];
    ++population_;
    const double k_uni = net_.unimolecular_total(p.species);
    if (k_uni > 0.0) push(now_ + rng_.exponential(k_uni), MesoEventKind::Unimolecular, s, 0);
    schedule_particle(s);
    return s;
}

NpmSolver::Slot NpmSolver::spawn(SpeciesId s, VoxelIndex v) {
    Particle p;
    p.id = ids_.take();
    p.species = s;
    p.voxel = v;
    p.pos = mesh_.voxel_center(v);
    p.birth = now_;
    return add(p);
}

Particle NpmSolver::remove(Slot slot) {
    auto& d = slots_[slot];
    unlink(slot);
    d.alive = false;
    ++d.loc_gen;
    ++d.life_gen;
    --counts_[d.p.species];
    --population_;
    free_.push_back(slot);
    return d.p;
}

std::int64_t NpmSolver::voxel_count(VoxelIndex v, SpeciesId s) const {
    std::int64_t n = 0;
    for (Slot q = head_[static_cast<std::size_t>(v)]; q != kNoSlot; q = slots_[q].next)
        if (slots_[q].p.species == s) ++n;
    return n;
}

std::vector<NpmSolver::Slot> NpmSolver::live_slots() const {
    std::vector<Slot> out;
    for (Slot s = 0; s < slots_.size(); ++s)
        if (slots_[s].alive) out.push_back(s);
    return out;
}

void NpmSolver::fire_reaction(std::size_t reaction, VoxelIndex v, Slot a, Slot b) {
    const auto& ch = net_.reactions()[reaction];
    remove(a);
    if (b != kNoSlot) remove(b);
    for (SpeciesId prod : ch.products) spawn(prod, v);
    ++n_reaction_;
    if (on_reaction) on_reaction({now_, reaction, Scale::Meso});
}

void NpmSolver::execute(const Event& e) {
    now_ = e.t;
    switch (e.kind) {
        case MesoEventKind::Diffusion: {
            std::array<VoxelIndex, 6> nb{};
            auto& d = slots_[e.a];
            const int faces = mesh_.neighbors(d.p.voxel, nb);
            unlink(e.a);
            d.p.voxel = nb[rng_.index(static_cast<std::size_t>(faces))];
            ++d.loc_gen;
            link(e.a);
            ++n_diffusion_;
            schedule_particle(e.a);
            break;
        }
        case MesoEventKind::Unimolecular: {
            const auto& p = slots_[e.a].p;
            const auto& chans = net_.unimolecular_of(p.species);
            double pick = rng_.uniform() * net_.unimolecular_total(p.species);
            std::size_t chosen = chans.back();
            for (std::size_t c : chans) {
                pick -= net_.reactions()[c].rate;
                if (pick < 0.0) {
                    chosen = c;
                    break;
                }
            }
            fire_reaction(chosen, p.voxel, e.a, kNoSlot);
            break;
        }
        case MesoEventKind::Pair: {
            const auto& pa = slots_[e.a].p;
            const auto& pb = slots_[e.b].p;
            const auto& chans = net_.bimolecular_of(pa.species, pb.species);
            const std::size_t n = net_.species_count();
            double pick = rng_.uniform() * pair_total_[pa.species * n + pb.species];
            std::size_t chosen = chans.back();
            for (std::size_t c : chans) {
                pick -= k_meso_[c];
                if (pick < 0.0) {
                    chosen = c;
                    break;
                }
            }
            fire_reaction(chosen, pa.voxel, e.a, e.b);
            break;
        }
    }
}

bool NpmSolver::step(double t_end) {
    while (!heap_.empty()) {
        const Event top = heap_.front();
        if (!valid(top)) {
            std::pop_heap(heap_.begin(), heap_.end(), Later{});
            heap_.pop_back();
            ++n_stale_;
            continue;
        }
        if (!(top.t < t_end)) return false;
        std::pop_heap(heap_.begin(), heap_.end(), Later{});
        heap_.pop_back();
        execute(top);
        return true;
    }
    return false;
}

void NpmSolver::run(double t_end, SampleBuffer* samples, std::size_t& next_sample) {
    auto record_until = [&](double t) {
        if (!samples) return;
        while (next_sample < samples->times.size() && samples->times[next_sample] < t) {
            auto& row = samples->counts[next_sample];
            for (std::size_t s = 0; s < counts_.size(); ++s) row[s] += counts_[s];
            ++next_sample;
        }
    };
    while (!stop_requested) {
        while (!heap_.empty() && !valid(heap_.front())) {
            std::pop_heap(heap_.begin(), heap_.end(), Later{});
            heap_.pop_back();
            ++n_stale_;
        }
        const double te = heap_.empty() ? kInf : heap_.front().t;
        if (!(te < t_end)) break;
        record_until(te);
        step(t_end);
    }
    if (stop_requested) return;
    record_until(t_end);
    now_ = t_end;
}

}  // namespace rdhybrid
