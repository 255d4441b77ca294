#include "rdhybrid/partition.hpp"

#include <algorithm>
#include <deque>
#include <map>

namespace rdhybrid {

const char* to_string(PolicyKind p) {
    switch (p) {
        case PolicyKind::AlwaysMeso: return "always-meso";
        case PolicyKind::MicroUntilAge: return "micro-until-age";
        case PolicyKind::AlwaysMicro: return "always-micro";
    }
    return "always-meso";
}

bool SplitPlan::any_micro() const {
    return std::any_of(policy.begin(), policy.end(), [](const SpeciesPolicy& p) { return p.kind != PolicyKind::AlwaysMeso; });
}

SplitPlan SplitPlan::uniform(std::size_t species, PolicyKind kind) {
    SplitPlan plan;
    plan.policy.assign(species, SpeciesPolicy{kind, kind == PolicyKind::MicroUntilAge ? kInf : 0.0});
    return plan;
}

namespace {

ReactionResolution resolution_of(const Network& net, const CartesianMesh& mesh, std::size_t i, double epsilon) {
    const auto& ch = net.reactions()[i];
    const auto& a = net.spec(ch.reactants[0]);
    const auto& b = net.spec(ch.reactants[1]);
    const auto res = resolution_error_W(ch.rate, a.D + b.D, a.sigma + b.sigma, mesh.h());
    return {i, res.W, res.below_optimal, !(res.W > epsilon)};
}

std::pair<SpeciesId, SpeciesId> ordered(SpeciesId a, SpeciesId b) { return a <= b ? std::pair{a, b} : std::pair{b, a}; }

}  // namespace

std::vector<FlaggedReaction> flag_reactions(const Network& net, const CartesianMesh& mesh, double epsilon) {
    std::vector<FlaggedReaction> out;
    for (std::size_t i = 0; i < net.reactions().size(); ++i) {
        if (net.reactions()[i].kind != ReactionKind::Bimolecular) continue;
        const auto r = resolution_of(net, mesh, i, epsilon);
        if (!r.resolved) out.push_back({i, r.W});
    }
    return out;
}

OriginTrace trace_origins(const Network& net, std::size_t reaction) {
    OriginTrace trace;
    trace.reaction = reaction;
    const auto& target = net.reactions().at(reaction);
    if (target.kind != ReactionKind::Bimolecular) return trace;

    // producers[s] = reactions with s among their products
    std::vector<std::vector<std::size_t>> producers(net.species_count());
    for (std::size_t i = 0; i < net.reactions().size(); ++i)
        for (SpeciesId p : net.reactions()[i].products)
            if (std::find(producers[p].begin(), producers[p].end(), i) == producers[p].end()) producers[p].push_back(i);

    std::deque<std::pair<SpeciesId, SpeciesId>> queue;
    auto push = [&](SpeciesId a, SpeciesId b) {
        const auto key = ordered(a, b);
        if (trace.visited_states.insert(key).second) queue.push_back(key);
    };
    push(target.reactants[0], target.reactants[1]);

    while (!queue.empty()) {
        const auto [x, y] = queue.front();
        queue.pop_front();
        bool co_produced = false;
        for (const auto& ch : net.reactions()) {
            if (!ch.is_dissociation()) continue;
            if (ordered(ch.products[0], ch.products[1]) == ordered(x, y)) {
                trace.origins.insert(ch.reactants[0]);
                co_produced = true;
            }
        }
        if (co_produced) continue;
        // Replace one member of the pair by a precursor of it.
        for (int side = 0; side < 2; ++side) {
            const SpeciesId member = side == 0 ? x : y;
            const SpeciesId other = side == 0 ? y : x;
            for (std::size_t ri : producers[member])
                for (SpeciesId precursor : net.reactions()[ri].reactants) push(precursor, other);
        }
    }
    return trace;
}

double dissociation_t_m(const Network& net, const Channel& dissociation, const CartesianMesh& mesh, double K) {
    const double D = net.spec(dissociation.products[0]).D + net.spec(dissociation.products[1]).D;
    if (!(D > 0.0)) return kInf;
    return t_m(mesh.voxel_volume(), D, K);
}

SplitPlan build_split(const Network& net, const CartesianMesh& mesh, const PartitionOptions& opts) {
    const std::size_t n = net.species_count();
    SplitPlan plan = SplitPlan::uniform(n, PolicyKind::AlwaysMeso);
    for (std::size_t i = 0; i < net.reactions().size(); ++i)
        if (net.reactions()[i].kind == ReactionKind::Bimolecular)
            plan.reactions.push_back(resolution_of(net, mesh, i, opts.epsilon));
    if (opts.force_meso) return plan;

    auto forced = [&](SpeciesId s) {
        return std::find(opts.force_micro.begin(), opts.force_micro.end(), s) != opts.force_micro.end() ||
               net.spec(s).scale == ScaleOverride::Micro;
    };

    std::set<SpeciesId> origins;
    for (const auto& r : plan.reactions) {
        if (r.resolved) continue;
        const auto trace = trace_origins(net, r.reaction);
        if (trace.origins.empty()) {
            const auto& ch = net.reactions()[r.reaction];
            if (forced(ch.reactants[0]) && forced(ch.reactants[1])) continue;
            throw UnresolvableReaction(
                r.reaction, "reaction " + ch.label + " is under-resolved (W = " + std::to_string(r.W) +
                                ") and its reactants are not co-produced by any dissociation; use --force-meso or --force-micro");
        }
        origins.insert(trace.origins.begin(), trace.origins.end());
    }

    // Products of each origin's dissociations stay micro until age t_m.
    std::map<SpeciesId, double> product_tm;
    for (SpeciesId o : origins) {
        for (std::size_t ri : net.unimolecular_of(o)) {
            const auto& ch = net.reactions()[ri];
            if (!ch.is_dissociation()) continue;
            const double tm = opts.t_m_override ? *opts.t_m_override : dissociation_t_m(net, ch, mesh, opts.K);
            for (SpeciesId p : ch.products) product_tm[p] = std::max(product_tm[p], tm);
        }
    }
    for (const auto& [s, tm] : product_tm) plan.policy[s] = {PolicyKind::MicroUntilAge, tm};
    for (SpeciesId o : origins) plan.policy[o] = {PolicyKind::AlwaysMicro, 0.0};
    for (SpeciesId s = 0; s < n; ++s) {
        if (forced(s)) plan.policy[s] = {PolicyKind::AlwaysMicro, 0.0};
        else if (net.spec(s).scale == ScaleOverride::Meso) plan.policy[s] = {PolicyKind::AlwaysMeso, 0.0};
    }
    return plan;
}

double estimate_e_hybrid(double k_a, double D, double sigma, double h, double t_m) {
    if (!(k_a > 0.0)) return 0.0;
    return contact_survival(k_a, D, sigma, t_m) * std::abs(k_a / D * g3(h, sigma));
}

}  // namespace rdhybrid
