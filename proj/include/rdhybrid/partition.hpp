#pragma once

#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "rdhybrid/mesh.hpp"
#include "rdhybrid/model.hpp"
#include "rdhybrid/rates.hpp"

namespace rdhybrid {

enum class PolicyKind { AlwaysMeso, MicroUntilAge, AlwaysMicro };

const char* to_string(PolicyKind p);

struct SpeciesPolicy {
    PolicyKind kind = PolicyKind::AlwaysMeso;
    double t_m = 0.0;  // only meaningful for MicroUntilAge
};

struct ReactionResolution {
    std::size_t reaction = 0;
    double W = 0.0;
    bool below_optimal = false;
    bool resolved = true;  // W <= epsilon
};

struct SplitPlan {
    std::vector<SpeciesPolicy> policy;          // indexed by species id
    std::vector<ReactionResolution> reactions;  // bimolecular reactions only

    Scale scale_for(SpeciesId s, double age) const {
        const auto& p = policy[s];
        if (p.kind == PolicyKind::AlwaysMicro) return Scale::Micro;
        if (p.kind == PolicyKind::MicroUntilAge && age <= p.t_m) return Scale::Micro;
        return Scale::Meso;
    }
    bool any_micro() const;
    static SplitPlan uniform(std::size_t species, PolicyKind kind);
};

class UnresolvableReaction : public std::runtime_error {
public:
    UnresolvableReaction(std::size_t reaction, const std::string& what)
        : std::runtime_error(what), reaction_(reaction) {}
    std::size_t reaction() const { return reaction_; }

private:
    std::size_t reaction_;
};

struct FlaggedReaction {
    std::size_t reaction = 0;
    double W = 0.0;
};

// Bimolecular reactions with W > epsilon (σ and D summed over the reactants).
std::vector<FlaggedReaction> flag_reactions(const Network& net, const CartesianMesh& mesh, double epsilon);

struct OriginTrace {
    std::size_t reaction = 0;
    std::set<SpeciesId> origins;                                // dissociating species
    std::set<std::pair<SpeciesId, SpeciesId>> visited_states;  // unordered reactant pairs explored
};

// Backward breadth-first search from the reactant pair of a bimolecular
// reaction towards dissociations that co-produce (ancestors of) both reactants.
OriginTrace trace_origins(const Network& net, std::size_t reaction);

struct PartitionOptions {
    double epsilon = 0.025;
    double K = 6.0;
    std::optional<double> t_m_override;
    bool force_meso = false;
    std::vector<SpeciesId> force_micro;
};

// Throws UnresolvableReaction if a flagged reaction has no origin and is not
// covered by the overrides.
SplitPlan build_split(const Network& net, const CartesianMesh& mesh, const PartitionOptions& opts);

// Residency time for the products of a dissociation channel.
double dissociation_t_m(const Network& net, const Channel& dissociation, const CartesianMesh& mesh, double K);

// Diagnostic bound S(t_m) * W with the unobservable correction term set to 0.
double estimate_e_hybrid(double k_a, double D, double sigma, double h, double t_m);

}  // namespace rdhybrid
