#pragma once

#include "rdhybrid/pair_kernel.hpp"
#include "rdhybrid/random.hpp"
#include "rdhybrid/types.hpp"

namespace rdhybrid {

// One Brownian step of a relative coordinate with contact handling: the free
// proposal is reflected radially off the sigma-sphere, and the pair reacts
// with the probability that the step was absorbed given both endpoints,
// taken as the ratio of the radiation-boundary and reflecting radial kernels.
// Used by both the micro solver's Brownian fallback and the
// Brownian-dynamics oracle.
struct ContactStep {
    bool reacted = false;
    Vec3 r;  // relative vector after the step (the pre-step vector when reacted)
};

ContactStep contact_step(const PairParams& p, const Vec3& r_old, const Vec3& r_proposed, double dt, Rng& rng);

// Reaction probability for a step between separations r_old and r_new
// (both >= sigma, r_new already reflected).
double contact_reaction_probability(const PairParams& p, double r_old, double r_new, double dt);

}  // namespace rdhybrid
