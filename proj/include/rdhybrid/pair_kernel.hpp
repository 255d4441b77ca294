#pragma once

#include "rdhybrid/random.hpp"
#include "rdhybrid/types.hpp"

namespace rdhybrid {

// Isolated pair in relative coordinates: contact radius sigma, relative
// diffusion constant D = D1 + D2, intrinsic association rate k_a at contact.
struct PairParams {
    double sigma = 0.0;
    double D = 0.0;
    double k_a = 0.0;
};

// Probability that a pair at separation r0 has not reacted after time t
// (radiation boundary at sigma, unbounded space).
double pair_survival(const PairParams& p, double r0, double t);

// Radial density of the surviving pair at separation r after time t.
double pair_radial_density(const PairParams& p, double r0, double r, double t);
// Antiderivative of pair_radial_density in r; A(inf) - A(sigma) = survival.
double pair_radial_antiderivative(const PairParams& p, double r0, double r, double t);

struct PairEvent {
    bool reacted = false;
    double t = 0.0;  // reaction time within the window when reacted
};

// Reaction time drawn by inverse transform on 1 - S; NoReaction with
// probability S(dt).
PairEvent sample_pair_event(const PairParams& p, double r0, double dt, Rng& rng);

// Inverse of t -> 1 - S(t) on [0, dt] by bisection with tolerance 1e-10 dt.
double invert_reaction_cdf(const PairParams& p, double r0, double dt, double target);

// New separation of a pair that survived for t.
double sample_separation(const PairParams& p, double r0, double t, Rng& rng);

// Direction of the new relative vector around the old one, with the
// concentration r r0 / (2 D t) of the free-diffusion kernel.
Vec3 sample_direction(const Vec3& r0_dir, double kappa, Rng& rng);

// Relative vector after surviving for t, starting from r0 (|r0| >= sigma).
Vec3 propagate_relative(const PairParams& p, const Vec3& r0, double t, Rng& rng);

}  // namespace rdhybrid
