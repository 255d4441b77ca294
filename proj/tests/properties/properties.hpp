#pragma once

#include <string>
#include <vector>

#include "rdhybrid/model.hpp"

namespace rdhybrid::props {

struct Result {
    bool pass = false;
    std::string detail;
};

// Free diffusion from a point: mean squared displacement 6 D t within
// `tolerance` (relative) over `samples` particles.
Result free_diffusion_msd(SolverKind solver, std::size_t samples = 100000, double tolerance = 0.01);

// Pure diffusion started in one corner voxel: long-run voxel occupancy of the
// meso solver passes a chi-square test against the uniform distribution.
Result uniform_meso_occupancy(std::size_t particles = 100000);
// Same for micro positions, binned on the mesh.
Result uniform_micro_positions(std::size_t particles = 100000);

// No reactive pair of micro particles is closer than the sum of their radii
// after any update.
Result hard_sphere_invariant(SolverKind solver);

// A + B <-> C: A + C and B + C are conserved at every sample, and hybrid
// census totals match the samples.
Result mass_bookkeeping(SolverKind solver, std::size_t replicas = 8);

// Identical seeds give identical samples, independent of the thread count.
Result seed_reproducibility(SolverKind solver);

// Meso-to-micro switches in one voxel are uniform along each axis (KS).
Result switch_uniformity(std::size_t switches = 100000);

// Kolmogorov-Smirnov statistic of samples in [0, 1] against U(0, 1).
double ks_uniform(std::vector<double> x);

}  // namespace rdhybrid::props
