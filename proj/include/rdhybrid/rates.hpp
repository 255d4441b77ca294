#pragma once

#include <stdexcept>
#include <vector>

#include "rdhybrid/mesh.hpp"
#include "rdhybrid/model.hpp"

namespace rdhybrid {

// Lattice random-walk constants for mean first-passage times to a target voxel.
inline constexpr double kC2 = 0.1951;
inline constexpr double kC3 = 1.5164;

class NonPositiveDenominator : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Jump rate to each face neighbour.
double jump_rate(double D, double h);

double g3(double h, double sigma);
double h_star(double sigma, int dim = 3);

// Corrected mesoscopic association rate per reactant pair in one voxel.
// Throws NonPositiveDenominator when 1 + (k_a/D) G3 <= 0.
double meso_rate(double k_a, double D, double sigma, double h);
bool below_optimal(double h, double sigma);

double collins_kimball(double k_a, double D, double sigma, double V);

struct MeanTimes {
    double tau_diff_micro = 0.0;
    double tau_react_micro = 0.0;
    double tau_diff_meso = 0.0;
    double tau_react_meso = 0.0;
};

// 3D mean times for one pair in a volume V meshed with N = V/h^3 voxels.
MeanTimes mean_times(double k_a, double D, double sigma, double h, double V);

// 2D formulas (no 2D solver uses them).
double tau_diff_micro_2d(double D, double sigma, double V);
double tau_diff_meso_2d(double D, double V, double N);

struct Resolution {
    double W = 0.0;  // |(k_a/D) G3|
    bool below_optimal = false;
};

Resolution resolution_error_W(double k_a, double D, double sigma, double h);

// Minimum micro residency of dissociation products; D is the sum of the two
// products' diffusion constants.
double t_m(double V_vox, double D, double K);

// Probability that a pair started at contact has not reacted after t
// (unbounded domain).
double contact_survival(double k_a, double D, double sigma, double t);

struct ReactionRate {
    std::size_t reaction = 0;
    double k_a = 0.0;
    double sigma = 0.0;  // sum of reactant radii
    double D = 0.0;      // sum of reactant diffusion constants
    double h = 0.0;
    double h_star = 0.0;
    double k_meso = 0.0;  // 0 when the denominator is non-positive
    bool denominator_ok = true;
    Resolution W;
};

// Per-reaction table (bimolecular reactions carry k_meso and W; unimolecular
// reactions keep their rate in k_meso).
struct RateTable {
    double h = 0.0;
    std::vector<double> jump;  // per species, D/h^2
    std::vector<ReactionRate> reactions;
};

RateTable build_rate_table(const Network& net, const CartesianMesh& mesh);

}  // namespace rdhybrid
