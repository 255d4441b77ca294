#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rdhybrid/model.hpp"
#include "rdhybrid/runner.hpp"

namespace rdhybrid {

// ---- preset models -------------------------------------------------------

// Three-stage dissociation/association chain S1 -> S11 + S12 -> S2 -> ... -> S4
// in a cube of side 0.5 with 20 initial S1; association rates of the six
// standard cases (1..6).
Model chain_model(int table_case);
// Single stage S1 -> S11 + S12 -> S2 used to calibrate epsilon: sigma = 0.0025,
// D = 1, k1 = 10, cube side 50 h*.
Model calibration_model(double k2, std::int64_t voxels);
// Two stages whose associations are resolved at different mesh sizes.
Model two_resolution_model(std::int64_t voxels);
// Chain with 200 S1 and 200 S2 used for the mesh-size performance sweep.
Model mesh_sweep_model(std::int64_t voxels);
// Complex C fixed at the centre of the unit cube dissociating into a mobile A
// (D = 1) and an immobile B; A + B -> C with rate k_a. t_final = 20 leaves
// at least 10 time units after the dissociation with probability 1 - e^-10;
// later rebinds fall into the last decade bin of the rebind histogram anyway.
Model rebind_model(double k_a, std::int64_t voxels = 20);
// One A and one B (D = 1 each, sigma_A + sigma_B = 0.005) placed uniformly in
// the unit cube; A + B -> C with k_a = 1.
Model binding_pair_model(std::int64_t voxels = 20);

// ---- histograms ----------------------------------------------------------

// Histogram of log10(x) with equal-width bins over [lo, hi]; values outside
// the range (including inf) are counted in the first or last bin.
struct LogHistogram {
    std::vector<double> edges;
    std::vector<double> fraction;
    std::size_t samples = 0;
};

LogHistogram log_histogram(const std::vector<double>& x, double lo = 1e-8, double hi = 1e2, std::size_t bins = 10);
// Sum over bins of |fraction_a - fraction_b|.
double l1_distance(const LogHistogram& a, const LogHistogram& b);

// ---- first-passage measurements -----------------------------------------

// Per replica: time from the first firing of reaction `from` to the next
// firing of reaction `to` (kNoReaction for `from`: measured from t = 0).
// Replicas in which `to` does not fire before t_final yield inf. The
// trajectory stops at the firing of `to`.
inline constexpr std::size_t kNoReaction = static_cast<std::size_t>(-1);
std::vector<double> waiting_times(const Prepared& prep, std::uint64_t seed, std::size_t replicas, unsigned threads,
                                  std::size_t from, std::size_t to, const TrajectoryOptions& base = {});

struct SampleStats {
    double mean = 0.0;
    double se = 0.0;
    std::size_t n = 0;
    std::size_t censored = 0;  // non-finite samples, excluded from mean and se
};

SampleStats sample_stats(const std::vector<double>& x);

// ---- trajectory-ensemble errors ------------------------------------------

using MeanTable = std::vector<std::vector<double>>;  // [sample][species]

MeanTable mean_counts(const std::vector<TrajectoryResult>& runs);
MeanTable mean_counts(const std::vector<TrajectoryResult>& runs, const std::vector<std::size_t>& pick);
// max_i |a[i][s] - b[i][s]|
double max_norm_error(const MeanTable& a, const MeanTable& b, std::size_t species);
// (1/L) sum_i sum_s |a[i][s] - b[i][s]|
double mean_abs_error(const MeanTable& a, const MeanTable& b);

// Bootstrap over replicas: each ensemble is resampled independently and the
// statistics are evaluated on the resampled means. Returns [statistic][round].
std::vector<std::vector<double>> bootstrap(
    const std::vector<const std::vector<TrajectoryResult>*>& ensembles,
    const std::function<std::vector<double>(const std::vector<MeanTable>&)>& statistics, std::size_t rounds,
    std::uint64_t seed);

double standard_deviation(const std::vector<double>& x);
// Linear-interpolated empirical quantile, q in [0, 1].
double quantile(std::vector<double> x, double q);

// ---- experiment drivers --------------------------------------------------

struct RunSettings {
    std::uint64_t seed = 1;
    unsigned threads = 0;
    std::size_t replicas = 0;  // 0: experiment default
    MicroOptions micro;
    BdOptions bd;
};

// Ensemble of full trajectories; prepared with the model's partition options.
std::vector<TrajectoryResult> run_replicas(const Prepared& prep, std::uint64_t seed, std::size_t replicas,
                                           unsigned threads, const TrajectoryOptions& opts = {});

struct RebindRow {
    SolverKind solver = SolverKind::Micro;
    double k_a = 0.0;
    std::int64_t voxels = 0;
    LogHistogram histogram;
    SampleStats stats;
    double l1_vs_micro = 0.0;
};

// Rebind-time histograms for micro, hybrid and meso at each k_a.
std::vector<RebindRow> rebind_experiment(const std::vector<double>& k_a, std::int64_t voxels, const RunSettings& run);

struct BindingRow {
    SolverKind solver = SolverKind::Micro;
    SampleStats stats;
};

// Mean binding time of an isolated pair, meso against micro.
std::vector<BindingRow> binding_time_experiment(std::int64_t voxels, const RunSettings& run);

struct CalibrationRow {
    double k2 = 0.0;
    std::int64_t voxels = 0;
    double h = 0.0;
    double W = 0.0;
    double E = 0.0;  // max-norm on S2, meso against micro
    double E_se = 0.0;
};

std::vector<CalibrationRow> eps_sweep(const std::vector<double>& k2, const std::vector<std::int64_t>& voxels,
                                      const RunSettings& run);

struct ErrorRow {
    std::string label;  // "meso", "micro", "hybrid"
    double dt_split = 0.0;
    std::int64_t voxels = 0;
    double E = 0.0;
    double E_se = 0.0;
};

struct DtConvergence {
    std::vector<ErrorRow> rows;  // meso, micro, then hybrid per dt
    // Bootstrap distributions (same resamples) of E per row.
    std::vector<std::vector<double>> boot;
};

// Max-norm error on one species against the Brownian-dynamics oracle, for
// pure meso, pure micro and hybrid at each splitting step.
DtConvergence dt_convergence(const Model& base, std::size_t species, const std::vector<double>& dt_split,
                             const RunSettings& run, std::size_t oracle_replicas = 0,
                             std::size_t bootstrap_rounds = 400);

struct TwoResolution {
    std::vector<ErrorRow> rows;  // per voxel count: meso and hybrid
};

TwoResolution two_resolution_experiment(const std::vector<std::int64_t>& voxels, const RunSettings& run,
                                        std::size_t oracle_replicas = 0, std::size_t bootstrap_rounds = 200);

struct SweepRow {
    std::int64_t voxels = 0;
    double h = 0.0;
    std::size_t micro_species = 0;  // species not AlwaysMeso in the plan
    double t_meso = 0.0;
    double t_micro = 0.0;
    double t_switch = 0.0;
    double t_total = 0.0;
    double mean_micro_population = 0.0;  // time-averaged census, mean over replicas
    double mean_meso_population = 0.0;
    double E = 0.0;  // mean-abs error against the oracle; nan without oracle
};

struct SweepResult {
    std::vector<SweepRow> rows;
    // Census of replica 0 per voxel count: (t, micro, meso).
    std::vector<std::vector<CensusPoint>> census;
};

// Hybrid runs of `model_at(voxels)` for each voxel count. The oracle is run
// once (it does not depend on the mesh) when oracle_replicas > 0.
SweepResult mesh_sweep(const std::function<Model(std::int64_t)>& model_at, const std::vector<std::int64_t>& voxels,
                       const RunSettings& run, std::size_t oracle_replicas = 0);

}  // namespace rdhybrid
