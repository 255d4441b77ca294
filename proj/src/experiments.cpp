#include "rdhybrid/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "rdhybrid/rates.hpp"

namespace rdhybrid {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

SpeciesSpec species(const std::string& name, double D, double sigma, std::int64_t count = 0) {
    SpeciesSpec s;
    s.name = name;
    s.D = D;
    s.sigma = sigma;
    s.initial_count = count;
    return s;
}

ReactionSpec reaction(std::vector<std::string> reactants, std::vector<std::string> products, double rate,
                      std::string label = {}) {
    ReactionSpec r;
    r.reactants = std::move(reactants);
    r.products = std::move(products);
    r.rate = rate;
    r.label = std::move(label);
    return r;
}

BoxDomain cube(double side) {
    BoxDomain d;
    d.upper = {side, side, side};
    return d;
}

// Appends stage i of a dissociation/association chain: S_i -> S_i1 + S_i2 -> S_{i+1}.
void add_stage(Model& m, int i, double k_d, double k_a) {
    const std::string s = "S" + std::to_string(i);
    const std::string next = "S" + std::to_string(i + 1);
    m.reactions.push_back(reaction({s}, {s + "1", s + "2"}, k_d, "dissociation " + std::to_string(i)));
    m.reactions.push_back(reaction({s + "1", s + "2"}, {next}, k_a, "association " + std::to_string(i)));
}

Model chain_with(const std::vector<double>& k2, double sigma, double side, std::int64_t s1, std::int64_t s2) {
    Model m;
    m.domain = cube(side);
    const int stages = static_cast<int>(k2.size());
    for (int i = 1; i <= stages; ++i) {
        const std::string s = "S" + std::to_string(i);
        m.species.push_back(species(s, 1.0, sigma, i == 1 ? s1 : (i == 2 ? s2 : 0)));
        m.species.push_back(species(s + "1", 1.0, sigma));
        m.species.push_back(species(s + "2", 1.0, sigma));
    }
    m.species.push_back(species("S" + std::to_string(stages + 1), 1.0, sigma));
    for (int i = 1; i <= stages; ++i) add_stage(m, i, 10.0, k2[static_cast<std::size_t>(i - 1)]);
    return m;
}

}  // namespace

Model chain_model(int table_case) {
    static const double k2[6][3] = {{0.1, 0.1, 0.1},      {0.001, 0.3, 0.001}, {0.1, 0.3, 0.001},
                                    {0.1, 0.001, 0.2},    {0.001, 0.001, 0.2}, {0.001, 0.001, 0.001}};
    if (table_case < 1 || table_case > 6) throw std::invalid_argument("chain case must be in 1..6");
    const auto& k = k2[table_case - 1];
    Model m = chain_with({k[0], k[1], k[2]}, 0.0025, 0.5, 20, 0);
    m.config.t_final = 1.0;
    m.config.dt_split = 1e-3;
    m.config.voxels = 10;
    m.config.sample_times = uniform_sample_times(1.0, 101);
    return m;
}

Model calibration_model(double k2, std::int64_t voxels) {
    const double sigma = 0.0025;
    Model m = chain_with({k2}, sigma, 50.0 * h_star(2.0 * sigma), 20, 0);
    m.config.t_final = 1.0;
    m.config.voxels = voxels;
    m.config.sample_times = uniform_sample_times(1.0, 101);
    return m;
}

Model two_resolution_model(std::int64_t voxels) {
    Model m;
    m.domain = cube(1.0);
    m.species = {species("S1", 1.0, 1.0e-3, 20),  species("S11", 1.0, 0.8e-3), species("S12", 1.0, 0.8e-3),
                 species("S2", 1.0, 2.0e-3),      species("S21", 1.0, 1.8e-3), species("S22", 1.0, 1.8e-3),
                 species("S3", 1.0, 2.5e-3)};
    add_stage(m, 1, 10.0, 0.1);
    add_stage(m, 2, 10.0, 0.1);
    m.config.t_final = 2.0;
    m.config.voxels = voxels;
    m.config.sample_times = uniform_sample_times(2.0, 201);
    return m;
}

Model mesh_sweep_model(std::int64_t voxels) {
    Model m = chain_with({0.0016, 0.00145, 0.0014}, 0.001, 0.8, 200, 200);
    for (auto& r : m.reactions)
        if (r.reactants.size() == 1) r.rate = 20.0;
    m.config.t_final = 0.1;
    m.config.voxels = voxels;
    m.config.sample_times = uniform_sample_times(0.1, 51);
    return m;
}

Model rebind_model(double k_a, std::int64_t voxels) {
    Model m;
    m.domain = cube(1.0);
    SpeciesSpec c = species("C", 0.0, 0.0025, 1);
    c.initial_placement = {PlacementKind::FixedPoint, {0.5, 0.5, 0.5}};
    m.species = {c, species("A", 1.0, 0.0025), species("B", 0.0, 0.0025)};
    m.reactions = {reaction({"C"}, {"A", "B"}, 1.0, "dissociation"), reaction({"A", "B"}, {"C"}, k_a, "rebinding")};
    m.config.t_final = 20.0;
    m.config.voxels = voxels;
    m.config.sample_times = {0.0, 20.0};
    return m;
}

Model binding_pair_model(std::int64_t voxels) {
    Model m;
    m.domain = cube(1.0);
    m.species = {species("A", 1.0, 0.0025, 1), species("B", 1.0, 0.0025, 1), species("C", 1.0, 0.0025)};
    m.reactions = {reaction({"A", "B"}, {"C"}, 1.0, "binding")};
    m.config.t_final = 1000.0;
    m.config.voxels = voxels;
    m.config.solver = SolverKind::Meso;
    m.config.sample_times = {0.0, 1000.0};
    return m;
}

LogHistogram log_histogram(const std::vector<double>& x, double lo, double hi, std::size_t bins) {
    if (!(lo > 0.0 && hi > lo && bins > 0)) throw std::invalid_argument("log_histogram: need 0 < lo < hi, bins > 0");
    LogHistogram h;
    const double a = std::log10(lo);
    const double w = (std::log10(hi) - a) / static_cast<double>(bins);
    for (std::size_t i = 0; i <= bins; ++i) h.edges.push_back(std::pow(10.0, a + w * static_cast<double>(i)));
    h.fraction.assign(bins, 0.0);
    for (double v : x) {
        std::size_t b = 0;
        if (std::isnan(v)) continue;
        if (v >= hi) b = bins - 1;
        else if (v > lo) b = std::min(bins - 1, static_cast<std::size_t>((std::log10(v) - a) / w));
        h.fraction[b] += 1.0;
        ++h.samples;
    }
    if (h.samples > 0)
        for (double& f : h.fraction) f /= static_cast<double>(h.samples);
    return h;
}

double l1_distance(const LogHistogram& a, const LogHistogram& b) {
    if (a.fraction.size() != b.fraction.size()) throw std::invalid_argument("l1_distance: bin counts differ");
    double d = 0.0;
    for (std::size_t i = 0; i < a.fraction.size(); ++i) d += std::abs(a.fraction[i] - b.fraction[i]);
    return d;
}

std::vector<double> waiting_times(const Prepared& prep, std::uint64_t seed, std::size_t replicas, unsigned threads,
                                  std::size_t from, std::size_t to, const TrajectoryOptions& base) {
    std::vector<double> out(replicas, kInf);
    parallel_replicas(replicas, threads, [&](std::size_t r) {
        TrajectoryOptions opts = base;
        double start = from == kNoReaction ? 0.0 : kInf;
        opts.stop_on = [&, from, to](const ReactionRecord& rec) {
            if (std::isinf(start)) {
                if (rec.reaction == from) start = rec.t;
                return false;
            }
            return rec.reaction == to;
        };
        const auto res = run_trajectory(prep, seed, r, opts);
        if (res.stopped) out[r] = res.stop_time - start;
    });
    return out;
}

SampleStats sample_stats(const std::vector<double>& x) {
    SampleStats s;
    double sum = 0.0;
    double sum2 = 0.0;
    for (double v : x) {
        if (!std::isfinite(v)) {
            ++s.censored;
            continue;
        }
        ++s.n;
        sum += v;
    }
    if (s.n == 0) return s;
    s.mean = sum / static_cast<double>(s.n);
    for (double v : x)
        if (std::isfinite(v)) sum2 += (v - s.mean) * (v - s.mean);
    s.se = s.n > 1 ? std::sqrt(sum2 / static_cast<double>(s.n - 1) / static_cast<double>(s.n)) : 0.0;
    return s;
}

MeanTable mean_counts(const std::vector<TrajectoryResult>& runs, const std::vector<std::size_t>& pick) {
    if (runs.empty() || pick.empty()) return {};
    const auto& first = runs.front().samples.counts;
    MeanTable m(first.size(), std::vector<double>(first.empty() ? 0 : first.front().size(), 0.0));
    for (std::size_t r : pick)
        for (std::size_t k = 0; k < m.size(); ++k)
            for (std::size_t s = 0; s < m[k].size(); ++s) m[k][s] += static_cast<double>(runs[r].samples.counts[k][s]);
    const double n = static_cast<double>(pick.size());
    for (auto& row : m)
        for (double& v : row) v /= n;
    return m;
}

MeanTable mean_counts(const std::vector<TrajectoryResult>& runs) {
    std::vector<std::size_t> all(runs.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return mean_counts(runs, all);
}

double max_norm_error(const MeanTable& a, const MeanTable& b, std::size_t species) {
    if (a.size() != b.size()) throw std::invalid_argument("max_norm_error: sample counts differ");
    double e = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) e = std::max(e, std::abs(a[k][species] - b[k][species]));
    return e;
}

double mean_abs_error(const MeanTable& a, const MeanTable& b) {
    if (a.size() != b.size()) throw std::invalid_argument("mean_abs_error: sample counts differ");
    if (a.empty()) return 0.0;
    double e = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k)
        for (std::size_t s = 0; s < a[k].size(); ++s) e += std::abs(a[k][s] - b[k][s]);
    return e / static_cast<double>(a.size());
}

std::vector<std::vector<double>> bootstrap(
    const std::vector<const std::vector<TrajectoryResult>*>& ensembles,
    const std::function<std::vector<double>(const std::vector<MeanTable>&)>& statistics, std::size_t rounds,
    std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::vector<double>> out;
    std::vector<MeanTable> means(ensembles.size());
    std::vector<std::size_t> pick;
    for (std::size_t b = 0; b < rounds; ++b) {
        for (std::size_t e = 0; e < ensembles.size(); ++e) {
            const std::size_t n = ensembles[e]->size();
            pick.resize(n);
            for (auto& p : pick) p = rng.index(n);
            means[e] = mean_counts(*ensembles[e], pick);
        }
        const auto stats = statistics(means);
        if (out.empty()) out.resize(stats.size());
        for (std::size_t k = 0; k < stats.size(); ++k) out[k].push_back(stats[k]);
    }
    return out;
}

double standard_deviation(const std::vector<double>& x) {
    if (x.size() < 2) return 0.0;
    double m = 0.0;
    for (double v : x) m += v;
    m /= static_cast<double>(x.size());
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return std::sqrt(s / static_cast<double>(x.size() - 1));
}

double quantile(std::vector<double> x, double q) {
    if (x.empty()) return kNaN;
    std::sort(x.begin(), x.end());
    const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(x.size() - 1);
    const auto i = static_cast<std::size_t>(pos);
    if (i + 1 >= x.size()) return x.back();
    return x[i] + (pos - static_cast<double>(i)) * (x[i + 1] - x[i]);
}

std::vector<TrajectoryResult> run_replicas(const Prepared& prep, std::uint64_t seed, std::size_t replicas,
                                           unsigned threads, const TrajectoryOptions& opts) {
    std::vector<TrajectoryResult> runs(replicas);
    parallel_replicas(replicas, threads, [&](std::size_t r) { runs[r] = run_trajectory(prep, seed, r, opts); });
    return runs;
}

namespace {

TrajectoryOptions trajectory_options(const RunSettings& run) {
    TrajectoryOptions o;
    o.micro = run.micro;
    o.bd = run.bd;
    return o;
}

Prepared prepare_default(const Model& m, SolverKind solver) { return prepare(m, solver, partition_options(m)); }

}  // namespace

std::vector<RebindRow> rebind_experiment(const std::vector<double>& k_a, std::int64_t voxels, const RunSettings& run) {
    const std::size_t n = run.replicas ? run.replicas : 10000;
    std::vector<RebindRow> rows;
    for (double k : k_a) {
        const Model m = rebind_model(k, voxels);
        RebindRow micro_row;
        for (SolverKind solver : {SolverKind::Micro, SolverKind::Hybrid, SolverKind::Meso}) {
            const Prepared prep = prepare_default(m, solver);
            const auto times = waiting_times(prep, run.seed, n, run.threads, 0, 1, trajectory_options(run));
            RebindRow row;
            row.solver = solver;
            row.k_a = k;
            row.voxels = voxels;
            row.histogram = log_histogram(times);
            row.stats = sample_stats(times);
            if (solver == SolverKind::Micro) micro_row = row;
            row.l1_vs_micro = l1_distance(row.histogram, micro_row.histogram);
            rows.push_back(row);
        }
    }
    return rows;
}

std::vector<BindingRow> binding_time_experiment(std::int64_t voxels, const RunSettings& run) {
    const std::size_t n = run.replicas ? run.replicas : 10000;
    const Model m = binding_pair_model(voxels);
    std::vector<BindingRow> rows;
    for (SolverKind solver : {SolverKind::Meso, SolverKind::Micro}) {
        const Prepared prep = prepare_default(m, solver);
        const auto times = waiting_times(prep, run.seed, n, run.threads, kNoReaction, 0, trajectory_options(run));
        rows.push_back({solver, sample_stats(times)});
    }
    return rows;
}

std::vector<CalibrationRow> eps_sweep(const std::vector<double>& k2, const std::vector<std::int64_t>& voxels,
                                      const RunSettings& run) {
    const std::size_t n = run.replicas ? run.replicas : 100;
    std::vector<CalibrationRow> rows;
    for (double k : k2) {
        // The micro reference does not depend on the mesh.
        const Model ref_model = calibration_model(k, voxels.empty() ? 10 : voxels.front());
        const auto micro = run_replicas(prepare_default(ref_model, SolverKind::Micro), run.seed, n, run.threads,
                                        trajectory_options(run));
        const std::size_t s2 = ref_model.species.size() - 1;
        for (std::int64_t nx : voxels) {
            const Model m = calibration_model(k, nx);
            const Prepared prep = prepare_default(m, SolverKind::Meso);
            const auto meso = run_replicas(prep, run.seed + 1, n, run.threads, trajectory_options(run));
            CalibrationRow row;
            row.k2 = k;
            row.voxels = nx;
            row.h = prep.mesh->h();
            row.W = resolution_error_W(k, 2.0, 0.005, row.h).W;
            row.E = max_norm_error(mean_counts(meso), mean_counts(micro), s2);
            const auto boot = bootstrap(
                {&meso, &micro}, [&](const std::vector<MeanTable>& t) { return std::vector{max_norm_error(t[0], t[1], s2)}; },
                200, run.seed);
            row.E_se = standard_deviation(boot[0]);
            rows.push_back(row);
        }
    }
    return rows;
}

DtConvergence dt_convergence(const Model& base, std::size_t species, const std::vector<double>& dt_split,
                             const RunSettings& run, std::size_t oracle_replicas, std::size_t bootstrap_rounds) {
    const std::size_t n = run.replicas ? run.replicas : 200;
    if (species >= base.species.size()) throw std::invalid_argument("dt_convergence: species out of range");
    const auto opts = trajectory_options(run);

    // Distinct seeds per ensemble keep them independent.
    const auto oracle = run_replicas(prepare_default(base, SolverKind::BdOracle), run.seed,
                                     oracle_replicas ? oracle_replicas : n, run.threads, opts);
    std::vector<std::vector<TrajectoryResult>> ensembles;
    DtConvergence out;
    ensembles.push_back(run_replicas(prepare_default(base, SolverKind::Meso), run.seed + 1, n, run.threads, opts));
    out.rows.push_back({"meso", kNaN, base.config.voxels});
    ensembles.push_back(run_replicas(prepare_default(base, SolverKind::Micro), run.seed + 2, n, run.threads, opts));
    out.rows.push_back({"micro", kNaN, base.config.voxels});
    for (std::size_t i = 0; i < dt_split.size(); ++i) {
        Model m = base;
        m.config.dt_split = dt_split[i];
        ensembles.push_back(run_replicas(prepare_default(m, SolverKind::Hybrid), run.seed + 3 + i, n, run.threads, opts));
        out.rows.push_back({"hybrid", dt_split[i], base.config.voxels});
    }

    const MeanTable ref = mean_counts(oracle);
    for (std::size_t i = 0; i < ensembles.size(); ++i) out.rows[i].E = max_norm_error(mean_counts(ensembles[i]), ref, species);
    std::vector<const std::vector<TrajectoryResult>*> all{&oracle};
    for (const auto& e : ensembles) all.push_back(&e);
    out.boot = bootstrap(
        all,
        [&](const std::vector<MeanTable>& t) {
            std::vector<double> e;
            for (std::size_t i = 1; i < t.size(); ++i) e.push_back(max_norm_error(t[i], t[0], species));
            return e;
        },
        bootstrap_rounds, run.seed);
    for (std::size_t i = 0; i < out.rows.size(); ++i) out.rows[i].E_se = standard_deviation(out.boot[i]);
    return out;
}

TwoResolution two_resolution_experiment(const std::vector<std::int64_t>& voxels, const RunSettings& run,
                                        std::size_t oracle_replicas, std::size_t bootstrap_rounds) {
    const std::size_t n = run.replicas ? run.replicas : 100;
    const auto opts = trajectory_options(run);
    const Model ref_model = two_resolution_model(voxels.empty() ? 20 : voxels.front());
    const auto oracle = run_replicas(prepare_default(ref_model, SolverKind::BdOracle), run.seed,
                                     oracle_replicas ? oracle_replicas : n, run.threads, opts);
    const MeanTable ref = mean_counts(oracle);
    TwoResolution out;
    std::uint64_t seed = run.seed + 1;
    for (std::int64_t nx : voxels) {
        const Model m = two_resolution_model(nx);
        for (SolverKind solver : {SolverKind::Meso, SolverKind::Hybrid}) {
            const auto runs = run_replicas(prepare_default(m, solver), seed++, n, run.threads, opts);
            ErrorRow row{to_string(solver), m.config.dt_split, nx, mean_abs_error(mean_counts(runs), ref), 0.0};
            const auto boot = bootstrap(
                {&runs, &oracle}, [&](const std::vector<MeanTable>& t) { return std::vector{mean_abs_error(t[0], t[1])}; },
                bootstrap_rounds, run.seed);
            row.E_se = standard_deviation(boot[0]);
            out.rows.push_back(row);
        }
    }
    return out;
}

SweepResult mesh_sweep(const std::function<Model(std::int64_t)>& model_at, const std::vector<std::int64_t>& voxels,
                       const RunSettings& run, std::size_t oracle_replicas) {
    const std::size_t n = run.replicas ? run.replicas : 1;
    const auto opts = trajectory_options(run);
    MeanTable ref;
    if (oracle_replicas > 0 && !voxels.empty())
        ref = mean_counts(run_replicas(prepare_default(model_at(voxels.front()), SolverKind::BdOracle), run.seed,
                                       oracle_replicas, run.threads, opts));
    SweepResult out;
    for (std::int64_t nx : voxels) {
        const Model m = model_at(nx);
        const Prepared prep = prepare_default(m, SolverKind::Hybrid);
        const auto runs = run_replicas(prep, run.seed + 1, n, run.threads, opts);
        SweepRow row;
        row.voxels = nx;
        row.h = prep.mesh->h();
        for (const auto& p : prep.plan.policy) row.micro_species += p.kind != PolicyKind::AlwaysMeso;
        for (const auto& r : runs) {
            row.t_meso += r.timings.meso;
            row.t_micro += r.timings.micro;
            row.t_switch += r.timings.switching;
            row.t_total += r.timings.total;
            double micro = 0.0;
            double meso = 0.0;
            for (const auto& c : r.census) micro += static_cast<double>(c.micro), meso += static_cast<double>(c.meso);
            if (!r.census.empty()) {
                row.mean_micro_population += micro / static_cast<double>(r.census.size());
                row.mean_meso_population += meso / static_cast<double>(r.census.size());
            }
        }
        row.mean_micro_population /= static_cast<double>(n);
        row.mean_meso_population /= static_cast<double>(n);
        row.E = ref.empty() ? kNaN : mean_abs_error(mean_counts(runs), ref);
        out.rows.push_back(row);
        out.census.push_back(runs.empty() ? std::vector<CensusPoint>{} : runs.front().census);
    }
    return out;
}

}  // namespace rdhybrid
