#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "rdhybrid/model.hpp"
#include "rdhybrid/npm.hpp"
#include "rdhybrid/pair_kernel.hpp"
#include "rdhybrid/random.hpp"

namespace rdhybrid {

class GridResolutionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RadialGrid {
    std::vector<double> r;  // r[0] = sigma, r.back() = R_max
    double sigma = 0.0;
    double D = 0.0;
    double k_a = 0.0;
};

// Geometric grid from sigma to R_max >= r0 + 20 sigma + 6 sqrt(2 D t_max) with
// n_r intervals.
RadialGrid make_radial_grid(double sigma, double D, double k_a, double r0, double t_min, double t_max,
                            std::size_t n_r, double r_max = 0.0);

struct PdeOptions {
    std::size_t n_r = 800;
    std::size_t time_levels = 3000;
    double r_max = 0.0;  // 0: automatic
    bool richardson = true;
    double richardson_tol = 1e-4;
};

// E[f(r(t)); survived | r(0) = r0] for an isolated pair with a radiation
// boundary at sigma, by solving the backward equation for r * E on the radial
// grid. Throws GridResolutionError when the n_r / 2 n_r solutions differ by
// more than richardson_tol.
std::vector<double> pde_expectation(const std::function<double(double)>& f, double r0, double sigma, double k_a,
                                    double D, const std::vector<double>& times, const PdeOptions& opts = {});

std::vector<double> pde_survival(double r0, double sigma, double k_a, double D, const std::vector<double>& times,
                                 const PdeOptions& opts = {});

// Probability of surviving to t with separation in [edges[i], edges[i+1]).
std::vector<double> pde_separation_histogram(double r0, double sigma, double k_a, double D, double t,
                                             const std::vector<double>& edges, const PdeOptions& opts = {});

// Survival curve of an isolated pair under fixed-step Brownian dynamics with
// the shared contact scheme; n independent pairs started at separation r0.
std::vector<double> bd_pair_survival(const PairParams& p, double r0, double dt, const std::vector<double>& times,
                                     std::size_t n, Rng& rng);

struct BdOptions {
    // Step near contact: relative RMS displacement rms_fraction * sigma.
    double rms_fraction = 0.2;
    std::optional<double> dt;  // overrides rms_fraction
    // Far pairs step with gap / z_protect as the per-axis relative RMS.
    double z_protect = 4.75;
    // Pairs with gap below cluster_gap * sigma are stepped at the contact step.
    double cluster_gap = 2.0;
};

// Brute-force Brownian dynamics of a full model in its box: every particle is
// point-like and diffuses freely, reactive pairs react through the contact
// scheme, unimolecular reactions fire on exponential clocks, and the box walls
// reflect.
class BdSimulator {
public:
    BdSimulator(const Network& net, const BoxDomain& box, Rng& rng, IdSource& ids, BdOptions opts = {});

    double dt_bd() const { return dt_bd_; }
    double now() const { return now_; }

    void add(Particle p);
    // Advances to t_end; samples with now() <= time < t_end are recorded.
    void run(double t_end, SampleBuffer* samples, std::size_t& next_sample);

    std::int64_t count(SpeciesId s) const { return counts_[s]; }
    std::int64_t population() const { return population_; }
    std::vector<Particle> live_particles() const;
    std::uint64_t macro_steps() const { return n_macro_; }
    std::uint64_t contact_steps() const { return n_contact_; }

    std::function<void(const ReactionRecord&)> on_reaction;
    bool stop_requested = false;

private:
    struct Slot {
        Particle p;
        double clock = kInf;  // absolute time of the next unimolecular event
        bool alive = false;
    };

    std::size_t insert(SpeciesId s, const Vec3& pos, double t);
    void kill(std::size_t i);
    void place_products(const std::vector<SpeciesId>& products, const Vec3& where, double t);
    void fire_unimolecular(std::size_t i, double t);
    void fire_pair(std::size_t i, std::size_t k, double t);
    bool contact(std::size_t i, std::size_t k, const Vec3& ri_old, const Vec3& rk_old, double dt, double t);
    void record(SampleBuffer& samples, std::size_t k) const;
    double step(double horizon);

    const Network& net_;
    BoxDomain box_;
    Rng& rng_;
    IdSource& ids_;
    BdOptions opts_;
    double dt_bd_ = 0.0;
    double now_ = 0.0;
    std::vector<Slot> slots_;
    std::vector<std::size_t> free_;
    std::vector<std::int64_t> counts_;
    std::int64_t population_ = 0;
    bool in_step_ = false;
    std::uint64_t n_macro_ = 0;
    std::uint64_t n_contact_ = 0;
};

}  // namespace rdhybrid
