#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "rdhybrid/model.hpp"

namespace rdhybrid::test {

inline std::string model_path(const std::string& name) {
    return std::string(RDHYBRID_SOURCE_DIR) + "/models/" + name;
}

inline SpeciesSpec sp(const std::string& name, double D, double sigma, std::int64_t count = 0) {
    SpeciesSpec s;
    s.name = name;
    s.D = D;
    s.sigma = sigma;
    s.initial_count = count;
    return s;
}

inline ReactionSpec rx(std::vector<std::string> in, std::vector<std::string> out, double rate) {
    ReactionSpec r;
    r.reactants = std::move(in);
    r.products = std::move(out);
    r.rate = rate;
    return r;
}

inline Model box_model(double side, std::int64_t voxels, std::vector<SpeciesSpec> species,
                       std::vector<ReactionSpec> reactions, double t_final = 1.0, std::size_t samples = 11) {
    Model m;
    m.domain.upper = {side, side, side};
    m.species = std::move(species);
    m.reactions = std::move(reactions);
    m.config.voxels = voxels;
    m.config.t_final = t_final;
    m.config.dt_split = std::min(m.config.dt_split, t_final);
    m.config.sample_times = uniform_sample_times(t_final, samples);
    return m;
}

// Kolmogorov-Smirnov distance of samples against a CDF.
template <class Cdf>
double ks_distance(std::vector<double> x, Cdf cdf) {
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double f = cdf(x[i]);
        d = std::max({d, std::abs(f - static_cast<double>(i) / n), std::abs(static_cast<double>(i + 1) / n - f)});
    }
    return d;
}

// Critical KS distance at the 0.1% level.
inline double ks_critical(std::size_t n) { return 1.95 / std::sqrt(static_cast<double>(n)); }

}  // namespace rdhybrid::test
