#include "rdhybrid/rates.hpp"

#include <cmath>
#include <sstream>

#include "rdhybrid/special.hpp"

namespace rdhybrid {

double jump_rate(double D, double h) { return D / (h * h); }

double g3(double h, double sigma) { return 1.0 / (4.0 * kPi * sigma) - kC3 / (6.0 * h); }

double h_star(double sigma, int dim) {
    if (dim == 2) return std::sqrt(kPi) * std::exp((3.0 + 2.0 * kC2 * kPi) / 4.0) * sigma;
    return 2.0 * kC3 / 3.0 * kPi * sigma;
}

bool below_optimal(double h, double sigma) { return h < h_star(sigma, 3); }

double meso_rate(double k_a, double D, double sigma, double h) {
    const double denom = 1.0 + k_a / D * g3(h, sigma);
    if (!(denom > 0.0)) {
        std::ostringstream os;
        os << "mesoscopic rate undefined: 1 + (k_a/D) G = " << denom << " <= 0 for k_a=" << k_a << ", D=" << D
           << ", sigma=" << sigma << ", h=" << h;
        throw NonPositiveDenominator(os.str());
    }
    return k_a / (h * h * h) / denom;
}

double collins_kimball(double k_a, double D, double sigma, double V) {
    const double kd = 4.0 * kPi * sigma * D;
    return kd * k_a / (kd + k_a) / V;
}

MeanTimes mean_times(double k_a, double D, double sigma, double h, double V) {
    MeanTimes t;
    t.tau_diff_micro = V / (4.0 * kPi * sigma * D);
    t.tau_react_micro = V / k_a;
    t.tau_diff_meso = kC3 * V / (6.0 * D * h);
    t.tau_react_meso = V / (h * h * h) / meso_rate(k_a, D, sigma, h);
    return t;
}

double tau_diff_micro_2d(double D, double sigma, double V) {
    return V * std::log(std::sqrt(V) / (kPi * sigma)) / (2.0 * kPi * D);
}

double tau_diff_meso_2d(double D, double V, double N) {
    return V / (4.0 * kPi * D) * std::log(N) + kC2 * V / (4.0 * D);
}

Resolution resolution_error_W(double k_a, double D, double sigma, double h) {
    return {std::abs(k_a / D * g3(h, sigma)), below_optimal(h, sigma)};
}

double t_m(double V_vox, double D, double K) { return K * K * std::cbrt(V_vox * V_vox) / (6.0 * D); }

double contact_survival(double k_a, double D, double sigma, double t) {
    if (k_a <= 0.0 || t <= 0.0) return 1.0;
    const double kd = 4.0 * kPi * sigma * D;
    const double alpha = (1.0 + k_a / kd) * std::sqrt(D) / sigma;
    return 1.0 - k_a / (kd + k_a) * (1.0 - erfcx(alpha * std::sqrt(t)));
}

RateTable build_rate_table(const Network& net, const CartesianMesh& mesh) {
    RateTable table;
    table.h = mesh.h();
    for (const auto& s : net.species()) table.jump.push_back(jump_rate(s.D, mesh.h()));
    for (std::size_t i = 0; i < net.reactions().size(); ++i) {
        const auto& ch = net.reactions()[i];
        ReactionRate rr;
        rr.reaction = i;
        rr.k_a = ch.rate;
        rr.h = mesh.h();
        if (ch.kind == ReactionKind::Bimolecular) {
            const auto& a = net.spec(ch.reactants[0]);
            const auto& b = net.spec(ch.reactants[1]);
            rr.sigma = a.sigma + b.sigma;
            rr.D = a.D + b.D;
            rr.h_star = h_star(rr.sigma);
            rr.W = resolution_error_W(rr.k_a, rr.D, rr.sigma, rr.h);
            try {
                rr.k_meso = meso_rate(rr.k_a, rr.D, rr.sigma, rr.h);
            } catch (const NonPositiveDenominator&) {
                rr.denominator_ok = false;
            }
        } else {
            rr.k_meso = ch.rate;
        }
        table.reactions.push_back(rr);
    }
    return table;
}

}  // namespace rdhybrid
