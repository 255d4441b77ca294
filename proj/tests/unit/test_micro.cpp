#include <doctest.h>

#include <cmath>
#include <vector>

#include "helpers.hpp"
#include "properties.hpp"
#include "rdhybrid/experiments.hpp"
#include "rdhybrid/micro.hpp"
#include "rdhybrid/runner.hpp"

using namespace rdhybrid;
using namespace rdhybrid::test;

namespace {

class FixedPartners : public MesoPartners {
public:
    explicit FixedPartners(std::int64_t n) : n_(n) {}
    std::int64_t count(VoxelIndex, SpeciesId s) const override { return s == 1 ? n_ : 0; }
    std::int64_t total(SpeciesId s) const override { return s == 1 ? n_ : 0; }
    void consume(VoxelIndex, SpeciesId, double) override { ++consumed; }
    int consumed = 0;

private:
    std::int64_t n_;
};

}  // namespace

TEST_SUITE("micro") {

TEST_CASE("box reflection mirrors overshoots") {
    BoxDomain box;
    CHECK(reflect_into_box({0.3, 0.4, 0.5}, box) == Vec3{0.3, 0.4, 0.5});
    const Vec3 a = reflect_into_box({1.2, -0.1, 0.5}, box);
    CHECK(a.x == doctest::Approx(0.8));
    CHECK(a.y == doctest::Approx(0.1));
    const Vec3 b = reflect_into_box({2.3, -1.25, 0.5}, box);
    CHECK(box.contains(b));
    CHECK(b.x == doctest::Approx(0.3));
    CHECK(b.y == doctest::Approx(0.75));
    CHECK(box.contains(reflect_into_box({1.0, 0.0, 1.0}, box)));
}

TEST_CASE("free diffusion has the exact per-axis variance") {
    const auto r = props::free_diffusion_msd(SolverKind::Micro, 100000, 0.01);
    INFO(r.detail);
    CHECK(r.pass);
}

TEST_CASE("rebind times from contact follow the analytic survival") {
    Model m = rebind_model(1.0, 20);
    m.reactions[0].rate = 1e4;
    m.config.t_final = 0.05;
    m.config.sample_times = {0.0, 0.05};
    const Prepared prep = prepare(m, SolverKind::Micro, partition_options(m));
    const std::size_t n = 10000;
    const auto times = waiting_times(prep, 31, n, 0, 0, 1);
    // Bins of one decade from 1e-8 to 1e-2; everything later in one tail bin.
    const LogHistogram h = log_histogram(times, 1e-8, 1e-1, 7);
    const double D = 1.0, sigma = 0.005, k_a = 1.0;
    auto S = [&](double t) { return contact_survival(k_a, D, sigma, t); };
    double l1 = 0.0;
    for (std::size_t b = 0; b < 7; ++b) {
        const double lo = b == 0 ? 0.0 : h.edges[b];
        const double expected = b == 6 ? S(h.edges[b]) : S(lo) - S(h.edges[b + 1]);
        l1 += std::abs(h.fraction[b] - expected);
        MESSAGE("bin " << b << " observed " << h.fraction[b] << " expected " << expected);
    }
    CHECK(l1 < 0.05);
}

TEST_CASE("micro-meso reaction with a frozen partner waits Exp(k_meso)") {
    const Model m = box_model(1.0, 10, {sp("A", 0.0, 0.0025), sp("B", 1.0, 0.0025), sp("C", 0.0, 0.0025)},
                              {rx({"A", "B"}, {"C"}, 1.0)});
    const Network net(m);
    const CartesianMesh mesh(m.domain, 10);
    const RateTable rates = build_rate_table(net, mesh);
    for (std::int64_t partners : {1, 2}) {
        const double k = rates.reactions[0].k_meso * static_cast<double>(partners);
        std::vector<double> waits;
        for (int i = 0; i < 4000; ++i) {
            Rng rng(Rng::for_replica(8, static_cast<std::uint64_t>(i)));
            IdSource ids;
            MicroSolver micro(net, mesh, rates, rng, ids);
            Particle p;
            p.species = 0;
            p.pos = {0.55, 0.55, 0.55};
            micro.add(p);
            FixedPartners meso(partners);
            double t_react = kInf;
            micro.on_reaction = [&](const ReactionRecord& r) {
                t_react = r.t;
                micro.stop_requested = true;
            };
            std::size_t next = 0;
            micro.run(1e7, nullptr, next, &meso);
            CHECK(meso.consumed == 1);
            waits.push_back(t_react);
        }
        CHECK(ks_distance(waits, [&](double t) { return 1.0 - std::exp(-k * t); }) < ks_critical(waits.size()));
    }
}

TEST_CASE("reactive particles never overlap") {
    const auto r = props::hard_sphere_invariant(SolverKind::Micro);
    INFO(r.detail);
    CHECK(r.pass);
}

TEST_CASE("products are placed inside the box and the count follows stoichiometry") {
    const Model m = box_model(0.2, 4, {sp("A", 1.0, 0.005, 20), sp("B", 1.0, 0.005, 20), sp("C", 1.0, 0.005, 5)},
                              {rx({"A", "B"}, {"C"}, 0.5), rx({"C"}, {"A", "B"}, 50.0)}, 0.1, 11);
    const Prepared prep = prepare(m, SolverKind::Micro, partition_options(m));
    const auto res = run_trajectory(prep, 4, 0);
    CHECK(res.reactions > 0);
    for (const auto& row : res.samples.counts) {
        CHECK(row[0] + row[2] == 25);
        CHECK(row[1] + row[2] == 25);
    }
}

}
