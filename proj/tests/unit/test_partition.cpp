#include <doctest.h>

#include <string>

#include "rdhybrid/experiments.hpp"
#include "rdhybrid/partition.hpp"
#include "helpers.hpp"

using namespace rdhybrid;

using namespace rdhybrid::test;

namespace {

Model network_model(const std::vector<std::string>& names, const std::vector<ReactionSpec>& reactions,
                    std::int64_t voxels = 20) {
    std::vector<SpeciesSpec> species;
    for (const auto& n : names) species.push_back(sp(n, 1.0, 0.0025));
    return box_model(1.0, voxels, species, reactions);
}

SplitPlan plan_of(const Model& m, PartitionOptions opts = {}) {
    const Network net(m);
    const CartesianMesh mesh(m.domain, m.config.voxels);
    return build_split(net, mesh, opts);
}

PolicyKind kind_of(const Model& m, const SplitPlan& plan, const std::string& name) {
    return plan.policy[*m.find_species(name)].kind;
}

}  // namespace

TEST_SUITE("partition") {

TEST_CASE("activation relay: the dissociating species is micro") {
    const Model m = load_model(model_path("relay_activation.json"));
    const SplitPlan plan = plan_of(m);
    CHECK(kind_of(m, plan, "S1") == PolicyKind::AlwaysMicro);
    CHECK(kind_of(m, plan, "S11") == PolicyKind::MicroUntilAge);
    CHECK(kind_of(m, plan, "S12") == PolicyKind::MicroUntilAge);
    CHECK(kind_of(m, plan, "S11*") == PolicyKind::AlwaysMeso);
    CHECK(kind_of(m, plan, "S2") == PolicyKind::AlwaysMeso);
}

TEST_CASE("two-step relay: the common ancestor is micro") {
    const Model m = load_model(model_path("relay_two_step.json"));
    const Network net(m);
    const auto trace = trace_origins(net, 3);
    CHECK(trace.origins == std::set<SpeciesId>{*m.find_species("S1")});
    const SplitPlan plan = plan_of(m);
    int always_micro = 0;
    for (const auto& p : plan.policy) always_micro += p.kind == PolicyKind::AlwaysMicro;
    CHECK(always_micro == 1);
    CHECK(kind_of(m, plan, "S1") == PolicyKind::AlwaysMicro);
}

TEST_CASE("chain case 6 is resolved everywhere") {
    const Model m = chain_model(6);
    const SplitPlan plan = plan_of(m, partition_options(m));
    CHECK_FALSE(plan.any_micro());
    for (const auto& r : plan.reactions) CHECK(r.resolved);
}

TEST_CASE("chain case 4 flags the first and third associations") {
    const Model m = chain_model(4);
    const SplitPlan plan = plan_of(m, partition_options(m));
    REQUIRE(plan.reactions.size() == 3);
    CHECK_FALSE(plan.reactions[0].resolved);
    CHECK(plan.reactions[1].resolved);
    CHECK_FALSE(plan.reactions[2].resolved);
    CHECK(kind_of(m, plan, "S1") == PolicyKind::AlwaysMicro);
    CHECK(kind_of(m, plan, "S3") == PolicyKind::AlwaysMicro);
    CHECK(kind_of(m, plan, "S2") == PolicyKind::AlwaysMeso);
    const CartesianMesh mesh(m.domain, m.config.voxels);
    const double expected = t_m(mesh.voxel_volume(), 2.0, m.config.K);
    CHECK(plan.policy[*m.find_species("S11")].t_m == doctest::Approx(expected));
}

TEST_CASE("cyclic networks terminate") {
    const Model m = network_model({"A", "B", "C", "D"}, {rx({"A", "B"}, {"C"}, 1.0), rx({"C"}, {"D"}, 1.0),
                                                         rx({"D"}, {"A", "B"}, 1.0), rx({"A"}, {"D"}, 1.0)});
    const Network net(m);
    const auto trace = trace_origins(net, 0);
    CHECK(trace.origins == std::set<SpeciesId>{3});
    const Model loop = network_model({"A", "B", "C"}, {rx({"A", "B"}, {"C"}, 1.0), rx({"C"}, {"A"}, 1.0),
                                                       rx({"A"}, {"B"}, 1.0), rx({"B"}, {"C"}, 1.0)});
    CHECK(trace_origins(Network(loop), 0).origins.empty());
    CHECK_THROWS_AS(plan_of(loop), UnresolvableReaction);
}

TEST_CASE("an under-resolved reaction without origin is unresolvable unless overridden") {
    const Model m = network_model({"A", "B", "C"}, {rx({"A", "B"}, {"C"}, 1.0)});
    try {
        plan_of(m);
        FAIL("expected UnresolvableReaction");
    } catch (const UnresolvableReaction& e) {
        CHECK(e.reaction() == 0);
    }
    PartitionOptions meso;
    meso.force_meso = true;
    CHECK_FALSE(plan_of(m, meso).any_micro());
    PartitionOptions micro;
    micro.force_micro = {0, 1};
    const SplitPlan plan = plan_of(m, micro);
    CHECK(plan.policy[0].kind == PolicyKind::AlwaysMicro);
    CHECK(plan.policy[1].kind == PolicyKind::AlwaysMicro);
    CHECK(plan.policy[2].kind == PolicyKind::AlwaysMeso);
    PartitionOptions half;
    half.force_micro = {0};
    CHECK_THROWS_AS(plan_of(m, half), UnresolvableReaction);
}

TEST_CASE("a resolved reaction needs nothing") {
    const Model m = network_model({"A", "B", "C"}, {rx({"A", "B"}, {"C"}, 1e-4)});
    CHECK_FALSE(plan_of(m).any_micro());
}

TEST_CASE("residency override and the scale rule") {
    const Model m = load_model(model_path("relay_activation.json"));
    PartitionOptions opts;
    opts.t_m_override = 0.25;
    const SplitPlan plan = plan_of(m, opts);
    const SpeciesId s11 = *m.find_species("S11");
    CHECK(plan.policy[s11].t_m == 0.25);
    CHECK(plan.scale_for(s11, 0.1) == Scale::Micro);
    CHECK(plan.scale_for(s11, 0.3) == Scale::Meso);
    CHECK(plan.scale_for(*m.find_species("S1"), 1e9) == Scale::Micro);
}

TEST_CASE("estimated hybrid error is the survival-weighted W") {
    const double k_a = 1.0, D = 2.0, sigma = 0.005, h = 0.05;
    CHECK(estimate_e_hybrid(k_a, D, sigma, h, 0.0) == doctest::Approx(resolution_error_W(k_a, D, sigma, h).W));
    CHECK(estimate_e_hybrid(k_a, D, sigma, h, 1.0) < estimate_e_hybrid(k_a, D, sigma, h, 1e-3));
}

}
