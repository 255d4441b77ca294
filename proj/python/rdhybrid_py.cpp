#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rdhybrid/csv.hpp"
#include "rdhybrid/experiments.hpp"
#include "rdhybrid/oracles.hpp"
#include "rdhybrid/partition.hpp"
#include "rdhybrid/rates.hpp"
#include "rdhybrid/runner.hpp"

namespace py = pybind11;
using namespace rdhybrid;

namespace {

Model model_from(const std::string& path_or_json) {
    const auto first = path_or_json.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && path_or_json[first] == '{') return parse_model(path_or_json);
    return load_model(path_or_json);
}

py::dict plan_dict(const std::string& model_src, std::int64_t voxels) {
    Model model = model_from(model_src);
    if (voxels > 0) model.config.voxels = voxels;
    const Network net(model);
    const CartesianMesh mesh(model.domain, model.config.voxels);
    const SplitPlan plan = build_split(net, mesh, partition_options(model));
    py::dict species;
    for (SpeciesId s = 0; s < net.species_count(); ++s)
        species[py::str(net.spec(s).name)] = py::make_tuple(to_string(plan.policy[s].kind), plan.policy[s].t_m);
    py::list reactions;
    for (const auto& r : plan.reactions)
        reactions.append(py::dict(py::arg("reaction") = r.reaction, py::arg("label") = net.reactions()[r.reaction].label,
                                  py::arg("W") = r.W, py::arg("resolved") = r.resolved));
    py::dict out;
    out["h"] = mesh.h();
    out["species"] = species;
    out["reactions"] = reactions;
    return out;
}

py::dict simulate(const std::string& model_src, const std::string& solver, std::size_t replicas, std::uint64_t seed,
                  unsigned threads, std::int64_t voxels, double dt_split) {
    Model model = model_from(model_src);
    if (voxels > 0) model.config.voxels = voxels;
    if (dt_split > 0) model.config.dt_split = dt_split;
    const SolverKind kind = solver.empty() ? model.config.solver : solver_from_string(solver);
    EnsembleResult res;
    {
        py::gil_scoped_release release;
        const Prepared prep = prepare(model, kind, partition_options(model));
        res = run_ensemble(prep, seed, replicas, threads, false);
    }
    py::dict out;
    out["times"] = res.times;
    out["species"] = res.species;
    out["mean"] = res.mean;
    out["se"] = res.se;
    out["timings"] = py::dict(py::arg("meso") = res.timings.meso, py::arg("micro") = res.timings.micro,
                              py::arg("switching") = res.timings.switching, py::arg("total") = res.timings.total);
    return out;
}

}  // namespace

PYBIND11_MODULE(_rdhybrid, m) {
    m.doc() = "Hybrid mesoscopic/microscopic reaction-diffusion simulator";
    m.attr("__version__") = code_version();

    py::register_exception<ModelError>(m, "ModelError", PyExc_ValueError);
    py::register_exception<UnresolvableReaction>(m, "UnresolvableReaction");
    py::register_exception<NonPositiveDenominator>(m, "NonPositiveDenominator", PyExc_ArithmeticError);

    m.def("g3", &g3, py::arg("h"), py::arg("sigma"));
    m.def("h_star", &h_star, py::arg("sigma"), py::arg("dim") = 3);
    m.def("meso_rate", &meso_rate, py::arg("k_a"), py::arg("D"), py::arg("sigma"), py::arg("h"));
    m.def("collins_kimball", &collins_kimball, py::arg("k_a"), py::arg("D"), py::arg("sigma"), py::arg("V"));
    m.def("resolution_w", [](double k_a, double D, double sigma, double h) { return resolution_error_W(k_a, D, sigma, h).W; },
          py::arg("k_a"), py::arg("D"), py::arg("sigma"), py::arg("h"));
    m.def("contact_survival", &contact_survival, py::arg("k_a"), py::arg("D"), py::arg("sigma"), py::arg("t"));
    m.def("pde_survival",
          [](double r0, double sigma, double k_a, double D, const std::vector<double>& times) {
              return pde_survival(r0, sigma, k_a, D, times);
          },
          py::arg("r0"), py::arg("sigma"), py::arg("k_a"), py::arg("D"), py::arg("times"));
    m.def("partition", &plan_dict, py::arg("model"), py::arg("voxels") = 0,
          "Scale plan for a model given as a file path or JSON text.");
    m.def("simulate", &simulate, py::arg("model"), py::arg("solver") = "", py::arg("replicas") = 1,
          py::arg("seed") = 1, py::arg("threads") = 0, py::arg("voxels") = 0, py::arg("dt_split") = 0.0,
          "Ensemble means and standard errors per sample time and species.");
}
