#include "rdhybrid/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace rdhybrid {

using nlohmann::json;

const char* to_string(SolverKind s) {
    switch (s) {
        case SolverKind::Meso: return "meso";
        case SolverKind::Micro: return "micro";
        case SolverKind::Hybrid: return "hybrid";
        case SolverKind::BdOracle: return "bd-oracle";
    }
    return "hybrid";
}

SolverKind solver_from_string(const std::string& s) {
    if (s == "meso") return SolverKind::Meso;
    if (s == "micro") return SolverKind::Micro;
    if (s == "hybrid") return SolverKind::Hybrid;
    if (s == "bd-oracle" || s == "bd") return SolverKind::BdOracle;
    throw ModelError("unknown solver '" + s + "' (expected meso, micro, hybrid or bd-oracle)");
}

std::optional<SpeciesId> Model::find_species(const std::string& name) const {
    for (std::size_t i = 0; i < species.size(); ++i)
        if (species[i].name == name) return static_cast<SpeciesId>(i);
    return std::nullopt;
}

std::string ValidationReport::describe() const {
    std::ostringstream os;
    for (const auto& v : violations) os << v.where << ": " << v.message << "\n";
    return os.str();
}

namespace {

bool positive_finite(double x) { return std::isfinite(x) && x > 0.0; }

std::string reaction_where(const ReactionSpec& r, std::size_t i) {
    return "reactions[" + std::to_string(i) + "]" + (r.label.empty() ? "" : " (" + r.label + ")");
}

}  // namespace

ValidationReport validate_model(const Model& model) {
    ValidationReport rep;
    auto add = [&](std::string where, std::string msg) { rep.violations.push_back({std::move(where), std::move(msg)}); };

    const Vec3 ext = model.domain.extent();
    double min_extent = kInf;
    for (int a = 0; a < 3; ++a) {
        if (!positive_finite(ext[a])) add("domain", "extent along axis " + std::to_string(a) + " must be positive");
        min_extent = std::min(min_extent, ext[a]);
    }

    std::set<std::string> names;
    for (std::size_t i = 0; i < model.species.size(); ++i) {
        const auto& s = model.species[i];
        const std::string where = "species[" + std::to_string(i) + "] (" + s.name + ")";
        if (s.name.empty()) add(where, "name must not be empty");
        else if (!names.insert(s.name).second) add(where, "duplicate species name '" + s.name + "'");
        if (!std::isfinite(s.D) || s.D < 0.0) add(where, "diffusion constant D must be non-negative");
        if (!positive_finite(s.sigma)) add(where, "reaction radius sigma must be positive");
        if (s.initial_count < 0) add(where, "initial_count must be non-negative");
        if (s.initial_placement.kind == PlacementKind::FixedPoint && !model.domain.contains(s.initial_placement.point))
            add(where, "fixed initial position lies outside the domain");
    }

    for (std::size_t i = 0; i < model.reactions.size(); ++i) {
        const auto& r = model.reactions[i];
        const std::string where = reaction_where(r, i);
        if (r.reactants.empty()) add(where, "reaction has no reactants");
        if (r.reactants.size() > 2) add(where, "reactions with more than two reactants are not supported");
        if (r.products.size() > 2) add(where, "reactions with more than two products are not supported");
        if (!positive_finite(r.rate)) add(where, "rate constant must be positive");
        bool all_known = true;
        for (const auto* list : {&r.reactants, &r.products})
            for (const auto& name : *list)
                if (!model.find_species(name)) {
                    add(where, "unknown species '" + name + "'");
                    all_known = false;
                }
        if (!all_known || r.reactants.size() > 2 || r.reactants.empty()) continue;
        if (r.reactants.size() == 2) {
            const auto& a = model.species[*model.find_species(r.reactants[0])];
            const auto& b = model.species[*model.find_species(r.reactants[1])];
            if (!(a.D + b.D > 0.0)) add(where, "bimolecular reactants cannot both be immobile");
            if (a.sigma + b.sigma > 0.5 * min_extent)
                add(where, "sum of reaction radii exceeds half the domain extent");
        }
        if (r.products.size() == 2) {
            const auto& a = model.species[*model.find_species(r.products[0])];
            const auto& b = model.species[*model.find_species(r.products[1])];
            if (a.sigma + b.sigma > 0.5 * min_extent)
                add(where, "sum of product reaction radii exceeds half the domain extent");
        }
    }

    const auto& c = model.config;
    if (!positive_finite(c.t_final)) add("config", "t_final must be positive");
    if (!positive_finite(c.dt_split) || c.dt_split > c.t_final) add("config", "dt_split must satisfy 0 < dt_split <= t_final");
    if (!positive_finite(c.epsilon)) add("config", "epsilon must be positive");
    if (!std::isfinite(c.K) || c.K < 1.0) add("config", "K must be at least 1");
    for (std::size_t i = 0; i < c.sample_times.size(); ++i) {
        const double t = c.sample_times[i];
        if (!(t >= 0.0 && t <= c.t_final)) {
            add("config", "sample time " + std::to_string(t) + " lies outside [0, t_final]");
            break;
        }
        if (i > 0 && t < c.sample_times[i - 1]) {
            add("config", "sample_times must be non-decreasing");
            break;
        }
    }
    if (c.t_m_override && !positive_finite(*c.t_m_override)) add("config", "t_m override must be positive");
    if (c.bd_dt && !positive_finite(*c.bd_dt)) add("config", "bd_dt must be positive");
    if (c.voxels <= 0) {
        add("config", "voxels must be positive");
    } else if (positive_finite(ext.x)) {
        const double h = ext.x / static_cast<double>(c.voxels);
        for (int a = 1; a < 3; ++a) {
            const double n = ext[a] / h;
            if (std::abs(n - std::round(n)) > 1e-9 * std::max(1.0, n) || std::round(n) < 1.0)
                add("config", "domain extent along axis " + std::to_string(a) + " is not an integer multiple of h");
        }
    }
    return rep;
}

Network::Network(const Model& model) : species_(model.species) {
    const auto report = validate_model(model);
    if (!report.ok()) throw ModelError("invalid model:\n" + report.describe());
    const std::size_t n = species_.size();
    uni_of_.assign(n, {});
    uni_total_.assign(n, 0.0);
    bi_of_.assign(n * n, {});
    bi_total_.assign(n * n, 0.0);
    has_partner_.assign(n, 0);
    partners_.assign(n, {});
    for (std::size_t i = 0; i < model.reactions.size(); ++i) {
        const auto& r = model.reactions[i];
        Channel ch;
        ch.kind = r.kind();
        ch.rate = r.rate;
        ch.label = r.label.empty() ? "R" + std::to_string(i + 1) : r.label;
        for (const auto& name : r.reactants) ch.reactants.push_back(*model.find_species(name));
        for (const auto& name : r.products) ch.products.push_back(*model.find_species(name));
        if (ch.kind == ReactionKind::Unimolecular) {
            uni_of_[ch.reactants[0]].push_back(i);
            uni_total_[ch.reactants[0]] += ch.rate;
        } else {
            const SpeciesId a = ch.reactants[0];
            const SpeciesId b = ch.reactants[1];
            bi_of_[a * n + b].push_back(i);
            bi_total_[a * n + b] += ch.rate;
            if (a != b) {
                bi_of_[b * n + a].push_back(i);
                bi_total_[b * n + a] += ch.rate;
            }
            has_partner_[a] = has_partner_[b] = 1;
            auto add_partner = [&](SpeciesId x, SpeciesId y) {
                if (std::find(partners_[x].begin(), partners_[x].end(), y) == partners_[x].end())
                    partners_[x].push_back(y);
            };
            add_partner(a, b);
            add_partner(b, a);
        }
        reactions_.push_back(std::move(ch));
    }
}

SpeciesId Network::id_of(const std::string& name) const {
    for (std::size_t i = 0; i < species_.size(); ++i)
        if (species_[i].name == name) return static_cast<SpeciesId>(i);
    throw ModelError("unknown species '" + name + "'");
}

std::vector<double> uniform_sample_times(double t_final, std::size_t count) {
    std::vector<double> out;
    if (count == 0) return out;
    if (count == 1) return {t_final};
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i)
        out.push_back(t_final * static_cast<double>(i) / static_cast<double>(count - 1));
    return out;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

Vec3 vec_from(const json& j, const std::string& what) {
    if (!j.is_array() || j.size() != 3) throw ModelError(what + " must be an array of three numbers");
    return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

json vec_to(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

std::vector<std::string> names_from(const json& j, const std::string& what) {
    if (!j.is_array()) throw ModelError(what + " must be an array of species names");
    return j.get<std::vector<std::string>>();
}

SpeciesSpec species_from(const json& j) {
    SpeciesSpec s;
    s.name = j.at("name").get<std::string>();
    s.D = j.at("D").get<double>();
    s.sigma = j.at("sigma").get<double>();
    s.initial_count = j.value("initial_count", std::int64_t{0});
    if (j.contains("initial_placement")) {
        const auto& p = j.at("initial_placement");
        if (p.is_string()) {
            if (p.get<std::string>() != "uniform") throw ModelError("initial_placement must be \"uniform\" or {\"fixed\": [x,y,z]}");
        } else if (p.is_object() && p.contains("fixed")) {
            s.initial_placement = {PlacementKind::FixedPoint, vec_from(p.at("fixed"), "initial_placement.fixed")};
        } else {
            throw ModelError("initial_placement must be \"uniform\" or {\"fixed\": [x,y,z]}");
        }
    }
    const std::string scale = j.value("scale", std::string("auto"));
    if (scale == "auto") s.scale = ScaleOverride::Auto;
    else if (scale == "meso") s.scale = ScaleOverride::Meso;
    else if (scale == "micro") s.scale = ScaleOverride::Micro;
    else throw ModelError("species scale must be auto, meso or micro");
    return s;
}

ReactionSpec reaction_from(const json& j) {
    ReactionSpec r;
    r.label = j.value("label", std::string());
    r.products = j.contains("products") ? names_from(j.at("products"), "products") : std::vector<std::string>{};
    const std::string type = j.value("type", std::string());
    if (type == "unimolecular") {
        r.reactants = {j.at("reactant").get<std::string>()};
        r.rate = j.at("k").get<double>();
    } else if (type == "bimolecular") {
        r.reactants = {j.at("reactant_a").get<std::string>(), j.at("reactant_b").get<std::string>()};
        r.rate = j.at("k_a").get<double>();
    } else if (type.empty() && j.contains("reactants")) {
        r.reactants = names_from(j.at("reactants"), "reactants");
        r.rate = j.at("rate").get<double>();
    } else {
        throw ModelError("reaction needs \"type\": \"unimolecular\" | \"bimolecular\"");
    }
    return r;
}

SimConfig config_from(const json& j) {
    SimConfig c;
    c.t_final = j.value("t_final", c.t_final);
    c.dt_split = j.value("dt_split", c.dt_split);
    c.epsilon = j.value("epsilon", c.epsilon);
    c.K = j.value("K", c.K);
    c.rng_seed = j.value("rng_seed", c.rng_seed);
    c.voxels = j.value("voxels", c.voxels);
    if (j.contains("solver")) c.solver = solver_from_string(j.at("solver").get<std::string>());
    if (j.contains("t_m")) c.t_m_override = j.at("t_m").get<double>();
    if (j.contains("bd_dt")) c.bd_dt = j.at("bd_dt").get<double>();
    if (j.contains("sample_times")) {
        const auto& st = j.at("sample_times");
        if (st.is_array()) c.sample_times = st.get<std::vector<double>>();
        else if (st.is_object() && st.contains("count"))
            c.sample_times = uniform_sample_times(c.t_final, st.at("count").get<std::size_t>());
        else throw ModelError("sample_times must be an array or {\"count\": n}");
    } else {
        c.sample_times = uniform_sample_times(c.t_final, 101);
    }
    return c;
}

std::pair<std::size_t, std::size_t> line_col(const std::string& text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') { ++line; col = 1; }
        else ++col;
    }
    return {line, col};
}

}  // namespace

Model parse_model(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        const auto [line, col] = line_col(text, e.byte == 0 ? 0 : e.byte - 1);
        throw ModelError("line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + e.what());
    }
    Model m;
    std::string section = "document";
    try {
        if (!doc.is_object()) throw ModelError("top level must be an object");
        section = "domain";
        const auto& d = doc.at("domain");
        m.domain.lower = vec_from(d.at("lower"), "domain.lower");
        m.domain.upper = vec_from(d.at("upper"), "domain.upper");
        if (d.value("boundary", std::string("reflective")) != "reflective")
            throw ModelError("only reflective boundaries are supported");
        section = "species";
        for (const auto& s : doc.at("species")) m.species.push_back(species_from(s));
        section = "reactions";
        if (doc.contains("reactions"))
            for (const auto& r : doc.at("reactions")) m.reactions.push_back(reaction_from(r));
        section = "config";
        m.config = config_from(doc.contains("config") ? doc.at("config") : json::object());
    } catch (const json::exception& e) {
        throw ModelError("in " + section + ": " + e.what());
    } catch (const ModelError& e) {
        throw ModelError("in " + section + ": " + e.what());
    }
    return m;
}

Model load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ModelError("cannot open model file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_model(ss.str());
}

std::string serialize_model(const Model& model) {
    json doc;
    doc["domain"] = {{"lower", vec_to(model.domain.lower)}, {"upper", vec_to(model.domain.upper)}, {"boundary", "reflective"}};
    json species = json::array();
    for (const auto& s : model.species) {
        json js = {{"name", s.name}, {"D", s.D}, {"sigma", s.sigma}, {"initial_count", s.initial_count}};
        if (s.initial_placement.kind == PlacementKind::FixedPoint) js["initial_placement"] = {{"fixed", vec_to(s.initial_placement.point)}};
        else js["initial_placement"] = "uniform";
        js["scale"] = s.scale == ScaleOverride::Auto ? "auto" : (s.scale == ScaleOverride::Meso ? "meso" : "micro");
        species.push_back(std::move(js));
    }
    doc["species"] = std::move(species);
    json reactions = json::array();
    for (const auto& r : model.reactions) {
        json jr;
        if (!r.label.empty()) jr["label"] = r.label;
        if (r.reactants.size() == 1) {
            jr["type"] = "unimolecular";
            jr["reactant"] = r.reactants[0];
            jr["k"] = r.rate;
        } else if (r.reactants.size() == 2) {
            jr["type"] = "bimolecular";
            jr["reactant_a"] = r.reactants[0];
            jr["reactant_b"] = r.reactants[1];
            jr["k_a"] = r.rate;
        } else {
            jr["reactants"] = r.reactants;
            jr["rate"] = r.rate;
        }
        jr["products"] = r.products;
        reactions.push_back(std::move(jr));
    }
    doc["reactions"] = std::move(reactions);
    const auto& c = model.config;
    json jc = {{"t_final", c.t_final}, {"dt_split", c.dt_split}, {"epsilon", c.epsilon}, {"K", c.K},
               {"rng_seed", c.rng_seed}, {"sample_times", c.sample_times}, {"solver", to_string(c.solver)},
               {"voxels", c.voxels}};
    if (c.t_m_override) jc["t_m"] = *c.t_m_override;
    if (c.bd_dt) jc["bd_dt"] = *c.bd_dt;
    doc["config"] = std::move(jc);
    return doc.dump(2);
}

}  // namespace rdhybrid
