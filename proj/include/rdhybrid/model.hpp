#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rdhybrid/types.hpp"

namespace rdhybrid {

struct BoxDomain {
    Vec3 lower{0.0, 0.0, 0.0};
    Vec3 upper{1.0, 1.0, 1.0};

    Vec3 extent() const { return upper - lower; }
    double volume() const {
        const Vec3 e = extent();
        return e.x * e.y * e.z;
    }
    bool contains(const Vec3& p) const {
        return p.x >= lower.x && p.x < upper.x && p.y >= lower.y && p.y < upper.y && p.z >= lower.z &&
               p.z < upper.z;
    }
};

enum class PlacementKind { Uniform, FixedPoint };

struct Placement {
    PlacementKind kind = PlacementKind::Uniform;
    Vec3 point{};
};

// Optional user pin of a species to one scale; `Auto` defers to the partitioner.
enum class ScaleOverride { Auto, Meso, Micro };

struct SpeciesSpec {
    std::string name;
    double D = 0.0;
    double sigma = 0.0;
    std::int64_t initial_count = 0;
    Placement initial_placement{};
    ScaleOverride scale = ScaleOverride::Auto;
};

enum class ReactionKind { Unimolecular, Bimolecular };

// Reaction as written in a model file; species are referenced by name so that
// an ill-formed model can still be represented and reported on.
struct ReactionSpec {
    std::string label;
    std::vector<std::string> reactants;
    std::vector<std::string> products;
    double rate = 0.0;  // k (1/time) for unimolecular, k_a (length^3/time) for bimolecular

    ReactionKind kind() const {
        return reactants.size() == 2 ? ReactionKind::Bimolecular : ReactionKind::Unimolecular;
    }
    bool is_dissociation() const { return reactants.size() == 1 && products.size() == 2; }
};

enum class SolverKind { Meso, Micro, Hybrid, BdOracle };

const char* to_string(SolverKind s);
SolverKind solver_from_string(const std::string& s);

struct SimConfig {
    double t_final = 1.0;
    double dt_split = 1e-3;
    double epsilon = 0.025;
    double K = 6.0;
    std::uint64_t rng_seed = 1;
    std::vector<double> sample_times;
    SolverKind solver = SolverKind::Hybrid;
    // Mesh resolution: voxel count along the x axis. The other axes follow from
    // the box extents, which must be integer multiples of h.
    std::int64_t voxels = 20;
    std::optional<double> t_m_override;
    std::optional<double> bd_dt;
};

struct Model {
    BoxDomain domain;
    std::vector<SpeciesSpec> species;
    std::vector<ReactionSpec> reactions;
    SimConfig config;

    std::optional<SpeciesId> find_species(const std::string& name) const;
};

struct Violation {
    std::string where;
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
    std::string describe() const;
};

ValidationReport validate_model(const Model& model);

// Resolved reaction with species ids.
struct Channel {
    ReactionKind kind = ReactionKind::Unimolecular;
    std::vector<SpeciesId> reactants;
    std::vector<SpeciesId> products;
    double rate = 0.0;
    std::string label;

    bool is_dissociation() const { return kind == ReactionKind::Unimolecular && products.size() == 2; }
};

// Immutable, validated reaction network with lookup tables used by the solvers.
class Network {
public:
    explicit Network(const Model& model);  // throws ModelError when validation fails

    const std::vector<SpeciesSpec>& species() const { return species_; }
    const std::vector<Channel>& reactions() const { return reactions_; }
    std::size_t species_count() const { return species_.size(); }
    const SpeciesSpec& spec(SpeciesId s) const { return species_[s]; }
    SpeciesId id_of(const std::string& name) const;

    // Reaction indices of unimolecular channels consumed by species s.
    const std::vector<std::size_t>& unimolecular_of(SpeciesId s) const { return uni_of_[s]; }
    double unimolecular_total(SpeciesId s) const { return uni_total_[s]; }
    // Bimolecular channel indices for the unordered species pair (a, b).
    const std::vector<std::size_t>& bimolecular_of(SpeciesId a, SpeciesId b) const {
        return bi_of_[a * species_.size() + b];
    }
    double bimolecular_total(SpeciesId a, SpeciesId b) const { return bi_total_[a * species_.size() + b]; }
    bool reactive(SpeciesId a, SpeciesId b) const { return !bimolecular_of(a, b).empty(); }
    // True when s takes part in at least one bimolecular channel.
    bool has_partners(SpeciesId s) const { return has_partner_[s] != 0; }
    const std::vector<SpeciesId>& partners_of(SpeciesId s) const { return partners_[s]; }

private:
    std::vector<SpeciesSpec> species_;
    std::vector<Channel> reactions_;
    std::vector<std::vector<std::size_t>> uni_of_;
    std::vector<double> uni_total_;
    std::vector<std::vector<std::size_t>> bi_of_;
    std::vector<double> bi_total_;
    std::vector<char> has_partner_;
    std::vector<std::vector<SpeciesId>> partners_;
};

class ModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// JSON model file I/O. Parse errors carry a line:column anchor.
Model parse_model(const std::string& text);
Model load_model(const std::string& path);
std::string serialize_model(const Model& model);

std::vector<double> uniform_sample_times(double t_final, std::size_t count);

}  // namespace rdhybrid
