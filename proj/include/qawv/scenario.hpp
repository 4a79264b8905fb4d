#pragma once

// Named presets and JSON scenario files. Every preset is itself a JSON
// document, so a config file may start from one ("base_preset") and override
// individual fields; the merged document is echoed into run summaries.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qawv/classical.hpp"
#include "qawv/hilbert.hpp"
#include "qawv/pointer.hpp"
#include "qawv/spin.hpp"

namespace qawv::scenario {

using Json = nlohmann::json;

enum class Kind { Spin, Finite, Classical };

struct FiniteScenario {
    Observable obs;
    StateVector psi1;
    StateVector psi2;
    std::optional<PostSelectionBasis> basis;
    spin::ProfileSpec profile;
    Grid grid;
};

struct WeakSweepSpec {
    double center = 0.0;
    std::vector<double> eps{0.2, 0.1, 0.05, 0.025};
};

struct Scenario {
    std::string name;
    Kind kind = Kind::Spin;
    std::optional<spin::SpinScenario> spin;
    std::optional<FiniteScenario> finite;
    std::optional<classical::ClassicalScenario> classical;
    WeakSweepSpec weak_sweep;
    std::vector<double> sigmas{0.1, 0.2, 0.3, 0.4, 0.5, 0.7, 1.0, 1.5};
    Json echo;  // merged document the scenario was built from
};

struct GridOverride {
    std::optional<std::size_t> n;
    std::optional<double> span;
};

std::vector<std::string> preset_names();
// Throws ConfigError for unknown names.
Json preset_document(const std::string& name);

// Builds a scenario from a document; "base_preset" is resolved first and the
// remaining fields are merged over it. Random finite scenarios draw from `seed`.
// Errors are ConfigError carrying the offending field path.
Scenario from_json(const Json& doc, std::uint64_t seed, const GridOverride& grid = {});
Scenario load_preset(const std::string& name, std::uint64_t seed, const GridOverride& grid = {});
Scenario load_config(const std::string& path, std::uint64_t seed, const GridOverride& grid = {});

// Random finite-dimensional problem: Hermitian observable, two states and a
// post-selection basis drawn from a complex gaussian ensemble.
struct RandomFinite {
    Observable obs;
    StateVector psi1;
    StateVector psi2;
    PostSelectionBasis basis;
};

RandomFinite random_finite(std::size_t dim, std::uint64_t seed);

}  // namespace qawv::scenario
