#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "ringlab/cloud.hpp"
#include "ringlab/diagnostics.hpp"
#include "ringlab/integrator.hpp"
#include "ringlab/kernels.hpp"
#include "ringlab/velocity.hpp"

namespace ringlab {

/// Code version string embedded in every artifact.
std::string version_string();

inline constexpr int kConfigSchemaVersion = 1;

enum class Scenario { thin_ring, fat_ring, custom };

std::string_view to_string(Scenario s);

struct DataConfig {
    Profile profile = Profile::flat();
    double epsilon = 0.01;
    double mu = 1.0;
    double r0 = 1.0;
    double z0 = 0.0;
    double h_over_eps = 0.125;
    PatchParams patch{};
    double C_d = 1.0;
    AssumptionConstants constants{};
    std::string cloud_file;  ///< custom scenario input
    bool mirror = false;     ///< apply mirror_z to the generated data
    double lambda = 1.0;     ///< apply scale(lambda, gamma) to the generated data
    double gamma = 1.0;
};

struct SimConfig {
    Scenario scenario = Scenario::thin_ring;
    DataConfig data{};
    KernelConfig kernel{};  ///< delta is resolved from delta_over_h at build time
    double delta_over_h = 1.5;
    std::optional<double> delta;  ///< absolute override
    IntegratorConfig integrator{};
    std::optional<double> t_end_kh;  ///< horizon in units of r0 / V_eps when t_end is not given
    VelocityPath velocity{};
    DiagnosticsSettings diagnostics{};
    std::string output = "out";
    int workers = 1;
    std::optional<std::uint64_t> seed;

    std::string canonical_json;  ///< merged document (defaults filled in)
    std::string digest;          ///< SHA-256 of the canonical document minus output/workers
};

/// Parse a JSON config document, layered over the preset of its scenario.
/// Throws ConfigError with line context on syntax errors and with the field
/// path on invalid values.
SimConfig parse_config(const std::string& text);
SimConfig load_config(const std::filesystem::path& p);

/// Preset document for a scenario (what parse_config layers the user's
/// document over).
std::string preset_json(Scenario s);

struct InitialData {
    Cloud cloud;
    AssumptionReport report;
    std::optional<DecompositionCheck> decomposition;
};

/// Generate (or load) the initial cloud, apply the configured transforms and
/// validate the assumptions. Resolves sim.kernel.delta and the horizon.
InitialData build_initial_data(SimConfig& sim);

/// Kernel config with delta resolved for the given cloud.
KernelConfig resolved_kernel(const SimConfig& sim, const Cloud& c);

/// Horizon for the given cloud: t_end, or t_end_kh r0 / V_eps.
double resolved_t_end(const SimConfig& sim, const Cloud& c);

RunSettings run_settings(const SimConfig& sim, const Cloud& c);

/// Hex SHA-256.
std::string sha256_hex(const std::string& data);

}  // namespace ringlab
