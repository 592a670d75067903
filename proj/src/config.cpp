#include "ringlab/config.hpp"

#include <fstream>
#include <sstream>

#include <openssl/evp.h>

#include <json.hpp>

#include "ringlab/errors.hpp"
#include "ringlab/io.hpp"

#ifndef RINGLAB_VERSION
#define RINGLAB_VERSION "0.0.0"
#endif

namespace ringlab {

using nlohmann::json;

std::string version_string() { return "ringlab " RINGLAB_VERSION; }

std::string_view to_string(Scenario s) {
    switch (s) {
        case Scenario::thin_ring: return "thin_ring";
        case Scenario::fat_ring: return "fat_ring";
        case Scenario::custom: return "custom";
    }
    return "custom";
}

namespace {

Scenario scenario_from_string(const std::string& s) {
    if (s == "thin_ring") return Scenario::thin_ring;
    if (s == "fat_ring") return Scenario::fat_ring;
    if (s == "custom") return Scenario::custom;
    throw ConfigError("scenario: unknown value '" + s + "' (expected thin_ring, fat_ring or custom)");
}

json common_preset() {
    return json::parse(R"({
  "schema_version": 1,
  "scenario": "thin_ring",
  "data": {
    "profile": "flat",
    "profile_width": 0.3,
    "epsilon": 0.01,
    "mu": 1.0,
    "r0": 1.0,
    "z0": 0.0,
    "h_over_eps": 0.125,
    "patch": {"inner_radius": 0.0, "outer_radius": 0.0, "level": 0.0, "spacing": 0.0, "c5": 0.0,
              "offset_r": 0.0, "offset_z": 0.0},
    "C_d": 1.0,
    "constants": {"c1": 10.0, "c2": 1.0, "c3": 1.0, "c4": 1.0},
    "cloud_file": "",
    "transform": {"mirror": false, "lambda": 1.0, "gamma": 1.0}
  },
  "kernel": {"s_lo": 0.001, "s_hi": 100.0, "quad_tol": 1e-10, "delta_over_h": 1.5, "delta": null},
  "integrator": {
    "scheme": "rk4",
    "cfl": 1.0,
    "dt_max": 1.0,
    "t_end": null,
    "t_end_kh": 4.0,
    "diag_every": 250,
    "checkpoint_every": 0,
    "reverse": false
  },
  "velocity": {"path": "direct", "theta": 0.5, "leaf_capacity": 32, "degree": 8},
  "diagnostics": {"rho": 0.0, "R": 0.0, "thickness_slices": 8},
  "output": "out",
  "workers": 1,
  "seed": null
})");
}

}  // namespace

std::string preset_json(Scenario s) {
    json j = common_preset();
    j["scenario"] = std::string(to_string(s));
    switch (s) {
        case Scenario::thin_ring:
            break;
        case Scenario::fat_ring:
            j["data"]["epsilon"] = 0.05;
            j["data"]["patch"] = {{"inner_radius", 0.45}, {"outer_radius", 0.75}, {"level", 0.3},
                                  {"spacing", 0.05},      {"c5", 0.2},
                                  {"offset_r", 0.0},      {"offset_z", 0.0}};
            j["integrator"]["t_end_kh"] = 2.0;
            j["integrator"]["diag_every"] = 50;
            break;
        case Scenario::custom:
            break;
    }
    return j.dump(2);
}

namespace {

// Line/column of a byte offset, plus the offending line.
std::string line_context(const std::string& text, std::size_t byte) {
    std::size_t line = 1, col = 1, start = 0;
    for (std::size_t i = 0; i < text.size() && i + 1 < byte; ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
            start = i + 1;
        } else {
            ++col;
        }
    }
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    return "line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + text.substr(start, end - start);
}

void check_keys(const json& base, const json& user, const std::string& path) {
    for (auto it = user.begin(); it != user.end(); ++it) {
        const std::string p = path + "/" + it.key();
        if (!base.contains(it.key())) throw ConfigError("unknown config field " + p);
        const json& b = base[it.key()];
        if (b.is_object()) {
            if (!it->is_object()) throw ConfigError("config field " + p + " must be an object");
            check_keys(b, *it, p);
        }
    }
}

void merge_into(json& base, const json& user) {
    for (auto it = user.begin(); it != user.end(); ++it) {
        if (base[it.key()].is_object() && it->is_object())
            merge_into(base[it.key()], *it);
        else
            base[it.key()] = *it;
    }
}

double num(const json& j, const std::string& path) {
    const json* cur = &j;
    std::string key;
    std::stringstream ss(path);
    while (std::getline(ss, key, '/')) {
        if (key.empty()) continue;
        cur = &(*cur)[key];
    }
    if (!cur->is_number()) throw ConfigError("config field " + path + " must be a number");
    return cur->get<double>();
}

std::int64_t integer(const json& j, const std::string& path) {
    const double v = num(j, path);
    if (v != std::floor(v)) throw ConfigError("config field " + path + " must be an integer");
    return static_cast<std::int64_t>(v);
}

const json& at(const json& j, const std::string& path) {
    const json* cur = &j;
    std::string key;
    std::stringstream ss(path);
    while (std::getline(ss, key, '/')) {
        if (key.empty()) continue;
        cur = &(*cur)[key];
    }
    return *cur;
}

std::string str(const json& j, const std::string& path) {
    const json& v = at(j, path);
    if (!v.is_string()) throw ConfigError("config field " + path + " must be a string");
    return v.get<std::string>();
}

bool boolean(const json& j, const std::string& path) {
    const json& v = at(j, path);
    if (!v.is_boolean()) throw ConfigError("config field " + path + " must be a boolean");
    return v.get<bool>();
}

std::optional<double> opt_num(const json& j, const std::string& path) {
    if (at(j, path).is_null()) return std::nullopt;
    return num(j, path);
}

void require(bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
}

}  // namespace

std::string sha256_hex(const std::string& data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw Error("sha256: digest failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 15]);
    }
    return out;
}

SimConfig parse_config(const std::string& text) {
    json user;
    try {
        user = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("config parse error at " + line_context(text, e.byte) + " (" + e.what() + ")");
    }
    require(user.is_object(), "config: top level must be a JSON object");
    require(user.contains("schema_version"), "config: missing schema_version");
    require(user["schema_version"].is_number_integer() && user["schema_version"].get<int>() == kConfigSchemaVersion,
            "config: unsupported schema_version (expected " + std::to_string(kConfigSchemaVersion) + ")");

    Scenario scen = Scenario::thin_ring;
    if (user.contains("scenario")) {
        require(user["scenario"].is_string(), "config field /scenario must be a string");
        scen = scenario_from_string(user["scenario"].get<std::string>());
    }
    json merged = json::parse(preset_json(scen));
    check_keys(merged, user, "");
    merge_into(merged, user);

    SimConfig s;
    s.scenario = scen;
    try {
        DataConfig& d = s.data;
        const std::string pk = str(merged, "/data/profile");
        d.profile.kind = profile_kind_from_string(pk);
        d.profile.width = num(merged, "/data/profile_width");
        d.epsilon = num(merged, "/data/epsilon");
        d.mu = num(merged, "/data/mu");
        d.r0 = num(merged, "/data/r0");
        d.z0 = num(merged, "/data/z0");
        d.h_over_eps = num(merged, "/data/h_over_eps");
        d.patch.inner_radius = num(merged, "/data/patch/inner_radius");
        d.patch.outer_radius = num(merged, "/data/patch/outer_radius");
        d.patch.level = num(merged, "/data/patch/level");
        d.patch.spacing = num(merged, "/data/patch/spacing");
        d.patch.c5 = num(merged, "/data/patch/c5");
        d.patch.offset_r = num(merged, "/data/patch/offset_r");
        d.patch.offset_z = num(merged, "/data/patch/offset_z");
        d.C_d = num(merged, "/data/C_d");
        d.constants.c1 = num(merged, "/data/constants/c1");
        d.constants.c2 = num(merged, "/data/constants/c2");
        d.constants.c3 = num(merged, "/data/constants/c3");
        d.constants.c4 = num(merged, "/data/constants/c4");
        d.cloud_file = str(merged, "/data/cloud_file");
        d.mirror = boolean(merged, "/data/transform/mirror");
        d.lambda = num(merged, "/data/transform/lambda");
        d.gamma = num(merged, "/data/transform/gamma");
    } catch (const DomainError& e) {
        throw ConfigError(std::string("config /data: ") + e.what());
    }
    const DataConfig& d = s.data;
    require(d.epsilon > 0.0 && d.epsilon < 1.0, "config field /data/epsilon must lie in (0, 1)");
    require(d.mu >= 0.0, "config field /data/mu must be >= 0");
    require(d.r0 > 0.0, "config field /data/r0 must be > 0");
    require(d.h_over_eps > 0.0, "config field /data/h_over_eps must be > 0");
    require(d.profile.width > 0.0 && d.profile.width <= 1.0, "config field /data/profile_width must lie in (0, 1]");
    require(d.lambda > 0.0 && d.gamma > 0.0, "config fields /data/transform/lambda and gamma must be > 0");
    require(s.scenario != Scenario::custom || !d.cloud_file.empty(),
            "config field /data/cloud_file is required for the custom scenario");

    s.kernel.s_lo = num(merged, "/kernel/s_lo");
    s.kernel.s_hi = num(merged, "/kernel/s_hi");
    s.kernel.quad_tol = num(merged, "/kernel/quad_tol");
    s.delta_over_h = num(merged, "/kernel/delta_over_h");
    s.delta = opt_num(merged, "/kernel/delta");
    try {
        s.kernel.validate();
    } catch (const DomainError& e) {
        throw ConfigError(std::string("config /kernel: ") + e.what());
    }
    require(s.delta_over_h >= 0.0, "config field /kernel/delta_over_h must be >= 0");
    require(!s.delta || *s.delta >= 0.0, "config field /kernel/delta must be >= 0");

    IntegratorConfig& ic = s.integrator;
    ic.scheme = scheme_from_string(str(merged, "/integrator/scheme"));
    ic.cfl = num(merged, "/integrator/cfl");
    ic.dt_max = num(merged, "/integrator/dt_max");
    const auto t_end = opt_num(merged, "/integrator/t_end");
    s.t_end_kh = opt_num(merged, "/integrator/t_end_kh");
    require(t_end || s.t_end_kh, "config: one of /integrator/t_end or /integrator/t_end_kh is required");
    if (t_end) {
        ic.t_end = *t_end;
        s.t_end_kh.reset();
    }
    require(!s.t_end_kh || *s.t_end_kh >= 0.0, "config field /integrator/t_end_kh must be >= 0");
    ic.diag_every = integer(merged, "/integrator/diag_every");
    ic.checkpoint_every = integer(merged, "/integrator/checkpoint_every");
    ic.reverse = boolean(merged, "/integrator/reverse");
    if (t_end) ic.validate();

    const std::string path = str(merged, "/velocity/path");
    require(path == "direct" || path == "treecode", "config field /velocity/path must be direct or treecode");
    s.velocity.kind = path == "treecode" ? VelocityPath::Kind::treecode : VelocityPath::Kind::direct;
    s.velocity.theta = num(merged, "/velocity/theta");
    require(s.velocity.theta > 0.0 && s.velocity.theta < 1.0, "config field /velocity/theta must lie in (0, 1)");
    const auto leaf = integer(merged, "/velocity/leaf_capacity");
    require(leaf >= 1, "config field /velocity/leaf_capacity must be >= 1");
    s.velocity.tree.leaf_capacity = static_cast<std::size_t>(leaf);
    const auto deg = integer(merged, "/velocity/degree");
    require(deg >= 0 && deg <= 16, "config field /velocity/degree must lie in [0, 16]");
    s.velocity.tree.degree = static_cast<int>(deg);

    s.diagnostics.rho = num(merged, "/diagnostics/rho");
    s.diagnostics.R = num(merged, "/diagnostics/R");
    const auto slices = integer(merged, "/diagnostics/thickness_slices");
    require(slices >= 1, "config field /diagnostics/thickness_slices must be >= 1");
    s.diagnostics.thickness_slices = static_cast<int>(slices);
    require(s.diagnostics.rho >= 0.0 && (s.diagnostics.R == 0.0 || s.diagnostics.R >= 1.0),
            "config: /diagnostics/rho must be >= 0 and /diagnostics/R must be 0 or >= 1");

    s.output = str(merged, "/output");
    const auto workers = integer(merged, "/workers");
    require(workers >= 1, "config field /workers must be >= 1");
    s.workers = static_cast<int>(workers);
    if (!merged["seed"].is_null()) {
        require(merged["seed"].is_number_unsigned(), "config field /seed must be a nonnegative integer or null");
        s.seed = merged["seed"].get<std::uint64_t>();
    }

    s.canonical_json = merged.dump();
    json content = merged;
    content.erase("output");
    content.erase("workers");
    s.digest = sha256_hex(content.dump());
    return s;
}

SimConfig load_config(const std::filesystem::path& p) {
    std::ifstream is(p);
    if (!is) throw ConfigError("cannot open config file " + p.string());
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_config(ss.str());
}

KernelConfig resolved_kernel(const SimConfig& sim, const Cloud& c) {
    KernelConfig k = sim.kernel;
    k.delta = sim.delta ? *sim.delta : sim.delta_over_h * c.h;
    return k;
}

double resolved_t_end(const SimConfig& sim, const Cloud& c) {
    if (!sim.t_end_kh) return sim.integrator.t_end;
    return *sim.t_end_kh * c.r0 / kelvin_hicks_speed(c.mu, c.r0, c.epsilon);
}

InitialData build_initial_data(SimConfig& sim) {
    const DataConfig& d = sim.data;
    InitialData out;
    BlobParams bp;
    bp.profile = d.profile;
    bp.epsilon = d.epsilon;
    bp.x0 = {d.r0, d.z0};
    bp.mu = d.mu;
    bp.h = d.h_over_eps * d.epsilon;
    // Built-in profiles are normalized on the seeding grid they are used with.
    if (sim.scenario != Scenario::custom) bp.profile = normalize_on_grid(bp.profile, d.h_over_eps);

    KernelConfig k0 = sim.kernel;
    k0.delta = sim.delta ? *sim.delta : sim.delta_over_h * bp.h;
    switch (sim.scenario) {
        case Scenario::thin_ring:
            out.cloud = generate_blob(bp);
            break;
        case Scenario::fat_ring: {
            FilamentationData fd = generate_filamentation_data(bp, d.patch, d.C_d, d.constants, k0);
            out.cloud = std::move(fd.cloud);
            out.decomposition = fd.decomposition;
            break;
        }
        case Scenario::custom:
            out.cloud = load_cloud(d.cloud_file).cloud;
            break;
    }
    if (d.mirror) out.cloud = mirror_z(out.cloud);
    if (d.lambda != 1.0 || d.gamma != 1.0) {
        out.cloud = scale(out.cloud, d.lambda, d.gamma);
        sim.integrator.dt_max /= d.gamma;
    }
    sim.kernel = resolved_kernel(sim, out.cloud);
    if (sim.delta && (d.lambda != 1.0)) sim.kernel.delta = *sim.delta / d.lambda;
    sim.integrator.t_end = resolved_t_end(sim, out.cloud);
    sim.t_end_kh.reset();
    sim.integrator.validate();
    out.report = validate_assumptions(out.cloud, d.constants, sim.kernel);
    return out;
}

RunSettings run_settings(const SimConfig& sim, const Cloud& c) {
    RunSettings rs;
    rs.integrator = sim.integrator;
    rs.integrator.t_end = resolved_t_end(sim, c);
    rs.kernel = sim.kernel;
    if (!(rs.kernel.delta > 0.0) && !sim.delta) rs.kernel = resolved_kernel(sim, c);
    rs.path = sim.velocity;
    rs.path.workers = sim.workers;
    rs.diagnostics = sim.diagnostics;
    rs.diagnostics.workers = sim.workers;
    return rs;
}

}  // namespace ringlab
