#include "ringlab/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "ringlab/errors.hpp"

namespace ringlab {

using nlohmann::json;

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_cloud_jsonl(std::ostream& os, const Cloud& c, const std::optional<RunState>& state,
                       const std::string& digest) {
    os << "{\"format\":\"ringlab-cloud\",\"schema_version\":" << kCloudSchemaVersion
       << ",\"epsilon\":" << format_double(c.epsilon) << ",\"mu\":" << format_double(c.mu)
       << ",\"r0\":" << format_double(c.r0) << ",\"time\":" << format_double(c.time)
       << ",\"h\":" << format_double(c.h) << ",\"count\":" << c.size();
    const std::string& dg = state ? state->digest : digest;
    if (!dg.empty()) os << ",\"digest\":" << json(dg).dump();
    if (state) os << ",\"step\":" << state->step << ",\"version\":" << json(state->version).dump();
    os << "}\n";
    for (const auto& p : c.particles) {
        os << "{\"r\":" << format_double(p.r) << ",\"z\":" << format_double(p.z)
           << ",\"gamma\":" << format_double(p.gamma) << ",\"xi0\":" << format_double(p.xi0) << ",\"tag\":\""
           << to_string(p.tag) << "\"}\n";
    }
}

namespace {

double get_num(const json& j, const char* key, std::size_t line) {
    if (!j.contains(key) || !j[key].is_number())
        throw ConfigError("cloud file line " + std::to_string(line) + ": missing numeric field '" + key + "'");
    return j[key].get<double>();
}

}  // namespace

CloudFile read_cloud_jsonl(std::istream& is) {
    CloudFile out;
    std::string line;
    std::size_t lineno = 0;
    bool header = false;
    std::size_t expected = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ConfigError("cloud file line " + std::to_string(lineno) + ": " + e.what());
        }
        if (!header) {
            if (j.value("format", "") != "ringlab-cloud")
                throw ConfigError("cloud file line 1: not a ringlab-cloud header");
            if (j.value("schema_version", 0) != kCloudSchemaVersion)
                throw ConfigError("cloud file: unsupported schema_version");
            Cloud& c = out.cloud;
            c.epsilon = get_num(j, "epsilon", lineno);
            c.mu = get_num(j, "mu", lineno);
            c.r0 = get_num(j, "r0", lineno);
            c.time = get_num(j, "time", lineno);
            c.h = j.contains("h") ? get_num(j, "h", lineno) : 0.0;
            expected = j.value("count", std::size_t{0});
            out.digest = j.value("digest", "");
            if (j.contains("step")) {
                RunState st;
                st.step = j["step"].get<std::int64_t>();
                st.digest = out.digest;
                st.version = j.value("version", "");
                out.state = st;
            }
            out.cloud.particles.reserve(expected);
            header = true;
            continue;
        }
        Particle p;
        p.r = get_num(j, "r", lineno);
        p.z = get_num(j, "z", lineno);
        p.gamma = get_num(j, "gamma", lineno);
        p.xi0 = get_num(j, "xi0", lineno);
        try {
            p.tag = tag_from_string(j.value("tag", "untagged"));
        } catch (const DomainError& e) {
            throw ConfigError("cloud file line " + std::to_string(lineno) + ": " + e.what());
        }
        out.cloud.particles.push_back(p);
    }
    if (!header) throw ConfigError("cloud file: empty input");
    if (out.cloud.size() != expected)
        throw ConfigError("cloud file: header count " + std::to_string(expected) + " but " +
                          std::to_string(out.cloud.size()) + " particles");
    return out;
}

void save_cloud(const std::filesystem::path& p, const Cloud& c, const std::optional<RunState>& state,
                const std::string& digest) {
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    const auto tmp = std::filesystem::path(p.string() + ".tmp");
    {
        std::ofstream os(tmp);
        if (!os) throw Error("cannot write " + tmp.string());
        write_cloud_jsonl(os, c, state, digest);
        if (!os) throw Error("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, p);
}

CloudFile load_cloud(const std::filesystem::path& p) {
    std::ifstream is(p);
    if (!is) throw ConfigError("cannot open cloud file " + p.string());
    return read_cloud_jsonl(is);
}

}  // namespace ringlab
