#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "ringlab/cloud.hpp"

namespace ringlab {

/// Run state carried in checkpoint headers.
struct RunState {
    std::int64_t step = 0;
    std::string digest;   ///< config digest of the run that wrote the file
    std::string version;  ///< code version string
};

struct CloudFile {
    Cloud cloud;
    std::optional<RunState> state;
    std::string digest;  ///< digest recorded in the header (may be empty)
};

inline constexpr int kCloudSchemaVersion = 1;

/// JSONL: one header object, then one {r, z, gamma, xi0, tag} object per
/// particle. Doubles are written with 17 significant digits, so a round trip
/// is bit exact.
void write_cloud_jsonl(std::ostream& os, const Cloud& c, const std::optional<RunState>& state = std::nullopt,
                       const std::string& digest = {});
CloudFile read_cloud_jsonl(std::istream& is);

void save_cloud(const std::filesystem::path& p, const Cloud& c, const std::optional<RunState>& state = std::nullopt,
                const std::string& digest = {});
CloudFile load_cloud(const std::filesystem::path& p);

/// "%.17g", with "nan"/"inf" spelled out.
std::string format_double(double v);

}  // namespace ringlab
