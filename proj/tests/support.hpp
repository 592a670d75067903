#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ringlab/cloud.hpp"

namespace ringlab::testing {

inline std::filesystem::path fixture(const std::string& name) {
    return std::filesystem::path(RINGLAB_FIXTURE_DIR) / name;
}

/// Rows of a CSV fixture keyed by the header; lines starting with '#' are skipped.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    std::size_t col(const std::string& name) const {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == name) return i;
        throw std::runtime_error("no column " + name);
    }
};

inline Table read_table(const std::filesystem::path& p) {
    std::ifstream is(p);
    if (!is) throw std::runtime_error("cannot open " + p.string());
    Table t;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (t.columns.empty()) {
            t.columns = cells;
            continue;
        }
        std::vector<double> row;
        for (const auto& c : cells) {
            try {
                row.push_back(std::stod(c));
            } catch (const std::exception&) {
                row.push_back(NAN);  // non-numeric cells (branch names)
            }
        }
        t.rows.push_back(row);
    }
    return t;
}

inline double rel_diff(double a, double b) {
    const double s = std::max(std::abs(a), std::abs(b));
    return s == 0.0 ? 0.0 : std::abs(a - b) / s;
}

/// Thin flat-profile ring used across the suites.
inline Cloud thin_blob(double eps = 1e-2, double h_over_eps = 0.125, KernelPoint x0 = {1.0, 0.0}, double mu = 1.0) {
    BlobParams bp;
    bp.epsilon = eps;
    bp.h = h_over_eps * eps;
    bp.x0 = x0;
    bp.mu = mu;
    bp.profile = normalize_on_grid(Profile::flat(0.3), h_over_eps);
    return generate_blob(bp);
}

inline Cloud gaussian_blob(double eps = 1e-2, double h_over_eps = 0.125, KernelPoint x0 = {1.0, 0.0}) {
    BlobParams bp;
    bp.epsilon = eps;
    bp.h = h_over_eps * eps;
    bp.x0 = x0;
    bp.profile = normalize_on_grid(Profile::gaussian(0.4), h_over_eps);
    return generate_blob(bp);
}

}  // namespace ringlab::testing
