#include "hdsys/core.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace hdsys {

double bochner_norm(const Trajectory& traj, double weight) {
    require_arg(weight >= 0.0, "bochner_norm: weight must be nonnegative");
    const double dt = traj.grid.dt();
    double acc = 0.0;
    for (int k = 0; k < traj.grid.steps(); ++k) {
        const double n = traj.space->norm_strong(traj.values[k]);
        acc += dt * std::exp(-weight * traj.grid.node(k)) * n * n;
    }
    return std::sqrt(acc);
}

double relative_l2_distance(const Trajectory& a, const Trajectory& b) {
    const double diff = l2_norm(a - b);
    const double scale = std::max(l2_norm(a), l2_norm(b));
    return scale > 0.0 ? diff / scale : diff;
}

void write_trajectory_csv(const Trajectory& traj, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    require(f != nullptr, ErrorCode::config, "cannot open for writing: " + path);
    std::fprintf(f, "t");
    for (int i = 0; i < traj.space->dim(); ++i) std::fprintf(f, ",c%d", i);
    std::fprintf(f, "\n");
    for (int k = 0; k < traj.nodes(); ++k) {
        std::fprintf(f, "%.17g", traj.grid.node(k));
        for (int i = 0; i < traj.space->dim(); ++i)
            std::fprintf(f, ",%.17g", traj.values[k][i]);
        std::fprintf(f, "\n");
    }
    std::fclose(f);
}

Trajectory read_trajectory_csv(SpacePtr space, const std::string& path) {
    std::ifstream in(path);
    require(in.good(), ErrorCode::config, "cannot open for reading: " + path);
    std::string line;
    std::getline(in, line); // header
    std::vector<Vec> values;
    std::vector<double> times;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> row;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        require(static_cast<int>(row.size()) == space->dim() + 1, ErrorCode::config,
                "trajectory CSV: wrong column count in " + path);
        times.push_back(row[0]);
        Vec v(space->dim());
        for (int i = 0; i < space->dim(); ++i) v[i] = row[i + 1];
        values.push_back(std::move(v));
    }
    require(values.size() >= 2, ErrorCode::config, "trajectory CSV: need at least two rows");
    const int steps = static_cast<int>(values.size()) - 1;
    TimeGrid grid(times.back(), steps);
    return Trajectory(std::move(space), grid, std::move(values));
}

} // namespace hdsys
