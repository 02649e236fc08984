#include <plap/mesh.hpp>

#include <plap/errors.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace plap {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

int PolarGrid::default_rings(int target_cells)
{
    return std::max(1, static_cast<int>(std::lround(std::sqrt(target_cells / std::numbers::pi))));
}

PolarGrid::PolarGrid(int rings, int target_cells)
{
    if (target_cells < 1) {
        throw InvalidArgument("partition needs at least one cell");
    }
    if (rings <= 0) {
        rings = default_rings(target_cells);
    }
    if (rings > target_cells) {
        throw InvalidArgument("more rings than cells requested");
    }

    // Sector counts proportional to mean ring radius (i + 1/2) / m, rounded by
    // largest remainder so that the total hits the target exactly.
    const double total_weight = static_cast<double>(rings) * rings;
    std::vector<double> exact(rings);
    sectors_.assign(rings, 0);
    int assigned = 0;
    for (int i = 0; i < rings; ++i) {
        exact[i] = target_cells * (2.0 * i + 1.0) / total_weight;
        sectors_[i] = std::max(1, static_cast<int>(std::floor(exact[i])));
        assigned += sectors_[i];
    }
    std::vector<int> order(rings);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return exact[a] - sectors_[a] > exact[b] - sectors_[b];
    });
    for (std::size_t k = 0; assigned < target_cells; k = (k + 1) % order.size()) {
        ++sectors_[order[k]];
        ++assigned;
    }
    for (std::size_t k = order.size(); assigned > target_cells && k-- > 0;) {
        if (sectors_[order[k]] > 1) {
            --sectors_[order[k]];
            --assigned;
        }
    }

    offsets_.resize(rings + 1, 0);
    for (int i = 0; i < rings; ++i) {
        offsets_[i + 1] = offsets_[i] + sectors_[i];
    }
    cell_count_ = offsets_[rings];

    centroids_.resize(cell_count_);
    areas_.resize(cell_count_);
    for (int i = 0; i < rings; ++i) {
        const double r0 = static_cast<double>(i) / rings;
        const double r1 = static_cast<double>(i + 1) / rings;
        const double width = kTwoPi / sectors_[i];
        for (int s = 0; s < sectors_[i]; ++s) {
            const double t0 = s * width;
            const double t1 = (s + 1) * width;
            const double area = 0.5 * width * (r1 * r1 - r0 * r0);
            const double moment = (r1 * r1 * r1 - r0 * r0 * r0) / 3.0;
            const int c = offsets_[i] + s;
            areas_[c] = area;
            if (sectors_[i] == 1) {
                centroids_[c].setZero();
            } else {
                centroids_[c] = Eigen::Vector2d(moment * (std::sin(t1) - std::sin(t0)) / area,
                                                moment * (std::cos(t0) - std::cos(t1)) / area);
            }
        }
    }
}

int PolarGrid::locate(const Eigen::Vector2d& x) const
{
    const int m = ring_count();
    const int ring = std::clamp(static_cast<int>(std::floor(x.norm() * m)), 0, m - 1);
    double angle = std::atan2(x.y(), x.x());
    if (angle < 0.0) {
        angle += kTwoPi;
    }
    const int n = sectors_[ring];
    const int sector = std::clamp(static_cast<int>(std::floor(angle / kTwoPi * n)), 0, n - 1);
    return offsets_[ring] + sector;
}

int PolarGrid::ring_of(int cell) const
{
    const auto it = std::upper_bound(offsets_.begin(), offsets_.end(), cell);
    return static_cast<int>(it - offsets_.begin()) - 1;
}

Partition::Partition(const MeshGeometry& mesh, PolarGrid grid)
    : grid_(std::move(grid)), mesh_id_(mesh.id())
{
    const auto n_cells = static_cast<std::size_t>(grid_.cell_count());
    cell_of_.resize(mesh.triangle_count());
    members_.assign(n_cells, {});
    cell_areas_.assign(n_cells, 0.0);
    for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
        const int c = grid_.locate(mesh.centroid(t));
        cell_of_[t] = c;
        members_[c].push_back(static_cast<int>(t));
        cell_areas_[c] += mesh.areas()[t];
    }
    for (std::size_t c = 0; c < n_cells; ++c) {
        if (members_[c].empty()) {
            throw PartitionFailure("cell " + std::to_string(c) + " received no triangle");
        }
    }
}

Eigen::VectorXd Partition::to_triangles(const Eigen::Ref<const Eigen::VectorXd>& cell_values) const
{
    if (static_cast<std::size_t>(cell_values.size()) != cell_count()) {
        throw MeshMismatch("cell vector has " + std::to_string(cell_values.size()) + " entries, partition has " +
                           std::to_string(cell_count()));
    }
    Eigen::VectorXd out(cell_of_.size());
    for (std::size_t t = 0; t < cell_of_.size(); ++t) {
        out(static_cast<Eigen::Index>(t)) = cell_values(cell_of_[t]);
    }
    return out;
}

Partition build_partition(const MeshGeometry& mesh, int m_rings, int target_cells)
{
    if (target_cells < 1 || static_cast<std::size_t>(target_cells) > mesh.triangle_count() / 4) {
        throw InvalidArgument("target cell count must lie in [1, triangles / 4]");
    }
    return Partition(mesh, PolarGrid(m_rings, target_cells));
}

} // namespace plap
