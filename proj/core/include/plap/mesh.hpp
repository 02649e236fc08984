#pragma once

// Triangulations of the unit disk and the polar cell partition that carries
// piecewise-constant conductivities.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace plap {

using Triangle = std::array<int, 3>;

class MeshGeometry {
public:
    MeshGeometry() = default;
    MeshGeometry(std::vector<Eigen::Vector2d> nodes, std::vector<Triangle> triangles,
                 std::vector<int> boundary, std::uint64_t generator_seed = 0);

    const std::vector<Eigen::Vector2d>& nodes() const noexcept { return nodes_; }
    const std::vector<Triangle>& triangles() const noexcept { return triangles_; }
    /// Boundary node indices ordered by polar angle; entry k sits at angle 2 pi k / N.
    const std::vector<int>& boundary() const noexcept { return boundary_; }
    const std::vector<double>& areas() const noexcept { return areas_; }

    std::size_t node_count() const noexcept { return nodes_.size(); }
    std::size_t triangle_count() const noexcept { return triangles_.size(); }
    std::size_t boundary_count() const noexcept { return boundary_.size(); }

    /// Node pinned to zero by the Neumann solvers (an interior node near the origin).
    int gauge_node() const noexcept { return gauge_node_; }

    Eigen::Vector2d centroid(std::size_t t) const;
    double total_area() const;

    /// Content hash over coordinates and connectivity; identifies the mesh in manifests.
    std::uint64_t id() const noexcept { return id_; }
    std::string hash_hex() const;
    std::uint64_t generator_seed() const noexcept { return seed_; }

    /// Throws MeshGenerationFailure describing the first violated invariant.
    void validate() const;

private:
    std::vector<Eigen::Vector2d> nodes_;
    std::vector<Triangle> triangles_;
    std::vector<int> boundary_;
    std::vector<double> areas_;
    int gauge_node_ = 0;
    std::uint64_t id_ = 0;
    std::uint64_t seed_ = 0;
};

struct DiskMeshOptions {
    int boundary_nodes = 128;
    /// Ring spacing relative to the boundary spacing 2 pi / N.
    double tangential_spacing = 0.95;
    double radial_spacing = 0.78;
    int smoothing_sweeps = 2;
    /// Non-empty seed: jitter ring radii, phases and node counts.
    std::optional<std::uint64_t> jitter_seed;
};

/// Quasi-uniform triangulation of the unit disk with N equally spaced boundary nodes.
MeshGeometry build_disk_mesh(int boundary_node_count);
MeshGeometry build_disk_mesh(const DiskMeshOptions& options);

/// A different triangulation of the same disk with the same boundary nodes.
MeshGeometry perturb_mesh(const MeshGeometry& mesh, std::uint64_t seed);

/// Polar cells: `rings` annuli of equal width, annulus i split into
/// `sectors[i]` equal sectors starting at angle 0.
class PolarGrid {
public:
    PolarGrid(int rings, int target_cells);

    int ring_count() const noexcept { return static_cast<int>(sectors_.size()); }
    const std::vector<int>& sectors() const noexcept { return sectors_; }
    int cell_count() const noexcept { return cell_count_; }

    /// Cell containing the point (points outside the unit disk go to the outer ring).
    int locate(const Eigen::Vector2d& x) const;
    int cell_index(int ring, int sector) const { return offsets_[ring] + sector; }
    int ring_of(int cell) const;

    /// Exact centroid and area of the ideal polar cell.
    const std::vector<Eigen::Vector2d>& centroids() const noexcept { return centroids_; }
    const std::vector<double>& areas() const noexcept { return areas_; }

    /// Ring count that makes cells roughly square for the given target.
    static int default_rings(int target_cells);

private:
    std::vector<int> sectors_;
    std::vector<int> offsets_;
    int cell_count_ = 0;
    std::vector<Eigen::Vector2d> centroids_;
    std::vector<double> areas_;
};

class Partition {
public:
    Partition(const MeshGeometry& mesh, PolarGrid grid);

    std::size_t cell_count() const noexcept { return static_cast<std::size_t>(grid_.cell_count()); }
    const PolarGrid& grid() const noexcept { return grid_; }
    /// Cell of each triangle (0-based).
    const std::vector<int>& cell_of() const noexcept { return cell_of_; }
    /// Triangles of each cell.
    const std::vector<std::vector<int>>& members() const noexcept { return members_; }
    /// Area covered by each cell on the mesh.
    const std::vector<double>& cell_areas() const noexcept { return cell_areas_; }
    /// Centres of the polar cells (mesh independent).
    const std::vector<Eigen::Vector2d>& centroids() const noexcept { return grid_.centroids(); }
    std::uint64_t mesh_id() const noexcept { return mesh_id_; }

    /// Expands a cell vector to one value per triangle.
    Eigen::VectorXd to_triangles(const Eigen::Ref<const Eigen::VectorXd>& cell_values) const;

private:
    PolarGrid grid_;
    std::vector<int> cell_of_;
    std::vector<std::vector<int>> members_;
    std::vector<double> cell_areas_;
    std::uint64_t mesh_id_ = 0;
};

/// Polar partition with `m_rings` annuli (0 selects a default) and about
/// `target_cells` cells. Throws PartitionFailure when a cell receives no triangle.
Partition build_partition(const MeshGeometry& mesh, int m_rings, int target_cells);

// Plain-text exchange format: node table, triangle table (with an optional
// cell column), boundary list.
void write_mesh(std::ostream& os, const MeshGeometry& mesh, const Partition* partition = nullptr);
struct MeshFile {
    MeshGeometry mesh;
    std::optional<std::vector<int>> cells;
};
MeshFile read_mesh(std::istream& is);

} // namespace plap
