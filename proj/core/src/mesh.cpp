#include <plap/mesh.hpp>

#include <plap/errors.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>
#include <unordered_map>

namespace plap {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double signed_area(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c)
{
    return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y()));
}

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t n)
{
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= bytes[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t edge_key(int a, int b)
{
    const auto lo = static_cast<std::uint64_t>(std::min(a, b));
    const auto hi = static_cast<std::uint64_t>(std::max(a, b));
    return (hi << 32) | lo;
}

struct Ring {
    double radius;
    double phase;
    int count;
    int first; // index of first node
};

// Connects two concentric rings with a strip of triangles by merging their
// angular orderings.
void zip_rings(const Ring& inner, const Ring& outer, const std::vector<Eigen::Vector2d>& nodes,
               std::vector<Triangle>& tris)
{
    const double da = kTwoPi / inner.count;
    const double db = kTwoPi / outer.count;
    const auto angle_a = [&](int i) { return inner.phase + i * da; };
    // Outer start: node whose angle is closest to the inner start.
    int j0 = static_cast<int>(std::lround((inner.phase - outer.phase) / db));
    j0 = ((j0 % outer.count) + outer.count) % outer.count;
    double start_b = outer.phase + j0 * db;
    while (start_b - inner.phase > std::numbers::pi) {
        start_b -= kTwoPi;
    }
    while (start_b - inner.phase <= -std::numbers::pi) {
        start_b += kTwoPi;
    }
    const auto angle_b = [&](int j) { return start_b + j * db; };
    const auto node_a = [&](int i) { return inner.first + (i % inner.count); };
    const auto node_b = [&](int j) { return outer.first + ((j0 + j) % outer.count); };

    int i = 0;
    int j = 0;
    while (i < inner.count || j < outer.count) {
        const bool advance_inner = i < inner.count && (j == outer.count || angle_a(i + 1) < angle_b(j + 1));
        Triangle t = advance_inner ? Triangle{node_a(i), node_b(j), node_a(i + 1)}
                                   : Triangle{node_a(i), node_b(j), node_b(j + 1)};
        if (signed_area(nodes[t[0]], nodes[t[1]], nodes[t[2]]) < 0.0) {
            std::swap(t[1], t[2]);
        }
        tris.push_back(t);
        (advance_inner ? i : j) += 1;
    }
}

// Strictly positive when d lies inside the circumcircle of the CCW triangle (a, b, c).
double incircle(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c,
                const Eigen::Vector2d& d)
{
    const Eigen::Vector2d ad = a - d;
    const Eigen::Vector2d bd = b - d;
    const Eigen::Vector2d cd = c - d;
    const double a2 = ad.squaredNorm();
    const double b2 = bd.squaredNorm();
    const double c2 = cd.squaredNorm();
    return ad.x() * (bd.y() * c2 - b2 * cd.y()) - ad.y() * (bd.x() * c2 - b2 * cd.x()) +
           a2 * (bd.x() * cd.y() - bd.y() * cd.x());
}

// Lawson edge flips until every interior edge is locally Delaunay.
void delaunay_flips(const std::vector<Eigen::Vector2d>& nodes, std::vector<Triangle>& tris, double length_scale)
{
    const double tol = 1e-10 * std::pow(length_scale, 4);
    for (int pass = 0; pass < 100; ++pass) {
        std::unordered_map<std::uint64_t, std::pair<int, int>> owner; // edge -> (triangle, local edge)
        owner.reserve(tris.size() * 3);
        std::vector<std::array<int, 3>> neighbour(tris.size(), {-1, -1, -1});
        std::vector<std::array<int, 3>> neighbour_edge(tris.size(), {-1, -1, -1});
        for (int t = 0; t < static_cast<int>(tris.size()); ++t) {
            for (int e = 0; e < 3; ++e) {
                const auto key = edge_key(tris[t][e], tris[t][(e + 1) % 3]);
                auto [it, inserted] = owner.emplace(key, std::make_pair(t, e));
                if (!inserted) {
                    neighbour[t][e] = it->second.first;
                    neighbour_edge[t][e] = it->second.second;
                    neighbour[it->second.first][it->second.second] = t;
                    neighbour_edge[it->second.first][it->second.second] = e;
                }
            }
        }
        std::vector<char> dirty(tris.size(), 0);
        int flips = 0;
        for (int t = 0; t < static_cast<int>(tris.size()); ++t) {
            if (dirty[t]) {
                continue;
            }
            for (int e = 0; e < 3; ++e) {
                const int u = neighbour[t][e];
                if (u < 0 || dirty[u]) {
                    continue;
                }
                const int a = tris[t][e];
                const int b = tris[t][(e + 1) % 3];
                const int c = tris[t][(e + 2) % 3];
                const int d = tris[u][(neighbour_edge[t][e] + 2) % 3];
                if (incircle(nodes[a], nodes[b], nodes[c], nodes[d]) <= tol) {
                    continue;
                }
                const Triangle t1{a, d, c};
                const Triangle t2{d, b, c};
                if (signed_area(nodes[a], nodes[d], nodes[c]) <= 0.0 ||
                    signed_area(nodes[d], nodes[b], nodes[c]) <= 0.0) {
                    continue;
                }
                tris[t] = t1;
                tris[u] = t2;
                dirty[t] = dirty[u] = 1;
                ++flips;
                break;
            }
        }
        if (flips == 0) {
            return;
        }
    }
}

void laplacian_smoothing(std::vector<Eigen::Vector2d>& nodes, const std::vector<Triangle>& tris,
                         const std::vector<char>& fixed, int sweeps)
{
    std::vector<std::vector<int>> incident(nodes.size());
    std::vector<std::vector<int>> adjacent(nodes.size());
    for (int t = 0; t < static_cast<int>(tris.size()); ++t) {
        for (int k = 0; k < 3; ++k) {
            incident[tris[t][k]].push_back(t);
            adjacent[tris[t][k]].push_back(tris[t][(k + 1) % 3]);
            adjacent[tris[t][k]].push_back(tris[t][(k + 2) % 3]);
        }
    }
    for (auto& adj : adjacent) {
        std::sort(adj.begin(), adj.end());
        adj.erase(std::unique(adj.begin(), adj.end()), adj.end());
    }
    for (int sweep = 0; sweep < sweeps; ++sweep) {
        for (std::size_t v = 0; v < nodes.size(); ++v) {
            if (fixed[v] || adjacent[v].empty()) {
                continue;
            }
            Eigen::Vector2d mean = Eigen::Vector2d::Zero();
            for (int w : adjacent[v]) {
                mean += nodes[w];
            }
            mean /= static_cast<double>(adjacent[v].size());
            const Eigen::Vector2d old = nodes[v];
            nodes[v] = mean;
            const bool ok = std::all_of(incident[v].begin(), incident[v].end(), [&](int t) {
                const auto& tri = tris[t];
                return signed_area(nodes[tri[0]], nodes[tri[1]], nodes[tri[2]]) > 0.0;
            });
            if (!ok) {
                nodes[v] = old;
            }
        }
    }
}

} // namespace

MeshGeometry::MeshGeometry(std::vector<Eigen::Vector2d> nodes, std::vector<Triangle> triangles,
                           std::vector<int> boundary, std::uint64_t generator_seed)
    : nodes_(std::move(nodes)), triangles_(std::move(triangles)), boundary_(std::move(boundary)),
      seed_(generator_seed)
{
    const int n = static_cast<int>(nodes_.size());
    areas_.reserve(triangles_.size());
    for (const auto& t : triangles_) {
        for (int v : t) {
            if (v < 0 || v >= n) {
                throw MeshGenerationFailure("triangle references node " + std::to_string(v) + " out of range");
            }
        }
        areas_.push_back(signed_area(nodes_[t[0]], nodes_[t[1]], nodes_[t[2]]));
    }

    std::vector<char> on_boundary(nodes_.size(), 0);
    for (int b : boundary_) {
        if (b < 0 || b >= n) {
            throw MeshGenerationFailure("boundary node index out of range");
        }
        on_boundary[b] = 1;
    }
    double best = std::numeric_limits<double>::infinity();
    gauge_node_ = -1;
    for (int v = 0; v < n; ++v) {
        if (!on_boundary[v] && nodes_[v].squaredNorm() < best) {
            best = nodes_[v].squaredNorm();
            gauge_node_ = v;
        }
    }
    if (gauge_node_ < 0) {
        gauge_node_ = 0;
    }

    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& x : nodes_) {
        h = fnv1a(h, x.data(), 2 * sizeof(double));
    }
    for (const auto& t : triangles_) {
        h = fnv1a(h, t.data(), sizeof(Triangle));
    }
    h = fnv1a(h, boundary_.data(), boundary_.size() * sizeof(int));
    id_ = h;
}

Eigen::Vector2d MeshGeometry::centroid(std::size_t t) const
{
    const auto& tri = triangles_[t];
    return (nodes_[tri[0]] + nodes_[tri[1]] + nodes_[tri[2]]) / 3.0;
}

double MeshGeometry::total_area() const
{
    double sum = 0.0;
    for (double a : areas_) {
        sum += a;
    }
    return sum;
}

std::string MeshGeometry::hash_hex() const
{
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << id_;
    return os.str();
}

void MeshGeometry::validate() const
{
    if (boundary_.size() < 3) {
        throw MeshGenerationFailure("mesh needs at least three boundary nodes");
    }
    for (std::size_t t = 0; t < triangles_.size(); ++t) {
        if (!(areas_[t] > 0.0)) {
            throw MeshGenerationFailure("triangle " + std::to_string(t) + " has non-positive signed area");
        }
    }
    const auto n_b = boundary_.size();
    for (std::size_t k = 0; k < n_b; ++k) {
        const auto& x = nodes_[boundary_[k]];
        if (std::abs(x.norm() - 1.0) > 1e-12) {
            throw MeshGenerationFailure("boundary node " + std::to_string(k) + " is off the unit circle");
        }
        double angle = std::atan2(x.y(), x.x());
        if (angle < -1e-12) {
            angle += kTwoPi;
        }
        if (std::abs(angle - kTwoPi * static_cast<double>(k) / static_cast<double>(n_b)) > 1e-12) {
            throw MeshGenerationFailure("boundary node " + std::to_string(k) + " is not uniformly spaced");
        }
    }

    // Conformity: interior edges shared by exactly two triangles with opposite
    // orientation, hull edges are exactly the boundary segments.
    std::unordered_map<std::uint64_t, int> directed;
    directed.reserve(triangles_.size() * 3);
    for (const auto& t : triangles_) {
        for (int e = 0; e < 3; ++e) {
            const auto a = static_cast<std::uint64_t>(t[e]);
            const auto b = static_cast<std::uint64_t>(t[(e + 1) % 3]);
            if (!directed.emplace((a << 32) | b, 1).second) {
                throw MeshGenerationFailure("edge traversed twice in the same direction");
            }
        }
    }
    std::size_t hull = 0;
    for (const auto& [key, unused] : directed) {
        const std::uint64_t reversed = ((key & 0xffffffffULL) << 32) | (key >> 32);
        if (!directed.count(reversed)) {
            ++hull;
            const int a = static_cast<int>(key >> 32);
            const int b = static_cast<int>(key & 0xffffffffULL);
            const auto pos = std::find(boundary_.begin(), boundary_.end(), a) - boundary_.begin();
            if (static_cast<std::size_t>(pos) == n_b || boundary_[(pos + 1) % n_b] != b) {
                throw MeshGenerationFailure("hull edge is not a boundary segment");
            }
        }
    }
    if (hull != n_b) {
        throw MeshGenerationFailure("hull edge count does not match boundary node count");
    }
}

MeshGeometry build_disk_mesh(int boundary_node_count)
{
    DiskMeshOptions o;
    o.boundary_nodes = boundary_node_count;
    return build_disk_mesh(o);
}

MeshGeometry build_disk_mesh(const DiskMeshOptions& options)
{
    const int n_boundary = options.boundary_nodes;
    if (n_boundary < 16 || n_boundary % 2 != 0) {
        throw InvalidArgument("boundary node count must be an even integer >= 16, got " +
                              std::to_string(n_boundary));
    }
    if (!(options.tangential_spacing > 0.0) || !(options.radial_spacing > 0.0)) {
        throw InvalidArgument("mesh spacings must be positive");
    }
    const double h = kTwoPi / n_boundary;
    const int ring_count = std::max(2, static_cast<int>(std::lround(1.0 / (options.radial_spacing * h))));

    std::mt19937_64 rng(options.jitter_seed.value_or(0));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const bool jitter = options.jitter_seed.has_value();

    std::vector<Eigen::Vector2d> nodes;
    nodes.emplace_back(0.0, 0.0);
    std::vector<Ring> rings;
    for (int k = 1; k <= ring_count; ++k) {
        Ring ring{};
        if (k == ring_count) {
            ring = {1.0, 0.0, n_boundary, 0};
        } else {
            double r = static_cast<double>(k) / ring_count;
            int count = static_cast<int>(std::lround(kTwoPi * r / (options.tangential_spacing * h)));
            double phase = 0.5 * (k % 2);
            if (jitter) {
                r += (unit(rng) - 0.5) * 0.4 / ring_count;
                count += static_cast<int>(std::floor(unit(rng) * 3.0)) - 1;
                phase = unit(rng);
            }
            count = std::max(count, 5);
            ring = {r, phase * kTwoPi / count, count, 0};
        }
        ring.first = static_cast<int>(nodes.size());
        for (int i = 0; i < ring.count; ++i) {
            if (k == ring_count) {
                const double angle = kTwoPi * i / n_boundary;
                nodes.emplace_back(std::cos(angle), std::sin(angle));
            } else {
                const double angle = ring.phase + kTwoPi * i / ring.count;
                nodes.emplace_back(ring.radius * std::cos(angle), ring.radius * std::sin(angle));
            }
        }
        rings.push_back(ring);
    }

    std::vector<Triangle> tris;
    tris.reserve(2 * nodes.size());
    for (int i = 0; i < rings.front().count; ++i) {
        const int a = rings.front().first + i;
        const int b = rings.front().first + (i + 1) % rings.front().count;
        tris.push_back({0, a, b});
    }
    for (std::size_t k = 0; k + 1 < rings.size(); ++k) {
        zip_rings(rings[k], rings[k + 1], nodes, tris);
    }

    std::vector<int> boundary(n_boundary);
    for (int i = 0; i < n_boundary; ++i) {
        boundary[i] = rings.back().first + i;
    }
    std::vector<char> fixed(nodes.size(), 0);
    fixed[0] = 1;
    for (int b : boundary) {
        fixed[b] = 1;
    }

    delaunay_flips(nodes, tris, h);
    if (options.smoothing_sweeps > 0) {
        laplacian_smoothing(nodes, tris, fixed, options.smoothing_sweeps);
        delaunay_flips(nodes, tris, h);
    }

    MeshGeometry mesh(std::move(nodes), std::move(tris), std::move(boundary), options.jitter_seed.value_or(0));
    mesh.validate();
    return mesh;
}

MeshGeometry perturb_mesh(const MeshGeometry& mesh, std::uint64_t seed)
{
    DiskMeshOptions o;
    o.boundary_nodes = static_cast<int>(mesh.boundary_count());
    // Mix the seed so that seed 0 still differs from the unjittered template.
    o.jitter_seed = seed * 0x9e3779b97f4a7c15ULL + 0x632be59bd9b4e019ULL;
    return build_disk_mesh(o);
}

} // namespace plap
