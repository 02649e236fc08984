#include <plap/mesh.hpp>

#include <plap/errors.hpp>

#include <istream>
#include <ostream>
#include <sstream>

namespace plap {

namespace {

std::string next_content_line(std::istream& is, int& line_no)
{
    std::string line;
    while (std::getline(is, line)) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') {
            continue;
        }
        return line;
    }
    throw ParseError("unexpected end of mesh file after line " + std::to_string(line_no));
}

std::size_t read_section(std::istream& is, int& line_no, const std::string& name)
{
    std::istringstream ls(next_content_line(is, line_no));
    std::string key;
    long long count = -1;
    ls >> key >> count;
    if (key != name || count < 0) {
        throw ParseError("line " + std::to_string(line_no) + ": expected '" + name + " <count>'");
    }
    return static_cast<std::size_t>(count);
}

} // namespace

void write_mesh(std::ostream& os, const MeshGeometry& mesh, const Partition* partition)
{
    if (partition && partition->mesh_id() != mesh.id()) {
        throw MeshMismatch("partition was built on a different mesh");
    }
    const auto old_precision = os.precision(17);
    os << "# plap mesh v1 hash=" << mesh.hash_hex() << "\n";
    os << "nodes " << mesh.node_count() << "\n";
    for (std::size_t i = 0; i < mesh.node_count(); ++i) {
        os << i << ' ' << mesh.nodes()[i].x() << ' ' << mesh.nodes()[i].y() << "\n";
    }
    os << "triangles " << mesh.triangle_count() << (partition ? " cell" : "") << "\n";
    for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
        const auto& tri = mesh.triangles()[t];
        os << tri[0] << ' ' << tri[1] << ' ' << tri[2];
        if (partition) {
            os << ' ' << partition->cell_of()[t];
        }
        os << "\n";
    }
    os << "boundary " << mesh.boundary_count() << "\n";
    for (int b : mesh.boundary()) {
        os << b << "\n";
    }
    os.precision(old_precision);
}

MeshFile read_mesh(std::istream& is)
{
    int line_no = 0;
    const std::size_t n_nodes = read_section(is, line_no, "nodes");
    std::vector<Eigen::Vector2d> nodes(n_nodes);
    for (std::size_t i = 0; i < n_nodes; ++i) {
        std::istringstream ls(next_content_line(is, line_no));
        std::size_t index = 0;
        double x = 0.0;
        double y = 0.0;
        if (!(ls >> index >> x >> y) || index != i) {
            throw ParseError("line " + std::to_string(line_no) + ": malformed node record");
        }
        nodes[i] = {x, y};
    }

    std::size_t n_tris = 0;
    bool with_cells = false;
    {
        std::istringstream ls(next_content_line(is, line_no));
        std::string key;
        std::string extra;
        ls >> key >> n_tris >> extra;
        if (key != "triangles") {
            throw ParseError("line " + std::to_string(line_no) + ": expected 'triangles <count>'");
        }
        with_cells = extra == "cell";
    }
    std::vector<Triangle> tris(n_tris);
    std::vector<int> cells;
    for (std::size_t t = 0; t < n_tris; ++t) {
        std::istringstream ls(next_content_line(is, line_no));
        if (!(ls >> tris[t][0] >> tris[t][1] >> tris[t][2])) {
            throw ParseError("line " + std::to_string(line_no) + ": malformed triangle record");
        }
        if (with_cells) {
            int c = -1;
            if (!(ls >> c)) {
                throw ParseError("line " + std::to_string(line_no) + ": missing cell column");
            }
            cells.push_back(c);
        }
    }

    const std::size_t n_boundary = read_section(is, line_no, "boundary");
    std::vector<int> boundary(n_boundary);
    for (std::size_t k = 0; k < n_boundary; ++k) {
        std::istringstream ls(next_content_line(is, line_no));
        if (!(ls >> boundary[k])) {
            throw ParseError("line " + std::to_string(line_no) + ": malformed boundary record");
        }
    }

    MeshFile out{MeshGeometry(std::move(nodes), std::move(tris), std::move(boundary)), std::nullopt};
    if (with_cells) {
        out.cells = std::move(cells);
    }
    return out;
}

} // namespace plap
