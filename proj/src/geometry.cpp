#include "plasmode/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace plasmode {

SurfaceMesh::SurfaceMesh(std::vector<Vec3> vertices, std::vector<std::array<int, 3>> triangles)
    : vertices_(std::move(vertices)), triangles_(std::move(triangles)) {
    if (vertices_.size() < 4 || triangles_.size() < 4)
        throw GeometryError("SurfaceMesh: too few vertices/triangles for a closed surface");
    centroids_.reserve(triangles_.size());
    normals_.reserve(triangles_.size());
    areas_.reserve(triangles_.size());
    Vec3 interior = Vec3::Zero();
    for (const auto& v : vertices_) interior += v;
    interior /= double(vertices_.size());
    for (const auto& t : triangles_) {
        for (int k : t)
            if (k < 0 || k >= int(vertices_.size())) throw GeometryError("SurfaceMesh: triangle index out of range");
        const Vec3 &a = vertices_[t[0]], &b = vertices_[t[1]], &c = vertices_[t[2]];
        Vec3 cross = (b - a).cross(c - a);
        double area2 = cross.norm();
        if (area2 <= 0) throw GeometryError("SurfaceMesh: degenerate (zero-area) triangle");
        Vec3 n = cross / area2;
        Vec3 cen = (a + b + c) / 3.0;
        // Vertex order is not trusted for orientation; flip toward outward.
        if ((cen - interior).dot(n) < 0) n = -n;
        centroids_.push_back(cen);
        normals_.push_back(n);
        areas_.push_back(0.5 * area2);
    }
}

double SurfaceMesh::total_area() const {
    double s = 0;
    for (double a : areas_) s += a;
    return s;
}

double SurfaceMesh::volume() const {
    double s = 0;
    for (int i = 0; i < panel_count(); ++i) s += centroids_[i].dot(normals_[i]) * areas_[i];
    return s / 3.0;
}

double SurfaceMesh::mesh_size() const {
    double h = 0;
    for (const auto& t : triangles_) {
        h = std::max(h, (vertices_[t[0]] - vertices_[t[1]]).norm());
        h = std::max(h, (vertices_[t[1]] - vertices_[t[2]]).norm());
        h = std::max(h, (vertices_[t[2]] - vertices_[t[0]]).norm());
    }
    return h;
}

double SurfaceMesh::bounding_radius() const {
    double r = 0;
    for (const auto& v : vertices_) r = std::max(r, v.norm());
    return r;
}

std::array<Vec3, 3> SurfaceMesh::triangle_vertices(int panel) const {
    const auto& t = triangles_[panel];
    return {vertices_[t[0]], vertices_[t[1]], vertices_[t[2]]};
}

bool SurfaceMesh::is_closed() const {
    std::map<std::pair<int, int>, int> edge_count;
    for (const auto& t : triangles_) {
        for (int e = 0; e < 3; ++e) {
            int a = t[e], b = t[(e + 1) % 3];
            edge_count[{std::min(a, b), std::max(a, b)}]++;
        }
    }
    for (const auto& [edge, count] : edge_count)
        if (count != 2) return false;
    return true;
}

bool SurfaceMesh::contains(const Vec3& p) const {
    for (int i = 0; i < panel_count(); ++i)
        if ((p - centroids_[i]).dot(normals_[i]) >= 0) return false;
    return true;
}

double SurfaceMesh::boundary_distance(const Vec3& p) const {
    double d = std::numeric_limits<double>::max();
    for (int i = 0; i < panel_count(); ++i) d = std::min(d, (centroids_[i] - p).dot(normals_[i]));
    return d;
}

SurfaceMesh SurfaceMesh::transformed(const Mat3& rot, const Vec3& shift, double scale) const {
    std::vector<Vec3> v;
    v.reserve(vertices_.size());
    for (const auto& x : vertices_) v.push_back(rot * (scale * x) + shift);
    return SurfaceMesh(std::move(v), triangles_);
}

std::uint64_t SurfaceMesh::hash() const {
    std::uint64_t h = fnv1a("mesh");
    for (const auto& v : vertices_) h = fnv1a(v.data(), 3 * sizeof(double), h);
    for (const auto& t : triangles_) h = fnv1a(t.data(), 3 * sizeof(int), h);
    return h;
}

ParticleFrame::ParticleFrame(SurfaceMesh reference, Vec3 center, double scale)
    : reference_(std::move(reference)), center_(center), scale_(scale) {
    if (!(scale_ > 0)) throw GeometryError("ParticleFrame: scale must be positive");
}

double VolumeGrid::total_weight() const {
    double s = 0;
    for (double w : weights) s += w;
    return s;
}

std::vector<std::array<int, 6>> VolumeGrid::neighbour_table() const {
    struct Key {
        long long x, y, z;
        bool operator<(const Key& o) const { return std::tie(x, y, z) < std::tie(o.x, o.y, o.z); }
    };
    auto key_of = [&](const Vec3& p) {
        return Key{llround(p.x() / spacing), llround(p.y() / spacing), llround(p.z() / spacing)};
    };
    std::map<Key, int> index;
    for (int i = 0; i < size(); ++i) index[key_of(points[i])] = i;
    std::vector<std::array<int, 6>> nb(size());
    const long long off[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
    for (int i = 0; i < size(); ++i) {
        Key k = key_of(points[i]);
        for (int d = 0; d < 6; ++d) {
            auto it = index.find(Key{k.x + off[d][0], k.y + off[d][1], k.z + off[d][2]});
            nb[i][d] = it == index.end() ? -1 : it->second;
        }
    }
    return nb;
}

VolumeGrid make_volume_grid(const SurfaceMesh& mesh, int cells_per_axis) {
    if (cells_per_axis < 2) throw GeometryError("make_volume_grid: cells_per_axis must be >= 2");
    double R = mesh.bounding_radius();
    double h = 2.0 * R / cells_per_axis;
    double hmesh = mesh.mesh_size();
    VolumeGrid grid;
    grid.spacing = h;
    for (int ix = 0; ix < cells_per_axis; ++ix)
        for (int iy = 0; iy < cells_per_axis; ++iy)
            for (int iz = 0; iz < cells_per_axis; ++iz) {
                Vec3 p(-R + (ix + 0.5) * h, -R + (iy + 0.5) * h, -R + (iz + 0.5) * h);
                if (!mesh.contains(p)) continue;
                grid.points.push_back(p);
                grid.weights.push_back(h * h * h);
                grid.well_interior.push_back(mesh.boundary_distance(p) >= hmesh);
            }
    if (grid.points.empty()) throw GeometryError("make_volume_grid: no interior points");
    return grid;
}

namespace {

// Icosahedron subdivided `refinement` times, vertices projected onto the
// unit sphere after each split.
void icosphere_unit(int refinement, std::vector<Vec3>& verts, std::vector<std::array<int, 3>>& tris) {
    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec3> v = {{-1, phi, 0}, {1, phi, 0}, {-1, -phi, 0}, {1, -phi, 0},
                           {0, -1, phi}, {0, 1, phi}, {0, -1, -phi}, {0, 1, -phi},
                           {phi, 0, -1}, {phi, 0, 1}, {-phi, 0, -1}, {-phi, 0, 1}};
    for (auto& x : v) x.normalize();
    std::vector<std::array<int, 3>> t = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                                         {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                                         {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                                         {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
    for (int level = 0; level < refinement; ++level) {
        std::map<std::pair<int, int>, int> midpoint;
        auto mid = [&](int a, int b) {
            auto key = std::make_pair(std::min(a, b), std::max(a, b));
            auto it = midpoint.find(key);
            if (it != midpoint.end()) return it->second;
            Vec3 m = (v[a] + v[b]).normalized();
            v.push_back(m);
            int idx = int(v.size()) - 1;
            midpoint[key] = idx;
            return idx;
        };
        std::vector<std::array<int, 3>> next;
        next.reserve(t.size() * 4);
        for (const auto& tri : t) {
            int ab = mid(tri[0], tri[1]), bc = mid(tri[1], tri[2]), ca = mid(tri[2], tri[0]);
            next.push_back({tri[0], ab, ca});
            next.push_back({tri[1], bc, ab});
            next.push_back({tri[2], ca, bc});
            next.push_back({ab, bc, ca});
        }
        t = std::move(next);
    }
    verts = std::move(v);
    tris = std::move(t);
}

}  // namespace

SurfaceMesh make_sphere(double radius, int refinement) {
    if (!(radius > 0)) throw GeometryError("make_sphere: radius must be positive");
    if (refinement < 0) throw GeometryError("make_sphere: refinement must be >= 0");
    std::vector<Vec3> verts;
    std::vector<std::array<int, 3>> tris;
    icosphere_unit(refinement, verts, tris);
    for (auto& v : verts) v *= radius;
    return SurfaceMesh(std::move(verts), std::move(tris));
}

SurfaceMesh make_ellipsoid(const Vec3& semi_axes, int refinement) {
    if (!(semi_axes.minCoeff() > 0)) throw GeometryError("make_ellipsoid: semi-axes must be positive");
    std::vector<Vec3> verts;
    std::vector<std::array<int, 3>> tris;
    icosphere_unit(refinement, verts, tris);
    for (auto& v : verts) v = v.cwiseProduct(semi_axes);
    SurfaceMesh mesh(std::move(verts), std::move(tris));
    auto report = check_strict_convexity(mesh);
    if (!report.strictly_convex)
        throw GeometryError("make_ellipsoid: validator rejected the mesh: " + report.message);
    return mesh;
}

namespace {

// Is v inside the convex hull of the remaining vertices? Frank-Wolfe descent
// on the distance to the hull; stops early once the gradient direction
// certifies a separating hyperplane (v is then a hull vertex).
bool inside_hull_of_others(const std::vector<Vec3>& verts, int vi, double scale) {
    const Vec3& v = verts[vi];
    Vec3 y = Vec3::Zero();
    {
        int cnt = 0;
        for (int i = 0; i < int(verts.size()); ++i)
            if (i != vi) {
                y += verts[i];
                ++cnt;
            }
        y /= double(cnt);
    }
    const double sep_tol = 1e-9 * scale;
    const double dist_tol = 1e-7 * scale;
    for (int iter = 0; iter < 400; ++iter) {
        Vec3 g = v - y;
        if (g.norm() < dist_tol) return true;
        // extreme vertex in the ascent direction
        int best = -1;
        double best_val = -std::numeric_limits<double>::max();
        for (int i = 0; i < int(verts.size()); ++i) {
            if (i == vi) continue;
            double val = g.dot(verts[i]);
            if (val > best_val) {
                best_val = val;
                best = i;
            }
        }
        if (best_val - g.dot(v) < -sep_tol) return false;  // separating plane found
        const Vec3& u = verts[best];
        Vec3 d = u - y;
        double denom = d.squaredNorm();
        if (denom == 0) return g.norm() < dist_tol;
        double step = std::clamp(g.dot(d) / denom, 0.0, 1.0);
        y += step * d;
    }
    return (v - y).norm() < dist_tol;
}

}  // namespace

ConvexityReport check_strict_convexity(const SurfaceMesh& mesh, double dihedral_tol) {
    ConvexityReport report;
    if (!mesh.is_closed()) throw GeometryError("check_strict_convexity: mesh is not closed");

    const auto& verts = mesh.vertices();
    double scale = mesh.bounding_radius();
    for (int vi = 0; vi < int(verts.size()); ++vi)
        if (inside_hull_of_others(verts, vi, scale)) report.offending_vertices.push_back(vi);

    // Strictness: neighbouring panels must be neither coplanar nor concave.
    std::map<std::pair<int, int>, std::vector<int>> edge_panels;
    for (int p = 0; p < mesh.panel_count(); ++p) {
        const auto& t = mesh.triangles()[p];
        for (int e = 0; e < 3; ++e) {
            int a = t[e], b = t[(e + 1) % 3];
            edge_panels[{std::min(a, b), std::max(a, b)}].push_back(p);
        }
    }
    for (const auto& [edge, panels] : edge_panels) {
        if (panels.size() != 2) continue;
        int p = panels[0], q = panels[1];
        double angle = std::acos(std::clamp(mesh.normals()[p].dot(mesh.normals()[q]), -1.0, 1.0));
        bool concave = (mesh.centroids()[q] - mesh.centroids()[p]).dot(mesh.normals()[p]) > dihedral_tol * scale;
        if (angle < dihedral_tol || concave) report.flat_edges.push_back({p, q});
    }

    report.strictly_convex = report.offending_vertices.empty() && report.flat_edges.empty();
    std::ostringstream msg;
    if (report.strictly_convex) {
        msg << "strictly convex (" << verts.size() << " vertices on hull, no flat dihedrals)";
    } else {
        msg << report.offending_vertices.size() << " vertices off the convex hull, " << report.flat_edges.size()
            << " flat dihedral(s)";
    }
    report.message = msg.str();
    return report;
}

void save_off(const SurfaceMesh& mesh, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("save_off: cannot open " + path);
    out << "OFF\n" << mesh.vertices().size() << " " << mesh.triangles().size() << " 0\n";
    out.precision(17);
    for (const auto& v : mesh.vertices()) out << v.x() << " " << v.y() << " " << v.z() << "\n";
    for (const auto& t : mesh.triangles()) out << "3 " << t[0] << " " << t[1] << " " << t[2] << "\n";
}

SurfaceMesh load_off(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("load_off: cannot open " + path);
    std::string magic;
    in >> magic;
    if (magic != "OFF") throw GeometryError("load_off: not an OFF file: " + path);
    std::size_t nv = 0, nf = 0, ne = 0;
    in >> nv >> nf >> ne;
    if (!in) throw GeometryError("load_off: malformed header");
    std::vector<Vec3> verts(nv);
    for (auto& v : verts) in >> v.x() >> v.y() >> v.z();
    std::vector<std::array<int, 3>> tris(nf);
    for (auto& t : tris) {
        int k;
        in >> k;
        if (k != 3) throw GeometryError("load_off: only triangle faces are supported");
        in >> t[0] >> t[1] >> t[2];
    }
    if (!in) throw GeometryError("load_off: truncated file");
    return SurfaceMesh(std::move(verts), std::move(tris));
}

void save_stl(const SurfaceMesh& mesh, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("save_stl: cannot open " + path);
    char header[80] = {0};
    std::snprintf(header, sizeof(header), "binary stl");
    out.write(header, 80);
    std::uint32_t n = std::uint32_t(mesh.panel_count());
    out.write(reinterpret_cast<const char*>(&n), 4);
    for (int i = 0; i < mesh.panel_count(); ++i) {
        auto tv = mesh.triangle_vertices(i);
        float buf[12] = {float(mesh.normals()[i].x()), float(mesh.normals()[i].y()), float(mesh.normals()[i].z()),
                         float(tv[0].x()), float(tv[0].y()), float(tv[0].z()),
                         float(tv[1].x()), float(tv[1].y()), float(tv[1].z()),
                         float(tv[2].x()), float(tv[2].y()), float(tv[2].z())};
        out.write(reinterpret_cast<const char*>(buf), sizeof(buf));
        std::uint16_t attr = 0;
        out.write(reinterpret_cast<const char*>(&attr), 2);
    }
}

SurfaceMesh load_stl(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("load_stl: cannot open " + path);
    char header[80];
    in.read(header, 80);
    std::uint32_t n = 0;
    in.read(reinterpret_cast<char*>(&n), 4);
    if (!in || n == 0) throw GeometryError("load_stl: malformed header");
    // Weld identical vertices back into a shared-index mesh.
    std::map<std::array<long long, 3>, int> weld;
    std::vector<Vec3> verts;
    std::vector<std::array<int, 3>> tris;
    auto add_vertex = [&](const Vec3& p) {
        std::array<long long, 3> key = {llround(p.x() * 1e9), llround(p.y() * 1e9), llround(p.z() * 1e9)};
        auto it = weld.find(key);
        if (it != weld.end()) return it->second;
        verts.push_back(p);
        weld[key] = int(verts.size()) - 1;
        return int(verts.size()) - 1;
    };
    for (std::uint32_t i = 0; i < n; ++i) {
        float buf[12];
        in.read(reinterpret_cast<char*>(buf), sizeof(buf));
        std::uint16_t attr;
        in.read(reinterpret_cast<char*>(&attr), 2);
        if (!in) throw GeometryError("load_stl: truncated file");
        std::array<int, 3> t;
        for (int k = 0; k < 3; ++k) t[k] = add_vertex(Vec3(buf[3 + 3 * k], buf[4 + 3 * k], buf[5 + 3 * k]));
        tris.push_back(t);
    }
    return SurfaceMesh(std::move(verts), std::move(tris));
}

}  // namespace plasmode
