#include "auralab/scene.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace auralab {

namespace {

constexpr double kPi = 3.14159265358979323846;

double wrap_angle_2pi(double a) {
    const double two_pi = 2.0 * kPi;
    a = std::fmod(a, two_pi);
    if (a < 0.0) a += two_pi;
    return a;
}

} // namespace

// ---------------------------------------------------------------------------
// Directivity

bool Directivity::is_omni() const {
    for (const auto& cell : gains)
        for (double g : cell)
            if (g != 1.0) return false;
    return true;
}

const BandArray& Directivity::gains_toward(const Vec3& direction) const {
    if (n_azimuth == 1 && n_elevation == 1) return gains[0];
    const double az = wrap_angle_2pi(std::atan2(direction.y, direction.x));
    const double el = std::asin(std::clamp(direction.z / direction.norm(), -1.0, 1.0));
    std::size_t ia = 0;
    if (n_azimuth > 1) {
        const double step = 2.0 * kPi / static_cast<double>(n_azimuth);
        ia = static_cast<std::size_t>(std::llround(az / step)) % n_azimuth;
    }
    std::size_t ie = 0;
    if (n_elevation > 1) {
        const double t = (el + kPi / 2.0) * static_cast<double>(n_elevation - 1) / kPi;
        ie = static_cast<std::size_t>(std::clamp<long long>(
            std::llround(t), 0, static_cast<long long>(n_elevation - 1)));
    }
    return gains[ie * n_azimuth + ia];
}

double Directivity::gain(const Vec3& direction, std::size_t band) const {
    return gains_toward(direction)[band];
}

// ---------------------------------------------------------------------------
// Mesh

double Mesh::volume() const {
    // Divergence theorem; normals face the enclosed air, hence the sign flip.
    double six_v = 0.0;
    for (const auto& t : triangles) six_v += t.a.dot(t.b.cross(t.c));
    return -six_v / 6.0;
}

namespace {

// Moeller-Trumbore, returns hit distance along `dir` or a negative value.
double ray_triangle(const Vec3& origin, const Vec3& dir, const Triangle& tri) {
    constexpr double eps = 1e-12;
    const Vec3 e1 = tri.b - tri.a;
    const Vec3 e2 = tri.c - tri.a;
    const Vec3 p = dir.cross(e2);
    const double det = e1.dot(p);
    if (std::abs(det) < eps) return -1.0;
    const double inv_det = 1.0 / det;
    const Vec3 s = origin - tri.a;
    const double u = s.dot(p) * inv_det;
    if (u < -eps || u > 1.0 + eps) return -1.0;
    const Vec3 q = s.cross(e1);
    const double v = dir.dot(q) * inv_det;
    if (v < -eps || u + v > 1.0 + eps) return -1.0;
    return e2.dot(q) * inv_det;
}

} // namespace

bool Mesh::contains(const Vec3& p) const {
    // Parity ray cast; the direction is chosen to avoid edge-aligned rays.
    const Vec3 dir = Vec3{0.5377397234, 0.2817071286, 0.7946502387}.normalized();
    int crossings = 0;
    for (const auto& t : triangles) {
        const double hit = ray_triangle(p, dir, t);
        if (hit > 1e-9) ++crossings;
    }
    return (crossings % 2) == 1;
}

// ---------------------------------------------------------------------------
// Scene helpers

double Scene::room_volume() const {
    if (is_shoebox()) return shoebox().volume();
    return mesh().volume();
}

bool Scene::room_contains(const Vec3& p) const {
    if (is_shoebox()) return shoebox().contains(p);
    return mesh().contains(p);
}

const Material& Scene::material(const std::string& id) const {
    auto it = materials.find(id);
    if (it == materials.end())
        throw std::invalid_argument("scene: unknown material id '" + id + "'");
    return it->second;
}

// ---------------------------------------------------------------------------
// Validation

namespace {

void check_material(const std::string& id, const Material& m, ValidationReport& report) {
    const std::string loc = "material " + id;
    for (std::size_t b = 0; b < kNumBands; ++b) {
        if (!(m.absorption[b] >= 0.0 && m.absorption[b] <= 1.0))
            report.violations.push_back({loc, "absorption out of [0,1] in band " +
                                                  std::to_string(b)});
        if (!(m.scattering[b] >= 0.0 && m.scattering[b] <= 1.0))
            report.violations.push_back({loc, "scattering out of [0,1] in band " +
                                                  std::to_string(b)});
    }
}

using VertexKey = std::array<double, 3>;
VertexKey vkey(const Vec3& v) { return {v.x, v.y, v.z}; }

bool check_mesh(const Mesh& mesh, ValidationReport& report) {
    bool closed = true;
    if (mesh.triangles.empty()) {
        report.violations.push_back({"room", "mesh has no triangles"});
        return false;
    }
    std::map<std::pair<VertexKey, VertexKey>, int> undirected;
    std::set<std::pair<VertexKey, VertexKey>> directed;
    for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
        const auto& t = mesh.triangles[i];
        if (t.area() < 1e-12) {
            report.violations.push_back(
                {"room", "degenerate triangle " + std::to_string(i)});
            closed = false;
            continue;
        }
        const VertexKey k[3] = {vkey(t.a), vkey(t.b), vkey(t.c)};
        for (int e = 0; e < 3; ++e) {
            const VertexKey& from = k[e];
            const VertexKey& to = k[(e + 1) % 3];
            if (!directed.insert({from, to}).second) {
                report.violations.push_back(
                    {"room", "inconsistent winding: repeated directed edge in triangle " +
                                 std::to_string(i)});
                closed = false;
            }
            undirected[{std::min(from, to), std::max(from, to)}]++;
        }
    }
    for (const auto& [edge, count] : undirected) {
        if (count != 2) {
            char buf[160];
            std::snprintf(buf, sizeof(buf),
                          "mesh not watertight: edge (%g,%g,%g)-(%g,%g,%g) shared by %d "
                          "triangle(s)",
                          edge.first[0], edge.first[1], edge.first[2], edge.second[0],
                          edge.second[1], edge.second[2], count);
            report.violations.push_back({"room", buf});
            closed = false;
        }
    }
    if (closed && mesh.volume() <= 0.0) {
        report.violations.push_back({"room", "normals do not face the air volume"});
        closed = false;
    }
    return closed;
}

} // namespace

ValidationReport validate_scene(const Scene& scene) {
    ValidationReport report;

    for (const auto& [id, m] : scene.materials) check_material(id, m, report);

    bool geometry_ok = true;
    std::vector<std::string> referenced;
    if (scene.is_shoebox()) {
        const auto& box = scene.shoebox();
        if (!(box.width > 0.0 && box.length > 0.0 && box.height > 0.0)) {
            report.violations.push_back({"room", "shoebox dimensions must be positive"});
            geometry_ok = false;
        }
        referenced.assign(box.wall_materials.begin(), box.wall_materials.end());
    } else {
        geometry_ok = check_mesh(scene.mesh(), report);
        for (const auto& t : scene.mesh().triangles) referenced.push_back(t.material);
    }
    std::sort(referenced.begin(), referenced.end());
    referenced.erase(std::unique(referenced.begin(), referenced.end()), referenced.end());
    for (const auto& id : referenced)
        if (!scene.materials.count(id))
            report.violations.push_back({"room", "unknown material id '" + id + "'"});

    const auto& src = scene.source;
    if (geometry_ok && !scene.room_contains(src.position))
        report.violations.push_back({"source", "position not inside the air volume"});
    if (src.directivity.gains.size() != src.directivity.n_azimuth * src.directivity.n_elevation ||
        src.directivity.gains.empty()) {
        report.violations.push_back({"source", "directivity grid size mismatch"});
    } else {
        for (const auto& cell : src.directivity.gains)
            for (double g : cell)
                if (!(std::isfinite(g) && g >= 0.0)) {
                    report.violations.push_back({"source", "directivity gain not finite or < 0"});
                    goto directivity_done;
                }
    }
directivity_done:

    if (geometry_ok && !scene.room_contains(scene.receiver.position))
        report.violations.push_back({"receiver", "position not inside the air volume"});
    {
        const Vec3& look = scene.receiver.look;
        const Vec3& up = scene.receiver.up;
        if (std::abs(look.norm() - 1.0) > 1e-6 || std::abs(up.norm() - 1.0) > 1e-6 ||
            std::abs(look.dot(up)) > 1e-6)
            report.violations.push_back({"receiver", "orientation vectors not orthonormal"});
    }

    if (distance(src.position, scene.receiver.position) <= 1e-6)
        report.violations.push_back({"scene", "source coincides with receiver"});
    if (!(scene.speed_of_sound > 0.0))
        report.violations.push_back({"scene", "speed of sound must be positive"});
    for (double a : scene.air_absorption_db_per_m)
        if (!(std::isfinite(a) && a >= 0.0)) {
            report.violations.push_back({"scene", "air absorption must be finite and >= 0"});
            break;
        }

    return report;
}

// ---------------------------------------------------------------------------
// Coupled-box mesh

namespace {

struct Rect2 {
    double u0, u1, v0, v1;
    bool covers(double mu, double mv) const { return mu > u0 && mu < u1 && mv > v0 && mv < v1; }
    bool empty() const { return u1 - u0 <= 1e-12 || v1 - v0 <= 1e-12; }
};

Vec3 point_on_plane(int axis, double w, double u, double v) {
    // in-plane axes are (axis+1)%3 and (axis+2)%3
    Vec3 p;
    double* c = &p.x;
    c[axis] = w;
    c[(axis + 1) % 3] = u;
    c[(axis + 2) % 3] = v;
    return p;
}

std::vector<double> breaks_in_range(const std::vector<double>& all, double lo, double hi) {
    std::vector<double> out{lo};
    for (double b : all)
        if (b > lo + 1e-12 && b < hi - 1e-12) out.push_back(b);
    out.push_back(hi);
    std::sort(out.begin(), out.end());
    return out;
}

// Tessellates one axis-aligned face into grid cells, skipping cells inside
// `hole`. `normal_sign` orients the winding along +axis or -axis.
void emit_face(Mesh& mesh, int axis, double w, double u_lo, double u_hi, double v_lo,
               double v_hi, int normal_sign, const std::vector<double>& u_breaks,
               const std::vector<double>& v_breaks, const Rect2* hole,
               const std::string& material) {
    const auto us = breaks_in_range(u_breaks, u_lo, u_hi);
    const auto vs = breaks_in_range(v_breaks, v_lo, v_hi);
    for (std::size_t i = 0; i + 1 < us.size(); ++i) {
        for (std::size_t j = 0; j + 1 < vs.size(); ++j) {
            const double mu = 0.5 * (us[i] + us[i + 1]);
            const double mv = 0.5 * (vs[j] + vs[j + 1]);
            if (hole && hole->covers(mu, mv)) continue;
            const Vec3 p00 = point_on_plane(axis, w, us[i], vs[j]);
            const Vec3 p10 = point_on_plane(axis, w, us[i + 1], vs[j]);
            const Vec3 p11 = point_on_plane(axis, w, us[i + 1], vs[j + 1]);
            const Vec3 p01 = point_on_plane(axis, w, us[i], vs[j + 1]);
            if (normal_sign > 0) {
                mesh.triangles.push_back({p00, p10, p11, material});
                mesh.triangles.push_back({p00, p11, p01, material});
            } else {
                mesh.triangles.push_back({p00, p01, p11, material});
                mesh.triangles.push_back({p00, p11, p10, material});
            }
        }
    }
}

} // namespace

Mesh make_coupled_box_mesh(const Vec3& stage_min, const Vec3& stage_max, const Vec3& hall_min,
                           const Vec3& hall_max, const std::string& stage_material,
                           const std::string& hall_material,
                           const std::string& floor_material) {
    if (std::abs(stage_max.y - hall_min.y) > 1e-12)
        throw std::invalid_argument("coupled boxes must share the plane y = const");

    const Rect2 opening{std::max(stage_min.x, hall_min.x), std::min(stage_max.x, hall_max.x),
                        std::max(stage_min.z, hall_min.z), std::min(stage_max.z, hall_max.z)};
    if (opening.empty())
        throw std::invalid_argument("coupled boxes do not overlap on the shared plane");

    const std::vector<double> xb{stage_min.x, stage_max.x, hall_min.x, hall_max.x};
    const std::vector<double> yb{stage_min.y, stage_max.y, hall_max.y};
    const std::vector<double> zb{stage_min.z, stage_max.z, hall_min.z, hall_max.z};

    Mesh mesh;
    // stage box: interface face at y = stage_max.y, inward normal -y
    emit_face(mesh, 0, stage_min.x, stage_min.y, stage_max.y, stage_min.z, stage_max.z, +1, yb,
              zb, nullptr, stage_material);
    emit_face(mesh, 0, stage_max.x, stage_min.y, stage_max.y, stage_min.z, stage_max.z, -1, yb,
              zb, nullptr, stage_material);
    emit_face(mesh, 1, stage_min.y, stage_min.z, stage_max.z, stage_min.x, stage_max.x, +1, zb,
              xb, nullptr, stage_material);
    {
        const Rect2 hole_zx{opening.v0, opening.v1, opening.u0, opening.u1};
        emit_face(mesh, 1, stage_max.y, stage_min.z, stage_max.z, stage_min.x, stage_max.x, -1,
                  zb, xb, &hole_zx, stage_material);
    }
    emit_face(mesh, 2, stage_min.z, stage_min.x, stage_max.x, stage_min.y, stage_max.y, +1, xb,
              yb, nullptr, stage_material);
    emit_face(mesh, 2, stage_max.z, stage_min.x, stage_max.x, stage_min.y, stage_max.y, -1, xb,
              yb, nullptr, stage_material);

    // hall box: interface face at y = hall_min.y, inward normal +y
    emit_face(mesh, 0, hall_min.x, hall_min.y, hall_max.y, hall_min.z, hall_max.z, +1, yb, zb,
              nullptr, hall_material);
    emit_face(mesh, 0, hall_max.x, hall_min.y, hall_max.y, hall_min.z, hall_max.z, -1, yb, zb,
              nullptr, hall_material);
    {
        const Rect2 hole_zx{opening.v0, opening.v1, opening.u0, opening.u1};
        emit_face(mesh, 1, hall_min.y, hall_min.z, hall_max.z, hall_min.x, hall_max.x, +1, zb,
                  xb, &hole_zx, hall_material);
    }
    emit_face(mesh, 1, hall_max.y, hall_min.z, hall_max.z, hall_min.x, hall_max.x, -1, zb, xb,
              nullptr, hall_material);
    emit_face(mesh, 2, hall_min.z, hall_min.x, hall_max.x, hall_min.y, hall_max.y, +1, xb, yb,
              nullptr, floor_material);
    emit_face(mesh, 2, hall_max.z, hall_min.x, hall_max.x, hall_min.y, hall_max.y, -1, xb, yb,
              nullptr, hall_material);
    return mesh;
}

// ---------------------------------------------------------------------------
// Presets

ScenePreset preset_from_name(const std::string& name) {
    if (name == "anechoic") return ScenePreset::anechoic;
    if (name == "booth1") return ScenePreset::booth1;
    if (name == "booth2") return ScenePreset::booth2;
    if (name == "stage_small") return ScenePreset::stage_small;
    if (name == "stage_large") return ScenePreset::stage_large;
    throw std::invalid_argument("unknown preset '" + name + "'");
}

std::string preset_name(ScenePreset preset) {
    switch (preset) {
    case ScenePreset::anechoic: return "anechoic";
    case ScenePreset::booth1: return "booth1";
    case ScenePreset::booth2: return "booth2";
    case ScenePreset::stage_small: return "stage_small";
    case ScenePreset::stage_large: return "stage_large";
    }
    throw std::invalid_argument("unknown preset");
}

namespace {

// The player stands at the room/stage centre; the receiver sits 0.45 m behind
// the source at ear height, facing the length axis. 0.45 m is a typical
// instrument-to-ear distance; placing the receiver much closer makes the
// direct path drown out every room contribution.
constexpr double kSourceHeight = 1.5;
constexpr double kEarSetback = 0.45;

Scene lab_room(double width, double length, double height, double alpha) {
    Scene scene;
    Shoebox box;
    box.width = width;
    box.length = length;
    box.height = height;
    scene.room = box;
    scene.materials["walls"] = Material::uniform(alpha, 0.0);
    scene.source.position = {width / 2.0, length / 2.0, kSourceHeight};
    scene.receiver.position = {width / 2.0, length / 2.0 - kEarSetback, kSourceHeight};
    return scene;
}

Scene stage_scene(double stage_width, double stage_height) {
    constexpr double stage_depth = 10.0;
    constexpr double hall_length = 41.5;
    constexpr double hall_width = 23.0;
    constexpr double hall_height = 19.0;

    const double x0 = (hall_width - stage_width) / 2.0;
    Scene scene;
    scene.room = make_coupled_box_mesh({x0, -stage_depth, 0.0},
                                       {x0 + stage_width, 0.0, stage_height},
                                       {0.0, 0.0, 0.0}, {hall_width, hall_length, hall_height},
                                       "walls", "walls", "audience");
    scene.materials["walls"] = Material::uniform(0.20, 0.10);
    scene.materials["audience"] = Material::uniform(0.80, 0.70);
    scene.source.position = {hall_width / 2.0, -stage_depth / 2.0, kSourceHeight};
    scene.receiver.position = {hall_width / 2.0, -stage_depth / 2.0 - kEarSetback,
                               kSourceHeight};
    return scene;
}

} // namespace

Scene preset_scene(ScenePreset preset) {
    switch (preset) {
    case ScenePreset::anechoic: return lab_room(3.5, 4.5, 2.5, 0.99);
    case ScenePreset::booth1: return lab_room(2.0, 2.0, 2.0, 0.50);
    case ScenePreset::booth2: return lab_room(2.1, 3.0, 2.5, 0.97);
    case ScenePreset::stage_small: return stage_scene(12.0, 6.0);
    case ScenePreset::stage_large: return stage_scene(24.0, 12.0);
    }
    throw std::invalid_argument("unknown preset");
}

Scene preset_scene(const std::string& name) { return preset_scene(preset_from_name(name)); }

// ---------------------------------------------------------------------------
// Sabine

double sabine_rt(const Scene& scene, std::size_t band) {
    if (band >= kNumBands) throw std::invalid_argument("sabine_rt: band out of range");
    double absorption_area = 0.0;
    if (scene.is_shoebox()) {
        const auto& box = scene.shoebox();
        const double areas[6] = {box.length * box.height, box.length * box.height,
                                 box.width * box.height,  box.width * box.height,
                                 box.width * box.length,  box.width * box.length};
        for (int w = 0; w < 6; ++w)
            absorption_area += areas[w] * scene.material(box.wall_materials[w]).absorption[band];
    } else {
        for (const auto& t : scene.mesh().triangles)
            absorption_area += t.area() * scene.material(t.material).absorption[band];
    }
    if (absorption_area <= 0.0)
        throw std::invalid_argument("sabine_rt: no absorbing surface in band " +
                                    std::to_string(band));
    return 0.161 * scene.room_volume() / absorption_area;
}

// ---------------------------------------------------------------------------
// Text format

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt_vec(const Vec3& v) {
    return fmt_double(v.x) + "," + fmt_double(v.y) + "," + fmt_double(v.z);
}

std::string fmt_bands(const BandArray& b) {
    std::string out;
    for (std::size_t i = 0; i < kNumBands; ++i) {
        if (i) out += ",";
        out += fmt_double(b[i]);
    }
    return out;
}

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

[[noreturn]] void parse_fail(int line, const std::string& message) {
    throw std::runtime_error("scene parse: line " + std::to_string(line) + ": " + message);
}

double parse_double(const std::string& s, int line) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) parse_fail(line, "trailing characters in number '" + s + "'");
        return v;
    } catch (const std::invalid_argument&) {
        parse_fail(line, "not a number: '" + s + "'");
    } catch (const std::out_of_range&) {
        parse_fail(line, "number out of range: '" + s + "'");
    }
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
        if (ch == sep) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += ch;
        }
    }
    out.push_back(trim(cur));
    return out;
}

Vec3 parse_vec(const std::string& s, int line) {
    const auto parts = split(s, ',');
    if (parts.size() != 3) parse_fail(line, "expected 3 comma-separated values");
    return {parse_double(parts[0], line), parse_double(parts[1], line),
            parse_double(parts[2], line)};
}

BandArray parse_bands(const std::string& s, int line) {
    const auto parts = split(s, ',');
    if (parts.size() != kNumBands)
        parse_fail(line, "expected " + std::to_string(kNumBands) + " band values");
    BandArray out{};
    for (std::size_t i = 0; i < kNumBands; ++i) out[i] = parse_double(parts[i], line);
    return out;
}

std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream iss(s);
    std::string tok;
    while (iss >> tok) out.push_back(tok);
    return out;
}

} // namespace

std::string emit_scene_text(const Scene& scene) {
    std::string out = "# auralab scene\n";
    out += "speed_of_sound = " + fmt_double(scene.speed_of_sound) + "\n";
    out += "air_absorption = " + fmt_bands(scene.air_absorption_db_per_m) + "\n\n";

    out += "[room]\n";
    if (scene.is_shoebox()) {
        const auto& box = scene.shoebox();
        out += "type = shoebox\n";
        out += "size = " + fmt_double(box.width) + "," + fmt_double(box.length) + "," +
               fmt_double(box.height) + "\n";
        out += "materials = ";
        for (int w = 0; w < 6; ++w) out += (w ? "," : "") + box.wall_materials[w];
        out += "\n";
    } else {
        out += "type = mesh\n";
        for (const auto& t : scene.mesh().triangles)
            out += "triangle = " + fmt_vec(t.a) + " " + fmt_vec(t.b) + " " + fmt_vec(t.c) + " " +
                   t.material + "\n";
    }

    for (const auto& [id, m] : scene.materials) {
        out += "\n[material " + id + "]\n";
        out += "absorption = " + fmt_bands(m.absorption) + "\n";
        out += "scattering = " + fmt_bands(m.scattering) + "\n";
    }

    out += "\n[source]\n";
    out += "position = " + fmt_vec(scene.source.position) + "\n";
    const auto& dir = scene.source.directivity;
    if (dir.is_omni() && dir.n_azimuth == 1 && dir.n_elevation == 1) {
        out += "directivity = omni\n";
    } else {
        out += "directivity = grid " + std::to_string(dir.n_azimuth) + "," +
               std::to_string(dir.n_elevation) + "\n";
        for (const auto& cell : dir.gains) out += "gains = " + fmt_bands(cell) + "\n";
    }

    out += "\n[receiver]\n";
    out += "position = " + fmt_vec(scene.receiver.position) + "\n";
    out += "look = " + fmt_vec(scene.receiver.look) + "\n";
    out += "up = " + fmt_vec(scene.receiver.up) + "\n";
    if (scene.receiver.hrtf.kind == HrtfRef::Kind::parametric)
        out += "hrtf = parametric " + fmt_double(scene.receiver.hrtf.head_radius) + "\n";
    else
        out += "hrtf = grid " + scene.receiver.hrtf.grid_path + "\n";
    return out;
}

Scene parse_scene_text(std::istream& in) {
    Scene scene;
    scene.materials.clear();

    enum class Section { global, room, material, source, receiver };
    Section section = Section::global;
    std::string material_id;
    bool room_is_mesh = false;
    Mesh mesh;
    Shoebox box;
    bool saw_room_type = false;
    std::size_t pending_gain_cells = 0;
    std::vector<BandArray> gain_cells;

    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') parse_fail(line_no, "unterminated section header");
            const std::string header = trim(line.substr(1, line.size() - 2));
            if (header == "room") {
                section = Section::room;
            } else if (header == "source") {
                section = Section::source;
            } else if (header == "receiver") {
                section = Section::receiver;
            } else if (header.rfind("material", 0) == 0) {
                section = Section::material;
                material_id = trim(header.substr(8));
                if (material_id.empty()) parse_fail(line_no, "material section needs an id");
                scene.materials[material_id]; // create
            } else {
                parse_fail(line_no, "unknown section [" + header + "]");
            }
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string::npos) parse_fail(line_no, "expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));

        switch (section) {
        case Section::global:
            if (key == "speed_of_sound")
                scene.speed_of_sound = parse_double(value, line_no);
            else if (key == "air_absorption")
                scene.air_absorption_db_per_m = parse_bands(value, line_no);
            else
                parse_fail(line_no, "unknown global key '" + key + "'");
            break;
        case Section::room:
            if (key == "type") {
                saw_room_type = true;
                if (value == "shoebox")
                    room_is_mesh = false;
                else if (value == "mesh")
                    room_is_mesh = true;
                else
                    parse_fail(line_no, "unknown room type '" + value + "'");
            } else if (key == "size") {
                const Vec3 v = parse_vec(value, line_no);
                box.width = v.x;
                box.length = v.y;
                box.height = v.z;
            } else if (key == "material") {
                box.wall_materials.fill(value);
            } else if (key == "materials") {
                const auto parts = split(value, ',');
                if (parts.size() != 6) parse_fail(line_no, "expected 6 wall material ids");
                for (int w = 0; w < 6; ++w) box.wall_materials[w] = parts[w];
            } else if (key == "triangle") {
                const auto toks = split_ws(value);
                if (toks.size() != 4)
                    parse_fail(line_no, "triangle needs 3 vertices and a material id");
                mesh.triangles.push_back({parse_vec(toks[0], line_no),
                                          parse_vec(toks[1], line_no),
                                          parse_vec(toks[2], line_no), toks[3]});
            } else {
                parse_fail(line_no, "unknown room key '" + key + "'");
            }
            break;
        case Section::material:
            if (key == "absorption")
                scene.materials[material_id].absorption = parse_bands(value, line_no);
            else if (key == "scattering")
                scene.materials[material_id].scattering = parse_bands(value, line_no);
            else
                parse_fail(line_no, "unknown material key '" + key + "'");
            break;
        case Section::source:
            if (key == "position") {
                scene.source.position = parse_vec(value, line_no);
            } else if (key == "directivity") {
                if (value == "omni") {
                    scene.source.directivity = Directivity::omni();
                } else if (value.rfind("grid", 0) == 0) {
                    const auto parts = split(trim(value.substr(4)), ',');
                    if (parts.size() != 2) parse_fail(line_no, "directivity grid needs n_az,n_el");
                    auto& d = scene.source.directivity;
                    d.n_azimuth = static_cast<std::size_t>(parse_double(parts[0], line_no));
                    d.n_elevation = static_cast<std::size_t>(parse_double(parts[1], line_no));
                    if (d.n_azimuth == 0 || d.n_elevation == 0)
                        parse_fail(line_no, "directivity grid must be at least 1x1");
                    pending_gain_cells = d.n_azimuth * d.n_elevation;
                    gain_cells.clear();
                } else {
                    parse_fail(line_no, "unknown directivity '" + value + "'");
                }
            } else if (key == "gains") {
                if (pending_gain_cells == 0) parse_fail(line_no, "gains outside a directivity grid");
                gain_cells.push_back(parse_bands(value, line_no));
                if (gain_cells.size() == pending_gain_cells) {
                    scene.source.directivity.gains = gain_cells;
                    pending_gain_cells = 0;
                }
            } else {
                parse_fail(line_no, "unknown source key '" + key + "'");
            }
            break;
        case Section::receiver:
            if (key == "position")
                scene.receiver.position = parse_vec(value, line_no);
            else if (key == "look")
                scene.receiver.look = parse_vec(value, line_no);
            else if (key == "up")
                scene.receiver.up = parse_vec(value, line_no);
            else if (key == "hrtf") {
                const auto toks = split_ws(value);
                if (toks.empty()) parse_fail(line_no, "empty hrtf value");
                if (toks[0] == "parametric") {
                    scene.receiver.hrtf.kind = HrtfRef::Kind::parametric;
                    if (toks.size() > 1)
                        scene.receiver.hrtf.head_radius = parse_double(toks[1], line_no);
                } else if (toks[0] == "grid") {
                    if (toks.size() != 2) parse_fail(line_no, "hrtf grid needs a path");
                    scene.receiver.hrtf.kind = HrtfRef::Kind::grid;
                    scene.receiver.hrtf.grid_path = toks[1];
                } else {
                    parse_fail(line_no, "unknown hrtf '" + toks[0] + "'");
                }
            } else {
                parse_fail(line_no, "unknown receiver key '" + key + "'");
            }
            break;
        }
    }
    if (pending_gain_cells != 0)
        throw std::runtime_error("scene parse: directivity grid given fewer gains lines "
                                 "than cells");
    if (!saw_room_type) throw std::runtime_error("scene parse: missing [room] type");
    if (room_is_mesh)
        scene.room = std::move(mesh);
    else
        scene.room = box;
    return scene;
}

Scene parse_scene_text(const std::string& text) {
    std::istringstream iss(text);
    return parse_scene_text(iss);
}

Scene load_scene_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open scene file '" + path + "'");
    return parse_scene_text(in);
}

void save_scene_file(const Scene& scene, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write scene file '" + path + "'");
    out << emit_scene_text(scene);
}

Scene resolve_scene(const std::string& name_or_path) {
    std::string name = name_or_path;
    if (name.rfind("preset:", 0) == 0) name = name.substr(7);
    for (const char* p : {"anechoic", "booth1", "booth2", "stage_small", "stage_large"})
        if (name == p) return preset_scene(name);
    return load_scene_file(name_or_path);
}

} // namespace auralab
