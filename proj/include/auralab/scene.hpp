#pragma once

#include <array>
#include <iosfwd>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "auralab/bands.hpp"
#include "auralab/vec3.hpp"

namespace auralab {

// Per-band surface description. Coefficients are energy fractions in [0,1].
struct Material {
    BandArray absorption{};
    BandArray scattering{};

    static Material uniform(double alpha, double scatter) {
        return {uniform_bands(alpha), uniform_bands(scatter)};
    }
    bool operator==(const Material&) const = default;
};

// Axis-aligned box spanning [0,width] x [0,length] x [0,height].
// Wall order: x=0, x=width, y=0, y=length, z=0, z=height.
struct Shoebox {
    double width = 0.0;
    double length = 0.0;
    double height = 0.0;
    std::array<std::string, 6> wall_materials{"walls", "walls", "walls",
                                              "walls", "walls", "walls"};

    double volume() const { return width * length * height; }
    double dimension(int axis) const { return axis == 0 ? width : axis == 1 ? length : height; }
    bool contains(const Vec3& p, double margin = 0.0) const {
        return p.x > margin && p.x < width - margin && p.y > margin && p.y < length - margin &&
               p.z > margin && p.z < height - margin;
    }
    bool operator==(const Shoebox&) const = default;
};

// Triangle normal comes from the winding (right-hand rule on a,b,c) and must
// face the air volume of the room.
struct Triangle {
    Vec3 a, b, c;
    std::string material;

    Vec3 geometric_normal() const { return (b - a).cross(c - a); }
    Vec3 unit_normal() const { return geometric_normal().normalized(); }
    double area() const { return 0.5 * geometric_normal().norm(); }
    bool operator==(const Triangle&) const = default;
};

struct Mesh {
    std::vector<Triangle> triangles;

    // Enclosed air volume. Positive when the winding convention is respected
    // (normals into the air).
    double volume() const;
    bool contains(const Vec3& p) const;
    bool operator==(const Mesh&) const = default;
};

using RoomGeometry = std::variant<Shoebox, Mesh>;

// Sampled gain grid over (azimuth, elevation, band). Azimuth is measured in
// the world XY plane from +X toward +Y, elevation from the XY plane toward
// +Z. A 1x1 grid of ones is the omnidirectional default.
struct Directivity {
    std::size_t n_azimuth = 1;
    std::size_t n_elevation = 1;
    std::vector<BandArray> gains{uniform_bands(1.0)}; // row-major (el, az)

    static Directivity omni() { return {}; }
    bool is_omni() const;

    double gain(const Vec3& direction, std::size_t band) const;
    const BandArray& gains_toward(const Vec3& direction) const;
    bool operator==(const Directivity&) const = default;
};

// Pressure amplitudes are normalized to a unit-amplitude free field at 1 m.
struct SourceSpec {
    Vec3 position;
    Directivity directivity = Directivity::omni();
    bool operator==(const SourceSpec&) const = default;
};

struct HrtfRef {
    enum class Kind { parametric, grid };
    Kind kind = Kind::parametric;
    double head_radius = 0.0875; // meters, parametric model only
    std::string grid_path;       // grid files only
    bool operator==(const HrtfRef&) const = default;
};

struct ReceiverSpec {
    Vec3 position;
    Vec3 look{0.0, 1.0, 0.0};
    Vec3 up{0.0, 0.0, 1.0};
    HrtfRef hrtf;
    bool operator==(const ReceiverSpec&) const = default;
};

struct Scene {
    RoomGeometry room = Shoebox{};
    std::map<std::string, Material> materials;
    SourceSpec source;
    ReceiverSpec receiver;
    double speed_of_sound = 343.0;
    BandArray air_absorption_db_per_m{}; // defaults to zero

    bool is_shoebox() const { return std::holds_alternative<Shoebox>(room); }
    const Shoebox& shoebox() const { return std::get<Shoebox>(room); }
    const Mesh& mesh() const { return std::get<Mesh>(room); }

    double room_volume() const;
    bool room_contains(const Vec3& p) const;
    const Material& material(const std::string& id) const;
    bool operator==(const Scene&) const = default;
};

struct Violation {
    std::string location;
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool valid() const { return violations.empty(); }
};

ValidationReport validate_scene(const Scene& scene);

enum class ScenePreset { anechoic, booth1, booth2, stage_small, stage_large };

ScenePreset preset_from_name(const std::string& name);
std::string preset_name(ScenePreset preset);
Scene preset_scene(ScenePreset preset);
Scene preset_scene(const std::string& name);

// Sabine reverberation time 0.161 V / sum(S_i alpha_i) for one octave band.
// Throws when the room absorbs nothing in that band.
double sabine_rt(const Scene& scene, std::size_t band);

// Two axis-aligned boxes joined through a rectangular opening in their shared
// wall plane. Faces are tessellated on a common grid so the result is
// watertight. `audience_material` is applied to the floor of the main box.
Mesh make_coupled_box_mesh(const Vec3& stage_min, const Vec3& stage_max, const Vec3& hall_min,
                           const Vec3& hall_max, const std::string& stage_material,
                           const std::string& hall_material, const std::string& floor_material);

// Line-oriented scene text format: `key = value` entries grouped under
// [room], [material <id>], [source] and [receiver] sections; `#` comments.
Scene parse_scene_text(std::istream& in);
Scene parse_scene_text(const std::string& text);
Scene load_scene_file(const std::string& path);
std::string emit_scene_text(const Scene& scene);
void save_scene_file(const Scene& scene, const std::string& path);

// Resolves "preset:<name>" or a preset name to a built-in scene, anything
// else to a scene file path.
Scene resolve_scene(const std::string& name_or_path);

} // namespace auralab
