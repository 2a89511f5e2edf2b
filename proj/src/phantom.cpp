#include "drillsim/phantom.hpp"

#include "drillsim/error.hpp"
#include "drillsim/scene.hpp"
#include "drillsim/trajectory.hpp"

#include <cmath>
#include <fstream>
#include <random>

namespace drillsim {

namespace {

struct LabelDef {
  std::uint8_t id;
  const char* anatomy;
  Rgb8 color;
};

constexpr LabelDef kLabels[] = {
    {phantom_labels::kBone, "bone", {227, 218, 201}},
    {phantom_labels::kNerve, "facial_nerve", {255, 215, 0}},
    {phantom_labels::kCochlea, "cochlea", {255, 105, 180}},
    {phantom_labels::kSinus, "sigmoid_sinus", {65, 105, 225}},
};

double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

VoxelVolume make_phantom_volume(const PhantomOptions& opts) {
  if (opts.size < 8 || !(opts.spacing > 0.0)) throw Error(ErrorCode::InvalidArgument, "phantom size must be >= 8");
  const int n = opts.size;
  const double half = 0.5 * n * opts.spacing;
  VoxelVolume vol({n, n, n}, Vec3::Constant(opts.spacing), Pose::from_position(Vec3::Constant(-half)));
  for (const auto& l : kLabels) vol.set_label_info(l.id, {l.anatomy, l.color});

  std::mt19937_64 rng(opts.seed);
  struct Cell {
    Vec3 c;
    double r;
  };
  std::vector<Cell> cells;
  for (int i = 0; i < 6; ++i)
    cells.push_back({Vec3((0.15 + 0.7 * unit(rng)) * n, (0.15 + 0.7 * unit(rng)) * n, (0.1 + 0.3 * unit(rng)) * n),
                     (0.03 + 0.03 * unit(rng)) * n});

  const double N = n;
  for (int z = 0; z < n; ++z)
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x) {
        const double px = x + 0.5, py = y + 0.5, pz = z + 0.5;
        const double top = 0.55 * N + 0.04 * N * std::sin(2 * kPi * px / N) * std::cos(3 * kPi * py / N);
        if (pz > top) continue;
        std::uint8_t label = phantom_labels::kBone;
        const auto sq = [](double v) { return v * v; };
        if (sq(px - 0.35 * N) + sq(pz - 0.35 * N) < sq(0.04 * N)) label = phantom_labels::kNerve;
        if (sq(px - 0.65 * N) + sq(py - 0.5 * N) + sq(pz - 0.3 * N) < sq(0.08 * N)) label = phantom_labels::kCochlea;
        if (sq(py - 0.7 * N) + sq(pz - 0.25 * N) < sq(0.06 * N)) label = phantom_labels::kSinus;
        bool air = false;
        for (const auto& c : cells)
          if ((Vec3(px, py, pz) - c.c).squaredNorm() < c.r * c.r) air = true;
        if (air && label == phantom_labels::kBone) continue;
        vol.set_voxel(x, y, z, 255, label);
      }
  return vol;
}

std::filesystem::path write_phantom_scene(const std::filesystem::path& dir, const PhantomOptions& opts) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "slices");
  const VoxelVolume vol = make_phantom_volume(opts);
  const double ext = opts.size * opts.spacing;

  VolumeSource src;
  src.directory = fs::absolute(dir / "slices").lexically_normal();
  src.prefix = "slice_";
  src.count = opts.size;
  src.format = "png";
  src.spacing = vol.spacing();
  for (const auto& l : kLabels) src.label_map[color_hex(l.color)] = {l.id, l.anatomy};
  write_slice_stack(vol, src);

  SceneDescription scene;
  scene.gravity = Vec3(0, 0, -9.81);
  scene.world_styles.push_back({Scope::World, "segmentation_flat", {}});

  ObjectSpec cam;
  cam.name = "camera";
  cam.kind = ObjectKind::Camera;
  CameraSpec cs;
  cs.frustum = Frustum{0.05, 0.6, kPi / 4.0, 640, 480};
  cs.baseline = 0.065;
  cam.camera = cs;
  // looking down at the bone surface from above and slightly in front
  cam.pose = look_at(Vec3(0.0, -0.8 * ext, 1.6 * ext), Vec3::Zero(), Vec3::UnitZ());
  scene.objects[cam.name] = cam;

  ObjectSpec light;
  light.name = "light";
  light.kind = ObjectKind::Light;
  light.light = LightSpec{};
  scene.objects[light.name] = light;

  ObjectSpec patient;
  patient.name = "patient";
  patient.kind = ObjectKind::Volume;
  patient.model = "patient";
  patient.pose = vol.origin();
  patient.volume = src;
  scene.objects[patient.name] = patient;

  ObjectSpec drill;
  drill.name = "drill";
  drill.kind = ObjectKind::Actuator;
  drill.model = "drill";
  drill.pose = Pose::from_position(Vec3(0.3 * ext, 0.0, 0.5 * ext + 0.01));
  drill.body = BodyGeometry{BodyShape::Capsule, 0.0015, 0.08, {190, 190, 200}};
  drill.drill = DrillConfig{};
  drill.style = RenderStyleSpec{Scope::Object, "segmentation_flat", {{"label", std::to_string(phantom_labels::kDrill)}}};
  scene.objects[drill.name] = drill;

  scene.models.push_back({"patient", {"patient"}, {}, {}});
  scene.models.push_back({"drill", {"drill"}, {}, {}});
  scene.input_devices.push_back({"drill_input", "control_drill", "drill"});
  scene.input_devices.push_back({"camera_input", "control_camera", "camera"});
  scene.plugins.push_back({"frame_observer", Scope::Simulator, "", {}});
  resolve_styles(scene);
  return write_scene(scene, dir);
}

}  // namespace drillsim
