#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "foliascan/image.hpp"
#include "foliascan/mesh.hpp"

namespace foliascan::light {

/// Rectified stereo pair with horizontal epipolar lines. The right camera sits
/// at +baseline along the left camera's x axis, so disparity = x_L - x_R >= 0.
struct StereoRig {
  int width = 256;
  int height = 192;
  double f = 500.0;   // px
  double cx = 127.5;  // px
  double cy = 95.5;   // px
  double baseline = 0.05;  // m

  /// Throws InvalidInput unless f > 0, baseline > 0, width and height >= 8.
  void validate() const;

  /// Rig with the principal point at the image centre.
  static StereoRig centered(int width, int height, double f, double baseline);
};

/// Projected pattern images or captured camera images of them.
struct PatternStack {
  int n_bits = 0;
  std::vector<Image<float>> bit_planes;  // MSB first
  Image<float> white_ref;
  Image<float> black_ref;

  int width() const { return white_ref.width; }
  int height() const { return white_ref.height; }
};

struct BinaryStack {
  std::vector<Mask> planes;  // MSB first, values 0/1
  Mask valid;
};

struct CodeImage {
  Image<std::uint32_t> codes;
  Mask valid;
};

/// Per-pixel scalar (disparity in px or depth in m) with a validity mask.
struct ScalarMap {
  Image<double> values;
  Mask valid;

  int width() const { return values.width; }
  int height() const { return values.height; }
};

using DisparityMap = ScalarMap;
using DepthMap = ScalarMap;

struct ScenePlane {
  Vec3 point = Vec3(0.0, 0.0, 1.5);
  Vec3 normal = Vec3(0.0, 0.0, -1.0);
};

struct SceneSphere {
  Vec3 center = Vec3(0.0, 0.0, 1.5);
  double radius = 0.2;
};

/// Analytic scene in left-camera coordinates (x right, y down, z forward).
struct SceneDescriptor {
  std::string kind = "plane";  // plane | sphere | two_sphere
  std::optional<ScenePlane> plane;
  std::vector<SceneSphere> spheres;

  /// Nearest positive ray parameter along origin + t * direction.
  std::optional<double> intersect(const Vec3& origin, const Vec3& direction) const;

  /// Throws InvalidScene when the descriptor is inconsistent with its kind.
  void validate() const;
};

struct DepthScene {
  SceneDescriptor descriptor;
  DepthMap depth;  // ground-truth left-camera depth
};

/// Renders the ground-truth left depth map of a scene. Throws InvalidScene.
DepthScene render_scene(const SceneDescriptor& descriptor, const StereoRig& rig);

/// gray(c) = c ^ (c >> 1).
constexpr std::uint32_t gray_encode(std::uint32_t c) { return c ^ (c >> 1); }

/// Inverse of gray_encode.
constexpr std::uint32_t gray_decode(std::uint32_t g) {
  std::uint32_t b = g;
  for (std::uint32_t shift = 1; shift < 32; shift <<= 1) b ^= b >> shift;
  return b;
}

/// ceil(log2(width)), at least 1.
int default_bit_count(int width);

/// Vertical-stripe Gray-code planes: column c of plane k is bit k (MSB first)
/// of gray(c). Throws InsufficientBits when 2^n_bits < width.
PatternStack generate_gray_patterns(int width, int height, int n_bits);

/// Ground-truth disparity f * B / Z of the scene on left pixels.
DisparityMap ground_truth_disparity(const DepthScene& scene, const StereoRig& rig);

struct StereoCapture {
  PatternStack left;
  PatternStack right;
  Mask right_valid;  // right pixels that see a projector-lit surface point
};

/// Geometric projector simulation with the projector collocated with the left
/// camera. Right pixels ray-cast the scene and take the codeword of the left
/// column they correspond to (nearest pixel); shadowed or out-of-frame right
/// pixels stay dark.
StereoCapture simulate_capture(const DepthScene& scene, const StereoRig& rig, const PatternStack& patterns);

/// I -> clamp(alpha * I + beta, 0, 1) on every plane and both references.
PatternStack perturb_images(const PatternStack& stack, double alpha, double beta);

inline constexpr double kDefaultContrastFloor = 0.05;

/// bit = I > (white + black) / 2; invalid where white - black < contrast_floor.
BinaryStack binarize_stack(const PatternStack& stack, double contrast_floor = kDefaultContrastFloor);

/// Inverse-Gray decode of MSB-first planes.
CodeImage decode_codewords(const BinaryStack& bits);

struct MatchOptions {
  int window = 3;     // odd
  int d_max = -1;     // px; -1 selects width / 4
  double mismatch_ceiling = 0.25;  // fraction of window bits
  int n_bits = 0;     // 0 selects default_bit_count(width)
  /// Keep a left match only if the right pixel's own best match points back
  /// within one pixel. Rejects left pixels whose partner is out of frame.
  bool left_right_check = true;
};

/// Windowed Hamming cost over the Gray codeword bits along rows; parabolic
/// sub-pixel refinement.
DisparityMap match_disparity(const CodeImage& left, const CodeImage& right, const MatchOptions& options = {});

/// Z = f * B / disparity for valid disparities > 0.
DepthMap disparity_to_depth(const DisparityMap& disparity, const StereoRig& rig);

/// disparity = f * B / Z for valid depths > 0.
DisparityMap depth_to_disparity(const DepthMap& depth, const StereoRig& rig);

struct MeshingOptions {
  int stride = 1;
  /// Cells whose corner depths differ by more than this fraction of the
  /// smallest corner depth are skipped.
  double jump_ratio = 0.05;
};

/// Pinhole back-projection and grid triangulation. Valid cells are pruned to
/// a single disk-shaped patch (largest component, no corner-only contacts, holes
/// cut open to the border). Faces are oriented toward the camera. Throws TooFewPoints.
TriangleMesh depth_to_mesh(const DepthMap& depth, const StereoRig& rig, const MeshingOptions& options = {});

/// Back-projection of pixel (x, y) at depth z.
Vec3 back_project(const StereoRig& rig, double x, double y, double z);

struct DisparityError {
  double mae = 0.0;
  double valid_fraction = 0.0;  // pixels valid in both / all pixels
  std::size_t count = 0;
};

/// Mean |estimate - truth| over pixels valid in both. Throws EmptyOverlap.
DisparityError disparity_mae(const DisparityMap& estimate, const DisparityMap& truth);

}  // namespace foliascan::light
