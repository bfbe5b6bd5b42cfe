#include "foliascan/structured_light.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>

#include "foliascan/error.hpp"

namespace foliascan::light {

namespace {

void check_same_size(int w0, int h0, int w1, int h1, const char* what) {
  if (w0 != w1 || h0 != h1) throw Error(ErrorCode::InvalidInput, std::string(what) + ": image sizes differ");
}

Vec3 pixel_ray(const StereoRig& rig, double x, double y) {
  return {(x - rig.cx) / rig.f, (y - rig.cy) / rig.f, 1.0};
}

}  // namespace

void StereoRig::validate() const {
  if (!(f > 0.0)) throw Error(ErrorCode::InvalidInput, "focal length must be positive");
  if (!(baseline > 0.0)) throw Error(ErrorCode::InvalidInput, "baseline must be positive");
  if (width < 8 || height < 8) throw Error(ErrorCode::InvalidInput, "image must be at least 8x8 pixels");
}

StereoRig StereoRig::centered(int width, int height, double f, double baseline) {
  StereoRig rig;
  rig.width = width;
  rig.height = height;
  rig.f = f;
  rig.cx = 0.5 * (width - 1);
  rig.cy = 0.5 * (height - 1);
  rig.baseline = baseline;
  return rig;
}

std::optional<double> SceneDescriptor::intersect(const Vec3& origin, const Vec3& direction) const {
  std::optional<double> best;
  auto consider = [&best](double t) {
    if (t > 1e-12 && (!best || t < *best)) best = t;
  };
  if (plane) {
    const double denom = plane->normal.dot(direction);
    if (std::abs(denom) > 1e-15) consider(plane->normal.dot(plane->point - origin) / denom);
  }
  for (const SceneSphere& s : spheres) {
    const Vec3 oc = origin - s.center;
    const double a = direction.squaredNorm();
    const double half_b = oc.dot(direction);
    const double c = oc.squaredNorm() - s.radius * s.radius;
    const double disc = half_b * half_b - a * c;
    if (disc < 0.0) continue;
    const double root = std::sqrt(disc);
    const double t0 = (-half_b - root) / a;
    const double t1 = (-half_b + root) / a;
    // Surfaces are seen from outside only; t1 is the exit point.
    if (t0 > 1e-12) {
      consider(t0);
    } else if (c > 0.0) {
      consider(t1);
    }
  }
  return best;
}

void SceneDescriptor::validate() const {
  for (const SceneSphere& s : spheres) {
    if (!(s.radius > 0.0)) throw Error(ErrorCode::InvalidScene, "sphere radius must be positive");
    if (!(s.center.z() > s.radius)) throw Error(ErrorCode::InvalidScene, "spheres must lie in front of the camera");
  }
  if (plane && !(plane->normal.norm() > 0.0)) throw Error(ErrorCode::InvalidScene, "plane normal is zero");
  if (kind == "plane") {
    if (!plane || !spheres.empty()) throw Error(ErrorCode::InvalidScene, "plane scene needs a plane and no spheres");
  } else if (kind == "sphere") {
    if (spheres.size() != 1) throw Error(ErrorCode::InvalidScene, "sphere scene needs exactly one sphere");
  } else if (kind == "two_sphere") {
    if (spheres.size() != 2) throw Error(ErrorCode::InvalidScene, "two_sphere scene needs exactly two spheres");
  } else {
    throw Error(ErrorCode::InvalidScene, "unknown scene kind '" + kind + "'");
  }
}

DepthScene render_scene(const SceneDescriptor& descriptor, const StereoRig& rig) {
  descriptor.validate();
  rig.validate();
  DepthScene scene;
  scene.descriptor = descriptor;
  scene.depth.values = Image<double>(rig.width, rig.height, 0.0);
  scene.depth.valid = Mask(rig.width, rig.height, 0);
  for (int y = 0; y < rig.height; ++y) {
    for (int x = 0; x < rig.width; ++x) {
      // Ray direction has unit z, so the ray parameter equals depth.
      const auto t = descriptor.intersect(Vec3::Zero(), pixel_ray(rig, x, y));
      if (t && std::isfinite(*t)) {
        scene.depth.values(x, y) = *t;
        scene.depth.valid(x, y) = 1;
      }
    }
  }
  return scene;
}

int default_bit_count(int width) {
  int bits = 1;
  while ((std::int64_t{1} << bits) < width) ++bits;
  return bits;
}

PatternStack generate_gray_patterns(int width, int height, int n_bits) {
  if (width < 1 || height < 1) throw Error(ErrorCode::InvalidInput, "pattern size must be positive");
  if (n_bits < 1 || n_bits > 31 || (std::int64_t{1} << n_bits) < width) {
    throw Error(ErrorCode::InsufficientBits, std::to_string(n_bits) + " bits cannot code " + std::to_string(width) + " columns");
  }
  PatternStack stack;
  stack.n_bits = n_bits;
  stack.white_ref = Image<float>(width, height, 1.0f);
  stack.black_ref = Image<float>(width, height, 0.0f);
  for (int k = 0; k < n_bits; ++k) {
    Image<float> plane(width, height, 0.0f);
    const int shift = n_bits - 1 - k;
    for (int x = 0; x < width; ++x) {
      const float bit = static_cast<float>((gray_encode(static_cast<std::uint32_t>(x)) >> shift) & 1u);
      for (int y = 0; y < height; ++y) plane(x, y) = bit;
    }
    stack.bit_planes.push_back(std::move(plane));
  }
  return stack;
}

DisparityMap ground_truth_disparity(const DepthScene& scene, const StereoRig& rig) {
  return depth_to_disparity(scene.depth, rig);
}

StereoCapture simulate_capture(const DepthScene& scene, const StereoRig& rig, const PatternStack& patterns) {
  rig.validate();
  if (scene.depth.width() != rig.width || scene.depth.height() != rig.height) {
    throw Error(ErrorCode::InvalidScene, "scene depth map does not match the rig");
  }
  if (patterns.width() != rig.width || patterns.height() != rig.height) {
    throw Error(ErrorCode::InvalidInput, "pattern size does not match the rig");
  }
  const int w = rig.width;
  const int h = rig.height;
  const int n = patterns.n_bits;

  auto blank = [&] {
    PatternStack s;
    s.n_bits = n;
    s.bit_planes.assign(static_cast<std::size_t>(n), Image<float>(w, h, 0.0f));
    s.white_ref = Image<float>(w, h, 0.0f);
    s.black_ref = Image<float>(w, h, 0.0f);
    return s;
  };
  StereoCapture cap{blank(), blank(), Mask(w, h, 0)};

  auto copy_column = [&](PatternStack& dst, int x_dst, int y, int column) {
    for (int k = 0; k < n; ++k) dst.bit_planes[static_cast<std::size_t>(k)](x_dst, y) = patterns.bit_planes[static_cast<std::size_t>(k)](column, y);
    dst.white_ref(x_dst, y) = patterns.white_ref(column, y);
    dst.black_ref(x_dst, y) = patterns.black_ref(column, y);
  };

  // Left camera sees the emitted pattern wherever a surface exists.
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (scene.depth.valid(x, y)) copy_column(cap.left, x, y, x);
    }
  }

  const Vec3 right_center(rig.baseline, 0.0, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto t = scene.descriptor.intersect(right_center, pixel_ray(rig, x, y));
      if (!t) continue;
      const Vec3 hit = right_center + *t * pixel_ray(rig, x, y);
      // Shadowed when the projector (left camera) ray reaches another surface first.
      const auto t_left = scene.descriptor.intersect(Vec3::Zero(), hit);
      if (!t_left || *t_left < 1.0 - 1e-9) continue;
      const double x_left = x + rig.f * rig.baseline / hit.z();
      const auto column = static_cast<int>(std::lround(x_left));
      if (column < 0 || column >= w) continue;
      copy_column(cap.right, x, y, column);
      cap.right_valid(x, y) = 1;
    }
  }
  return cap;
}

PatternStack perturb_images(const PatternStack& stack, double alpha, double beta) {
  if (!(alpha > 0.0)) throw Error(ErrorCode::InvalidInput, "gain must be positive");
  auto apply = [&](const Image<float>& in) {
    Image<float> out = in;
    for (float& v : out.data) v = static_cast<float>(std::clamp(alpha * v + beta, 0.0, 1.0));
    return out;
  };
  PatternStack out;
  out.n_bits = stack.n_bits;
  for (const auto& plane : stack.bit_planes) out.bit_planes.push_back(apply(plane));
  out.white_ref = apply(stack.white_ref);
  out.black_ref = apply(stack.black_ref);
  return out;
}

BinaryStack binarize_stack(const PatternStack& stack, double contrast_floor) {
  const int w = stack.width();
  const int h = stack.height();
  BinaryStack out;
  out.valid = Mask(w, h, 0);
  for (std::size_t i = 0; i < out.valid.size(); ++i) {
    out.valid.data[i] = (stack.white_ref.data[i] - stack.black_ref.data[i] >= contrast_floor) ? 1 : 0;
  }
  for (const auto& plane : stack.bit_planes) {
    check_same_size(plane.width, plane.height, w, h, "binarize_stack");
    Mask bits(w, h, 0);
    for (std::size_t i = 0; i < bits.size(); ++i) {
      const double threshold = 0.5 * (static_cast<double>(stack.white_ref.data[i]) + stack.black_ref.data[i]);
      bits.data[i] = (out.valid.data[i] && plane.data[i] > threshold) ? 1 : 0;
    }
    out.planes.push_back(std::move(bits));
  }
  return out;
}

CodeImage decode_codewords(const BinaryStack& bits) {
  const int w = bits.valid.width;
  const int h = bits.valid.height;
  CodeImage out{Image<std::uint32_t>(w, h, 0u), bits.valid};
  for (std::size_t i = 0; i < out.valid.size(); ++i) {
    if (!out.valid.data[i]) continue;
    // b_0 = g_0, b_k = b_{k-1} xor g_k, MSB first.
    std::uint32_t code = 0;
    std::uint32_t prev = 0;
    for (const Mask& plane : bits.planes) {
      prev ^= plane.data[i];
      code = (code << 1) | prev;
    }
    out.codes.data[i] = code;
  }
  return out;
}

namespace {

struct ShiftSearch {
  const CodeImage& ref;    // image the window is centred in
  const CodeImage& other;  // image searched along the row
  int direction;           // -1: other pixel at x - delta, +1: x + delta
  int half;
  double area;

  // Window Hamming cost over Gray codeword bits, normalised to a full window;
  // infinity when no pair of the window overlaps.
  double cost(int x, int y, int delta) const {
    const int w = ref.codes.width;
    const int h = ref.codes.height;
    int mismatched = 0;
    int pairs = 0;
    for (int dy = -half; dy <= half; ++dy) {
      const int yy = y + dy;
      if (yy < 0 || yy >= h) continue;
      for (int dx = -half; dx <= half; ++dx) {
        const int xa = x + dx;
        const int xb = xa + direction * delta;
        if (xa < 0 || xa >= w || xb < 0 || xb >= w) continue;
        if (!ref.valid(xa, yy) || !other.valid(xb, yy)) continue;
        mismatched += std::popcount(gray_encode(ref.codes(xa, yy)) ^ gray_encode(other.codes(xb, yy)));
        ++pairs;
      }
    }
    return pairs > 0 ? mismatched * area / pairs : std::numeric_limits<double>::infinity();
  }

  // Lowest-cost shift (ties to the smallest) with its cost vector, or -1.
  int best(int x, int y, int d_max, std::vector<double>& costs) const {
    int arg = -1;
    for (int delta = 0; delta <= d_max; ++delta) {
      const double c = cost(x, y, delta);
      costs[static_cast<std::size_t>(delta)] = c;
      if (std::isfinite(c) && (arg < 0 || c < costs[static_cast<std::size_t>(arg)])) arg = delta;
    }
    return arg;
  }
};

}  // namespace

DisparityMap match_disparity(const CodeImage& left, const CodeImage& right, const MatchOptions& options) {
  const int w = left.codes.width;
  const int h = left.codes.height;
  check_same_size(w, h, right.codes.width, right.codes.height, "match_disparity");
  if (options.window < 1 || options.window % 2 == 0) throw Error(ErrorCode::InvalidInput, "window must be odd and >= 1");
  const int d_max = options.d_max >= 0 ? options.d_max : w / 4;
  const int n_bits = options.n_bits > 0 ? options.n_bits : default_bit_count(w);
  const double area = static_cast<double>(options.window) * options.window;
  const double ceiling = options.mismatch_ceiling * n_bits * area;
  const ShiftSearch from_left{left, right, -1, options.window / 2, area};
  const ShiftSearch from_right{right, left, +1, options.window / 2, area};

  DisparityMap out{Image<double>(w, h, 0.0), Mask(w, h, 0)};
  std::vector<double> cost(static_cast<std::size_t>(d_max) + 1);
  std::vector<double> back(static_cast<std::size_t>(d_max) + 1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!left.valid(x, y)) continue;
      const int best = from_left.best(x, y, d_max, cost);
      if (best < 0 || cost[static_cast<std::size_t>(best)] > ceiling) continue;
      if (options.left_right_check) {
        const int xr = x - best;
        if (!right.valid(xr, y)) continue;
        const int reverse = from_right.best(xr, y, d_max, back);
        if (reverse < 0 || std::abs(reverse - best) > 1) continue;
      }

      double disparity = best;
      if (best > 0 && best < d_max) {
        const double cm = cost[static_cast<std::size_t>(best - 1)];
        const double c0 = cost[static_cast<std::size_t>(best)];
        const double cp = cost[static_cast<std::size_t>(best + 1)];
        const double curvature = cm - 2.0 * c0 + cp;
        if (std::isfinite(cm) && std::isfinite(cp) && curvature > 0.0) {
          disparity += std::clamp(0.5 * (cm - cp) / curvature, -0.5, 0.5);
        }
      }
      out.values(x, y) = disparity;
      out.valid(x, y) = 1;
    }
  }
  return out;
}

DepthMap disparity_to_depth(const DisparityMap& disparity, const StereoRig& rig) {
  DepthMap out{Image<double>(disparity.width(), disparity.height(), 0.0), Mask(disparity.width(), disparity.height(), 0)};
  const double fb = rig.f * rig.baseline;
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    const double d = disparity.values.data[i];
    if (disparity.valid.data[i] && d > 0.0 && std::isfinite(d)) {
      out.values.data[i] = fb / d;
      out.valid.data[i] = 1;
    }
  }
  return out;
}

DisparityMap depth_to_disparity(const DepthMap& depth, const StereoRig& rig) {
  // Same reciprocal relation in the other direction.
  return disparity_to_depth(depth, rig);
}

Vec3 back_project(const StereoRig& rig, double x, double y, double z) { return z * pixel_ray(rig, x, y); }

namespace {

// Cell (i, j) spans grid vertices (i..i+1, j..j+1). The selected cells are
// pruned until they form a single disk: one 4-connected component, no two
// cells meeting only at a corner, and no enclosed holes.
class CellRegion {
 public:
  CellRegion(int w, int h) : w_(w), h_(h), on_(w, h, 0) {}

  std::uint8_t& operator()(int i, int j) { return on_(i, j); }
  bool at(int i, int j) const { return i >= 0 && j >= 0 && i < w_ && j < h_ && on_(i, j); }
  bool empty() const { return std::none_of(on_.data.begin(), on_.data.end(), [](auto c) { return c != 0; }); }

  void make_disk() {
    for (bool changed = true; changed;) {
      keep_largest_component();
      changed = break_pinches();
      if (!changed) changed = open_holes();
    }
  }

 private:
  static constexpr int kDx[4] = {1, -1, 0, 0};
  static constexpr int kDy[4] = {0, 0, 1, -1};

  // Labels 4-connected components of cells whose state equals `value`; returns sizes.
  std::vector<std::size_t> label(std::uint8_t value, Image<int>& labels) const {
    labels = Image<int>(w_, h_, -1);
    std::vector<std::size_t> sizes;
    std::vector<std::pair<int, int>> stack;
    for (int j = 0; j < h_; ++j) {
      for (int i = 0; i < w_; ++i) {
        if (on_(i, j) != value || labels(i, j) >= 0) continue;
        const int id = static_cast<int>(sizes.size());
        sizes.push_back(0);
        labels(i, j) = id;
        stack.emplace_back(i, j);
        while (!stack.empty()) {
          const auto [x, y] = stack.back();
          stack.pop_back();
          ++sizes.back();
          for (int k = 0; k < 4; ++k) {
            const int nx = x + kDx[k], ny = y + kDy[k];
            if (nx < 0 || ny < 0 || nx >= w_ || ny >= h_ || on_(nx, ny) != value || labels(nx, ny) >= 0) continue;
            labels(nx, ny) = id;
            stack.emplace_back(nx, ny);
          }
        }
      }
    }
    return sizes;
  }

  void keep_largest_component() {
    Image<int> labels;
    const auto sizes = label(1, labels);
    if (sizes.empty()) return;
    const auto keep = static_cast<int>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
    for (std::size_t n = 0; n < on_.size(); ++n) {
      if (on_.data[n] && labels.data[n] != keep) on_.data[n] = 0;
    }
  }

  int neighbours(int i, int j) const {
    int n = 0;
    for (int k = 0; k < 4; ++k) n += at(i + kDx[k], j + kDy[k]);
    return n;
  }

  // A grid vertex whose only two incident cells are diagonal opposites.
  bool break_pinches() {
    bool changed = false;
    for (int j = 0; j <= h_; ++j) {
      for (int i = 0; i <= w_; ++i) {
        const bool a = at(i - 1, j - 1), b = at(i, j - 1), c = at(i - 1, j), d = at(i, j);
        if (a && d && !b && !c) {
          // Drop the less attached cell.
          if (neighbours(i - 1, j - 1) <= neighbours(i, j)) on_(i - 1, j - 1) = 0; else on_(i, j) = 0;
          changed = true;
        } else if (b && c && !a && !d) {
          if (neighbours(i, j - 1) <= neighbours(i - 1, j)) on_(i, j - 1) = 0; else on_(i - 1, j) = 0;
          changed = true;
        }
      }
    }
    return changed;
  }

  // Cuts a one-cell channel from every enclosed hole to the outside.
  bool open_holes() {
    Image<int> labels;
    const auto sizes = label(0, labels);
    std::vector<bool> outside(sizes.size(), false);
    for (int j = 0; j < h_; ++j) {
      for (int i = 0; i < w_; ++i) {
        if (labels(i, j) >= 0 && (i == 0 || j == 0 || i == w_ - 1 || j == h_ - 1)) outside[static_cast<std::size_t>(labels(i, j))] = true;
      }
    }
    bool changed = false;
    std::vector<bool> opened(sizes.size(), false);
    for (int j = 0; j < h_; ++j) {
      for (int i = 0; i < w_; ++i) {
        const int id = labels(i, j);
        if (id < 0 || outside[static_cast<std::size_t>(id)] || opened[static_cast<std::size_t>(id)]) continue;
        opened[static_cast<std::size_t>(id)] = true;
        // Topmost-leftmost hole cell: walk up to the region's outside.
        for (int y = j - 1; y >= 0 && on_(i, y); --y) on_(i, y) = 0;
        changed = true;
      }
    }
    return changed;
  }

  int w_;
  int h_;
  Image<std::uint8_t> on_;
};

}  // namespace

TriangleMesh depth_to_mesh(const DepthMap& depth, const StereoRig& rig, const MeshingOptions& options) {
  if (options.stride < 1) throw Error(ErrorCode::InvalidInput, "stride must be >= 1");
  const int w = depth.width();
  const int h = depth.height();
  const int gw = (w - 1) / options.stride + 1;
  const int gh = (h - 1) / options.stride + 1;
  if (gw < 2 || gh < 2) throw Error(ErrorCode::TooFewPoints, "depth map smaller than one grid cell");

  Image<int> id(gw, gh, -1);
  std::vector<Vec3> points;
  for (int j = 0; j < gh; ++j) {
    for (int i = 0; i < gw; ++i) {
      const int x = i * options.stride;
      const int y = j * options.stride;
      if (depth.valid(x, y) && depth.values(x, y) > 0.0) {
        id(i, j) = static_cast<int>(points.size());
        points.push_back(back_project(rig, x, y, depth.values(x, y)));
      }
    }
  }

  CellRegion cells(gw - 1, gh - 1);
  for (int j = 0; j + 1 < gh; ++j) {
    for (int i = 0; i + 1 < gw; ++i) {
      const int c[4] = {id(i, j), id(i + 1, j), id(i, j + 1), id(i + 1, j + 1)};
      if (std::any_of(std::begin(c), std::end(c), [](int v) { return v < 0; })) continue;
      double z_min = std::numeric_limits<double>::infinity();
      double z_max = 0.0;
      for (int v : c) {
        z_min = std::min(z_min, points[static_cast<std::size_t>(v)].z());
        z_max = std::max(z_max, points[static_cast<std::size_t>(v)].z());
      }
      if (z_max - z_min > options.jump_ratio * z_min) continue;
      cells(i, j) = 1;
    }
  }
  cells.make_disk();
  if (cells.empty()) throw Error(ErrorCode::TooFewPoints, "no fully valid 2x2 cell in the depth map");

  std::vector<int> remap(points.size(), -1);
  std::vector<Vec3> vertices;
  std::vector<Face> faces;
  auto vertex = [&](int i, int j) {
    int& r = remap[static_cast<std::size_t>(id(i, j))];
    if (r < 0) {
      r = static_cast<int>(vertices.size());
      vertices.push_back(points[static_cast<std::size_t>(id(i, j))]);
    }
    return r;
  };
  for (int j = 0; j + 1 < gh; ++j) {
    for (int i = 0; i + 1 < gw; ++i) {
      if (!cells.at(i, j)) continue;
      const int c0 = vertex(i, j), c1 = vertex(i + 1, j), c2 = vertex(i, j + 1), c3 = vertex(i + 1, j + 1);
      // Counter-clockwise as seen from the camera.
      faces.push_back({c0, c2, c1});
      faces.push_back({c1, c2, c3});
    }
  }
  return build_mesh(std::move(vertices), std::move(faces));
}

DisparityError disparity_mae(const DisparityMap& estimate, const DisparityMap& truth) {
  check_same_size(estimate.width(), estimate.height(), truth.width(), truth.height(), "disparity_mae");
  DisparityError out;
  double sum = 0.0;
  for (std::size_t i = 0; i < truth.values.size(); ++i) {
    if (!estimate.valid.data[i] || !truth.valid.data[i]) continue;
    sum += std::abs(estimate.values.data[i] - truth.values.data[i]);
    ++out.count;
  }
  if (out.count == 0) throw Error(ErrorCode::EmptyOverlap, "no pixel is valid in both maps");
  out.mae = sum / static_cast<double>(out.count);
  out.valid_fraction = static_cast<double>(out.count) / static_cast<double>(truth.values.size());
  return out;
}

}  // namespace foliascan::light
