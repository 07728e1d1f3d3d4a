#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "grasptk/geometry3d.hpp"
#include "grasptk/grasp_types.hpp"
#include "grasptk/metrics.hpp"

namespace grasptk {

// Categories are (shape, size, color) combinations with a distinct household
// noun, so a category is fully identifiable from its appearance.
struct CategorySpec {
  std::string name;        // noun used in referring expressions
  std::string shape;       // box | cylinder | sphere
  std::string color_name;
  std::array<double, 3> rgb{};
  double radius_px = 9.0;  // nominal footprint radius at a 96 px image
  double height_m = 0.04;
};

std::vector<CategorySpec> build_categories(size_t count);

struct SceneConfig {
  uint32_t image_size = 96;
  int min_objects = 4;
  int max_objects = 7;
  double distractor_rate = 0.3;  // chance the scene contains a same-category twin
  double filter_threshold = 0.70;
  double rect_height_ratio = 0.5;
  double cam_height = 0.60;  // meters, camera looks straight down
  int grasps_per_object = 5;
  std::vector<CategorySpec> categories;
};

struct SceneObject {
  int object_id = 0;
  std::string category;
  std::string color;
  std::string shape;
  std::string position_word;  // image quadrant
  std::vector<uint8_t> mask;  // (H,W)
  std::vector<GraspRect> grasps4;   // image pixels, with scores
  std::vector<Grasp6DoF> grasps6;

  // Geometry for spatial-predicate evaluation.
  double cx = 0, cy = 0;        // centroid, pixels
  double half_long = 0, half_short = 0;  // box half extents (circle: both = r)
  double orientation = 0;       // box long-axis angle
  double top_z = 0;             // camera-frame depth of the object top, meters
};

struct SceneExpression {
  std::string text;
  int target_object_id = 0;
  int attribute_count = 1;
};

struct SceneRecord {
  uint64_t scene_id = 0;
  uint32_t image_size = 0;
  std::vector<float> image;  // (3,H,W), values in [0,1]
  std::vector<float> depth;  // (H,W), meters
  CameraIntrinsics intrinsics;
  std::vector<SceneObject> objects;
  std::vector<SceneExpression> expressions;
  bool has_ambiguous_objects = false;

  const SceneObject& object_by_id(int id) const;
};

// Renders one cluttered scene. Objects draw their categories from
// `category_pool` (indices into cfg.categories); every index in
// `required_categories` is guaranteed to appear. Pure function of the seed.
SceneRecord gen_scene(uint64_t seed, const SceneConfig& cfg,
                      const std::vector<size_t>& category_pool,
                      const std::vector<size_t>& required_categories = {});

std::vector<std::string> default_templates();

// Emits referring expressions per object at attribute counts 1..4, each one
// verified to resolve to exactly its target. Unachievable levels are skipped
// and the scene is flagged when an object has no usable expression set.
void gen_expressions(SceneRecord& scene, const std::vector<std::string>& templates,
                     uint64_t seed);

std::vector<GraspRect> filter_grasps(const std::vector<GraspRect>& grasps, double threshold);

// Structured attribute set for resolution.
struct ParsedAttrs {
  std::string noun;         // category name, empty = wildcard
  std::string color;
  std::string shape_word;   // lexicon shape word
  std::string quadrant;     // "top left" etc.
  std::string superlative;  // leftmost/rightmost/front/rear/nearest/furthest
};

// Objects matching the attributes; superlatives select the extremal object
// among the otherwise-filtered candidates.
std::vector<int> resolve_attrs(const SceneRecord& scene, const ParsedAttrs& attrs);

std::string shape_word_for(const std::string& shape);
std::string quadrant_of(double cx, double cy, uint32_t image_size);

struct SplitSpec {
  std::vector<std::string> seen_categories;
  std::vector<std::string> unseen_categories;
  std::map<std::string, std::vector<uint64_t>> splits;  // train/val/test_seen/test_unseen
};

struct SceneSummary {
  uint64_t scene_id = 0;
  std::vector<std::string> categories;  // categories present in the scene
};

// Partitions categories into round(seen_fraction * N) seen / rest unseen and
// assigns scenes: anything containing an unseen category goes to test_unseen,
// the rest are split train/val/test_seen by seeded shuffle.
SplitSpec make_splits(const std::vector<std::string>& categories,
                      const std::vector<SceneSummary>& scenes, double seen_fraction,
                      uint64_t seed);

}  // namespace grasptk
