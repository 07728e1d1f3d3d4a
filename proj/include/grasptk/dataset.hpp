#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "grasptk/grasp_maps.hpp"
#include "grasptk/losses.hpp"
#include "grasptk/metrics.hpp"
#include "grasptk/model.hpp"
#include "grasptk/synthgen.hpp"
#include "grasptk/tensor.hpp"

namespace grasptk {

// Token vocabulary. Id 0 is reserved for <unk>; out-of-vocabulary words map
// there, which is what makes cross-dataset evaluation total.
struct Vocab {
  std::map<std::string, int> word_to_id;

  static Vocab build(const std::vector<std::string>& texts);
  std::vector<int> encode(const std::string& text) const;
  size_t size() const { return word_to_id.size(); }
};

struct DatasetManifest {
  uint32_t image_size = 96;
  double filter_threshold = 0.70;
  double rect_height_ratio = 0.5;
  SplitSpec split;
  Vocab vocab;           // built from train-split expressions
  Lexicon lexicon;
  std::vector<std::string> templates;
  uint64_t seed = 0;
  std::string generator_config;  // serialized SceneConfig summary (informative)
};

// On-disk layout:
//   <dir>/manifest.json
//   <dir>/index.jsonl        one JSON object per scene (objects, grasps, text)
//   <dir>/scenes/<id>.gmtc   image f32 (3,H,W), depth f32 (H,W), mask_<oid> u8
void write_dataset(const std::string& dir, const DatasetManifest& manifest,
                   const std::vector<SceneRecord>& scenes);

class Dataset {
public:
  static Dataset open(const std::string& dir);

  const DatasetManifest& manifest() const { return manifest_; }
  const std::string& dir() const { return dir_; }

  std::vector<uint64_t> split_ids(const std::string& split) const;

  // Full scene with pixels; image converted to f64 (3,H,W).
  SceneRecord load_scene(uint64_t scene_id) const;

  // All scenes of a split loaded into memory, index-aligned with split_ids.
  std::vector<SceneRecord> load_split(const std::string& split) const;

  bool category_is_unseen(const std::string& category) const;

private:
  std::string dir_;
  DatasetManifest manifest_;
  std::map<uint64_t, std::string> index_lines_;  // scene_id -> raw JSON line
};

// Image tensor (3,H,W) in f64 from a scene record.
Tensor image_tensor(const SceneRecord& scene);

// Regression targets at map resolution for one (scene, target) pair:
// rasterized grasp maps from the filtered target grasps plus the target mask
// downsampled by block-majority.
GtTargets build_targets(const SceneRecord& scene, int target_object_id,
                        double filter_threshold, const ModelConfig& mcfg,
                        const RasterConfig& rcfg = {});

// Map-space <-> image-space rect transforms for the stride-4 architecture.
GraspRect map_to_image_rect(const GraspRect& r);
GraspRect image_to_map_rect(const GraspRect& r);

}  // namespace grasptk
