#pragma once

#include <string>
#include <vector>

#include "grasptk/dataset.hpp"
#include "grasptk/metrics.hpp"
#include "grasptk/model.hpp"

namespace grasptk {

struct EvalOptions {
  size_t k = 5;
  uint32_t nms_radius = 3;
  SuccessThresholds thresholds;
  bool oracle = false;      // decode rasterized GT maps instead of the model output
  size_t max_records = 0;   // 0 = no cap
  int threads = 1;
};

struct RecordOutcome {
  uint64_t scene_id = 0;
  size_t expr_idx = 0;
  Band band = Band::L1;
  bool top1 = false;
  bool topk = false;
  GraspRect top_pred;  // image coordinates
  std::string text;
  std::string target_category;
};

struct EvalRunResult {
  EvalReport report;
  std::vector<RecordOutcome> outcomes;
};

// Expression records of a split: eval on test_unseen keeps only
// unseen-category targets, every other split keeps only seen targets.
struct EvalRecordRef {
  size_t scene_index = 0;
  size_t expr_idx = 0;
};

std::vector<EvalRecordRef> select_records(const std::vector<SceneRecord>& scenes,
                                          const DatasetManifest& manifest,
                                          const std::string& split);

// Forward -> decode_topk -> grasp_success over the given records.
// `model` may be null only in oracle mode.
EvalRunResult run_eval_records(const std::vector<SceneRecord>& scenes,
                               const std::vector<EvalRecordRef>& records,
                               const DatasetManifest& manifest, Model* model,
                               const EvalOptions& opts);

// Convenience wrapper: select + evaluate a whole split.
EvalRunResult run_eval_split(const std::vector<SceneRecord>& scenes,
                             const DatasetManifest& manifest, const std::string& split,
                             Model* model, const EvalOptions& opts);

}  // namespace grasptk
