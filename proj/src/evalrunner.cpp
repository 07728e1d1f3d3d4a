#include "grasptk/evalrunner.hpp"

#include <algorithm>
#include <atomic>
#include <map>
#include <thread>

#include "grasptk/errors.hpp"
#include "grasptk/grasp_maps.hpp"

namespace grasptk {

std::vector<EvalRecordRef> select_records(const std::vector<SceneRecord>& scenes,
                                          const DatasetManifest& manifest,
                                          const std::string& split) {
  const bool want_unseen = split == "test_unseen";
  const auto& unseen = manifest.split.unseen_categories;
  auto is_unseen = [&](const std::string& c) {
    return std::find(unseen.begin(), unseen.end(), c) != unseen.end();
  };
  std::vector<EvalRecordRef> out;
  for (size_t si = 0; si < scenes.size(); ++si) {
    const auto& scene = scenes[si];
    for (size_t ei = 0; ei < scene.expressions.size(); ++ei) {
      const auto& target = scene.object_by_id(scene.expressions[ei].target_object_id);
      if (is_unseen(target.category) == want_unseen) out.push_back({si, ei});
    }
  }
  return out;
}

namespace {

Band band_of(int attribute_count) {
  return static_cast<Band>(std::clamp(attribute_count, 1, 4));
}

RecordOutcome eval_one(const SceneRecord& scene, size_t expr_idx,
                       const DatasetManifest& manifest, Model* model, const Tensor* image,
                       const EvalOptions& opts) {
  const auto& expr = scene.expressions[expr_idx];
  const auto& target = scene.object_by_id(expr.target_object_id);

  RecordOutcome rec;
  rec.scene_id = scene.scene_id;
  rec.expr_idx = expr_idx;
  rec.band = band_of(expr.attribute_count);
  rec.text = expr.text;
  rec.target_category = target.category;

  const auto gts = filter_grasps(target.grasps4, manifest.filter_threshold);
  if (gts.empty()) return rec;  // unwinnable record counts as failure

  GraspMaps maps;
  ModelConfig mcfg = model ? model->config() : ModelConfig{};
  if (opts.oracle) {
    std::vector<GraspRect> map_rects;
    for (const auto& g : gts) map_rects.push_back(image_to_map_rect(g));
    RasterConfig rc;
    rc.max_width = mcfg.max_width_map();
    maps = rasterize_grasp_maps(map_rects, scene.image_size / 4, scene.image_size / 4, rc);
  } else {
    const auto tokens = manifest.vocab.encode(expr.text);
    auto out = model->forward(*image, tokens, {.training = false});
    maps = std::move(out.maps);
  }

  DecodeConfig dc{manifest.rect_height_ratio};
  const auto preds_map = decode_topk(maps, opts.k, opts.nms_radius, dc);
  std::vector<GraspRect> preds;
  for (const auto& p : preds_map) preds.push_back(map_to_image_rect(p));

  for (size_t i = 0; i < preds.size(); ++i) {
    const bool s = grasp_success(preds[i], gts, opts.thresholds);
    if (i == 0) {
      rec.top1 = s;
      rec.top_pred = preds[i];
    }
    if (s) {
      rec.topk = true;
      break;
    }
  }
  return rec;
}

}  // namespace

EvalRunResult run_eval_records(const std::vector<SceneRecord>& scenes,
                               const std::vector<EvalRecordRef>& records,
                               const DatasetManifest& manifest, Model* model,
                               const EvalOptions& opts) {
  if (!opts.oracle && model == nullptr)
    throw InvalidArgumentError("model required unless oracle mode is set");

  std::vector<EvalRecordRef> refs = records;
  if (opts.max_records > 0 && refs.size() > opts.max_records) refs.resize(opts.max_records);
  if (refs.empty()) throw EmptyEvaluationError("no records selected for evaluation");

  // Images converted once per referenced scene.
  std::vector<Tensor> images(scenes.size());
  std::vector<char> converted(scenes.size(), 0);
  for (const auto& r : refs)
    if (!converted[r.scene_index]) {
      images[r.scene_index] = image_tensor(scenes[r.scene_index]);
      converted[r.scene_index] = 1;
    }

  std::vector<RecordOutcome> outcomes(refs.size());
  const int threads = std::max(1, opts.threads);
  if (threads == 1 || opts.oracle) {
    for (size_t i = 0; i < refs.size(); ++i)
      outcomes[i] = eval_one(scenes[refs[i].scene_index], refs[i].expr_idx, manifest, model,
                             &images[refs[i].scene_index], opts);
  } else {
    // Each worker drives its own model copy; results land at fixed indices so
    // the reduction order is deterministic.
    std::vector<std::thread> pool;
    std::atomic<size_t> cursor{0};
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        Model local(*model);
        for (;;) {
          const size_t i = cursor.fetch_add(1);
          if (i >= refs.size()) break;
          outcomes[i] = eval_one(scenes[refs[i].scene_index], refs[i].expr_idx, manifest, &local,
                                 &images[refs[i].scene_index], opts);
        }
      });
    }
    for (auto& th : pool) th.join();
  }

  EvalReport rep;
  rep.k = opts.k;
  rep.n_records = outcomes.size();
  std::map<Band, size_t> hits;
  size_t top1 = 0, topk = 0;
  for (const auto& o : outcomes) {
    top1 += o.top1 ? 1 : 0;
    topk += o.topk ? 1 : 0;
    rep.per_band_counts[o.band] += 1;
    hits[o.band] += o.top1 ? 1 : 0;
  }
  rep.top1_success_rate = static_cast<double>(top1) / outcomes.size();
  rep.topk_success_rate = static_cast<double>(topk) / outcomes.size();
  for (const auto& [band, n] : rep.per_band_counts)
    rep.per_band[band] = static_cast<double>(hits[band]) / static_cast<double>(n);

  return {rep, std::move(outcomes)};
}

EvalRunResult run_eval_split(const std::vector<SceneRecord>& scenes,
                             const DatasetManifest& manifest, const std::string& split,
                             Model* model, const EvalOptions& opts) {
  return run_eval_records(scenes, select_records(scenes, manifest, split), manifest, model, opts);
}

}  // namespace grasptk
