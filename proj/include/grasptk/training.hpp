#pragma once

#include <functional>
#include <string>
#include <vector>

#include "grasptk/dataset.hpp"
#include "grasptk/losses.hpp"
#include "grasptk/model.hpp"
#include "grasptk/optimizer.hpp"
#include "grasptk/synthgen.hpp"

namespace grasptk {

enum class TrainMode { TwoStage, SingleStage };

struct TrainConfig {
  int stage1_epochs = 15;
  int stage2_epochs = 30;
  OptimConfig optimizer;
  int batch_size = 8;
  uint64_t seed = 1;
  TrainMode mode = TrainMode::TwoStage;
  LossConfig loss;
  double data_fraction = 1.0;   // nested seeded-prefix subset of the train scenes
  double noun_dropout = 0.10;   // chance the target noun token is masked to <unk>
  size_t val_max_records = 128; // per-epoch validation budget
  bool cosine_lr = false;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;  // global, 1-based across stages
  int stage = 1;
  double total_loss = 0.0;
  double mask_loss = 0.0;
  double q_loss = 0.0;
  double theta_loss = 0.0;
  double w_loss = 0.0;
  double train_mask_iou = 0.0;
  double val_top1 = 0.0;
};

struct TrainLog {
  std::vector<EpochRecord> records;

  std::string to_jsonl() const;
  static TrainLog from_jsonl(const std::string& text);
  void append_jsonl(const std::string& path) const;
};

// First epoch after which val_top1 improves by less than `tol` for `patience`
// consecutive epochs; the last epoch when the log never settles.
int epochs_to_convergence(const TrainLog& log, int patience, double tol);

// The nested data_fraction subset: a seeded prefix of a fixed shuffle, so the
// 20% subset is contained in the 40% subset for the same seed.
std::vector<size_t> fraction_subset(size_t n, double fraction, uint64_t seed);

struct TrainDataView {
  const std::vector<SceneRecord>* train = nullptr;
  const std::vector<SceneRecord>* val = nullptr;
  const DatasetManifest* manifest = nullptr;
  std::vector<size_t> train_indices;  // empty = every train scene
};

// Stage I: segmentation path only, mask BCE objective, grasp branch frozen.
TrainLog train_stage1(const TrainDataView& data, Model& model, Optimizer& opt,
                      const TrainConfig& cfg, int first_epoch = 1);

// Stage II (or the single-stage baseline when cfg.mode == SingleStage):
// end-to-end total loss; single-stage runs with identity pooling.
TrainLog train_stage2(const TrainDataView& data, Model& model, Optimizer& opt,
                      const TrainConfig& cfg, int first_epoch);

struct ResumePoint {
  int next_epoch = 1;  // global epoch to run next
};

// Orchestrates the schedule from `resume` onward; appends to `log`.
// `checkpoint_path`, when set, is written at stage boundaries and at the end.
void run_training(const TrainDataView& data, Model& model, Optimizer& opt,
                  const TrainConfig& cfg, TrainLog& log, const ResumePoint& resume = {},
                  const std::string& checkpoint_path = "");

// Checkpoint = container with every registry tensor plus optimizer moments,
// alongside a JSON manifest (config, vocabulary, seed, stage counter).
void save_checkpoint(const std::string& path, const Model& model, const Optimizer& opt,
                     const Vocab& vocab, const TrainConfig& cfg, int next_epoch);

struct LoadedCheckpoint {
  ModelConfig config;
  Vocab vocab;
  TrainConfig train;
  int next_epoch = 1;
  int64_t opt_step = 0;
  std::vector<ContainerEntry> entries;  // params + adam state

  Model make_model() const;  // params restored
  Optimizer make_optimizer() const;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

std::string checkpoint_manifest_path(const std::string& container_path);

}  // namespace grasptk
