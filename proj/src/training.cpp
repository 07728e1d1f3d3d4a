#include "grasptk/training.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <json.hpp>

#include "grasptk/errors.hpp"
#include "grasptk/evalrunner.hpp"
#include "grasptk/rng.hpp"

namespace grasptk {

using nlohmann::json;

namespace {
constexpr uint64_t kStreamFraction = 0x66726163ull;   // "frac"
constexpr uint64_t kStreamShuffle = 0x73687566ull;    // "shuf"
constexpr uint64_t kStreamExprPick = 0x65787072ull;   // "expr"
constexpr uint64_t kStreamNounDrop = 0x64726F70ull;   // "drop"
constexpr uint64_t kStreamValPick = 0x76616Cull;      // "val"
}  // namespace

void TrainConfig::validate() const {
  if (stage1_epochs < 0 || stage2_epochs < 0) throw ConfigError("epoch counts must be >= 0");
  if (!(optimizer.lr > 0)) throw ConfigError("learning rate must be > 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(data_fraction > 0.0 && data_fraction <= 1.0))
    throw ConfigError("data_fraction must be in (0,1]");
  loss.validate();
}

std::string TrainLog::to_jsonl() const {
  std::string out;
  for (const auto& r : records) {
    json j{{"epoch", r.epoch},
           {"stage", r.stage},
           {"total_loss", r.total_loss},
           {"mask_loss", r.mask_loss},
           {"q_loss", r.q_loss},
           {"theta_loss", r.theta_loss},
           {"w_loss", r.w_loss},
           {"train_mask_iou", r.train_mask_iou},
           {"val_top1", r.val_top1}};
    out += j.dump();
    out += "\n";
  }
  return out;
}

TrainLog TrainLog::from_jsonl(const std::string& text) {
  TrainLog log;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    EpochRecord r;
    r.epoch = j.at("epoch");
    r.stage = j.at("stage");
    r.total_loss = j.at("total_loss");
    r.mask_loss = j.at("mask_loss");
    r.q_loss = j.at("q_loss");
    r.theta_loss = j.at("theta_loss");
    r.w_loss = j.at("w_loss");
    r.train_mask_iou = j.at("train_mask_iou");
    r.val_top1 = j.at("val_top1");
    log.records.push_back(r);
  }
  return log;
}

void TrainLog::append_jsonl(const std::string& path) const {
  std::ofstream f(path, std::ios::app);
  if (!f) throw IoError("cannot open log for append: " + path);
  f << to_jsonl();
}

int epochs_to_convergence(const TrainLog& log, int patience, double tol) {
  const auto& r = log.records;
  if (r.empty()) throw InvalidArgumentError("empty training log");
  if (patience < 1) throw InvalidArgumentError("patience must be >= 1");
  for (size_t i = 0; i + static_cast<size_t>(patience) < r.size(); ++i) {
    bool settled = true;
    for (int j = 1; j <= patience; ++j) {
      if (r[i + j].val_top1 - r[i + j - 1].val_top1 >= tol) {
        settled = false;
        break;
      }
    }
    if (settled) return r[i].epoch;
  }
  return r.back().epoch;
}

std::vector<size_t> fraction_subset(size_t n, double fraction, uint64_t seed) {
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed, {kStreamFraction});
  rng.shuffle(order);
  const size_t keep = std::max<size_t>(1, static_cast<size_t>(std::llround(fraction * n)));
  order.resize(std::min(keep, n));
  return order;
}

namespace {

struct ValRecordSet {
  std::vector<EvalRecordRef> refs;
};

ValRecordSet pick_val_records(const TrainDataView& data, const TrainConfig& cfg) {
  ValRecordSet set;
  if (!data.val || data.val->empty()) return set;
  auto refs = select_records(*data.val, *data.manifest, "val");
  Rng rng(cfg.seed, {kStreamValPick});
  rng.shuffle(refs);
  if (cfg.val_max_records > 0 && refs.size() > cfg.val_max_records)
    refs.resize(cfg.val_max_records);
  set.refs = std::move(refs);
  return set;
}

double mask_iou(const std::vector<double>& pred, const Tensor& gt) {
  size_t inter = 0, uni = 0;
  for (size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] >= 0.5;
    const bool g = gt.values[i] >= 0.5;
    inter += (p && g) ? 1 : 0;
    uni += (p || g) ? 1 : 0;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

// One optimisation epoch shared by both stages.
EpochRecord run_epoch(const TrainDataView& data, Model& model, Optimizer& opt,
                      const TrainConfig& cfg, int epoch, int stage,
                      const std::set<std::string>& frozen, const ValRecordSet& val_set,
                      std::vector<Tensor>& image_cache) {
  const auto& scenes = *data.train;
  const auto& manifest = *data.manifest;
  if (scenes.empty()) throw EmptyDatasetError("no training scenes");

  std::vector<size_t> order = data.train_indices;
  if (order.empty()) {
    order.resize(scenes.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  }
  Rng shuffle_rng(cfg.seed, {kStreamShuffle, static_cast<uint64_t>(epoch)});
  shuffle_rng.shuffle(order);

  if (cfg.cosine_lr) {
    const int total = cfg.stage1_epochs + cfg.stage2_epochs;
    const double t = total > 1 ? static_cast<double>(epoch - 1) / (total - 1) : 0.0;
    opt.set_lr(cfg.optimizer.lr * 0.5 * (1.0 + std::cos(std::numbers::pi * t)));
  }

  EpochRecord rec;
  rec.epoch = epoch;
  rec.stage = stage;

  const bool mask_only = stage == 1;
  ForwardOptions fwd_opts;
  fwd_opts.training = true;
  fwd_opts.with_grasp_branch = !mask_only;
  fwd_opts.identity_pool = cfg.mode == TrainMode::SingleStage;

  size_t in_batch = 0;
  size_t n_examples = 0;
  for (size_t oi = 0; oi < order.size(); ++oi) {
    const size_t si = order[oi];
    const auto& scene = scenes[si];
    if (scene.expressions.empty()) continue;

    Rng pick_rng(cfg.seed, {kStreamExprPick, static_cast<uint64_t>(epoch), scene.scene_id});
    const auto& expr = scene.expressions[pick_rng.integer(scene.expressions.size())];
    const auto& target = scene.object_by_id(expr.target_object_id);

    auto tokens = manifest.vocab.encode(expr.text);
    if (cfg.noun_dropout > 0) {
      Rng drop_rng(cfg.seed, {kStreamNounDrop, static_cast<uint64_t>(epoch), scene.scene_id});
      if (drop_rng.uniform() < cfg.noun_dropout) {
        const auto it = manifest.vocab.word_to_id.find(target.category);
        if (it != manifest.vocab.word_to_id.end())
          for (auto& t : tokens)
            if (t == it->second) t = 0;
      }
    }

    if (image_cache[si].size() == 0) image_cache[si] = image_tensor(scene);
    const auto gt = build_targets(scene, expr.target_object_id, manifest.filter_threshold,
                                  model.config());

    auto out = model.forward(image_cache[si], tokens, fwd_opts);
    auto lv = build_loss(model.graph(), out, gt, cfg.loss, mask_only);

    rec.total_loss += lv.total->scalar();
    rec.mask_loss += lv.mask->scalar();
    if (!mask_only) {
      rec.q_loss += lv.quality->scalar();
      rec.theta_loss += lv.theta->scalar();
      rec.w_loss += lv.width->scalar();
    }
    rec.train_mask_iou += mask_iou(out.mask_values, gt.mask);
    ++n_examples;

    model.backward(lv.total);
    if (++in_batch == static_cast<size_t>(cfg.batch_size)) {
      opt.step(model.params(), frozen);
      in_batch = 0;
    }
  }
  if (in_batch > 0) opt.step(model.params(), frozen);

  if (n_examples > 0) {
    rec.total_loss /= n_examples;
    rec.mask_loss /= n_examples;
    rec.q_loss /= n_examples;
    rec.theta_loss /= n_examples;
    rec.w_loss /= n_examples;
    rec.train_mask_iou /= n_examples;
  }

  if (!val_set.refs.empty() && !mask_only) {
    EvalOptions eo;
    eo.k = 1;
    const auto res = run_eval_records(*data.val, val_set.refs, manifest, &model, eo);
    rec.val_top1 = res.report.top1_success_rate;
  }
  return rec;
}

TrainLog run_stage(const TrainDataView& data, Model& model, Optimizer& opt,
                   const TrainConfig& cfg, int stage, int first_epoch, int epochs) {
  cfg.validate();
  if (!data.train || !data.manifest) throw InvalidArgumentError("incomplete training data view");
  if (data.train->empty()) throw EmptyDatasetError("empty training dataset");

  const std::set<std::string> frozen =
      stage == 1 ? [&] {
        const auto names = model.grasp_branch_params();
        return std::set<std::string>(names.begin(), names.end());
      }()
                 : std::set<std::string>{};

  const auto val_set = pick_val_records(data, cfg);
  std::vector<Tensor> image_cache(data.train->size());

  TrainLog log;
  for (int e = 0; e < epochs; ++e) {
    log.records.push_back(
        run_epoch(data, model, opt, cfg, first_epoch + e, stage, frozen, val_set, image_cache));
  }
  return log;
}

}  // namespace

TrainLog train_stage1(const TrainDataView& data, Model& model, Optimizer& opt,
                      const TrainConfig& cfg, int first_epoch) {
  return run_stage(data, model, opt, cfg, 1, first_epoch, cfg.stage1_epochs);
}

TrainLog train_stage2(const TrainDataView& data, Model& model, Optimizer& opt,
                      const TrainConfig& cfg, int first_epoch) {
  return run_stage(data, model, opt, cfg, 2, first_epoch, cfg.stage2_epochs);
}

void run_training(const TrainDataView& data, Model& model, Optimizer& opt,
                  const TrainConfig& cfg, TrainLog& log, const ResumePoint& resume,
                  const std::string& checkpoint_path) {
  cfg.validate();

  TrainDataView view = data;
  if (cfg.data_fraction < 1.0 && view.train_indices.empty())
    view.train_indices = fraction_subset(data.train->size(), cfg.data_fraction, cfg.seed);

  auto checkpoint = [&](int next_epoch) {
    if (!checkpoint_path.empty())
      save_checkpoint(checkpoint_path, model, opt, data.manifest->vocab, cfg, next_epoch);
  };

  const int total = cfg.stage1_epochs + cfg.stage2_epochs;
  int epoch = resume.next_epoch;

  if (cfg.mode == TrainMode::SingleStage) {
    if (epoch <= total) {
      auto l = run_stage(view, model, opt, cfg, 2, epoch, total - epoch + 1);
      log.records.insert(log.records.end(), l.records.begin(), l.records.end());
    }
    checkpoint(total + 1);
    return;
  }

  if (epoch <= cfg.stage1_epochs) {
    auto l = run_stage(view, model, opt, cfg, 1, epoch, cfg.stage1_epochs - epoch + 1);
    log.records.insert(log.records.end(), l.records.begin(), l.records.end());
    epoch = cfg.stage1_epochs + 1;
    checkpoint(epoch);
  }
  if (epoch <= total) {
    auto l = run_stage(view, model, opt, cfg, 2, epoch, total - epoch + 1);
    log.records.insert(log.records.end(), l.records.begin(), l.records.end());
  }
  checkpoint(total + 1);
}

namespace {

json model_config_json(const ModelConfig& c) {
  return json{{"channels", c.channels},
              {"conv1", c.conv1},
              {"conv2", c.conv2},
              {"conv3", c.conv3},
              {"head_hidden", c.head_hidden},
              {"vocab_size", c.vocab_size},
              {"max_width_px", c.max_width_px},
              {"coord_channels", c.coord_channels},
              {"fusion", c.fusion == FusionMode::CrossAttention ? "cross_attention" : "broadcast_mlp"}};
}

ModelConfig model_config_from_json(const json& j) {
  ModelConfig c;
  c.channels = j.at("channels");
  c.conv1 = j.at("conv1");
  c.conv2 = j.at("conv2");
  c.conv3 = j.at("conv3");
  c.head_hidden = j.at("head_hidden");
  c.vocab_size = j.at("vocab_size");
  c.max_width_px = j.at("max_width_px");
  c.coord_channels = j.at("coord_channels");
  c.fusion = j.at("fusion") == "cross_attention" ? FusionMode::CrossAttention
                                                 : FusionMode::BroadcastMlp;
  return c;
}

json train_config_json(const TrainConfig& c) {
  return json{{"stage1_epochs", c.stage1_epochs},
              {"stage2_epochs", c.stage2_epochs},
              {"lr", c.optimizer.lr},
              {"optimizer", c.optimizer.type == OptimType::Adam ? "adam" : "sgd"},
              {"batch_size", c.batch_size},
              {"seed", c.seed},
              {"mode", c.mode == TrainMode::TwoStage ? "two_stage" : "single_stage"},
              {"data_fraction", c.data_fraction},
              {"noun_dropout", c.noun_dropout},
              {"alpha", c.loss.alpha},
              {"beta", c.loss.beta},
              {"lambda_mask", c.loss.lambda_mask},
              {"lambda_q", c.loss.lambda_q},
              {"lambda_theta", c.loss.lambda_theta},
              {"lambda_w", c.loss.lambda_w}};
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  c.stage1_epochs = j.at("stage1_epochs");
  c.stage2_epochs = j.at("stage2_epochs");
  c.optimizer.lr = j.at("lr");
  c.optimizer.type = j.at("optimizer") == "adam" ? OptimType::Adam : OptimType::Sgd;
  c.batch_size = j.at("batch_size");
  c.seed = j.at("seed");
  c.mode = j.at("mode") == "two_stage" ? TrainMode::TwoStage : TrainMode::SingleStage;
  c.data_fraction = j.at("data_fraction");
  c.noun_dropout = j.at("noun_dropout");
  c.loss.alpha = j.at("alpha");
  c.loss.beta = j.at("beta");
  c.loss.lambda_mask = j.at("lambda_mask");
  c.loss.lambda_q = j.at("lambda_q");
  c.loss.lambda_theta = j.at("lambda_theta");
  c.loss.lambda_w = j.at("lambda_w");
  return c;
}

}  // namespace

std::string checkpoint_manifest_path(const std::string& container_path) {
  std::filesystem::path p(container_path);
  p.replace_extension(".json");
  return p.string();
}

void save_checkpoint(const std::string& path, const Model& model, const Optimizer& opt,
                     const Vocab& vocab, const TrainConfig& cfg, int next_epoch) {
  std::vector<ContainerEntry> entries;
  for (const auto& [name, t] : model.params().items) {
    std::vector<uint32_t> dims;
    for (size_t d : t.dims) dims.push_back(static_cast<uint32_t>(d));
    entries.push_back(ContainerEntry::from_f64(name, dims, t.values));
  }
  for (auto& e : opt.state_entries()) entries.push_back(std::move(e));
  save_container(path, entries);

  json manifest;
  manifest["config"] = model_config_json(model.config());
  manifest["train"] = train_config_json(cfg);
  manifest["vocabulary"] = vocab.word_to_id;
  manifest["next_epoch"] = next_epoch;
  manifest["opt_step"] = opt.step_count();
  const std::string mp = checkpoint_manifest_path(path);
  const std::string tmp = mp + ".tmp";
  {
    std::ofstream f(tmp, std::ios::trunc);
    if (!f) throw IoError("cannot write checkpoint manifest: " + mp);
    f << manifest.dump(2);
  }
  std::filesystem::rename(tmp, mp);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  LoadedCheckpoint ck;
  ck.entries = load_container(path);
  std::ifstream f(checkpoint_manifest_path(path));
  if (!f) throw IoError("cannot open checkpoint manifest for " + path);
  json manifest;
  f >> manifest;
  ck.config = model_config_from_json(manifest.at("config"));
  ck.train = train_config_from_json(manifest.at("train"));
  ck.vocab.word_to_id = manifest.at("vocabulary").get<std::map<std::string, int>>();
  ck.next_epoch = manifest.at("next_epoch");
  ck.opt_step = manifest.at("opt_step");
  return ck;
}

Model LoadedCheckpoint::make_model() const {
  Model model(config);
  for (const auto& e : entries) {
    if (e.name.starts_with("adam.")) continue;
    Tensor& t = model.params().at(e.name);
    const auto vals = e.as_f64();
    if (vals.size() != t.size())
      throw FormatError("checkpoint tensor size mismatch for " + e.name);
    t.values = vals;
  }
  return model;
}

Optimizer LoadedCheckpoint::make_optimizer() const {
  Optimizer opt(train.optimizer);
  opt.set_step_count(opt_step);
  std::vector<ContainerEntry> adam;
  for (const auto& e : entries)
    if (e.name.starts_with("adam.")) adam.push_back(e);
  opt.load_state(adam);
  return opt;
}

}  // namespace grasptk
