#include "grasptk/dataset.hpp"

#include <filesystem>
#include <fstream>
#include <set>

#include <json.hpp>

#include "grasptk/container.hpp"
#include "grasptk/errors.hpp"

namespace grasptk {

using nlohmann::json;

namespace {

json rect_to_json(const GraspRect& g) {
  return json{{"x", g.x}, {"y", g.y}, {"w", g.w}, {"theta", g.theta}, {"h", g.h}, {"score", g.score}};
}

GraspRect rect_from_json(const json& j) {
  return {j.at("x"), j.at("y"), j.at("w"), j.at("theta"), j.at("h"), j.at("score")};
}

json pose_to_json(const Grasp6DoF& p) {
  return json{{"rotation", p.rotation},
              {"translation", p.translation},
              {"opening", p.opening},
              {"score", p.score}};
}

Grasp6DoF pose_from_json(const json& j) {
  Grasp6DoF p;
  p.rotation = j.at("rotation");
  p.translation = j.at("translation");
  p.opening = j.at("opening");
  p.score = j.at("score");
  return p;
}

void atomic_write_text(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::trunc);
    if (!f) throw IoError("cannot open for write: " + tmp);
    f << text;
    if (!f) throw IoError("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

std::string scene_file(const std::string& dir, uint64_t id) {
  return dir + "/scenes/scene_" + std::to_string(id) + ".gmtc";
}

}  // namespace

Vocab Vocab::build(const std::vector<std::string>& texts) {
  std::set<std::string> words;
  for (const auto& t : texts)
    for (const auto& w : tokenize_words(t)) words.insert(w);
  Vocab v;
  v.word_to_id["<unk>"] = 0;
  int next = 1;
  for (const auto& w : words) v.word_to_id[w] = next++;
  return v;
}

std::vector<int> Vocab::encode(const std::string& text) const {
  std::vector<int> ids;
  for (const auto& w : tokenize_words(text)) {
    auto it = word_to_id.find(w);
    ids.push_back(it == word_to_id.end() ? 0 : it->second);
  }
  if (ids.empty()) ids.push_back(0);
  return ids;
}

namespace {

json manifest_to_json(const DatasetManifest& m) {
  json j;
  j["image_size"] = m.image_size;
  j["filter_threshold"] = m.filter_threshold;
  j["rect_height_ratio"] = m.rect_height_ratio;
  j["seed"] = m.seed;
  j["generator_config"] = m.generator_config;
  j["templates"] = m.templates;
  j["seen_categories"] = m.split.seen_categories;
  j["unseen_categories"] = m.split.unseen_categories;
  j["splits"] = m.split.splits;
  j["vocabulary"] = m.vocab.word_to_id;
  j["lexicon"] = {{"colors", m.lexicon.colors},
                  {"shapes", m.lexicon.shapes},
                  {"spatial", m.lexicon.spatial},
                  {"nouns", m.lexicon.nouns}};
  return j;
}

DatasetManifest manifest_from_json(const json& j) {
  DatasetManifest m;
  m.image_size = j.at("image_size");
  m.filter_threshold = j.at("filter_threshold");
  m.rect_height_ratio = j.at("rect_height_ratio");
  m.seed = j.at("seed");
  m.generator_config = j.value("generator_config", "");
  m.templates = j.at("templates").get<std::vector<std::string>>();
  m.split.seen_categories = j.at("seen_categories").get<std::vector<std::string>>();
  m.split.unseen_categories = j.at("unseen_categories").get<std::vector<std::string>>();
  m.split.splits = j.at("splits").get<std::map<std::string, std::vector<uint64_t>>>();
  m.vocab.word_to_id = j.at("vocabulary").get<std::map<std::string, int>>();
  const auto& lex = j.at("lexicon");
  m.lexicon.colors = lex.at("colors").get<std::vector<std::string>>();
  m.lexicon.shapes = lex.at("shapes").get<std::vector<std::string>>();
  m.lexicon.spatial = lex.at("spatial").get<std::vector<std::string>>();
  m.lexicon.nouns = lex.at("nouns").get<std::vector<std::string>>();
  return m;
}

json scene_index_json(const SceneRecord& s) {
  json objs = json::array();
  for (const auto& o : s.objects) {
    json g4 = json::array(), g6 = json::array();
    for (const auto& g : o.grasps4) g4.push_back(rect_to_json(g));
    for (const auto& p : o.grasps6) g6.push_back(pose_to_json(p));
    objs.push_back({{"object_id", o.object_id},
                    {"category", o.category},
                    {"color", o.color},
                    {"shape", o.shape},
                    {"position_word", o.position_word},
                    {"cx", o.cx},
                    {"cy", o.cy},
                    {"half_long", o.half_long},
                    {"half_short", o.half_short},
                    {"orientation", o.orientation},
                    {"top_z", o.top_z},
                    {"grasps4dof", g4},
                    {"grasps6dof", g6}});
  }
  json exprs = json::array();
  for (const auto& e : s.expressions)
    exprs.push_back({{"text", e.text},
                     {"target_object_id", e.target_object_id},
                     {"attribute_count", e.attribute_count}});
  return json{{"scene_id", s.scene_id},
              {"image_size", s.image_size},
              {"file", "scenes/scene_" + std::to_string(s.scene_id) + ".gmtc"},
              {"intrinsics",
               {{"fx", s.intrinsics.fx}, {"fy", s.intrinsics.fy}, {"cx", s.intrinsics.cx}, {"cy", s.intrinsics.cy}}},
              {"has_ambiguous_objects", s.has_ambiguous_objects},
              {"objects", objs},
              {"expressions", exprs}};
}

}  // namespace

void write_dataset(const std::string& dir, const DatasetManifest& manifest,
                   const std::vector<SceneRecord>& scenes) {
  std::filesystem::create_directories(dir + "/scenes");
  atomic_write_text(dir + "/manifest.json", manifest_to_json(manifest).dump(2));

  std::string index;
  for (const auto& s : scenes) {
    index += scene_index_json(s).dump();
    index += "\n";

    std::vector<ContainerEntry> entries;
    entries.push_back(ContainerEntry::from_f32("image", {3, s.image_size, s.image_size},
                                               std::span<const float>(s.image)));
    entries.push_back(ContainerEntry::from_f32("depth", {s.image_size, s.image_size},
                                               std::span<const float>(s.depth)));
    for (const auto& o : s.objects)
      entries.push_back(ContainerEntry::from_u8("mask_" + std::to_string(o.object_id),
                                                {s.image_size, s.image_size},
                                                std::span<const uint8_t>(o.mask)));
    save_container(scene_file(dir, s.scene_id), entries);
  }
  atomic_write_text(dir + "/index.jsonl", index);
}

Dataset Dataset::open(const std::string& dir) {
  Dataset ds;
  ds.dir_ = dir;
  std::ifstream mf(dir + "/manifest.json");
  if (!mf) throw IoError("cannot open dataset manifest in " + dir);
  json mj;
  mf >> mj;
  ds.manifest_ = manifest_from_json(mj);

  std::ifstream idx(dir + "/index.jsonl");
  if (!idx) throw IoError("cannot open dataset index in " + dir);
  std::string line;
  while (std::getline(idx, line)) {
    if (line.empty()) continue;
    const auto j = json::parse(line);
    ds.index_lines_[j.at("scene_id").get<uint64_t>()] = line;
  }
  return ds;
}

std::vector<uint64_t> Dataset::split_ids(const std::string& split) const {
  auto it = manifest_.split.splits.find(split);
  if (it == manifest_.split.splits.end())
    throw SplitNotFoundError("split not in manifest: " + split);
  return it->second;
}

SceneRecord Dataset::load_scene(uint64_t scene_id) const {
  auto it = index_lines_.find(scene_id);
  if (it == index_lines_.end())
    throw InvalidArgumentError("scene not in index: " + std::to_string(scene_id));
  const json j = json::parse(it->second);

  SceneRecord s;
  s.scene_id = scene_id;
  s.image_size = j.at("image_size");
  const auto& ij = j.at("intrinsics");
  s.intrinsics = {ij.at("fx"), ij.at("fy"), ij.at("cx"), ij.at("cy")};
  s.has_ambiguous_objects = j.value("has_ambiguous_objects", false);

  const auto entries = load_container(dir_ + "/" + j.at("file").get<std::string>());
  auto find_entry = [&](const std::string& name) -> const ContainerEntry& {
    for (const auto& e : entries)
      if (e.name == name) return e;
    throw FormatError("scene container missing entry: " + name);
  };
  s.image = find_entry("image").as_f32();
  s.depth = find_entry("depth").as_f32();

  for (const auto& oj : j.at("objects")) {
    SceneObject o;
    o.object_id = oj.at("object_id");
    o.category = oj.at("category");
    o.color = oj.at("color");
    o.shape = oj.at("shape");
    o.position_word = oj.at("position_word");
    o.cx = oj.at("cx");
    o.cy = oj.at("cy");
    o.half_long = oj.at("half_long");
    o.half_short = oj.at("half_short");
    o.orientation = oj.at("orientation");
    o.top_z = oj.at("top_z");
    for (const auto& g : oj.at("grasps4dof")) o.grasps4.push_back(rect_from_json(g));
    for (const auto& p : oj.at("grasps6dof")) o.grasps6.push_back(pose_from_json(p));
    o.mask = find_entry("mask_" + std::to_string(o.object_id)).as_u8();
    s.objects.push_back(std::move(o));
  }
  for (const auto& ej : j.at("expressions"))
    s.expressions.push_back(
        {ej.at("text"), ej.at("target_object_id"), ej.at("attribute_count")});
  return s;
}

std::vector<SceneRecord> Dataset::load_split(const std::string& split) const {
  std::vector<SceneRecord> out;
  for (uint64_t id : split_ids(split)) out.push_back(load_scene(id));
  return out;
}

bool Dataset::category_is_unseen(const std::string& category) const {
  const auto& u = manifest_.split.unseen_categories;
  return std::find(u.begin(), u.end(), category) != u.end();
}

Tensor image_tensor(const SceneRecord& scene) {
  const size_t S = scene.image_size;
  Tensor t({3, S, S});
  for (size_t i = 0; i < t.size(); ++i) t.values[i] = scene.image[i];
  return t;
}

GraspRect map_to_image_rect(const GraspRect& r) { return r.scaled(4.0, 1.5); }
GraspRect image_to_map_rect(const GraspRect& r) { return r.scaled(0.25, -0.375); }

GtTargets build_targets(const SceneRecord& scene, int target_object_id,
                        double filter_threshold, const ModelConfig& mcfg,
                        const RasterConfig& rcfg) {
  const auto& obj = scene.object_by_id(target_object_id);
  const uint32_t S = scene.image_size;
  const uint32_t hp = S / 4, wp = S / 4;

  std::vector<GraspRect> map_rects;
  for (const auto& g : filter_grasps(obj.grasps4, filter_threshold))
    map_rects.push_back(image_to_map_rect(g));
  RasterConfig rc = rcfg;
  rc.max_width = mcfg.max_width_map();
  const GraspMaps maps = rasterize_grasp_maps(map_rects, hp, wp, rc);

  // Block-majority downsample of the target mask.
  std::vector<uint8_t> mask_map(static_cast<size_t>(hp) * wp, 0);
  for (uint32_t y = 0; y < hp; ++y)
    for (uint32_t x = 0; x < wp; ++x) {
      int count = 0;
      for (uint32_t dy = 0; dy < 4; ++dy)
        for (uint32_t dx = 0; dx < 4; ++dx)
          count += obj.mask[(static_cast<size_t>(y) * 4 + dy) * S + x * 4 + dx] ? 1 : 0;
      mask_map[static_cast<size_t>(y) * wp + x] = count >= 8 ? 1 : 0;
    }
  return make_gt_targets(maps, mask_map, mcfg.max_width_map());
}

}  // namespace grasptk
