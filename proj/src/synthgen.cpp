#include "grasptk/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "grasptk/errors.hpp"
#include "grasptk/rng.hpp"

namespace grasptk {

namespace {

constexpr double kPi = std::numbers::pi;

struct Palette {
  std::string name;
  std::array<double, 3> rgb;
};

const std::vector<Palette>& palette() {
  static const std::vector<Palette> p = {
      {"red", {0.80, 0.16, 0.16}},    {"green", {0.16, 0.62, 0.22}},
      {"blue", {0.22, 0.32, 0.80}},   {"yellow", {0.85, 0.78, 0.20}},
      {"purple", {0.55, 0.26, 0.66}}, {"orange", {0.90, 0.55, 0.16}},
      {"cyan", {0.20, 0.68, 0.72}},   {"magenta", {0.78, 0.26, 0.60}},
  };
  return p;
}

const std::vector<std::string>& nouns_for_shape(const std::string& shape) {
  static const std::vector<std::string> sphere = {"ball",  "globe", "marble", "pearl", "melon",
                                                  "apple", "plum",  "bead",   "pompom", "bauble"};
  static const std::vector<std::string> box = {"box",   "crate", "brick", "carton", "block",
                                               "tile",  "book",  "tray",  "slab",   "chest"};
  static const std::vector<std::string> cylinder = {"can",  "jar",   "bottle", "cup",  "tube",
                                                    "mug",  "drum",  "flask",  "pipe", "roll"};
  if (shape == "sphere") return sphere;
  if (shape == "box") return box;
  return cylinder;
}

}  // namespace

std::vector<CategorySpec> build_categories(size_t count) {
  const std::vector<std::string> shapes = {"box", "cylinder", "sphere"};
  const std::vector<std::pair<double, double>> sizes = {{7.0, 0.035}, {11.0, 0.055}};
  std::vector<CategorySpec> out;
  std::map<std::string, size_t> noun_cursor;
  size_t idx = 0;
  while (out.size() < count) {
    const auto& shape = shapes[idx % shapes.size()];
    const auto& size = sizes[(idx / shapes.size()) % sizes.size()];
    const auto& color = palette()[(idx / (shapes.size() * sizes.size())) % palette().size()];
    CategorySpec cat;
    cat.shape = shape;
    cat.radius_px = size.first;
    cat.height_m = size.second;
    cat.color_name = color.name;
    cat.rgb = color.rgb;
    const auto& pool = nouns_for_shape(shape);
    size_t& cur = noun_cursor[shape];
    cat.name = cur < pool.size() ? pool[cur] : shape + std::to_string(cur);
    ++cur;
    out.push_back(cat);
    ++idx;
  }
  return out;
}

const SceneObject& SceneRecord::object_by_id(int id) const {
  for (const auto& o : objects)
    if (o.object_id == id) return o;
  throw InvalidArgumentError("unknown object id " + std::to_string(id));
}

std::string shape_word_for(const std::string& shape) {
  if (shape == "box") return "rectangular";
  if (shape == "cylinder") return "cylindrical";
  return "round";
}

std::string quadrant_of(double cx, double cy, uint32_t image_size) {
  const double mid = image_size / 2.0;
  const bool left = cx < mid;
  const bool top = cy < mid;
  return std::string(top ? "top" : "bottom") + " " + (left ? "left" : "right");
}

namespace {

struct Placement {
  size_t category_index;
  double cx, cy;
  double orientation;
  double bound_radius;
};

double footprint_bound(const CategorySpec& cat, double scale) {
  const double r = cat.radius_px * scale;
  if (cat.shape == "box") return std::hypot(r * 1.4, r * 0.7);
  return r;
}

// Deterministic per-pixel noise independent of object placement.
double pixel_noise(uint64_t seed, uint32_t y, uint32_t x, uint32_t chan) {
  const uint64_t h = hash_stream({seed, 0xB06E5Eull, y, x, chan});
  return (static_cast<double>(h >> 11) * 0x1.0p-53 - 0.5) * 0.04;
}

}  // namespace

SceneRecord gen_scene(uint64_t seed, const SceneConfig& cfg,
                      const std::vector<size_t>& category_pool,
                      const std::vector<size_t>& required_categories) {
  if (cfg.image_size % 4 != 0) throw InvalidArgumentError("image_size must be divisible by 4");
  if (cfg.min_objects < 1 || cfg.max_objects < cfg.min_objects)
    throw InvalidArgumentError("bad object count range");
  if (category_pool.empty()) throw InvalidArgumentError("empty category pool");

  const uint32_t S = cfg.image_size;
  const double scale = S / 96.0;
  Rng rng(seed, {0x5C3E6Eull});

  SceneRecord scene;
  scene.scene_id = seed;
  scene.image_size = S;
  scene.intrinsics = {static_cast<double>(S), static_cast<double>(S), S / 2.0, S / 2.0};

  const int n_objects =
      cfg.min_objects + static_cast<int>(rng.integer(cfg.max_objects - cfg.min_objects + 1));

  // Pick categories: required ones first, then random draws, plus an optional
  // same-category twin to exercise ambiguity handling.
  std::vector<size_t> cats;
  for (size_t c : required_categories) cats.push_back(c);
  while (cats.size() < static_cast<size_t>(n_objects))
    cats.push_back(category_pool[rng.integer(category_pool.size())]);
  if (cats.size() > required_categories.size() && cats.size() >= 2 &&
      rng.uniform() < cfg.distractor_rate)
    cats[cats.size() - 1] = cats[rng.integer(cats.size() - 1)];
  rng.shuffle(cats);

  // Rejection-sample non-overlapping placements.
  std::vector<Placement> placed;
  for (size_t i = 0; i < cats.size(); ++i) {
    const auto& cat = cfg.categories.at(cats[i]);
    const double bound = footprint_bound(cat, scale);
    const double margin = bound + 3.0;
    bool ok = false;
    for (int attempt = 0; attempt < 300 && !ok; ++attempt) {
      Placement p{cats[i], rng.uniform(margin, S - margin), rng.uniform(margin, S - margin),
                  rng.uniform(0.0, kPi), bound};
      ok = true;
      for (const auto& q : placed) {
        const double d = std::hypot(p.cx - q.cx, p.cy - q.cy);
        if (d < p.bound_radius + q.bound_radius + 3.0) {
          ok = false;
          break;
        }
      }
      if (ok) placed.push_back(p);
    }
    if (!ok)
      throw PlacementError("could not place " + std::to_string(cats.size()) +
                           " objects without overlap");
  }

  // Background.
  scene.image.assign(static_cast<size_t>(3) * S * S, 0.0f);
  scene.depth.assign(static_cast<size_t>(S) * S, static_cast<float>(cfg.cam_height));
  for (uint32_t y = 0; y < S; ++y)
    for (uint32_t x = 0; x < S; ++x)
      for (uint32_t c = 0; c < 3; ++c)
        scene.image[(static_cast<size_t>(c) * S + y) * S + x] =
            static_cast<float>(std::clamp(0.72 + pixel_noise(seed, y, x, c), 0.0, 1.0));

  // Objects.
  const Vec3 light = normalized({-0.35, -0.45, 0.82});
  for (size_t i = 0; i < placed.size(); ++i) {
    const auto& pl = placed[i];
    const auto& cat = cfg.categories.at(pl.category_index);
    SceneObject obj;
    obj.object_id = static_cast<int>(i);
    obj.category = cat.name;
    obj.color = cat.color_name;
    obj.shape = cat.shape;
    obj.cx = pl.cx;
    obj.cy = pl.cy;
    obj.orientation = pl.orientation;
    obj.mask.assign(static_cast<size_t>(S) * S, 0);
    obj.position_word = quadrant_of(pl.cx, pl.cy, S);

    const double r = cat.radius_px * scale;
    const double a = cat.shape == "box" ? r * 1.4 : r;  // half long extent
    const double b = cat.shape == "box" ? r * 0.7 : r;  // half short extent
    obj.half_long = a;
    obj.half_short = b;
    obj.top_z = cfg.cam_height - cat.height_m * (cat.shape == "sphere" ? 2.0 : 1.0);

    const double brightness = 0.9 + 0.2 * rng.uniform();
    const double co = std::cos(pl.orientation), so = std::sin(pl.orientation);
    const long y0 = std::max<long>(0, static_cast<long>(pl.cy - pl.bound_radius - 1));
    const long y1 = std::min<long>(S - 1, static_cast<long>(pl.cy + pl.bound_radius + 1));
    const long x0 = std::max<long>(0, static_cast<long>(pl.cx - pl.bound_radius - 1));
    const long x1 = std::min<long>(S - 1, static_cast<long>(pl.cx + pl.bound_radius + 1));
    for (long y = y0; y <= y1; ++y) {
      for (long x = x0; x <= x1; ++x) {
        const double dx = x - pl.cx, dy = y - pl.cy;
        bool inside = false;
        double shade = 1.0;
        double depth = obj.top_z;
        if (cat.shape == "box") {
          const double u = dx * co + dy * so, v = -dx * so + dy * co;
          inside = std::abs(u) <= a && std::abs(v) <= b;
          shade = 0.45 + 0.55 * std::max(0.0, light[2]);
        } else {
          const double d2 = dx * dx + dy * dy;
          inside = d2 <= r * r;
          if (inside && cat.shape == "sphere") {
            const double nz = std::sqrt(std::max(0.0, 1.0 - d2 / (r * r)));
            const Vec3 n = {dx / r, dy / r, nz};
            shade = 0.35 + 0.65 * std::max(0.0, dot(n, light));
            const double rho = cat.height_m;  // sphere radius in meters
            depth = cfg.cam_height - rho * (1.0 + nz);
          } else if (inside) {
            shade = 0.45 + 0.55 * std::max(0.0, light[2]) - 0.08 * (d2 / (r * r));
          }
        }
        if (!inside) continue;
        obj.mask[static_cast<size_t>(y) * S + x] = 1;
        scene.depth[static_cast<size_t>(y) * S + x] = static_cast<float>(depth);
        for (uint32_t c = 0; c < 3; ++c) {
          const double val =
              std::clamp(cat.rgb[c] * shade * brightness + pixel_noise(seed, y, x, c + 3), 0.0, 1.0);
          scene.image[(static_cast<size_t>(c) * S + y) * S + x] = static_cast<float>(val);
        }
      }
    }

    // Analytic 4-DoF grasps with synthetic force-closure scores. Scores are
    // redrawn (bounded) until at least one clears the filter threshold so
    // every object stays graspable after filtering.
    const double closing = wrap_half_pi(cat.shape == "box" ? pl.orientation + kPi / 2
                                                           : 0.0);
    std::vector<GraspRect> grasps;
    const int k = std::max(1, cfg.grasps_per_object);
    for (int gi = 0; gi < k; ++gi) {
      GraspRect g;
      double ecc = 0.0;
      if (cat.shape == "box") {
        const double offsets[] = {0.0, 0.40, -0.40, 0.65, -0.65};
        const double off = offsets[gi % 5] * a;
        g.x = pl.cx + std::cos(pl.orientation) * off;
        g.y = pl.cy + std::sin(pl.orientation) * off;
        g.theta = closing;
        g.w = 2.0 * b * 1.35;
        ecc = std::abs(off) / a;
      } else {
        const double ang = -kPi / 2 + (gi + 0.5) * kPi / k + rng.uniform(-0.05, 0.05);
        g.x = pl.cx;
        g.y = pl.cy;
        g.theta = wrap_half_pi(ang);
        g.w = 2.0 * r * 1.25;
      }
      g.h = g.w * cfg.rect_height_ratio;
      g.score = std::clamp(rng.beta(5.0, 2.0) - 0.25 * ecc * ecc, 0.02, 0.99);
      grasps.push_back(g);
    }
    for (int redraw = 0; redraw < 20; ++redraw) {
      bool any = false;
      for (const auto& g : grasps) any = any || g.score >= cfg.filter_threshold;
      if (any) break;
      for (auto& g : grasps) g.score = std::clamp(rng.beta(5.0, 2.0), 0.02, 0.99);
    }
    if (std::none_of(grasps.begin(), grasps.end(),
                     [&](const GraspRect& g) { return g.score >= cfg.filter_threshold; }))
      grasps.front().score = 0.85;
    obj.grasps4 = grasps;

    // Planted 6-DoF poses consistent with the rects under the pinhole model.
    for (const auto& g : obj.grasps4) {
      Grasp6DoF pose;
      const double z = obj.top_z;
      pose.translation = {(g.x - scene.intrinsics.cx) * z / scene.intrinsics.fx,
                          (g.y - scene.intrinsics.cy) * z / scene.intrinsics.fy, z};
      const double ct = std::cos(g.theta), st = std::sin(g.theta);
      pose.rotation = mat_from_cols({ct, st, 0}, {-st, ct, 0}, {0, 0, 1});
      pose.opening = g.w * z / scene.intrinsics.fx;
      pose.score = g.score;
      obj.grasps6.push_back(pose);
    }

    scene.objects.push_back(std::move(obj));
  }
  return scene;
}

std::vector<std::string> default_templates() {
  return {"grasp the {object}",   "locate the {object}", "pick up the {object}",
          "grab the {object}",    "fetch the {object}",  "hand me the {object}",
          "find the {object}",    "get the {object}",    "retrieve the {object}",
          "reach for the {object}"};
}

std::vector<GraspRect> filter_grasps(const std::vector<GraspRect>& grasps, double threshold) {
  std::vector<GraspRect> out;
  for (const auto& g : grasps)
    if (g.score >= threshold) out.push_back(g);
  return out;
}

std::vector<int> resolve_attrs(const SceneRecord& scene, const ParsedAttrs& attrs) {
  std::vector<const SceneObject*> cands;
  for (const auto& o : scene.objects) {
    if (!attrs.noun.empty() && o.category != attrs.noun) continue;
    if (!attrs.color.empty() && o.color != attrs.color) continue;
    if (!attrs.shape_word.empty() && shape_word_for(o.shape) != attrs.shape_word) continue;
    if (!attrs.quadrant.empty() && quadrant_of(o.cx, o.cy, scene.image_size) != attrs.quadrant)
      continue;
    cands.push_back(&o);
  }
  if (!attrs.superlative.empty() && !cands.empty()) {
    auto key = [&](const SceneObject* o) -> double {
      if (attrs.superlative == "leftmost") return -o->cx;
      if (attrs.superlative == "rightmost") return o->cx;
      if (attrs.superlative == "front") return o->cy;
      if (attrs.superlative == "rear") return -o->cy;
      if (attrs.superlative == "nearest") return -o->top_z;
      if (attrs.superlative == "furthest") return o->top_z;
      throw InvalidArgumentError("unknown superlative: " + attrs.superlative);
    };
    const SceneObject* best = cands[0];
    for (const auto* o : cands)
      if (key(o) > key(best)) best = o;
    cands = {best};
  }
  std::vector<int> ids;
  for (const auto* o : cands) ids.push_back(o->object_id);
  return ids;
}

namespace {

struct QualifierCombo {
  bool color = false, shape = false, quadrant = false;
  std::string superlative;  // empty = none

  size_t mentions() const {
    return (color ? 1 : 0) + (shape ? 1 : 0) + (quadrant ? 1 : 0) + (superlative.empty() ? 0 : 1);
  }
};

std::string noun_phrase(const SceneObject& o, const QualifierCombo& c, uint32_t image_size) {
  std::string np;
  if (c.superlative == "leftmost" || c.superlative == "rightmost") np += c.superlative + " ";
  if (c.color) np += o.color + " ";
  if (c.shape) np += shape_word_for(o.shape) + " ";
  np += o.category;
  if (c.quadrant) np += " near the " + quadrant_of(o.cx, o.cy, image_size);
  if (c.superlative == "front") np += " at the front";
  if (c.superlative == "rear") np += " at the rear";
  if (c.superlative == "nearest") np += " nearest to the camera";
  if (c.superlative == "furthest") np += " furthest from the camera";
  return np;
}

ParsedAttrs attrs_of(const SceneObject& o, const QualifierCombo& c, uint32_t image_size) {
  ParsedAttrs a;
  a.noun = o.category;
  if (c.color) a.color = o.color;
  if (c.shape) a.shape_word = shape_word_for(o.shape);
  if (c.quadrant) a.quadrant = quadrant_of(o.cx, o.cy, image_size);
  a.superlative = c.superlative;
  return a;
}

}  // namespace

void gen_expressions(SceneRecord& scene, const std::vector<std::string>& templates,
                     uint64_t seed) {
  if (templates.empty()) throw InvalidArgumentError("no expression templates");
  const std::vector<std::string> superlatives = {"leftmost", "rightmost", "front",
                                                 "rear",     "nearest",   "furthest"};
  scene.expressions.clear();
  for (const auto& obj : scene.objects) {
    Rng rng(seed, {0x657870ull, scene.scene_id, static_cast<uint64_t>(obj.object_id)});

    // All combos grouped by mention count.
    std::vector<std::vector<QualifierCombo>> by_level(5);
    for (int color = 0; color <= 1; ++color)
      for (int shape = 0; shape <= 1; ++shape)
        for (int quad = 0; quad <= 1; ++quad)
          for (size_t sup = 0; sup <= superlatives.size(); ++sup) {
            QualifierCombo c;
            c.color = color;
            c.shape = shape;
            c.quadrant = quad;
            if (sup > 0) c.superlative = superlatives[sup - 1];
            const size_t m = c.mentions();
            if (m <= 4) by_level[m].push_back(c);
          }
    for (auto& level : by_level) rng.shuffle(level);

    bool all_levels = true;
    for (size_t level = 1; level <= 4; ++level) {
      bool emitted = false;
      // Level 1 admits the bare noun (count floor of 1) plus any single
      // qualifier; higher levels need exactly `level` qualifier mentions.
      std::vector<QualifierCombo> candidates;
      if (level == 1) {
        candidates.push_back(QualifierCombo{});
        for (const auto& c : by_level[1]) candidates.push_back(c);
      } else {
        candidates = by_level[level];
      }
      for (const auto& combo : candidates) {
        const auto ids = resolve_attrs(scene, attrs_of(obj, combo, scene.image_size));
        if (ids.size() == 1 && ids[0] == obj.object_id) {
          std::string text = templates[rng.integer(templates.size())];
          const auto pos = text.find("{object}");
          if (pos == std::string::npos)
            throw InvalidArgumentError("template lacks {object} slot: " + text);
          text.replace(pos, 8, noun_phrase(obj, combo, scene.image_size));
          scene.expressions.push_back(
              {text, obj.object_id, static_cast<int>(std::max<size_t>(combo.mentions(), 1))});
          emitted = true;
          break;
        }
      }
      if (!emitted) all_levels = false;
    }
    if (!all_levels) scene.has_ambiguous_objects = true;
  }
}

SplitSpec make_splits(const std::vector<std::string>& categories,
                      const std::vector<SceneSummary>& scenes, double seen_fraction,
                      uint64_t seed) {
  if (categories.size() < 2) throw InvalidArgumentError("need at least 2 categories");
  if (!(seen_fraction > 0.0 && seen_fraction <= 1.0))
    throw InvalidArgumentError("seen_fraction must be in (0,1]");
  SplitSpec spec;
  std::vector<std::string> shuffled = categories;
  Rng rng(seed, {0x73706C6974ull});
  rng.shuffle(shuffled);
  const size_t n_seen = static_cast<size_t>(
      std::llround(seen_fraction * static_cast<double>(categories.size())));
  spec.seen_categories.assign(shuffled.begin(), shuffled.begin() + n_seen);
  spec.unseen_categories.assign(shuffled.begin() + n_seen, shuffled.end());
  std::sort(spec.seen_categories.begin(), spec.seen_categories.end());
  std::sort(spec.unseen_categories.begin(), spec.unseen_categories.end());

  auto is_unseen = [&](const std::string& c) {
    return std::binary_search(spec.unseen_categories.begin(), spec.unseen_categories.end(), c);
  };

  spec.splits = {{"train", {}}, {"val", {}}, {"test_seen", {}}, {"test_unseen", {}}};
  std::vector<uint64_t> seen_only;
  for (const auto& s : scenes) {
    const bool has_unseen = std::any_of(s.categories.begin(), s.categories.end(), is_unseen);
    if (has_unseen)
      spec.splits["test_unseen"].push_back(s.scene_id);
    else
      seen_only.push_back(s.scene_id);
  }
  rng.shuffle(seen_only);
  const size_t n = seen_only.size();
  const size_t n_train = static_cast<size_t>(std::llround(0.7 * n));
  const size_t n_val = static_cast<size_t>(std::llround(0.1 * n));
  for (size_t i = 0; i < n; ++i) {
    const char* split = i < n_train ? "train" : (i < n_train + n_val ? "val" : "test_seen");
    spec.splits[split].push_back(seen_only[i]);
  }
  for (auto& [name, ids] : spec.splits) std::sort(ids.begin(), ids.end());
  return spec;
}

}  // namespace grasptk
