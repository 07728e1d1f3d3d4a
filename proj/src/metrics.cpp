#include "grasptk/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <sstream>

#include "grasptk/errors.hpp"

namespace grasptk {

namespace {

constexpr double kPi = std::numbers::pi;

using Poly = std::vector<std::array<double, 2>>;

// noinline keeps one compiled instance so equal polygons produce bit-equal
// areas at every call site (inlining can contract FMAs differently).
[[gnu::noinline]] double shoelace_area(const Poly& p) {
  double s = 0.0;
  for (size_t i = 0; i < p.size(); ++i) {
    const auto& a = p[i];
    const auto& b = p[(i + 1) % p.size()];
    s += a[0] * b[1] - b[0] * a[1];
  }
  return std::abs(s) / 2.0;
}

// Sutherland-Hodgman clip of a convex polygon against the half plane on the
// left of edge (e1 -> e2) for a counter-clockwise clip polygon. Vertices
// within a scale-aware epsilon of the edge line count as inside, so exactly
// coincident footprints clip to themselves (FMA contraction can turn an
// exact-zero cross product into +-1 ulp).
Poly clip_edge(const Poly& poly, const std::array<double, 2>& e1, const std::array<double, 2>& e2) {
  Poly out;
  const double ex = e2[0] - e1[0], ey = e2[1] - e1[1];
  const double eps = 1e-9 * (1.0 + std::abs(ex) + std::abs(ey));
  auto side = [&](const std::array<double, 2>& p) {
    return ex * (p[1] - e1[1]) - ey * (p[0] - e1[0]);
  };
  for (size_t i = 0; i < poly.size(); ++i) {
    const auto& cur = poly[i];
    const auto& prev = poly[(i + poly.size() - 1) % poly.size()];
    const double sc = side(cur), sp = side(prev);
    if (sc >= -eps) {
      if (sp < -eps) {
        const double t = sp / (sp - sc);
        out.push_back({prev[0] + t * (cur[0] - prev[0]), prev[1] + t * (cur[1] - prev[1])});
      }
      out.push_back(cur);
    } else if (sp >= -eps) {
      const double t = sp / (sp - sc);
      out.push_back({prev[0] + t * (cur[0] - prev[0]), prev[1] + t * (cur[1] - prev[1])});
    }
  }
  return out;
}

Poly counter_clockwise(const GraspRect& r) {
  auto cs = r.corners();
  Poly p(cs.begin(), cs.end());
  // corners() walks counter-clockwise in (x, y up) convention; with image
  // y-down it is clockwise, so flip when the signed area is negative.
  double s = 0.0;
  for (size_t i = 0; i < p.size(); ++i) {
    const auto& a = p[i];
    const auto& b = p[(i + 1) % p.size()];
    s += a[0] * b[1] - b[0] * a[1];
  }
  if (s < 0) std::reverse(p.begin(), p.end());
  return p;
}

}  // namespace

double rect_iou(const GraspRect& a, const GraspRect& b) {
  if (!(a.w * a.h > 0.0) || !(b.w * b.h > 0.0)) throw ZeroAreaError("degenerate grasp rect");
  Poly subject = counter_clockwise(a);
  const Poly clip = counter_clockwise(b);
  // Shoelace for every area term so identical footprints give exactly 1.
  const double area_a = shoelace_area(subject);
  const double area_b = shoelace_area(clip);
  for (size_t i = 0; i < clip.size() && !subject.empty(); ++i) {
    subject = clip_edge(subject, clip[i], clip[(i + 1) % clip.size()]);
  }
  const double inter = subject.size() >= 3 ? shoelace_area(subject) : 0.0;
  // Grouped so a full-overlap intersection cancels area_b exactly.
  const double uni = area_a + (area_b - inter);
  return std::clamp(inter / uni, 0.0, 1.0);
}

double angle_diff_deg(double a, double b) {
  if (!std::isfinite(a) || !std::isfinite(b)) throw InvalidArgumentError("non-finite angle");
  double d = std::fmod(std::abs(a - b), kPi);
  d = std::min(d, kPi - d);
  return d * 180.0 / kPi;
}

bool grasp_success(const GraspRect& pred, const std::vector<GraspRect>& gts,
                   const SuccessThresholds& thr) {
  if (gts.empty()) throw EmptyGroundTruthError("no ground-truth grasps");
  for (const auto& gt : gts) {
    if (rect_iou(pred, gt) > thr.iou && angle_diff_deg(pred.theta, gt.theta) < thr.angle_deg)
      return true;
  }
  return false;
}

bool success_6dof(const Grasp6DoF& selected, const std::vector<Grasp6DoF>& gt_pool,
                  double tol_t, double tol_r_deg) {
  if (gt_pool.empty()) throw EmptyGroundTruthError("empty 6-DoF ground-truth pool");
  if (!(tol_t > 0) || !(tol_r_deg > 0)) throw InvalidArgumentError("tolerances must be positive");
  for (const auto& gt : gt_pool) {
    const Vec3 d = sub(selected.translation, gt.translation);
    if (norm(d) > tol_t) continue;
    const Mat3 rel = mat_mul(mat_transpose(gt.rotation), selected.rotation);
    const double tr = std::clamp((rel[0] + rel[4] + rel[8] - 1.0) / 2.0, -1.0, 1.0);
    const double ang = std::acos(tr) * 180.0 / kPi;
    if (ang <= tol_r_deg) return true;
  }
  return false;
}

std::string band_name(Band b) { return "L" + std::to_string(static_cast<int>(b)); }

Lexicon Lexicon::builtin() {
  Lexicon lex;
  lex.colors = {"red",  "green",  "blue",   "yellow", "orange",
                "purple", "cyan", "magenta", "white", "black", "brown", "gray"};
  lex.shapes = {"round", "circular", "spherical", "rectangular", "square",
                "boxy", "cylindrical", "oblong"};
  lex.spatial = {"leftmost",  "rightmost",  "front",       "rear",        "top right",
                 "top left",  "bottom right", "bottom left", "nearest",   "furthest"};
  lex.nouns = {};  // dataset manifests supply the category nouns
  return lex;
}

std::vector<std::string> tokenize_words(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    if (std::isalnum(static_cast<unsigned char>(ch))) {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    } else if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

namespace {

size_t count_term(const std::vector<std::string>& tokens, const std::string& term) {
  const auto words = tokenize_words(term);
  if (words.empty()) return 0;
  size_t count = 0;
  for (size_t i = 0; i + words.size() <= tokens.size();) {
    bool match = true;
    for (size_t j = 0; j < words.size(); ++j)
      if (tokens[i + j] != words[j]) {
        match = false;
        break;
      }
    if (match) {
      ++count;
      i += words.size();
    } else {
      ++i;
    }
  }
  return count;
}

}  // namespace

Band complexity_bin(const std::string& expression, const Lexicon& lexicon) {
  if (expression.empty()) throw InvalidArgumentError("empty expression");
  const auto tokens = tokenize_words(expression);
  size_t qualifiers = 0;
  for (const auto& t : lexicon.colors) qualifiers += count_term(tokens, t);
  for (const auto& t : lexicon.shapes) qualifiers += count_term(tokens, t);
  for (const auto& t : lexicon.spatial) qualifiers += count_term(tokens, t);
  bool noun = false;
  for (const auto& t : lexicon.nouns)
    if (count_term(tokens, t) > 0) {
      noun = true;
      break;
    }
  if (qualifiers == 0 && !noun)
    throw UnrecognizedExpressionError("no lexicon match in: " + expression);
  const size_t count = std::clamp<size_t>(qualifiers == 0 ? 1 : qualifiers, 1, 4);
  return static_cast<Band>(count);
}

EvalReport aggregate(const std::vector<EvalRecord>& records, size_t k,
                     const SuccessThresholds& thr) {
  if (records.empty()) throw EmptyEvaluationError("no records to aggregate");
  EvalReport rep;
  rep.k = k;
  rep.n_records = records.size();
  std::map<Band, size_t> band_hits;
  size_t top1 = 0, topk = 0;
  for (const auto& rec : records) {
    bool s1 = false, sk = false;
    for (size_t i = 0; i < rec.preds.size() && i < k; ++i) {
      const bool s = grasp_success(rec.preds[i], rec.gts, thr);
      if (i == 0) s1 = s;
      if (s) {
        sk = true;
        break;
      }
    }
    top1 += s1 ? 1 : 0;
    topk += sk ? 1 : 0;
    rep.per_band_counts[rec.band] += 1;
    band_hits[rec.band] += s1 ? 1 : 0;
  }
  rep.top1_success_rate = static_cast<double>(top1) / records.size();
  rep.topk_success_rate = static_cast<double>(topk) / records.size();
  for (const auto& [band, n] : rep.per_band_counts)
    rep.per_band[band] = static_cast<double>(band_hits[band]) / static_cast<double>(n);
  return rep;
}

}  // namespace grasptk
