#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "grasptk/geometry3d.hpp"
#include "grasptk/grasp_types.hpp"

namespace grasptk {

// Intersection-over-union of two rotated rectangles via convex polygon
// clipping. Throws ZeroAreaError when either rect is degenerate.
double rect_iou(const GraspRect& a, const GraspRect& b);

// Mod-pi angular distance in degrees, in [0, 90].
double angle_diff_deg(double a, double b);

struct SuccessThresholds {
  double iou = 0.25;        // success requires IoU strictly greater
  double angle_deg = 30.0;  // and angle difference strictly smaller
};

// A prediction succeeds when some ground-truth rect is matched within the
// thresholds. Throws EmptyGroundTruthError on an empty gt list.
bool grasp_success(const GraspRect& pred, const std::vector<GraspRect>& gts,
                   const SuccessThresholds& thr = {});

// 6-DoF correspondence: translation within tol_t meters and geodesic rotation
// distance within tol_r degrees of some pool member (both inclusive).
bool success_6dof(const Grasp6DoF& selected, const std::vector<Grasp6DoF>& gt_pool,
                  double tol_t = 0.02, double tol_r_deg = 15.0);

enum class Band : int { L1 = 1, L2 = 2, L3 = 3, L4 = 4 };

std::string band_name(Band b);

// Lowercased alphanumeric word split shared by the lexicon matcher and the
// dataset tokenizer.
std::vector<std::string> tokenize_words(const std::string& text);

struct Lexicon {
  std::vector<std::string> colors;
  std::vector<std::string> shapes;
  std::vector<std::string> spatial;  // may contain multi-word terms
  std::vector<std::string> nouns;

  static Lexicon builtin();
};

// Referring-expression complexity: the number of color/shape/spatial
// attribute mentions, floored at 1 when only the object noun is present and
// clamped to [1,4]. Throws UnrecognizedExpressionError when nothing in the
// expression matches the lexicon.
Band complexity_bin(const std::string& expression, const Lexicon& lexicon);

struct EvalRecord {
  std::vector<GraspRect> preds;  // ranked; may be empty (= automatic failure)
  std::vector<GraspRect> gts;
  Band band = Band::L1;
};

struct EvalReport {
  double top1_success_rate = 0.0;
  double topk_success_rate = 0.0;
  size_t k = 5;
  std::map<Band, double> per_band;          // top-1 rate per band
  std::map<Band, size_t> per_band_counts;
  size_t n_records = 0;
};

// Aggregates per-record outcomes: top-1 uses preds[0], top-k succeeds when
// any of the first k predictions succeeds. Throws EmptyEvaluationError on an
// empty record list.
EvalReport aggregate(const std::vector<EvalRecord>& records, size_t k,
                     const SuccessThresholds& thr = {});

}  // namespace grasptk
