#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "grasptk/errors.hpp"
#include "grasptk/metrics.hpp"
#include "grasptk/rng.hpp"
#include "testsupport/oracles.hpp"

using namespace grasptk;
constexpr double kPi = std::numbers::pi;

namespace {
GraspRect random_rect(Rng& rng) {
  return {rng.uniform(0, 40), rng.uniform(0, 40), rng.uniform(4, 25),
          rng.uniform(-kPi / 2, kPi / 2), rng.uniform(2, 14), 1.0};
}

Lexicon lexicon_with_nouns() {
  auto lex = Lexicon::builtin();
  lex.nouns = {"box", "ball", "cup"};
  return lex;
}
}  // namespace

TEST_CASE("identical rects have IoU exactly 1") {
  GraspRect r{10, 12, 8, 0.7, 4, 1.0};
  CHECK(rect_iou(r, r) == 1.0);
}

TEST_CASE("distant rects have IoU 0") {
  GraspRect a{0, 0, 10, 0.3, 5, 1.0};
  GraspRect b{1000, 1000, 10, -0.3, 5, 1.0};
  CHECK(rect_iou(a, b) == 0.0);
}

TEST_CASE("axis-aligned overlap matches the analytic value") {
  GraspRect a{10, 10, 10, 0, 4, 1.0};
  GraspRect b{12, 10, 10, 0, 4, 1.0};
  // intersection 8*4 = 32, union 80 - 32 = 48
  CHECK(rect_iou(a, b) == doctest::Approx(32.0 / 48.0).epsilon(1e-9));
}

TEST_CASE("rect_iou matches the axis-aligned closed form to 1e-9") {
  Rng rng(21);
  for (int i = 0; i < 50; ++i) {
    GraspRect a = random_rect(rng);
    GraspRect b = random_rect(rng);
    a.theta = 0;
    b.theta = 0;
    CHECK(rect_iou(a, b) == doctest::Approx(oracles::axis_aligned_iou(a, b)).epsilon(1e-9));
  }
}

TEST_CASE("rect_iou agrees with a Monte-Carlo oracle on rotated pairs") {
  Rng rng(42);
  for (int i = 0; i < 20; ++i) {
    GraspRect a = random_rect(rng);
    GraspRect b = random_rect(rng);
    b.x = a.x + rng.uniform(-10, 10);
    b.y = a.y + rng.uniform(-10, 10);
    const double exact = rect_iou(a, b);
    const double mc = oracles::mc_rect_iou(a, b, 100000, 1000 + i);
    CHECK(std::abs(exact - mc) < 0.01);
  }
}

TEST_CASE("rect_iou is symmetric and pi-periodic in angle") {
  Rng rng(9);
  for (int i = 0; i < 30; ++i) {
    GraspRect a = random_rect(rng);
    GraspRect b = random_rect(rng);
    CHECK(rect_iou(a, b) == doctest::Approx(rect_iou(b, a)).epsilon(1e-12));
    GraspRect a2 = a;
    a2.theta += kPi;
    GraspRect b2 = b;
    b2.theta += kPi;
    CHECK(rect_iou(a2, b2) == doctest::Approx(rect_iou(a, b)).epsilon(1e-9));
  }
}

TEST_CASE("degenerate rects are rejected") {
  GraspRect a{0, 0, 0, 0, 4, 1.0};
  GraspRect b{0, 0, 5, 0, 4, 1.0};
  CHECK_THROWS_AS(rect_iou(a, b), ZeroAreaError);
}

TEST_CASE("angle_diff basics") {
  CHECK(angle_diff_deg(0.3, 0.3) == doctest::Approx(0.0));
  const double d85 = 85.0 * kPi / 180.0;
  CHECK(angle_diff_deg(d85, -d85) == doctest::Approx(10.0).epsilon(1e-9));
}

TEST_CASE("angle_diff matches brute force over wrap offsets") {
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const double a = rng.uniform(-kPi / 2, kPi / 2);
    const double b = rng.uniform(-kPi / 2, kPi / 2);
    CHECK(angle_diff_deg(a, b) == doctest::Approx(oracles::brute_angle_diff_deg(a, b)).epsilon(1e-9));
  }
}

TEST_CASE("grasp_success thresholds per the evaluation protocol") {
  GraspRect gt{10, 10, 10, 0, 4, 1.0};

  // IoU 0.30-ish with small angle error: success.
  GraspRect close_pred{11, 10, 10, 20.0 * kPi / 180.0, 4, 1.0};
  REQUIRE(rect_iou(close_pred, gt) > 0.25);
  CHECK(grasp_success(close_pred, {gt}));

  // IoU below 0.25: failure even with perfect angle.
  GraspRect far_pred{10 + 7.0, 10, 10, 0, 4, 1.0};
  REQUIRE(rect_iou(far_pred, gt) < 0.25);
  CHECK_FALSE(grasp_success(far_pred, {gt}));

  // IoU exactly 0.25 must fail (strict inequality): dx = 6 on a 10x4 pair
  // makes intersection 16 and union 64.
  GraspRect boundary{16, 10, 10, 0, 4, 1.0};
  REQUIRE(rect_iou(boundary, gt) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK_FALSE(grasp_success(boundary, {gt}));

  // Angle at or beyond 30 degrees fails even with high IoU.
  GraspRect turned{10, 10, 10, 30.0000001 * kPi / 180.0, 4, 1.0};
  REQUIRE(angle_diff_deg(turned.theta, gt.theta) >= 30.0);
  CHECK_FALSE(grasp_success(turned, {gt}));

  CHECK_THROWS_AS(grasp_success(close_pred, {}), EmptyGroundTruthError);
}

TEST_CASE("grasp_success is invariant to gt order") {
  Rng rng(17);
  GraspRect pred = random_rect(rng);
  std::vector<GraspRect> gts;
  for (int i = 0; i < 6; ++i) gts.push_back(random_rect(rng));
  const bool fwd = grasp_success(pred, gts);
  std::reverse(gts.begin(), gts.end());
  CHECK(grasp_success(pred, gts) == fwd);
}

namespace {
Grasp6DoF pose_at(double x, double y, double z, double roll) {
  Grasp6DoF g;
  const double c = std::cos(roll), s = std::sin(roll);
  g.rotation = mat_from_cols({c, s, 0}, {-s, c, 0}, {0, 0, 1});
  g.translation = {x, y, z};
  g.opening = 0.05;
  g.score = 0.5;
  return g;
}
}  // namespace

TEST_CASE("success_6dof basics") {
  const auto a = pose_at(0.1, 0.2, 0.5, 0.3);
  CHECK(success_6dof(a, {a}));

  const auto far = pose_at(0.15, 0.2, 0.5, 0.3);  // 5 cm away
  CHECK_FALSE(success_6dof(far, {a}, 0.02, 15.0));

  CHECK_THROWS_AS(success_6dof(a, {}), EmptyGroundTruthError);
}

TEST_CASE("success_6dof matches an exhaustive pairwise check") {
  Rng rng(8);
  for (int trial = 0; trial < 40; ++trial) {
    const auto sel = pose_at(rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2),
                             rng.uniform(0.3, 0.7), rng.uniform(-1.5, 1.5));
    std::vector<Grasp6DoF> pool;
    for (int i = 0; i < 8; ++i)
      pool.push_back(pose_at(rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2),
                             rng.uniform(0.3, 0.7), rng.uniform(-1.5, 1.5)));
    bool expect = false;
    for (const auto& gt : pool) {
      const double dt = norm(sub(sel.translation, gt.translation));
      const Mat3 rel = mat_mul(mat_transpose(gt.rotation), sel.rotation);
      const double tr = std::clamp((rel[0] + rel[4] + rel[8] - 1.0) / 2.0, -1.0, 1.0);
      const double ang = std::acos(tr) * 180.0 / kPi;
      expect = expect || (dt <= 0.05 && ang <= 25.0);
    }
    CHECK(success_6dof(sel, pool, 0.05, 25.0) == expect);
  }
}

TEST_CASE("complexity binning follows the qualifier count with a noun floor") {
  const auto lex = lexicon_with_nouns();
  CHECK(complexity_bin("Grasp the red circular box near the top right of the image", lex) ==
        Band::L3);
  CHECK(complexity_bin("Grasp the box", lex) == Band::L1);
  CHECK(complexity_bin("grab the red rectangular box near the bottom left", lex) == Band::L3);
  CHECK(complexity_bin("the leftmost red round ball near the top left", lex) == Band::L4);
  CHECK_THROWS_AS(complexity_bin("jibber jabber nonsense", lex), UnrecognizedExpressionError);
}

TEST_CASE("aggregate counts top-1 and top-k per the worked example") {
  // Build four records: top-1 outcomes {T,F,T,F}, top-5 outcomes {T,T,T,F}.
  GraspRect gt{10, 10, 10, 0, 5, 1.0};
  GraspRect hit = gt;
  GraspRect miss{40, 40, 10, 0, 5, 1.0};
  std::vector<EvalRecord> records = {
      {{hit}, {gt}, Band::L1},
      {{miss, hit}, {gt}, Band::L2},
      {{hit, miss}, {gt}, Band::L2},
      {{miss, miss}, {gt}, Band::L3},
  };
  const auto rep = aggregate(records, 5);
  CHECK(rep.top1_success_rate == doctest::Approx(0.5));
  CHECK(rep.topk_success_rate == doctest::Approx(0.75));
  CHECK(rep.n_records == 4);
  size_t total = 0;
  for (const auto& [band, n] : rep.per_band_counts) total += n;
  CHECK(total == rep.n_records);
  CHECK(rep.per_band.at(Band::L2) == doctest::Approx(0.5));
}

TEST_CASE("aggregate of all-failing records is zero") {
  GraspRect gt{10, 10, 10, 0, 5, 1.0};
  GraspRect miss{40, 40, 10, 0, 5, 1.0};
  std::vector<EvalRecord> records(3, {{miss}, {gt}, Band::L1});
  const auto rep = aggregate(records, 5);
  CHECK(rep.top1_success_rate == 0.0);
  CHECK(rep.topk_success_rate == 0.0);
}

TEST_CASE("aggregate matches a direct recount on random outcome tables") {
  Rng rng(12);
  GraspRect gt{10, 10, 10, 0, 5, 1.0};
  GraspRect hit = gt;
  GraspRect miss{40, 40, 10, 0, 5, 1.0};
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<EvalRecord> records;
    size_t expect_top1 = 0, expect_topk = 0;
    const size_t n = 1 + rng.integer(30);
    const size_t k = 3;
    for (size_t i = 0; i < n; ++i) {
      EvalRecord rec;
      rec.gts = {gt};
      rec.band = static_cast<Band>(1 + rng.integer(4));
      const size_t preds = rng.integer(5);
      bool any = false, first = false;
      for (size_t p = 0; p < preds; ++p) {
        const bool s = rng.uniform() < 0.4;
        rec.preds.push_back(s ? hit : miss);
        if (p == 0) first = s;
        if (p < k) any = any || s;
      }
      expect_top1 += first ? 1 : 0;
      expect_topk += any ? 1 : 0;
      records.push_back(std::move(rec));
    }
    const auto rep = aggregate(records, k);
    CHECK(rep.top1_success_rate == doctest::Approx(double(expect_top1) / n));
    CHECK(rep.topk_success_rate == doctest::Approx(double(expect_topk) / n));
    CHECK(rep.topk_success_rate >= rep.top1_success_rate);
  }
  CHECK_THROWS_AS(aggregate({}, 5), EmptyEvaluationError);
}

TEST_CASE("adding a failing record never increases the rates") {
  GraspRect gt{10, 10, 10, 0, 5, 1.0};
  GraspRect hit = gt;
  GraspRect miss{40, 40, 10, 0, 5, 1.0};
  std::vector<EvalRecord> records = {{{hit}, {gt}, Band::L1}, {{miss}, {gt}, Band::L1}};
  const auto before = aggregate(records, 3);
  records.push_back({{miss, miss}, {gt}, Band::L2});
  const auto after = aggregate(records, 3);
  CHECK(after.top1_success_rate <= before.top1_success_rate);
  CHECK(after.topk_success_rate <= before.topk_success_rate);
}
