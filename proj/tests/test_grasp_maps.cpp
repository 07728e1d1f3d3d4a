#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "grasptk/errors.hpp"
#include "grasptk/grasp_maps.hpp"
#include "grasptk/metrics.hpp"
#include "grasptk/rng.hpp"
#include "testsupport/oracles.hpp"

using namespace grasptk;
constexpr double kPi = std::numbers::pi;

TEST_CASE("single rect paints its center with quality 1") {
  GraspRect r{20, 30, 12, 0.0, 6, 1.0};
  const auto maps = rasterize_grasp_maps({r}, 64, 64);
  CHECK(maps.q(30, 20) == doctest::Approx(1.0));
  CHECK(maps.a(30, 20) == doctest::Approx(0.0));
  CHECK(maps.w(30, 20) == doctest::Approx(12.0));
  maps.validate(1e9);
}

TEST_CASE("empty rect list gives all-zero maps") {
  const auto maps = rasterize_grasp_maps({}, 32, 32);
  for (double q : maps.quality) CHECK(q == 0.0);
  for (double a : maps.angle) CHECK(a == 0.0);
  for (double w : maps.width) CHECK(w == 0.0);
}

TEST_CASE("rect fully outside the grid is rejected") {
  GraspRect r{-50, -50, 10, 0.3, 5, 1.0};
  CHECK_THROWS_AS(rasterize_grasp_maps({r}, 32, 32), OutOfBoundsError);
}

TEST_CASE("rasterized support matches a brute-force containment oracle, later rect wins") {
  GraspRect r1{20, 20, 18, 0.0, 9, 1.0};
  GraspRect r2{22, 20, 18, kPi / 4, 9, 1.0};
  const auto maps = rasterize_grasp_maps({r1, r2}, 40, 40);
  const auto c1 = oracles::central_third(r1);
  const auto c2 = oracles::central_third(r2);
  for (uint32_t row = 0; row < 40; ++row) {
    for (uint32_t col = 0; col < 40; ++col) {
      const bool in1 = oracles::point_in_rect_poly(col, row, c1);
      const bool in2 = oracles::point_in_rect_poly(col, row, c2);
      if (in2) {
        CHECK(maps.q(row, col) > 0.0);
        CHECK(maps.a(row, col) == doctest::Approx(wrap_half_pi(kPi / 4)));
      } else if (in1) {
        CHECK(maps.q(row, col) > 0.0);
        CHECK(maps.a(row, col) == doctest::Approx(0.0));
      } else {
        // Oracle boundary handling differs by <= vs < on exact edges; only
        // strictly interior/exterior pixels are comparable.
        const GraspRect shrink1{c1.x, c1.y, c1.w * 0.98, c1.theta, c1.h * 0.98, 1.0};
        const GraspRect shrink2{c2.x, c2.y, c2.w * 0.98, c2.theta, c2.h * 0.98, 1.0};
        if (!oracles::point_in_rect_poly(col, row, shrink1) &&
            !oracles::point_in_rect_poly(col, row, shrink2)) {
          const bool near_edge = oracles::point_in_rect_poly(
                                     col, row, {c1.x, c1.y, c1.w * 1.05, c1.theta, c1.h * 1.05, 1.0}) ||
                                 oracles::point_in_rect_poly(
                                     col, row, {c2.x, c2.y, c2.w * 1.05, c2.theta, c2.h * 1.05, 1.0});
          if (!near_edge) CHECK(maps.q(row, col) == 0.0);
        }
      }
    }
  }
}

TEST_CASE("decode_top1 returns the argmax pixel") {
  GraspMaps maps(16, 16);
  maps.q(5, 7) = 1.0;
  maps.a(5, 7) = 0.3;
  maps.w(5, 7) = 14.0;
  const auto r = decode_top1(maps);
  CHECK(r.x == doctest::Approx(7));
  CHECK(r.y == doctest::Approx(5));
  CHECK(r.w == doctest::Approx(14));
  CHECK(r.theta == doctest::Approx(0.3));
  CHECK(r.score == doctest::Approx(1.0));
  CHECK(r.h == doctest::Approx(7.0));  // default height ratio 0.5
}

TEST_CASE("decode_top1 breaks ties row-major") {
  GraspMaps maps(12, 12);
  maps.q(2, 2) = 0.9;
  maps.q(9, 9) = 0.9;
  const auto r = decode_top1(maps);
  CHECK(r.x == doctest::Approx(2));
  CHECK(r.y == doctest::Approx(2));
}

TEST_CASE("decode_top1 equals exhaustive argmax on random maps") {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    GraspMaps maps(48, 48);
    for (auto& q : maps.quality) q = rng.uniform();
    for (auto& a : maps.angle) a = rng.uniform(-kPi / 2, kPi / 2 - 1e-9);
    for (auto& w : maps.width) w = rng.uniform(0, 30);
    size_t best = 0;
    for (size_t i = 0; i < maps.quality.size(); ++i)
      if (maps.quality[i] > maps.quality[best]) best = i;
    const auto r = decode_top1(maps);
    CHECK(static_cast<size_t>(r.y) * 48 + static_cast<size_t>(r.x) == best);
  }
}

TEST_CASE("decode_top1 on an all-zero map is a NoGrasp error") {
  GraspMaps maps(8, 8);
  CHECK_THROWS_AS(decode_top1(maps), NoGraspError);
}

TEST_CASE("decode_topk: k=1 matches top1, suppression removes close peaks") {
  GraspMaps maps(32, 32);
  maps.q(10, 10) = 1.0;
  maps.q(11, 11) = 0.9;
  const auto top1 = decode_top1(maps);
  const auto k1 = decode_topk(maps, 1, 3);
  REQUIRE(k1.size() == 1);
  CHECK(k1[0].x == top1.x);
  CHECK(k1[0].y == top1.y);

  const auto k2 = decode_topk(maps, 2, 3);
  REQUIRE(k2.size() == 1);  // the 0.9 peak is inside the suppression window
  CHECK(k2[0].x == doctest::Approx(10));
}

TEST_CASE("decode_topk on all-zero quality returns an empty list") {
  GraspMaps maps(8, 8);
  CHECK(decode_topk(maps, 3, 2).empty());
}

TEST_CASE("decode_topk matches a greedy brute-force oracle on random maps") {
  Rng rng(77);
  for (int trial = 0; trial < 15; ++trial) {
    GraspMaps maps(24, 24);
    for (auto& q : maps.quality) q = rng.uniform();
    const uint32_t radius = 3;
    const auto got = decode_topk(maps, 5, radius);

    // Oracle: greedy scan with explicit suppression bookkeeping.
    std::vector<double> q = maps.quality;
    std::vector<std::pair<uint32_t, uint32_t>> expect;
    while (expect.size() < 5) {
      size_t best = 0;
      for (size_t i = 0; i < q.size(); ++i)
        if (q[i] > q[best]) best = i;
      if (q[best] <= 0.0) break;
      const uint32_t row = best / 24, col = best % 24;
      expect.push_back({row, col});
      for (uint32_t r = 0; r < 24; ++r)
        for (uint32_t c = 0; c < 24; ++c)
          if (std::max(std::abs(int(r) - int(row)), std::abs(int(c) - int(col))) <=
              static_cast<int>(radius))
            q[r * 24 + c] = 0.0;
    }
    REQUIRE(got.size() == expect.size());
    for (size_t i = 0; i < got.size(); ++i) {
      CHECK(static_cast<uint32_t>(got[i].y) == expect[i].first);
      CHECK(static_cast<uint32_t>(got[i].x) == expect[i].second);
    }
    // Scores non-increasing, centers pairwise separated (Chebyshev).
    for (size_t i = 1; i < got.size(); ++i) CHECK(got[i].score <= got[i - 1].score);
    for (size_t i = 0; i < got.size(); ++i)
      for (size_t j = i + 1; j < got.size(); ++j)
        CHECK(std::max(std::abs(got[i].x - got[j].x), std::abs(got[i].y - got[j].y)) >
              static_cast<double>(radius));
  }
}

TEST_CASE("angle codec identities") {
  auto [s0, c0] = angle_to_channels(0.0);
  CHECK(s0 == doctest::Approx(0.0));
  CHECK(c0 == doctest::Approx(1.0));
  CHECK(angle_from_channels(s0, c0) == doctest::Approx(0.0));

  auto [sp, cp] = angle_to_channels(kPi / 2);
  auto [sn, cn] = angle_to_channels(-kPi / 2);
  CHECK(sp == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(cp == doctest::Approx(-1.0));
  CHECK(sn == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(cn == doctest::Approx(-1.0));

  CHECK_THROWS_AS(angle_from_channels(0.0, 0.0), DegenerateAngleError);
}

TEST_CASE("angle codec round-trips 1000 random angles within 1e-12 mod pi") {
  Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    const double theta = rng.uniform(-kPi / 2, kPi / 2);
    auto [s, c] = angle_to_channels(theta);
    const double back = angle_from_channels(s, c);
    double d = std::fmod(std::abs(theta - back), kPi);
    d = std::min(d, kPi - d);
    CHECK(d < 1e-12);
  }
}

TEST_CASE("rasterize/decode round-trip recovers integer-centered rects") {
  Rng rng(99);
  int ok = 0;
  const int trials = 200;
  for (int i = 0; i < trials; ++i) {
    GraspRect r;
    r.x = static_cast<double>(8 + rng.integer(48));
    r.y = static_cast<double>(8 + rng.integer(48));
    r.w = rng.uniform(8.0, 24.0);
    r.h = r.w / 2;
    do {
      r.theta = rng.uniform(-kPi / 2, kPi / 2);
    } while (std::abs(std::abs(r.theta) - kPi / 2) < 0.05);
    r.score = 1.0;

    const auto maps = rasterize_grasp_maps({r}, 64, 64);
    const auto back = decode_top1(maps);
    const double iou = rect_iou(r, back);
    const double dtheta = angle_diff_deg(r.theta, back.theta);
    if (iou >= 0.95 && dtheta <= 2.0) ++ok;
  }
  CHECK(ok == trials);
}

TEST_CASE("rasterize output satisfies map invariants") {
  Rng rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<GraspRect> rects;
    for (int i = 0; i < 5; ++i) {
      rects.push_back({rng.uniform(10, 50), rng.uniform(10, 50), rng.uniform(6, 20),
                       rng.uniform(-kPi / 2, kPi / 2 - 1e-6), rng.uniform(3, 10), 1.0});
    }
    const auto maps = rasterize_grasp_maps(rects, 64, 64);
    maps.validate(25.0);
  }
}
