#include <doctest.h>

#include <map>
#include <vector>

#include "oracles.hpp"
#include "rectijac/datagen.hpp"
#include "rectijac/pixelbox.hpp"
#include "rectijac/pixelbox_kernel.hpp"

using namespace rectijac;

namespace {

RectilinearPolygon square(std::int32_t x0, std::int32_t y0, std::int32_t side) {
  return validate_polygon(std::vector<GridPoint>{
      {x0, y0}, {x0 + side, y0}, {x0 + side, y0 + side}, {x0, y0 + side}});
}

// Two overlapping generated blobs, optionally scaled.
std::pair<RectilinearPolygon, RectilinearPolygon> blob_pair(std::uint64_t i, std::int32_t s = 1) {
  auto r1 = keyed_rng(99, 0, i, 1);
  auto r2 = keyed_rng(99, 0, i, 2);
  const auto p = gen_polygon(r1, 40 + i % 200);
  auto q = gen_polygon(r2, 40 + (i * 7) % 200);
  q = translate(q, static_cast<std::int32_t>(i % 9) - 4, static_cast<std::int32_t>(i % 5) - 2);
  return {scale(p, s), scale(q, s)};
}

const std::vector<PixelBoxConfig> kConfigs{
    {64, 2048, 64}, {16, 128, 16}, {4, 8, 4}, {8, 1, 2}, {8, 3, 3}, {8, 50, 9}, {8, 1, 7},
};

}  // namespace

TEST_CASE("config defaults and checks") {
  const PixelBoxConfig d;
  CHECK(d.group_size == 64);
  CHECK(d.pixel_threshold == 2048);
  CHECK(d.fanout == 64);
  CHECK(PixelBoxConfig::for_group_size(16) == PixelBoxConfig{16, 128, 16});
  CHECK(d.scalar().fanout == 4);
  CHECK(d.scalar().pixel_threshold == d.pixel_threshold);
  CHECK_THROWS_AS((PixelBoxConfig{64, 0, 64}.check()), std::invalid_argument);
  CHECK_THROWS_AS((PixelBoxConfig{64, 10, 1}.check()), std::invalid_argument);
}

TEST_CASE("box position against a square") {
  const auto sq = square(0, 0, 4);
  CHECK(box_position({10, 10, 12, 12}, sq) == BoxPosition::Outside);
  CHECK(box_position({1, 1, 3, 3}, sq) == BoxPosition::Inside);
  CHECK(box_position({0, 0, 4, 4}, sq) == BoxPosition::Hover);  // vertices on the boundary

  const auto inner = square(1, 1, 2);
  CHECK(box_position({0, 0, 4, 4}, inner) == BoxPosition::Hover);  // vertices inside
  CHECK(box_position({0, 0, 2, 2}, inner) == BoxPosition::Hover);  // edge crossing
  CHECK(box_position({1, 1, 3, 3}, inner) == BoxPosition::Hover);
  CHECK(box_position({3, 0, 5, 5}, inner) == BoxPosition::Hover);  // vertices on its left edge
  CHECK(box_position({4, 0, 6, 5}, inner) == BoxPosition::Outside);
  CHECK(box_position({0, 3, 5, 5}, inner) == BoxPosition::Hover);
}

TEST_CASE("box position agrees with the pixels it covers") {
  for (std::uint64_t i = 0; i < 60; ++i) {
    const auto [p, q] = blob_pair(i);
    const auto cells = oracle::raster(p.vertices());
    const Mbr m = p.mbr();
    for (std::int32_t w = 1; w <= 6; ++w) {
      for (std::int32_t y = m.ylo - 2; y < m.yhi; y += 2) {
        for (std::int32_t x = m.xlo - 2; x < m.xhi; x += 3) {
          const Mbr box{x, y, x + w, y + w + 1};
          std::uint64_t in = 0;
          for (std::int32_t yy = box.ylo; yy < box.yhi; ++yy)
            for (std::int32_t xx = box.xlo; xx < box.xhi; ++xx) in += cells.count({xx, yy});
          const auto pos = box_position(box, p);
          if (pos == BoxPosition::Inside) REQUIRE(in == box.pixel_count());
          if (pos == BoxPosition::Outside) REQUIRE(in == 0);
        }
      }
    }
  }
}

TEST_CASE("partition examples") {
  const auto quads = partition_box({{0, 0, 8, 8}}, 4);
  REQUIRE(quads.size() == 4);
  std::vector<Mbr> got;
  for (const auto& b : quads) got.push_back(b.bounds);
  for (const Mbr& want : {Mbr{0, 0, 4, 4}, Mbr{4, 0, 8, 4}, Mbr{0, 4, 4, 8}, Mbr{4, 4, 8, 8}}) {
    CHECK(std::find(got.begin(), got.end(), want) != got.end());
  }

  const auto strips = partition_box({{0, 0, 5, 1}}, 4);
  REQUIRE(strips.size() == 4);
  std::vector<std::int64_t> widths;
  for (const auto& b : strips) {
    widths.push_back(b.bounds.width());
    CHECK(b.bounds.ylo == 0);
    CHECK(b.bounds.yhi == 1);
  }
  CHECK(widths == std::vector<std::int64_t>{2, 1, 1, 1});

  CHECK(partition_box({{0, 0, 2, 1}}, 64).size() == 2);
}

TEST_CASE("partition law") {
  for (std::int32_t w = 1; w <= 13; ++w) {
    for (std::int32_t h = 1; h <= 13; ++h) {
      if (w * h == 1) continue;
      for (std::uint32_t f : {2U, 3U, 4U, 5U, 9U, 16U, 17U, 64U}) {
        const SamplingBox box{{-3, 5, -3 + w, 5 + h}};
        const auto parts = partition_box(box, f);
        REQUIRE(parts.size() <= f);
        REQUIRE(parts.size() >= 2);
        std::map<oracle::Cell, int> seen;
        std::uint64_t total = 0;
        for (const auto& s : parts) {
          REQUIRE(!s.bounds.empty());
          REQUIRE(box.bounds.contains(s.bounds));
          total += s.size();
          for (std::int32_t y = s.bounds.ylo; y < s.bounds.yhi; ++y)
            for (std::int32_t x = s.bounds.xlo; x < s.bounds.xhi; ++x) ++seen[{x, y}];
        }
        REQUIRE(total == box.size());
        REQUIRE(seen.size() == box.size());
      }
    }
  }
}

TEST_CASE("pair examples") {
  const auto u = square(0, 0, 1);
  const PairAreas same = intersection_area_pixelbox(u, u);
  CHECK(same == PairAreas{1, 1, 1, 1});
  CHECK(pair_ratio(same) == 1.0);

  const auto a = square(0, 0, 2);
  const auto b = square(1, 1, 2);
  const PairAreas corner = intersection_area_pixelbox(a, b);
  CHECK(corner == PairAreas{4, 4, 1, 7});
  CHECK(intersection_area_oracle(a, b) == corner);
  CHECK(intersection_area_pixelonly(a, b) == corner);
  CHECK(*pair_ratio(corner) == doctest::Approx(1.0 / 7.0).epsilon(1e-15));

  CHECK_FALSE(pair_ratio(PairAreas::from(4, 4, 0)).has_value());

  const auto far = square(100, 100, 3);
  CHECK(intersection_area_pixelbox(a, far) == PairAreas{4, 9, 0, 13});
}

TEST_CASE("oracle equivalence across configurations") {
  for (std::uint64_t i = 0; i < 150; ++i) {
    for (std::int32_t s : {1, 3}) {
      const auto [p, q] = blob_pair(i, s);
      const auto ref = oracle::pair_areas(p.vertices(), q.vertices());
      const PairAreas want{ref.p, ref.q, ref.inter, ref.uni};
      REQUIRE(intersection_area_oracle(p, q) == want);
      REQUIRE(intersection_area_pixelonly(p, q) == want);
      for (const auto& cfg : kConfigs) {
        REQUIRE(intersection_area_pixelbox(p, q, cfg) == want);
        REQUIRE(intersection_area_pixelbox(p, q, cfg, KernelMode::Combined) == want);
      }
    }
  }
}

TEST_CASE("symmetry, idempotence and bounds") {
  for (std::uint64_t i = 0; i < 100; ++i) {
    const auto [p, q] = blob_pair(i, 2);
    const PixelBoxConfig cfg{8, 16, 4};
    const auto pq = intersection_area_pixelbox(p, q, cfg);
    const auto qp = intersection_area_pixelbox(q, p, cfg);
    CHECK(pq.area_intersection == qp.area_intersection);
    CHECK(pq.area_union == qp.area_union);
    CHECK(intersection_area_pixelbox(p, p, cfg).area_intersection == polygon_area(p));
    CHECK(pq.area_intersection <= std::min(pq.area_p, pq.area_q));
    CHECK(pq.area_union >= std::max(pq.area_p, pq.area_q));
  }
}

namespace {

// Watches a kernel run: every pixel of the root must be either in a live
// probing box on the stack or already settled, exactly once.
struct DisciplineObserver {
  Mbr root;
  const std::set<oracle::Cell>* p_cells;
  const std::set<oracle::Cell>* q_cells;
  std::map<oracle::Cell, int> settled;
  std::uint64_t steps = 0;
  std::uint64_t decided = 0;
  bool ok = true;

  std::uint64_t both_in(const Mbr& b) const {
    std::uint64_t n = 0;
    for (std::int32_t y = b.ylo; y < b.yhi; ++y)
      for (std::int32_t x = b.xlo; x < b.xhi; ++x)
        n += p_cells->count({x, y}) && q_cells->count({x, y});
    return n;
  }
  void settle(const Mbr& b) {
    for (std::int32_t y = b.ylo; y < b.yhi; ++y)
      for (std::int32_t x = b.xlo; x < b.xhi; ++x) ++settled[{x, y}];
  }
  void on_step(const detail::BoxStack& stack, std::size_t top) {
    ++steps;
    std::map<oracle::Cell, int> cover = settled;
    for (std::size_t i = 0; i < top; ++i) {
      if (!stack.probe[i]) continue;
      const Mbr b = stack.box(i);
      for (std::int32_t y = b.ylo; y < b.yhi; ++y)
        for (std::int32_t x = b.xlo; x < b.xhi; ++x) ++cover[{x, y}];
    }
    if (cover.size() != root.pixel_count()) ok = false;
    for (const auto& [cell, n] : cover) {
      if (n != 1 || !root.contains(GridPoint{cell.first, cell.second})) ok = false;
    }
  }
  void on_pixelized(const Mbr& b, std::uint64_t hits) {
    if (hits != both_in(b)) ok = false;
    settle(b);
  }
  void on_decided(const Mbr& b, BoxPosition, BoxPosition, std::uint64_t contribution) {
    ++decided;
    if (contribution != both_in(b)) ok = false;
    settle(b);
  }
};

}  // namespace

TEST_CASE("stack discipline and decidedness") {
  std::uint64_t decided = 0;
  for (std::uint64_t i = 0; i < 40; ++i) {
    const auto [p, q] = blob_pair(i, 3);
    const auto pc = oracle::raster(p.vertices());
    const auto qc = oracle::raster(q.vertices());
    const auto root = intersect(p.mbr(), q.mbr());
    if (!root) continue;
    for (const auto& cfg : {PixelBoxConfig{4, 4, 4}, PixelBoxConfig{8, 1, 9}, PixelBoxConfig{8, 20, 2}}) {
      DisciplineObserver obs{*root, &pc, &qc, {}, 0, 0, true};
      detail::BoxStack stack;
      const auto got = detail::run_kernel(p, q, cfg, KernelMode::Separated, stack, obs);
      REQUIRE(obs.ok);
      REQUIRE(stack.capacity() <= stack_capacity(root->pixel_count(), cfg));
      CHECK(got == intersection_area_oracle(p, q));
      decided += obs.decided;
    }
  }
  CHECK(decided > 0);  // the decided path was exercised
}

TEST_CASE("batch matches the sequential map at any pool width") {
  std::vector<std::pair<RectilinearPolygon, RectilinearPolygon>> owned;
  for (std::uint64_t i = 0; i < 400; ++i) owned.push_back(blob_pair(i, 2));
  owned.emplace_back(square(0, 0, 2), square(50, 50, 2));  // disjoint MBRs
  std::vector<PolygonPairRef> refs;
  for (const auto& [p, q] : owned) refs.push_back({&p, &q});

  const PixelBoxConfig cfg{16, 128, 16};
  std::vector<PairAreas> seq;
  for (const auto& r : refs) seq.push_back(intersection_area_pixelbox(*r.p, *r.q, cfg));
  CHECK(seq.back().area_intersection == 0);

  for (unsigned width : {1U, 2U, 5U}) {
    ExecutorPool pool(PoolKind::Batch, width);
    CHECK(intersection_area_batch(refs, cfg, pool) == seq);
  }
  ExecutorPool pool(PoolKind::Batch, 2);
  CHECK(intersection_area_batch({}, cfg, pool).empty());
}

TEST_CASE("batch errors carry the pair index") {
  const auto a = square(0, 0, 2);
  std::vector<PolygonPairRef> refs{{&a, &a}, {&a, nullptr}};
  ExecutorPool pool(PoolKind::Batch, 2);
  try {
    (void)intersection_area_batch(refs, {}, pool);
    FAIL("expected BatchError");
  } catch (const BatchError& e) {
    CHECK(e.pair_index() == 1);
  }
}

TEST_CASE("stack capacity covers deep refinement") {
  // A thin diagonal staircase forces Hover boxes at every level.
  std::vector<GridPoint> ring{{0, 0}};
  const int steps = 60;
  for (int k = 0; k < steps; ++k) {
    ring.push_back({k + 1, k});
    ring.push_back({k + 1, k + 1});
  }
  ring.push_back({0, steps});
  const auto stair = validate_polygon(ring);
  const auto big = square(0, 0, steps);
  for (const auto& cfg : kConfigs) {
    CHECK(intersection_area_pixelbox(stair, big, cfg) == intersection_area_oracle(stair, big));
  }
}
