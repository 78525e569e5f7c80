#include <doctest.h>

#include <atomic>
#include <chrono>
#include <mutex>
#include <thread>

#include "rectijac/datagen.hpp"
#include "rectijac/migration.hpp"
#include "rectijac/pipeline.hpp"

using namespace rectijac;
using namespace std::chrono_literals;

namespace {

TaskPtr task(std::size_t seq, std::size_t hint) {
  auto t = std::make_unique<TileTask>();
  t->seq = seq;
  t->tile_id = "t" + std::to_string(seq);
  t->size_hint = hint;
  return t;
}

}  // namespace

TEST_CASE("smallest task is stolen first") {
  TaskBuffer buf(8);
  buf.push(task(0, 5));
  buf.push(task(1, 900));
  buf.push(task(2, 12));
  auto got = take_smallest_tasks(buf, 1);
  REQUIRE(got.size() == 1);
  CHECK(got[0]->size_hint == 5);
  CHECK(buf.size() == 2);

  got = take_smallest_tasks(buf, 5);
  REQUIRE(got.size() == 2);
  CHECK(got[0]->size_hint == 12);
  CHECK(got[1]->size_hint == 900);
}

TEST_CASE("ties go to the oldest and sentinels are never taken") {
  TaskBuffer buf(8);
  buf.push(task(0, 7));
  buf.push(nullptr);
  buf.push(task(1, 3));
  buf.push(task(2, 3));
  auto got = take_smallest_tasks(buf, 1);
  CHECK(got[0]->seq == 1);
  got = take_oldest_tasks(buf, 10);
  REQUIRE(got.size() == 2);
  CHECK(got[0]->seq == 0);
  CHECK(got[1]->seq == 2);
  REQUIRE(buf.size() == 1);
  CHECK(buf.pop() == nullptr);
}

TEST_CASE("dormant worker runs only when notified") {
  std::atomic<int> runs{0};
  DormantWorker w([&] { ++runs; });
  std::this_thread::sleep_for(20ms);
  CHECK(runs == 0);
  w.notify();
  for (int i = 0; i < 200 && runs == 0; ++i) std::this_thread::sleep_for(1ms);
  CHECK(runs >= 1);
  w.stop();
  const int after = runs;
  w.notify();
  std::this_thread::sleep_for(10ms);
  CHECK(runs == after);
}

namespace {

struct Rig {
  TaskBuffer parser_in{16};
  TaskBuffer aggregator_in{2};
  ExecutorPool stage{PoolKind::Stage, 2};
  ExecutorPool batch{PoolKind::Batch, 2};
  std::mutex mu;
  std::vector<TaskPtr> parsed;
  std::vector<TileResult> results;
  std::vector<std::string> parse_calls;

  TaskMigrator::Wiring wiring() {
    return {parser_in,
            aggregator_in,
            stage,
            batch,
            PixelBoxConfig{},
            [this](TileTask& t) {
              std::lock_guard lock(mu);
              parse_calls.push_back(t.tile_id);
            },
            [this](TaskPtr t) {
              std::lock_guard lock(mu);
              parsed.push_back(std::move(t));
            },
            [this](TileResult r) {
              std::lock_guard lock(mu);
              results.push_back(std::move(r));
            },
            [](std::exception_ptr) {}};
  }
};

}  // namespace

TEST_CASE("idleness moves pending parse tasks to the batch pool") {
  Rig rig;
  rig.parser_in.push(task(0, 0));
  rig.parser_in.push(task(1, 0));
  rig.parser_in.push(task(2, 0));
  TaskMigrator mig({true, 2}, rig.wiring());
  CHECK(mig.on_idleness() == 2);
  CHECK(rig.parsed.size() == 2);
  CHECK(rig.parse_calls == std::vector<std::string>{"t0", "t1"});
  const auto s = mig.stats();
  CHECK(s.idleness_steals == 2);
  CHECK(s.parse.batch == 2);

  // A non-empty aggregator input suppresses the trigger.
  rig.aggregator_in.push(task(9, 1));
  CHECK(mig.on_idleness() == 0);
  CHECK(rig.parser_in.size() == 1);
}

TEST_CASE("congestion runs the smallest aggregation task on the stage pool") {
  Rig rig;
  GenSpec spec;
  spec.polygons_per_tile = 20;
  const auto tp = gen_tile_pair(spec, 0);
  auto make = [&](std::size_t seq) {
    auto t = task(seq, 0);
    t->set_a = std::make_shared<const PolygonFile>(tp.a);
    t->set_b = std::make_shared<const PolygonFile>(tp.b);
    t->candidates = mbr_join(tp.a.polygons, tp.b.polygons);
    t->size_hint = t->candidates.size() + seq;
    return t;
  };
  TaskMigrator mig({true, 1}, rig.wiring());
  rig.aggregator_in.push(make(1));
  CHECK(mig.on_congestion() == 0);  // not full yet
  rig.aggregator_in.push(make(0));
  CHECK(mig.on_congestion() == 1);
  REQUIRE(rig.results.size() == 1);
  CHECK(rig.results[0].tile_id == "t0");
  CHECK(rig.results[0].pairs.size() == mbr_join(tp.a.polygons, tp.b.polygons).size());
  CHECK(rig.aggregator_in.size() == 1);
  const auto s = mig.stats();
  CHECK(s.congestion_steals == 1);
  CHECK(s.aggregate.stage == 1);
  CHECK(s.idleness_steals == 0);
}

TEST_CASE("forced congestion steals and leaves the report unchanged") {
  GenSpec spec;
  spec.tiles = 24;
  spec.polygons_per_tile = 60;
  const auto m = generate_corpus(spec);

  PipelineConfig off;
  off.workers = 2;
  off.pixelbox = PixelBoxConfig::for_group_size(16);
  const auto base = run_pipeline(m, off);
  CHECK(base.migration.congestion_steals == 0);
  CHECK(base.migration.idleness_steals == 0);
  CHECK(base.migration.parse.stage == spec.tiles);
  CHECK(base.migration.aggregate.batch == spec.tiles);

  PipelineConfig on = off;
  on.buffer_capacity = 1;
  on.batch_min = 1;
  on.batch_throttle = 20;
  on.migration.enabled = true;
  const auto r = run_pipeline(m, on);
  CHECK(r.migration.congestion_steals >= 1);
  CHECK(r.migration.aggregate.stage >= r.migration.congestion_steals);
  CHECK(r.migration.parse.total() == spec.tiles);
  CHECK(r.migration.aggregate.total() == spec.tiles);
  CHECK(r.migration.parse.batch == r.migration.idleness_steals);
  CHECK(to_json(r, false) == to_json(base, false));
}

TEST_CASE("slow parser triggers idleness steals") {
  GenSpec spec;
  spec.tiles = 20;
  spec.polygons_per_tile = 60;
  const auto m = generate_corpus(spec);
  PipelineConfig cfg;
  cfg.workers = 1;
  cfg.parse_throttle = 6;
  cfg.migration.enabled = true;
  const auto r = run_pipeline(m, cfg);
  CHECK(r.migration.idleness_steals >= 1);
  CHECK(r.migration.parse.total() == spec.tiles);

  cfg.migration.enabled = false;
  CHECK(to_json(run_pipeline(m, cfg), false) == to_json(r, false));
}

TEST_CASE("executor throttle stretches batches") {
  ExecutorPool fast(PoolKind::Batch, 1);
  ExecutorPool slow(PoolKind::Batch, 1, 4.0);
  auto spin = [](std::size_t) {
    const auto end = std::chrono::steady_clock::now() + 5ms;
    while (std::chrono::steady_clock::now() < end) {
    }
  };
  const auto t0 = std::chrono::steady_clock::now();
  fast.run_batch(2, spin);
  const auto t1 = std::chrono::steady_clock::now();
  slow.run_batch(2, spin);
  const auto t2 = std::chrono::steady_clock::now();
  CHECK((t2 - t1) >= 3 * (t1 - t0));
  CHECK(slow.batches_run() == 1);
  CHECK(slow.idle());
}

TEST_CASE("executor rethrows the lowest failing item") {
  ExecutorPool pool(PoolKind::Batch, 3);
  std::atomic<int> ran{0};
  try {
    pool.run_batch(10, [&](std::size_t i) {
      ++ran;
      if (i == 7 || i == 4) throw std::runtime_error(std::to_string(i));
    });
    FAIL("expected an exception");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()) == "4");
  }
  CHECK(ran == 10);
}
