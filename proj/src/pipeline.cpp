#include "rectijac/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <set>
#include <thread>
#include <tuple>

namespace rectijac {

namespace {

using Clock = std::chrono::steady_clock;

double to_ms(Clock::duration d) {
  return std::chrono::duration<double, std::milli>(d).count();
}

/// Neumaier summation; order-sensitive, so callers feed it in a fixed order.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = m_sum + x;
    if (std::abs(m_sum) >= std::abs(x)) {
      m_carry += (m_sum - t) + x;
    } else {
      m_carry += (x - t) + m_sum;
    }
    m_sum = t;
  }
  [[nodiscard]] double value() const noexcept { return m_sum + m_carry; }

 private:
  double m_sum = 0.0;
  double m_carry = 0.0;
};

/// Busy-time accumulator shared by the workers of one stage.
class StageClock {
 public:
  void add(Clock::duration d) noexcept { m_ns.fetch_add(d.count()); }
  [[nodiscard]] double ms() const noexcept { return to_ms(Clock::duration(m_ns.load())); }

 private:
  std::atomic<Clock::rep> m_ns{0};
};

template <class Fn>
Clock::duration timed(Fn&& fn) {
  const auto t0 = Clock::now();
  fn();
  return Clock::now() - t0;
}

std::shared_ptr<const PolygonFile> load_side(const FileSource& src, const std::string& tile_id,
                                             const PipelineConfig& cfg) {
  std::string owned;
  std::string_view bytes;
  if (src.bytes) {
    bytes = *src.bytes;
  } else {
    owned = read_file(src.path);
    bytes = owned;
  }
  const InputFormat fmt = cfg.format ? *cfg.format : detect_format(bytes);
  try {
    return std::make_shared<const PolygonFile>(parse_bytes(bytes, fmt, tile_id, cfg.parse));
  } catch (const ParseError& e) {
    throw ParseError(e.kind(), e.line(), e.column(), src.path.string() + ": " + e.reason());
  }
}

void build_stage(TileTask& task) {
  task.index = build_join_index(task.set_a->polygons, task.set_b->polygons);
  task.stage = TaskStage::Filter;
}

void filter_stage(TileTask& task) {
  task.candidates = probe_join(task.index, task.set_a->polygons, task.set_b->polygons);
  task.size_hint = task.candidates.size();
  task.index = {};  // not needed past this point
  task.stage = TaskStage::Aggregate;
}

std::vector<TaskPtr> make_tasks(const Manifest& manifest) {
  if (manifest.tiles.empty()) throw ManifestError("manifest has no tiles");
  std::set<std::string> seen;
  std::vector<TaskPtr> tasks;
  tasks.reserve(manifest.tiles.size());
  for (std::size_t i = 0; i < manifest.tiles.size(); ++i) {
    const TileSpec& spec = manifest.tiles[i];
    if (!seen.insert(spec.tile_id).second) {
      throw ManifestError("duplicate tile id in manifest: " + spec.tile_id);
    }
    auto task = std::make_unique<TileTask>();
    task->seq = i;
    task->tile_id = spec.tile_id;
    task->source = spec;
    tasks.push_back(std::move(task));
  }
  return tasks;
}

SimilarityReport finish_report(const Manifest& manifest, std::vector<TileResult> results,
                               Clock::duration wall) {
  SimilarityReport report = aggregate_jaccard(std::move(results));
  report.image = manifest.image;
  report.set_a = manifest.set_a;
  report.set_b = manifest.set_b;
  report.unpaired = manifest.unpaired;
  std::sort(report.unpaired.begin(), report.unpaired.end());
  report.timing.total_ms = to_ms(wall);
  return report;
}

/// Runs the four stages of one tile back to back, using the batch pool for
/// the aggregation. Shared by the sequential and multi-stream drivers.
struct TileRunner {
  const PipelineConfig& cfg;
  ExecutorPool& batch_pool;
  StageClock parse, build, filter, aggregate;

  TileResult run(TileTask& task) {
    try {
      parse.add(timed([&] {
        const auto d = timed([&] { parse_task(task, cfg); });
        apply_throttle(cfg.parse_throttle, d);
      }));
      build.add(timed([&] { build_stage(task); }));
      filter.add(timed([&] { filter_stage(task); }));
      TileResult result;
      aggregate.add(timed([&] {
        const auto refs = pair_refs(task);
        std::vector<PairAreas> areas;
        if (!refs.empty()) areas = intersection_area_batch(refs, cfg.pixelbox, batch_pool);
        result = make_tile_result(task, areas);
      }));
      return result;
    } catch (...) {
      rethrow_for_tile(task.tile_id);
    }
  }

  void fill(StageTiming& t) const {
    t.parse_ms = parse.ms();
    t.build_ms = build.ms();
    t.filter_ms = filter.ms();
    t.aggregate_ms = aggregate.ms();
  }
};

/// State of one pipelined run. Threads: a feeder, `workers` parsers, one
/// builder, one filter and one aggregator driving the batch pool, plus the
/// two dormant migration workers when migration is on.
class PipelineRun {
 public:
  PipelineRun(const Manifest& manifest, const PipelineConfig& cfg)
      : m_cfg(cfg),
        m_tasks(make_tasks(manifest)),
        m_total(m_tasks.size()),
        m_unparsed(m_total),
        m_parser_in(cfg.buffer_capacity),
        m_build_in(cfg.buffer_capacity),
        m_filter_in(cfg.buffer_capacity),
        m_aggregator_in(cfg.buffer_capacity),
        m_stage_pool(PoolKind::Stage, cfg.workers),
        m_batch_pool(PoolKind::Batch, cfg.workers, cfg.batch_throttle),
        m_migrator(cfg.migration, wiring()) {}

  std::vector<TileResult> run() {
    m_migrator.start();
    std::vector<std::thread> threads;
    threads.emplace_back([this] { feeder(); });
    for (unsigned i = 0; i < m_cfg.workers; ++i) threads.emplace_back([this] { parser(); });
    threads.emplace_back([this] { builder(); });
    threads.emplace_back([this] { filter(); });
    threads.emplace_back([this] { aggregator(); });
    for (auto& t : threads) t.join();
    m_migrator.stop();

    if (m_error) std::rethrow_exception(m_error);
    if (m_results.size() != m_total) {
      throw std::logic_error("pipeline lost tiles: " + std::to_string(m_results.size()) + " of " +
                             std::to_string(m_total) + " finished");
    }
    return std::move(m_results);
  }

  void fill(StageTiming& t) const {
    t.parse_ms = m_parse.ms();
    t.build_ms = m_build.ms();
    t.filter_ms = m_filter.ms();
    t.aggregate_ms = m_aggregate.ms();
  }
  [[nodiscard]] MigrationStats stats() const noexcept { return m_migrator.stats(); }

 private:
  TaskMigrator::Wiring wiring() {
    return TaskMigrator::Wiring{
        .parser_in = m_parser_in,
        .aggregator_in = m_aggregator_in,
        .stage_pool = m_stage_pool,
        .batch_pool = m_batch_pool,
        .pixelbox = m_cfg.pixelbox,
        .parse = [this](TileTask& t) { m_parse.add(timed([&] { parse_task(t, m_cfg); })); },
        .deliver_parsed = [this](TaskPtr t) { deliver_parsed(std::move(t)); },
        .deliver_result = [this](TileResult r) { deliver_result(std::move(r)); },
        .on_error = [this](std::exception_ptr e) { fail(std::move(e)); },
    };
  }

  void fail(std::exception_ptr e) {
    {
      std::lock_guard lock(m_error_mutex);
      if (m_error) return;
      try {
        std::rethrow_exception(e);
      } catch (const BufferAborted&) {
        return;  // fallout of an earlier failure
      } catch (...) {
        m_error = e;
      }
    }
    m_parser_in.abort();
    m_build_in.abort();
    m_filter_in.abort();
    m_aggregator_in.abort();
  }

  template <class Body>
  void guarded(Body body) {
    try {
      body();
    } catch (...) {
      fail(std::current_exception());
    }
  }

  void feeder() {
    guarded([&] {
      for (auto& task : m_tasks) m_parser_in.push(std::move(task));
      for (unsigned i = 0; i < m_cfg.workers; ++i) m_parser_in.push(nullptr);
    });
  }

  void parser() {
    guarded([&] {
      while (TaskPtr task = m_parser_in.pop()) {
        try {
          m_parse.add(timed([&] {
            const auto d = timed([&] { parse_task(*task, m_cfg); });
            apply_throttle(m_cfg.parse_throttle, d);
          }));
        } catch (...) {
          rethrow_for_tile(task->tile_id);
        }
        m_migrator.record_parse(PoolKind::Stage);
        deliver_parsed(std::move(task));
      }
    });
  }

  void deliver_parsed(TaskPtr task) {
    m_build_in.push(std::move(task));
    // Whoever delivers the last parsed tile closes the stage.
    if (m_unparsed.fetch_sub(1) == 1) m_build_in.push(nullptr);
  }

  void builder() {
    guarded([&] {
      while (TaskPtr task = m_build_in.pop()) {
        try {
          m_build.add(timed([&] { build_stage(*task); }));
        } catch (...) {
          rethrow_for_tile(task->tile_id);
        }
        m_filter_in.push(std::move(task));
      }
      m_filter_in.push(nullptr);
    });
  }

  void filter() {
    guarded([&] {
      while (TaskPtr task = m_filter_in.pop()) {
        try {
          m_filter.add(timed([&] { filter_stage(*task); }));
        } catch (...) {
          rethrow_for_tile(task->tile_id);
        }
        m_aggregator_in.push(std::move(task));
      }
      m_aggregator_in.push(nullptr);
    });
  }

  void aggregator() {
    guarded([&] {
      bool done = false;
      while (!done) {
        TaskPtr first = m_aggregator_in.pop();
        if (!first) break;
        std::vector<TaskPtr> batch;
        std::size_t pairs = first->size_hint;
        batch.push_back(std::move(first));
        // Small tiles are grouped so the batch pool sees enough work per launch.
        while (pairs < m_cfg.batch_min) {
          auto next = m_aggregator_in.try_pop();
          if (!next) break;
          if (!*next) {
            done = true;
            break;
          }
          pairs += (*next)->size_hint;
          batch.push_back(std::move(*next));
        }
        run_batch(batch);
      }
    });
  }

  void run_batch(const std::vector<TaskPtr>& batch) {
    std::vector<PolygonPairRef> refs;
    std::vector<std::size_t> offsets{0};
    for (const auto& task : batch) {
      const auto r = pair_refs(*task);
      refs.insert(refs.end(), r.begin(), r.end());
      offsets.push_back(refs.size());
    }
    std::vector<PairAreas> areas;
    const auto t0 = Clock::now();
    if (!refs.empty()) {
      try {
        areas = intersection_area_batch(refs, m_cfg.pixelbox, m_batch_pool);
      } catch (const BatchError& e) {
        const auto it = std::upper_bound(offsets.begin(), offsets.end(), e.pair_index());
        rethrow_for_tile(batch[static_cast<std::size_t>(it - offsets.begin()) - 1]->tile_id);
      }
    }
    m_aggregate.add(Clock::now() - t0);
    const std::span<const PairAreas> all(areas);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      deliver_result(
          make_tile_result(*batch[i], all.subspan(offsets[i], offsets[i + 1] - offsets[i])));
      m_migrator.record_aggregate(PoolKind::Batch);
    }
  }

  void deliver_result(TileResult result) {
    std::lock_guard lock(m_results_mutex);
    m_results.push_back(std::move(result));
  }

  const PipelineConfig& m_cfg;
  std::vector<TaskPtr> m_tasks;
  const std::size_t m_total;
  std::atomic<std::size_t> m_unparsed;

  TaskBuffer m_parser_in;
  TaskBuffer m_build_in;
  TaskBuffer m_filter_in;
  TaskBuffer m_aggregator_in;
  ExecutorPool m_stage_pool;
  ExecutorPool m_batch_pool;

  StageClock m_parse, m_build, m_filter, m_aggregate;

  std::mutex m_results_mutex;
  std::vector<TileResult> m_results;

  std::mutex m_error_mutex;
  std::exception_ptr m_error;

  TaskMigrator m_migrator;  // last: its workers reference the members above
};

}  // namespace

void PipelineConfig::check() const {
  pixelbox.check();
  if (workers == 0) throw std::invalid_argument("workers must be >= 1");
  if (buffer_capacity == 0) throw std::invalid_argument("buffer capacity must be >= 1");
  if (batch_min == 0) throw std::invalid_argument("batch_min must be >= 1");
  if (migration.steal_count == 0) throw std::invalid_argument("steal count must be >= 1");
  if (!(batch_throttle >= 1.0)) throw std::invalid_argument("batch throttle must be >= 1");
  if (!(parse_throttle >= 1.0)) throw std::invalid_argument("parse throttle must be >= 1");
}

void rethrow_for_tile(const std::string& tile_id) {
  try {
    throw;
  } catch (const TileError&) {
    throw;
  } catch (const BufferAborted&) {
    throw;
  } catch (const ParseError& e) {
    throw TileError(tile_id, true, e.what());
  } catch (const GeometryError& e) {
    throw TileError(tile_id, true, e.what());
  } catch (const ManifestError& e) {
    throw TileError(tile_id, true, e.what());
  } catch (const std::exception& e) {
    throw TileError(tile_id, false, e.what());
  } catch (...) {
    throw TileError(tile_id, false, "unknown error");
  }
}

std::vector<PolygonPairRef> pair_refs(const TileTask& task) {
  std::vector<PolygonPairRef> refs;
  refs.reserve(task.candidates.size());
  const auto& a = task.set_a->polygons;
  const auto& b = task.set_b->polygons;
  for (const CandidatePair& c : task.candidates) refs.push_back({&a[c.p_ref], &b[c.q_ref]});
  return refs;
}

TileResult make_tile_result(const TileTask& task, std::span<const PairAreas> areas) {
  if (areas.size() != task.candidates.size()) {
    throw std::logic_error("area count does not match candidate count");
  }
  TileResult r;
  r.tile_id = task.tile_id;
  r.polygons_a = task.set_a->polygons.size();
  r.polygons_b = task.set_b->polygons.size();
  r.pairs.reserve(areas.size());
  for (std::size_t i = 0; i < areas.size(); ++i) {
    const CandidatePair& c = task.candidates[i];
    r.pairs.push_back({task.set_a->polygons[c.p_ref].id(), task.set_b->polygons[c.q_ref].id(),
                       areas[i]});
  }
  return r;
}

void parse_task(TileTask& task, const PipelineConfig& cfg) {
  task.set_a = load_side(task.source.a, task.tile_id, cfg);
  task.set_b = load_side(task.source.b, task.tile_id, cfg);
  task.stage = TaskStage::Build;
}

SimilarityReport aggregate_jaccard(std::vector<TileResult> results) {
  std::sort(results.begin(), results.end(),
            [](const TileResult& x, const TileResult& y) { return x.tile_id < y.tile_id; });
  SimilarityReport report;
  CompensatedSum total;
  for (TileResult& tile : results) {
    std::sort(tile.pairs.begin(), tile.pairs.end(), [](const PairResult& x, const PairResult& y) {
      return std::tie(x.p_id, x.q_id) < std::tie(y.p_id, y.q_id);
    });
    TileReport t;
    t.tile_id = tile.tile_id;
    t.polygons_a = tile.polygons_a;
    t.polygons_b = tile.polygons_b;
    t.pairs = tile.pairs.size();
    CompensatedSum local;
    std::set<std::int64_t> hit_a;
    std::set<std::int64_t> hit_b;
    for (const PairResult& pr : tile.pairs) {
      const auto ratio = pair_ratio(pr.areas);
      if (!ratio) continue;
      ++t.intersecting;
      local.add(*ratio);
      total.add(*ratio);
      hit_a.insert(pr.p_id);
      hit_b.insert(pr.q_id);
    }
    t.ratio_sum = local.value();
    if (t.intersecting > 0) t.jaccard = t.ratio_sum / static_cast<double>(t.intersecting);
    t.missing_a = t.polygons_a - hit_a.size();
    t.missing_b = t.polygons_b - hit_b.size();

    report.polygons_a += t.polygons_a;
    report.polygons_b += t.polygons_b;
    report.pairs += t.pairs;
    report.intersecting += t.intersecting;
    report.missing_a += t.missing_a;
    report.missing_b += t.missing_b;
    report.tiles.push_back(std::move(t));
  }
  if (report.intersecting > 0) {
    report.jaccard = total.value() / static_cast<double>(report.intersecting);
  }
  return report;
}

SimilarityReport run_pipeline(const Manifest& manifest, const PipelineConfig& cfg) {
  cfg.check();
  const auto t0 = Clock::now();
  PipelineRun run(manifest, cfg);
  auto results = run.run();
  SimilarityReport report = finish_report(manifest, std::move(results), Clock::now() - t0);
  run.fill(report.timing);
  report.migration = run.stats();
  return report;
}

SimilarityReport run_sequential(const Manifest& manifest, const PipelineConfig& cfg) {
  return run_multistream(manifest, cfg, 1);
}

SimilarityReport run_multistream(const Manifest& manifest, const PipelineConfig& cfg,
                                 unsigned streams) {
  cfg.check();
  if (streams == 0) throw std::invalid_argument("streams must be >= 1");
  const auto t0 = Clock::now();
  auto tasks = make_tasks(manifest);
  ExecutorPool batch_pool(PoolKind::Batch, cfg.workers, cfg.batch_throttle);
  TileRunner runner{cfg, batch_pool, {}, {}, {}, {}};
  std::vector<TileResult> results(tasks.size());

  std::atomic<bool> failed{false};
  std::mutex error_mutex;
  std::exception_ptr error;
  auto stream = [&](unsigned s) {
    for (std::size_t i = s; i < tasks.size() && !failed.load(); i += streams) {
      try {
        results[i] = runner.run(*tasks[i]);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        failed = true;
      }
      tasks[i].reset();
    }
  };
  if (streams == 1) {
    stream(0);
  } else {
    std::vector<std::thread> threads;
    for (unsigned s = 0; s < streams; ++s) threads.emplace_back(stream, s);
    for (auto& t : threads) t.join();
  }
  if (error) std::rethrow_exception(error);

  SimilarityReport report = finish_report(manifest, std::move(results), Clock::now() - t0);
  runner.fill(report.timing);
  const auto n = static_cast<std::uint64_t>(manifest.tiles.size());
  report.migration.parse = {n, 0};
  report.migration.aggregate = {0, n};
  return report;
}

}  // namespace rectijac
