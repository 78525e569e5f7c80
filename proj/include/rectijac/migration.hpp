#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

#include "rectijac/bounded_buffer.hpp"
#include "rectijac/executor.hpp"
#include "rectijac/pixelbox.hpp"
#include "rectijac/tile_task.hpp"

namespace rectijac {

using TaskPtr = std::unique_ptr<TileTask>;  // nullptr is the end-of-stream sentinel
using TaskBuffer = BoundedBuffer<TaskPtr>;

struct MigrationConfig {
  bool enabled = false;
  /// Tasks moved per wake-up.
  std::size_t steal_count = 1;
};

struct PoolCounts {
  std::uint64_t stage = 0;
  std::uint64_t batch = 0;

  [[nodiscard]] std::uint64_t total() const noexcept { return stage + batch; }
  bool operator==(const PoolCounts&) const = default;
};

struct MigrationStats {
  /// Aggregation tasks moved from the batch pool to the scalar path.
  std::uint64_t congestion_steals = 0;
  /// Parse tasks moved from the parser workers to the batch pool.
  std::uint64_t idleness_steals = 0;
  /// Which pool executed each tile's parse and aggregation.
  PoolCounts parse;
  PoolCounts aggregate;

  bool operator==(const MigrationStats&) const = default;
};

/// Removes up to `count` tasks with the smallest size_hint (oldest first on
/// ties). Never takes the sentinel.
[[nodiscard]] std::vector<TaskPtr> take_smallest_tasks(TaskBuffer& buffer, std::size_t count);

/// Removes up to `count` tasks from the front. Never takes the sentinel.
[[nodiscard]] std::vector<TaskPtr> take_oldest_tasks(TaskBuffer& buffer, std::size_t count);

/// A thread that sleeps until notified and then runs its body once per
/// wake-up. Notifications arriving while the body runs coalesce into one
/// more run.
class DormantWorker {
 public:
  explicit DormantWorker(std::function<void()> body);
  ~DormantWorker();

  DormantWorker(const DormantWorker&) = delete;
  DormantWorker& operator=(const DormantWorker&) = delete;

  void notify();
  void stop();
  [[nodiscard]] std::uint64_t wakeups() const noexcept { return m_wakeups.load(); }

 private:
  void loop();

  std::function<void()> m_body;
  std::mutex m_mutex;
  std::condition_variable m_cv;
  bool m_pending = false;
  bool m_stop = false;
  std::atomic<std::uint64_t> m_wakeups{0};
  std::thread m_thread;
};

/// Moves work between the scalar stage pool and the batch pool based on the
/// occupancy of the aggregator's input buffer.
///
/// When that buffer becomes full the batch pool is congested: the
/// aggregator's migration worker takes the tasks with the fewest candidate
/// pairs and runs them with the quadtree kernel on the stage pool. When it
/// becomes empty the batch pool is underused: the parser's migration worker
/// takes pending parse tasks and runs them on the batch pool.
class TaskMigrator {
 public:
  struct Wiring {
    TaskBuffer& parser_in;
    TaskBuffer& aggregator_in;
    ExecutorPool& stage_pool;
    ExecutorPool& batch_pool;
    PixelBoxConfig pixelbox;
    /// Parses a task in place (no throttling).
    std::function<void(TileTask&)> parse;
    /// Hands a parsed task to the builder.
    std::function<void(TaskPtr)> deliver_parsed;
    /// Hands a finished tile to the aggregation sink.
    std::function<void(TileResult)> deliver_result;
    /// Receives exceptions raised on migration threads.
    std::function<void(std::exception_ptr)> on_error;
  };

  TaskMigrator(const MigrationConfig& cfg, Wiring wiring);
  ~TaskMigrator();

  /// Starts the two dormant workers and subscribes to buffer transitions.
  void start();
  /// Stops the workers; pending wake-ups are dropped.
  void stop();

  /// One congestion response: if the aggregator input is full, steal and run
  /// the smallest tasks. Returns how many tasks were stolen.
  std::size_t on_congestion();
  /// One idleness response: if the aggregator input is empty and the batch
  /// pool is idle, move pending parse tasks onto it. Returns how many moved.
  std::size_t on_idleness();

  void record_parse(PoolKind pool) noexcept;
  void record_aggregate(PoolKind pool) noexcept;
  [[nodiscard]] MigrationStats stats() const noexcept;

 private:
  MigrationConfig m_cfg;
  Wiring m_wiring;
  std::atomic<std::uint64_t> m_congestion{0};
  std::atomic<std::uint64_t> m_idleness{0};
  std::atomic<std::uint64_t> m_parse_stage{0};
  std::atomic<std::uint64_t> m_parse_batch{0};
  std::atomic<std::uint64_t> m_agg_stage{0};
  std::atomic<std::uint64_t> m_agg_batch{0};
  std::unique_ptr<DormantWorker> m_aggregator_worker;
  std::unique_ptr<DormantWorker> m_parser_worker;
};

}  // namespace rectijac
