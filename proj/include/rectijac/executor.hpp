#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace rectijac {

enum class PoolKind {
  Stage,  ///< scalar per-stage workers
  Batch,  ///< wide data-parallel executor standing in for an accelerator
};

[[nodiscard]] const char* to_string(PoolKind kind) noexcept;

/// Fixed set of worker threads that executes closed batches of work items.
///
/// A batch is `count` independent items; run_batch hands them out to the
/// workers and returns once all of them finished. Batches are exclusive, like
/// kernel launches on a non-preemptive device: a second caller waits until
/// the running batch (including any throttle delay) is over.
///
/// `throttle` > 1 makes every batch take `throttle` times its compute time
/// by idling the device afterwards. Compute time is the workers' CPU time per
/// lane, so it does not grow when other threads compete for the cores. The
/// idle part does not occupy a CPU, which is how a slower external device
/// behaves.
class ExecutorPool {
 public:
  ExecutorPool(PoolKind kind, unsigned width, double throttle = 1.0);
  ~ExecutorPool();

  ExecutorPool(const ExecutorPool&) = delete;
  ExecutorPool& operator=(const ExecutorPool&) = delete;

  /// Runs fn(0..count-1) on the workers. The first exception thrown by an
  /// item (lowest index) is rethrown after every item has run.
  void run_batch(std::size_t count, const std::function<void(std::size_t)>& fn);

  [[nodiscard]] PoolKind kind() const noexcept { return m_kind; }
  [[nodiscard]] unsigned width() const noexcept { return m_width; }
  [[nodiscard]] double throttle() const noexcept { return m_throttle; }
  /// True when no batch is running or waiting.
  [[nodiscard]] bool idle() const noexcept { return m_pending.load() == 0; }
  [[nodiscard]] std::uint64_t batches_run() const noexcept { return m_batches.load(); }

 private:
  void worker_loop();

  PoolKind m_kind;
  unsigned m_width;
  double m_throttle;

  std::mutex m_device;  // held for the duration of one batch
  std::atomic<int> m_pending{0};
  std::atomic<std::uint64_t> m_batches{0};

  std::mutex m_mutex;
  std::condition_variable m_work_cv;
  std::condition_variable m_done_cv;
  const std::function<void(std::size_t)>* m_fn = nullptr;
  std::size_t m_count = 0;
  std::size_t m_next = 0;
  std::size_t m_finished = 0;
  std::uint64_t m_generation = 0;
  bool m_stop = false;
  std::size_t m_error_index = 0;
  std::chrono::nanoseconds m_busy{0};
  std::exception_ptr m_error;

  std::vector<std::thread> m_threads;
};

/// Sleeps so that a piece of work measured at `elapsed` appears to take
/// `factor` times as long. No-op for factor <= 1.
void apply_throttle(double factor, std::chrono::steady_clock::duration elapsed);

}  // namespace rectijac
