#include "rectijac/executor.hpp"

#include <algorithm>
#include <stdexcept>

#include <time.h>

namespace rectijac {

namespace {

std::chrono::nanoseconds thread_cpu_time() noexcept {
  timespec ts{};
  ::clock_gettime(CLOCK_THREAD_CPUTIME_ID, &ts);
  return std::chrono::seconds(ts.tv_sec) + std::chrono::nanoseconds(ts.tv_nsec);
}

}  // namespace

const char* to_string(PoolKind kind) noexcept {
  return kind == PoolKind::Stage ? "stage" : "batch";
}

void apply_throttle(double factor, std::chrono::steady_clock::duration elapsed) {
  if (factor <= 1.0) return;
  const auto extra = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
      elapsed * (factor - 1.0));
  if (extra.count() > 0) std::this_thread::sleep_for(extra);
}

ExecutorPool::ExecutorPool(PoolKind kind, unsigned width, double throttle)
    : m_kind(kind), m_width(width), m_throttle(throttle) {
  if (width == 0) throw std::invalid_argument("executor pool width must be >= 1");
  if (!(throttle >= 1.0)) throw std::invalid_argument("executor pool throttle must be >= 1");
  m_threads.reserve(width);
  for (unsigned i = 0; i < width; ++i) m_threads.emplace_back([this] { worker_loop(); });
}

ExecutorPool::~ExecutorPool() {
  {
    std::lock_guard lock(m_mutex);
    m_stop = true;
  }
  m_work_cv.notify_all();
  for (auto& t : m_threads) t.join();
}

void ExecutorPool::run_batch(std::size_t count, const std::function<void(std::size_t)>& fn) {
  m_pending.fetch_add(1);
  std::lock_guard device(m_device);
  std::exception_ptr error;
  std::chrono::nanoseconds busy{0};
  if (count > 0) {
    std::unique_lock lock(m_mutex);
    m_fn = &fn;
    m_count = count;
    m_next = 0;
    m_finished = 0;
    m_error = nullptr;
    m_error_index = count;
    m_busy = std::chrono::nanoseconds{0};
    ++m_generation;
    m_work_cv.notify_all();
    m_done_cv.wait(lock, [this] { return m_finished == m_count; });
    m_fn = nullptr;
    error = m_error;
    busy = m_busy / std::min<std::size_t>(m_width, count);
  }
  m_batches.fetch_add(1);
  apply_throttle(m_throttle, busy);
  m_pending.fetch_sub(1);
  if (error) std::rethrow_exception(error);
}

void ExecutorPool::worker_loop() {
  std::uint64_t seen = 0;
  std::unique_lock lock(m_mutex);
  for (;;) {
    m_work_cv.wait(lock, [&] { return m_stop || (m_generation != seen && m_next < m_count); });
    if (m_stop) return;
    // Chunks keep lock traffic low for batches of many tiny items.
    const std::size_t chunk = std::max<std::size_t>(1, m_count / (std::size_t{m_width} * 8));
    const std::size_t begin = m_next;
    const std::size_t end = std::min(m_count, begin + chunk);
    m_next = end;
    if (m_next == m_count) seen = m_generation;
    const auto* fn = m_fn;
    lock.unlock();

    std::exception_ptr error;
    std::size_t error_index = 0;
    const auto cpu0 = thread_cpu_time();
    for (std::size_t i = begin; i < end; ++i) {
      try {
        (*fn)(i);
      } catch (...) {
        if (!error) {
          error = std::current_exception();
          error_index = i;
        }
      }
    }

    const auto cpu = thread_cpu_time() - cpu0;

    lock.lock();
    m_busy += cpu;
    if (error && error_index < m_error_index) {
      m_error = error;
      m_error_index = error_index;
    }
    m_finished += end - begin;
    if (m_finished == m_count) m_done_cv.notify_all();
  }
}

}  // namespace rectijac
