#pragma once

#include <algorithm>
#include <condition_variable>
#include <cstddef>
#include <deque>
#include <functional>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <vector>

namespace rectijac {

class BufferAborted : public std::runtime_error {
 public:
  BufferAborted() : std::runtime_error("buffer aborted") {}
};

enum class BufferEvent {
  Full,   ///< an insertion brought occupancy to capacity
  Empty,  ///< a removal drained the buffer, or a consumer found it empty
};

/// Blocking FIFO with a fixed capacity, shared by any number of producers
/// and consumers. Occupancy never exceeds capacity.
///
/// An optional observer is told about full/empty transitions. It runs after
/// the buffer lock is released, so it may not assume the state still holds.
template <class T>
class BoundedBuffer {
 public:
  explicit BoundedBuffer(std::size_t capacity) : m_capacity(capacity) {
    if (capacity == 0) throw std::invalid_argument("buffer capacity must be >= 1");
  }

  void set_observer(std::function<void(BufferEvent)> observer) { m_observer = std::move(observer); }

  void push(T item) {
    bool full = false;
    {
      std::unique_lock lock(m_mutex);
      m_not_full.wait(lock, [&] { return m_aborted || m_items.size() < m_capacity; });
      if (m_aborted) throw BufferAborted();
      m_items.push_back(std::move(item));
      m_high_water = std::max(m_high_water, m_items.size());
      full = m_items.size() == m_capacity;
    }
    m_not_empty.notify_one();
    if (full) notify(BufferEvent::Full);
  }

  T pop() {
    bool found_empty = false;
    std::unique_lock lock(m_mutex);
    if (m_items.empty() && !m_aborted) {
      found_empty = true;
      lock.unlock();
      notify(BufferEvent::Empty);
      lock.lock();
    }
    m_not_empty.wait(lock, [&] { return m_aborted || !m_items.empty(); });
    if (m_aborted) throw BufferAborted();
    T item = std::move(m_items.front());
    m_items.pop_front();
    const bool drained = m_items.empty();
    lock.unlock();
    m_not_full.notify_one();
    if (drained && !found_empty) notify(BufferEvent::Empty);
    return item;
  }

  std::optional<T> try_pop() {
    return take_where([](const std::deque<T>& items) -> std::optional<std::size_t> {
      if (items.empty()) return std::nullopt;
      return 0;
    });
  }

  /// Removes the first item satisfying `pred` without blocking.
  template <class Pred>
  std::optional<T> take_first_if(Pred pred) {
    return take_where([&](const std::deque<T>& items) -> std::optional<std::size_t> {
      for (std::size_t i = 0; i < items.size(); ++i) {
        if (pred(items[i])) return i;
      }
      return std::nullopt;
    });
  }

  /// Removes the item with the smallest key among those satisfying `pred`;
  /// ties go to the earliest.
  template <class Key, class Pred>
  std::optional<T> take_min_if(Key key, Pred pred) {
    return take_where([&](const std::deque<T>& items) -> std::optional<std::size_t> {
      std::optional<std::size_t> best;
      for (std::size_t i = 0; i < items.size(); ++i) {
        if (!pred(items[i])) continue;
        if (!best || key(items[i]) < key(items[*best])) best = i;
      }
      return best;
    });
  }

  /// Wakes every waiter; subsequent push/pop throw BufferAborted.
  void abort() {
    {
      std::lock_guard lock(m_mutex);
      m_aborted = true;
    }
    m_not_full.notify_all();
    m_not_empty.notify_all();
  }

  [[nodiscard]] std::size_t size() const {
    std::lock_guard lock(m_mutex);
    return m_items.size();
  }
  [[nodiscard]] bool full() const {
    std::lock_guard lock(m_mutex);
    return m_items.size() == m_capacity;
  }
  [[nodiscard]] std::size_t capacity() const noexcept { return m_capacity; }
  [[nodiscard]] std::size_t high_water() const {
    std::lock_guard lock(m_mutex);
    return m_high_water;
  }

 private:
  template <class Select>
  std::optional<T> take_where(Select select) {
    std::unique_lock lock(m_mutex);
    const auto index = select(m_items);
    if (!index) return std::nullopt;
    T item = std::move(m_items[*index]);
    m_items.erase(m_items.begin() + static_cast<std::ptrdiff_t>(*index));
    const bool drained = m_items.empty();
    lock.unlock();
    m_not_full.notify_one();
    if (drained) notify(BufferEvent::Empty);
    return item;
  }

  void notify(BufferEvent e) {
    if (m_observer) m_observer(e);
  }

  const std::size_t m_capacity;
  mutable std::mutex m_mutex;
  std::condition_variable m_not_full;
  std::condition_variable m_not_empty;
  std::deque<T> m_items;
  std::size_t m_high_water = 0;
  bool m_aborted = false;
  std::function<void(BufferEvent)> m_observer;
};

}  // namespace rectijac
