#include "rectijac/migration.hpp"

namespace rectijac {

namespace {

bool is_real(const TaskPtr& t) { return t != nullptr; }

}  // namespace

std::vector<TaskPtr> take_smallest_tasks(TaskBuffer& buffer, std::size_t count) {
  std::vector<TaskPtr> out;
  for (std::size_t i = 0; i < count; ++i) {
    auto t = buffer.take_min_if([](const TaskPtr& x) { return x->size_hint; }, is_real);
    if (!t) break;
    out.push_back(std::move(*t));
  }
  return out;
}

std::vector<TaskPtr> take_oldest_tasks(TaskBuffer& buffer, std::size_t count) {
  std::vector<TaskPtr> out;
  for (std::size_t i = 0; i < count; ++i) {
    auto t = buffer.take_first_if(is_real);
    if (!t) break;
    out.push_back(std::move(*t));
  }
  return out;
}

DormantWorker::DormantWorker(std::function<void()> body)
    : m_body(std::move(body)), m_thread([this] { loop(); }) {}

DormantWorker::~DormantWorker() { stop(); }

void DormantWorker::notify() {
  {
    std::lock_guard lock(m_mutex);
    m_pending = true;
  }
  m_cv.notify_one();
}

void DormantWorker::stop() {
  {
    std::lock_guard lock(m_mutex);
    m_stop = true;
  }
  m_cv.notify_one();
  if (m_thread.joinable()) m_thread.join();
}

void DormantWorker::loop() {
  std::unique_lock lock(m_mutex);
  for (;;) {
    m_cv.wait(lock, [&] { return m_stop || m_pending; });
    if (m_stop) return;
    m_pending = false;
    lock.unlock();
    m_wakeups.fetch_add(1);
    m_body();
    lock.lock();
  }
}

TaskMigrator::TaskMigrator(const MigrationConfig& cfg, Wiring wiring)
    : m_cfg(cfg), m_wiring(std::move(wiring)) {
  if (m_cfg.steal_count == 0) throw std::invalid_argument("steal count must be >= 1");
}

TaskMigrator::~TaskMigrator() { stop(); }

void TaskMigrator::start() {
  if (!m_cfg.enabled || m_aggregator_worker) return;
  auto guarded = [this](auto step) {
    return [this, step] {
      try {
        while ((this->*step)() > 0) {
        }
      } catch (...) {
        if (m_wiring.on_error) m_wiring.on_error(std::current_exception());
      }
    };
  };
  m_aggregator_worker = std::make_unique<DormantWorker>(guarded(&TaskMigrator::on_congestion));
  m_parser_worker = std::make_unique<DormantWorker>(guarded(&TaskMigrator::on_idleness));
  m_wiring.aggregator_in.set_observer([this](BufferEvent e) {
    if (e == BufferEvent::Full) {
      m_aggregator_worker->notify();
    } else {
      m_parser_worker->notify();
    }
  });
}

void TaskMigrator::stop() {
  if (!m_aggregator_worker) return;
  m_wiring.aggregator_in.set_observer({});
  m_aggregator_worker->stop();
  m_parser_worker->stop();
}

std::size_t TaskMigrator::on_congestion() {
  if (!m_wiring.aggregator_in.full()) return 0;
  auto tasks = take_smallest_tasks(m_wiring.aggregator_in, m_cfg.steal_count);
  if (tasks.empty()) return 0;
  m_congestion.fetch_add(tasks.size());
  const PixelBoxConfig scalar = m_wiring.pixelbox.scalar();
  for (auto& task : tasks) {
    try {
      const auto refs = pair_refs(*task);
      const auto areas = intersection_area_batch(refs, scalar, m_wiring.stage_pool);
      m_wiring.deliver_result(make_tile_result(*task, areas));
    } catch (...) {
      rethrow_for_tile(task->tile_id);
    }
    record_aggregate(PoolKind::Stage);
  }
  return tasks.size();
}

std::size_t TaskMigrator::on_idleness() {
  if (m_wiring.aggregator_in.size() != 0 || !m_wiring.batch_pool.idle()) return 0;
  auto tasks = take_oldest_tasks(m_wiring.parser_in, m_cfg.steal_count);
  if (tasks.empty()) return 0;
  m_idleness.fetch_add(tasks.size());
  m_wiring.batch_pool.run_batch(tasks.size(), [&](std::size_t i) {
    try {
      m_wiring.parse(*tasks[i]);
    } catch (...) {
      rethrow_for_tile(tasks[i]->tile_id);
    }
  });
  for (auto& task : tasks) {
    record_parse(PoolKind::Batch);
    m_wiring.deliver_parsed(std::move(task));
  }
  return tasks.size();
}

void TaskMigrator::record_parse(PoolKind pool) noexcept {
  (pool == PoolKind::Stage ? m_parse_stage : m_parse_batch).fetch_add(1);
}

void TaskMigrator::record_aggregate(PoolKind pool) noexcept {
  (pool == PoolKind::Stage ? m_agg_stage : m_agg_batch).fetch_add(1);
}

MigrationStats TaskMigrator::stats() const noexcept {
  MigrationStats s;
  s.congestion_steals = m_congestion.load();
  s.idleness_steals = m_idleness.load();
  s.parse = {m_parse_stage.load(), m_parse_batch.load()};
  s.aggregate = {m_agg_stage.load(), m_agg_batch.load()};
  return s;
}

}  // namespace rectijac
