#pragma once

// The sampling-box engine as a template over an observer, so tests can watch
// the stack evolve. Production code instantiates it with NullObserver.

#include <cstdint>
#include <vector>

#include "rectijac/pixelbox.hpp"

namespace rectijac::detail {

[[nodiscard]] inline std::uint32_t isqrt(std::uint32_t v) noexcept {
  std::uint32_t r = 0;
  while ((r + 1) * (r + 1) <= v) ++r;
  return r;
}

/// Start of part `i` when [lo, lo+len) is cut into `k` near-equal parts.
[[nodiscard]] inline std::int32_t split_at(std::int32_t lo, std::int64_t len, std::int64_t k,
                                           std::int64_t i) noexcept {
  return static_cast<std::int32_t>(lo + i * (len / k) + std::min(i, len % k));
}

/// Calls emit(Mbr) for each sub-box of `b`; returns how many were emitted.
/// A perfect-square fan-out on a box that is at least 2 pixels along both
/// axes cuts a grid (the shorter axis first gets up to sqrt(F) parts, the
/// longer axis the remaining budget); otherwise the box is cut into strips
/// across its longer axis. No axis is cut into more parts than it has pixels.
template <class Emit>
std::uint32_t for_each_sub_box(const Mbr& b, std::uint32_t fanout, Emit&& emit) {
  const std::int64_t w = b.width();
  const std::int64_t h = b.height();
  std::int64_t nx = 1;
  std::int64_t ny = 1;
  const std::uint32_t root = isqrt(fanout);
  if (root * root == fanout && w > 1 && h > 1) {
    if (w <= h) {
      nx = std::min<std::int64_t>(root, w);
      ny = std::min<std::int64_t>(fanout / nx, h);
    } else {
      ny = std::min<std::int64_t>(root, h);
      nx = std::min<std::int64_t>(fanout / ny, w);
    }
  } else if (w >= h) {
    nx = std::min<std::int64_t>(fanout, w);
  } else {
    ny = std::min<std::int64_t>(fanout, h);
  }
  for (std::int64_t ix = 0; ix < nx; ++ix) {
    const std::int32_t x0 = split_at(b.xlo, w, nx, ix);
    const std::int32_t x1 = split_at(b.xlo, w, nx, ix + 1);
    for (std::int64_t iy = 0; iy < ny; ++iy) {
      const std::int32_t y0 = split_at(b.ylo, h, ny, iy);
      const std::int32_t y1 = split_at(b.ylo, h, ny, iy + 1);
      emit(Mbr{x0, y0, x1, y1});
    }
  }
  return static_cast<std::uint32_t>(nx * ny);
}

/// The five parallel arrays of the sampling stack.
struct BoxStack {
  std::vector<std::int32_t> xlo, ylo, xhi, yhi;
  std::vector<std::uint8_t> probe;

  void reserve(std::size_t n) {
    if (probe.size() >= n) return;
    xlo.resize(n);
    ylo.resize(n);
    xhi.resize(n);
    yhi.resize(n);
    probe.resize(n);
  }
  [[nodiscard]] std::size_t capacity() const noexcept { return probe.size(); }
  [[nodiscard]] Mbr box(std::size_t i) const noexcept { return {xlo[i], ylo[i], xhi[i], yhi[i]}; }
  void set(std::size_t i, const Mbr& b, bool c) noexcept {
    xlo[i] = b.xlo;
    ylo[i] = b.ylo;
    xhi[i] = b.xhi;
    yhi[i] = b.yhi;
    probe[i] = c ? 1 : 0;
  }
};

struct NullObserver {
  void on_step(const BoxStack&, std::size_t /*top*/) noexcept {}
  void on_pixelized(const Mbr&, std::uint64_t /*intersection*/) noexcept {}
  void on_decided(const Mbr&, BoxPosition, BoxPosition, std::uint64_t /*intersection*/) noexcept {}
};

[[nodiscard]] inline bool box_continue(BoxPosition a, BoxPosition b, KernelMode mode) noexcept {
  if (mode == KernelMode::Combined) return a == BoxPosition::Hover || b == BoxPosition::Hover;
  return (a == BoxPosition::Hover && b != BoxPosition::Outside) ||
         (b == BoxPosition::Hover && a != BoxPosition::Outside);
}

[[nodiscard]] inline bool box_contribute(BoxPosition a, BoxPosition b) noexcept {
  return a == BoxPosition::Inside && b == BoxPosition::Inside;
}

template <class Observer>
PairAreas run_kernel(const RectilinearPolygon& p, const RectilinearPolygon& q,
                     const PixelBoxConfig& cfg, KernelMode mode, BoxStack& stack,
                     Observer& obs) {
  const std::uint64_t area_p = polygon_area(p);
  const std::uint64_t area_q = polygon_area(q);

  std::optional<Mbr> root;
  if (mode == KernelMode::Combined) {
    root = unite(p.mbr(), q.mbr());
  } else {
    root = intersect(p.mbr(), q.mbr());
  }
  if (!root) return PairAreas::from(area_p, area_q, 0);

  const std::size_t cap = stack_capacity(root->pixel_count(), cfg);
  stack.reserve(cap);

  const VerticalEdges& pe = p.vertical_edges();
  const VerticalEdges& qe = q.vertical_edges();
  std::uint64_t inter = 0;
  std::uint64_t uni = 0;

  stack.set(0, *root, true);
  std::size_t top = 1;
  while (top > 0) {
    obs.on_step(stack, top);
    --top;
    if (!stack.probe[top]) continue;
    const Mbr box = stack.box(top);
    const std::uint64_t size = box.pixel_count();
    if (size < cfg.pixel_threshold || size == 1) {
      std::uint64_t hits = 0;
      std::uint64_t either = 0;
      for (std::int32_t y = box.ylo; y < box.yhi; ++y) {
        for (std::int32_t x = box.xlo; x < box.xhi; ++x) {
          const bool in_p = (count_crossings(pe, x, y) & 1U) != 0;
          if (mode == KernelMode::Combined) {
            const bool in_q = (count_crossings(qe, x, y) & 1U) != 0;
            hits += static_cast<std::uint64_t>(in_p && in_q);
            either += static_cast<std::uint64_t>(in_p || in_q);
          } else if (in_p) {
            hits += count_crossings(qe, x, y) & 1U;
          }
        }
      }
      inter += hits;
      uni += either;
      obs.on_pixelized(box, hits);
      continue;
    }

    const std::size_t parent = top;
    std::size_t slot = top + 1;
    for_each_sub_box(box, cfg.fanout, [&](const Mbr& sub) {
      if (slot >= stack.capacity()) {
        throw StackOverflowError("sampling stack exceeded " + std::to_string(stack.capacity()) +
                                 " entries");
      }
      const BoxPosition pos_p = box_position(sub, p);
      const BoxPosition pos_q = box_position(sub, q);
      const bool c = box_continue(pos_p, pos_q, mode);
      const std::uint64_t sub_size = sub.pixel_count();
      if (!c) {
        const std::uint64_t a = box_contribute(pos_p, pos_q) ? sub_size : 0;
        inter += a;
        if (pos_p == BoxPosition::Inside || pos_q == BoxPosition::Inside) uni += sub_size;
        obs.on_decided(sub, pos_p, pos_q, a);
      }
      stack.set(slot++, sub, c);
    });
    stack.probe[parent] = 0;
    top = slot;
  }
  obs.on_step(stack, top);

  if (mode == KernelMode::Combined) return {area_p, area_q, inter, uni};
  return PairAreas::from(area_p, area_q, inter);
}

}  // namespace rectijac::detail
