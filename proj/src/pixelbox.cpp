#include "rectijac/pixelbox.hpp"

#include <stdexcept>

#include "rectijac/pixelbox_kernel.hpp"

namespace rectijac {

namespace {

bool vertex_in_closed_box(const Mbr& b, GridPoint v) noexcept {
  return v.x >= b.xlo && v.x <= b.xhi && v.y >= b.ylo && v.y <= b.yhi;
}

// Transversal crossings between the polygon boundary and the box boundary.
bool boundary_crosses(const Mbr& b, const RectilinearPolygon& p) noexcept {
  const VerticalEdges& ve = p.vertical_edges();
  for (std::size_t i = 0; i < ve.size(); ++i) {
    const std::int32_t x = ve.x[i];
    if (x <= b.xlo || x >= b.xhi) continue;
    const std::int32_t lo = ve.ylo[i];
    const std::int32_t hi = ve.yhi[i];
    if ((lo < b.ylo && b.ylo < hi) || (lo < b.yhi && b.yhi < hi)) return true;
  }
  const HorizontalEdges& he = p.horizontal_edges();
  for (std::size_t i = 0; i < he.size(); ++i) {
    const std::int32_t y = he.y[i];
    if (y <= b.ylo || y >= b.yhi) continue;
    const std::int32_t lo = he.xlo[i];
    const std::int32_t hi = he.xhi[i];
    if ((lo < b.xlo && b.xlo < hi) || (lo < b.xhi && b.xhi < hi)) return true;
  }
  return false;
}

std::int32_t floor_half(std::int64_t v) noexcept {
  return static_cast<std::int32_t>(v >= 0 ? v / 2 : -((-v + 1) / 2));
}

thread_local detail::BoxStack t_stack;

}  // namespace

const char* to_string(BoxPosition pos) noexcept {
  switch (pos) {
    case BoxPosition::Inside: return "inside";
    case BoxPosition::Outside: return "outside";
    case BoxPosition::Hover: return "hover";
  }
  return "unknown";
}

PixelBoxConfig PixelBoxConfig::for_group_size(std::uint32_t n) {
  return {n, std::uint64_t{n} * n / 2, n};
}

PixelBoxConfig PixelBoxConfig::scalar() const {
  PixelBoxConfig c = *this;
  c.fanout = 4;
  return c;
}

void PixelBoxConfig::check() const {
  if (group_size < 1) throw std::invalid_argument("group size must be >= 1");
  if (pixel_threshold < 1) throw std::invalid_argument("pixel threshold must be >= 1");
  if (fanout < 2) throw std::invalid_argument("fanout must be >= 2");
}

BoxPosition box_position(const Mbr& box, const RectilinearPolygon& p) noexcept {
  for (GridPoint v : p.vertices()) {
    if (vertex_in_closed_box(box, v)) return BoxPosition::Hover;
  }
  if (boundary_crosses(box, p)) return BoxPosition::Hover;
  const GridPoint center{floor_half(std::int64_t{box.xlo} + box.xhi - 1),
                         floor_half(std::int64_t{box.ylo} + box.yhi - 1)};
  return pixel_in_polygon(center, p) ? BoxPosition::Inside : BoxPosition::Outside;
}

std::vector<SamplingBox> partition_box(const SamplingBox& box, std::uint32_t fanout) {
  if (fanout < 2) throw std::invalid_argument("fanout must be >= 2");
  std::vector<SamplingBox> out;
  if (box.size() <= 1) return {box};
  out.reserve(fanout);
  detail::for_each_sub_box(box.bounds, fanout,
                           [&](const Mbr& b) { out.push_back({b, true}); });
  return out;
}

std::size_t stack_capacity(std::uint64_t root_pixels, const PixelBoxConfig& cfg) {
  // Every cut leaves the largest child at most 2/3 of its parent, so this
  // bounds the number of cuts along any root-to-leaf path.
  std::size_t levels = 0;
  for (std::uint64_t s = root_pixels; s >= cfg.pixel_threshold && s > 1; s = s * 2 / 3) {
    ++levels;
  }
  return levels * cfg.fanout + 1;
}

PairAreas intersection_area_pixelbox(const RectilinearPolygon& p, const RectilinearPolygon& q,
                                     const PixelBoxConfig& cfg, KernelMode mode) {
  cfg.check();
  detail::NullObserver obs;
  return detail::run_kernel(p, q, cfg, mode, t_stack, obs);
}

PairAreas intersection_area_oracle(const RectilinearPolygon& p, const RectilinearPolygon& q) {
  const auto root = intersect(p.mbr(), q.mbr());
  std::uint64_t inter = 0;
  if (root) {
    for (std::int32_t y = root->ylo; y < root->yhi; ++y) {
      for (std::int32_t x = root->xlo; x < root->xhi; ++x) {
        inter += static_cast<std::uint64_t>(pixel_in_polygon({x, y}, p) &&
                                            pixel_in_polygon({x, y}, q));
      }
    }
  }
  return PairAreas::from(polygon_area(p), polygon_area(q), inter);
}

PairAreas intersection_area_pixelonly(const RectilinearPolygon& p, const RectilinearPolygon& q) {
  const Mbr root = unite(p.mbr(), q.mbr());
  std::uint64_t inter = 0;
  std::uint64_t uni = 0;
  for (std::int32_t y = root.ylo; y < root.yhi; ++y) {
    for (std::int32_t x = root.xlo; x < root.xhi; ++x) {
      const bool in_p = pixel_in_polygon({x, y}, p);
      const bool in_q = pixel_in_polygon({x, y}, q);
      inter += static_cast<std::uint64_t>(in_p && in_q);
      uni += static_cast<std::uint64_t>(in_p || in_q);
    }
  }
  return {polygon_area(p), polygon_area(q), inter, uni};
}

std::optional<double> pair_ratio(const PairAreas& a) noexcept {
  if (a.area_intersection == 0) return std::nullopt;
  return static_cast<double>(a.area_intersection) / static_cast<double>(a.area_union);
}

std::vector<PairAreas> intersection_area_batch(std::span<const PolygonPairRef> pairs,
                                               const PixelBoxConfig& cfg, ExecutorPool& pool,
                                               KernelMode mode) {
  cfg.check();
  std::vector<PairAreas> out(pairs.size());
  pool.run_batch(pairs.size(), [&](std::size_t i) {
    try {
      if (!pairs[i].p || !pairs[i].q) throw std::invalid_argument("null polygon reference");
      out[i] = intersection_area_pixelbox(*pairs[i].p, *pairs[i].q, cfg, mode);
    } catch (const std::exception& e) {
      throw BatchError(i, e.what());
    }
  });
  return out;
}

}  // namespace rectijac
