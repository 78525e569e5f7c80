#include "rectijac/geometry.hpp"

#include <algorithm>
#include <limits>

namespace rectijac {

namespace {

bool collinear(GridPoint a, GridPoint b, GridPoint c) noexcept {
  return (a.x == b.x && b.x == c.x) || (a.y == b.y && b.y == c.y);
}

std::string describe(GridPoint p) {
  return "(" + std::to_string(p.x) + "," + std::to_string(p.y) + ")";
}

// Drops consecutive duplicates cyclically.
std::vector<GridPoint> dedup_ring(std::span<const GridPoint> raw) {
  std::vector<GridPoint> out;
  out.reserve(raw.size());
  for (GridPoint v : raw) {
    if (out.empty() || out.back() != v) out.push_back(v);
  }
  while (out.size() >= 2 && out.back() == out.front()) out.pop_back();
  return out;
}

// Merges runs of collinear edges, including spikes that fold back on
// themselves. Input must already be axis-aligned.
std::vector<GridPoint> drop_collinear(const std::vector<GridPoint>& ring) {
  std::vector<GridPoint> out;
  out.reserve(ring.size());
  for (GridPoint v : ring) {
    while (out.size() >= 2 && collinear(out[out.size() - 2], out.back(), v)) out.pop_back();
    if (out.empty() || out.back() != v) out.push_back(v);
  }
  bool changed = true;
  while (changed && out.size() >= 3) {
    changed = false;
    if (out.back() == out.front()) {
      out.pop_back();
      changed = true;
      continue;
    }
    if (collinear(out[out.size() - 2], out.back(), out.front())) {
      out.pop_back();
      changed = true;
      continue;
    }
    if (collinear(out.back(), out[0], out[1])) {
      out.erase(out.begin());
      changed = true;
    }
  }
  return out;
}

}  // namespace

const char* to_string(GeometryError::Kind kind) noexcept {
  switch (kind) {
    case GeometryError::Kind::NotRectilinear: return "NotRectilinear";
    case GeometryError::Kind::Degenerate: return "Degenerate";
    case GeometryError::Kind::SelfIntersecting: return "SelfIntersecting";
  }
  return "Unknown";
}

std::optional<Mbr> intersect(const Mbr& a, const Mbr& b) noexcept {
  Mbr r{std::max(a.xlo, b.xlo), std::max(a.ylo, b.ylo), std::min(a.xhi, b.xhi),
        std::min(a.yhi, b.yhi)};
  if (r.empty()) return std::nullopt;
  return r;
}

Mbr unite(const Mbr& a, const Mbr& b) noexcept {
  return {std::min(a.xlo, b.xlo), std::min(a.ylo, b.ylo), std::max(a.xhi, b.xhi),
          std::max(a.yhi, b.yhi)};
}

std::int64_t signed_area(std::span<const GridPoint> ring) noexcept {
  // Sum of x * dy over the vertical edges, relative to the first vertex. The
  // terms can exceed 64 bits in partial sums, but the result is at most 2^62
  // in magnitude, so wrapping unsigned arithmetic recovers it exactly.
  if (ring.empty()) return 0;
  const std::int64_t x0 = ring[0].x;
  std::uint64_t sum = 0;
  const std::size_t n = ring.size();
  for (std::size_t i = 0; i < n; ++i) {
    const GridPoint a = ring[i];
    const GridPoint b = ring[(i + 1) % n];
    if (a.x != b.x) continue;
    const auto dx = static_cast<std::uint64_t>(std::int64_t{a.x} - x0);
    const auto dy = static_cast<std::uint64_t>(std::int64_t{b.y} - a.y);
    sum += dx * dy;
  }
  return static_cast<std::int64_t>(sum);
}

bool ring_is_simple(std::span<const GridPoint> ring) noexcept {
  const std::size_t n = ring.size();
  struct Box {
    std::int32_t xlo, ylo, xhi, yhi;
  };
  std::vector<Box> edges(n);
  for (std::size_t i = 0; i < n; ++i) {
    const GridPoint a = ring[i];
    const GridPoint b = ring[(i + 1) % n];
    edges[i] = {std::min(a.x, b.x), std::min(a.y, b.y), std::max(a.x, b.x), std::max(a.y, b.y)};
  }
  // Axis-aligned segments intersect iff their (degenerate) boxes overlap.
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 2; j < n; ++j) {
      if (i == 0 && j == n - 1) continue;
      const Box& e = edges[i];
      const Box& f = edges[j];
      if (e.xlo <= f.xhi && f.xlo <= e.xhi && e.ylo <= f.yhi && f.ylo <= e.yhi) return false;
    }
  }
  return true;
}

RectilinearPolygon::RectilinearPolygon(std::int64_t id, std::vector<GridPoint> ring)
    : m_id(id), m_vertices(std::move(ring)) {
  std::int32_t xlo = std::numeric_limits<std::int32_t>::max();
  std::int32_t ylo = xlo;
  std::int32_t xhi = std::numeric_limits<std::int32_t>::min();
  std::int32_t yhi = xhi;
  for (GridPoint v : m_vertices) {
    xlo = std::min(xlo, v.x);
    ylo = std::min(ylo, v.y);
    xhi = std::max(xhi, v.x);
    yhi = std::max(yhi, v.y);
  }
  m_mbr = {xlo, ylo, xhi, yhi};

  const std::size_t n = m_vertices.size();
  m_vertical.x.reserve(n / 2);
  m_vertical.ylo.reserve(n / 2);
  m_vertical.yhi.reserve(n / 2);
  m_horizontal.y.reserve(n / 2);
  m_horizontal.xlo.reserve(n / 2);
  m_horizontal.xhi.reserve(n / 2);
  for (std::size_t i = 0; i < n; ++i) {
    const GridPoint a = m_vertices[i];
    const GridPoint b = m_vertices[(i + 1) % n];
    if (a.x == b.x) {
      m_vertical.x.push_back(a.x);
      m_vertical.ylo.push_back(std::min(a.y, b.y));
      m_vertical.yhi.push_back(std::max(a.y, b.y));
    } else {
      m_horizontal.y.push_back(a.y);
      m_horizontal.xlo.push_back(std::min(a.x, b.x));
      m_horizontal.xhi.push_back(std::max(a.x, b.x));
    }
  }
  m_area = static_cast<std::uint64_t>(signed_area(m_vertices));
}

RectilinearPolygon validate_polygon(std::span<const GridPoint> raw, std::int64_t id,
                                    const ValidationOptions& opts) {
  std::vector<GridPoint> ring = dedup_ring(raw);
  for (std::size_t i = 0; i < ring.size() && ring.size() >= 2; ++i) {
    const GridPoint a = ring[i];
    const GridPoint b = ring[(i + 1) % ring.size()];
    if (a.x != b.x && a.y != b.y) {
      throw GeometryError(GeometryError::Kind::NotRectilinear,
                          "diagonal edge " + describe(a) + "-" + describe(b));
    }
  }
  ring = drop_collinear(ring);
  if (ring.size() < 4) {
    throw GeometryError(GeometryError::Kind::Degenerate,
                        "ring has " + std::to_string(ring.size()) + " distinct corners");
  }
  const std::int64_t area = signed_area(ring);
  if (area == 0) {
    throw GeometryError(GeometryError::Kind::Degenerate, "zero area");
  }
  if (area < 0) std::reverse(ring.begin() + 1, ring.end());
  if (ring.size() <= opts.simplicity_check_max_edges && !ring_is_simple(ring)) {
    throw GeometryError(GeometryError::Kind::SelfIntersecting, "ring touches itself");
  }
  return RectilinearPolygon(id, std::move(ring));
}

std::uint64_t polygon_area(const RectilinearPolygon& p) noexcept { return p.area(); }

Mbr compute_mbr(const RectilinearPolygon& p) noexcept { return p.mbr(); }

std::uint32_t count_crossings(const VerticalEdges& edges, std::int32_t x,
                              std::int32_t y) noexcept {
  const std::int32_t* ex = edges.x.data();
  const std::int32_t* lo = edges.ylo.data();
  const std::int32_t* hi = edges.yhi.data();
  const std::size_t n = edges.size();
  std::uint32_t c0 = 0, c1 = 0, c2 = 0, c3 = 0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    c0 += static_cast<std::uint32_t>((ex[i] > x) & (lo[i] <= y) & (y < hi[i]));
    c1 += static_cast<std::uint32_t>((ex[i + 1] > x) & (lo[i + 1] <= y) & (y < hi[i + 1]));
    c2 += static_cast<std::uint32_t>((ex[i + 2] > x) & (lo[i + 2] <= y) & (y < hi[i + 2]));
    c3 += static_cast<std::uint32_t>((ex[i + 3] > x) & (lo[i + 3] <= y) & (y < hi[i + 3]));
  }
  for (; i < n; ++i) {
    c0 += static_cast<std::uint32_t>((ex[i] > x) & (lo[i] <= y) & (y < hi[i]));
  }
  return c0 + c1 + c2 + c3;
}

RectilinearPolygon translate(const RectilinearPolygon& p, std::int32_t dx, std::int32_t dy) {
  std::vector<GridPoint> ring(p.vertices().begin(), p.vertices().end());
  for (GridPoint& v : ring) {
    v.x += dx;
    v.y += dy;
  }
  return validate_polygon(ring, p.id(), ValidationOptions{0});
}

RectilinearPolygon scale(const RectilinearPolygon& p, std::int32_t factor) {
  std::vector<GridPoint> ring(p.vertices().begin(), p.vertices().end());
  for (GridPoint& v : ring) {
    v.x *= factor;
    v.y *= factor;
  }
  return validate_polygon(ring, p.id(), ValidationOptions{0});
}

}  // namespace rectijac
