#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rectijac {

/// A vertex on the integer pixel grid. When used to name a pixel it is the
/// lower-left corner of the unit cell [x, x+1) x [y, y+1).
struct GridPoint {
  std::int32_t x = 0;
  std::int32_t y = 0;

  constexpr auto operator<=>(const GridPoint&) const = default;
};

/// Half-open pixel rectangle [xlo, xhi) x [ylo, yhi).
struct Mbr {
  std::int32_t xlo = 0;
  std::int32_t ylo = 0;
  std::int32_t xhi = 0;
  std::int32_t yhi = 0;

  constexpr bool operator==(const Mbr&) const = default;

  [[nodiscard]] constexpr std::int64_t width() const noexcept {
    return std::int64_t{xhi} - xlo;
  }
  [[nodiscard]] constexpr std::int64_t height() const noexcept {
    return std::int64_t{yhi} - ylo;
  }
  [[nodiscard]] constexpr bool empty() const noexcept { return xhi <= xlo || yhi <= ylo; }
  [[nodiscard]] constexpr std::uint64_t pixel_count() const noexcept {
    return empty() ? 0 : static_cast<std::uint64_t>(width()) * static_cast<std::uint64_t>(height());
  }
  [[nodiscard]] constexpr bool contains(GridPoint cell) const noexcept {
    return cell.x >= xlo && cell.x < xhi && cell.y >= ylo && cell.y < yhi;
  }
  /// True when the two rectangles share at least one pixel.
  [[nodiscard]] constexpr bool intersects(const Mbr& o) const noexcept {
    return xlo < o.xhi && o.xlo < xhi && ylo < o.yhi && o.ylo < yhi;
  }
  [[nodiscard]] constexpr bool contains(const Mbr& o) const noexcept {
    return xlo <= o.xlo && ylo <= o.ylo && o.xhi <= xhi && o.yhi <= yhi;
  }
};

/// Shared pixels of two rectangles, or nullopt when they share none.
[[nodiscard]] std::optional<Mbr> intersect(const Mbr& a, const Mbr& b) noexcept;
/// Smallest rectangle covering both.
[[nodiscard]] Mbr unite(const Mbr& a, const Mbr& b) noexcept;

/// Vertical polygon edges in structure-of-arrays form: edge i sits at x[i]
/// and spans [ylo[i], yhi[i]) with ylo < yhi.
struct VerticalEdges {
  std::vector<std::int32_t> x;
  std::vector<std::int32_t> ylo;
  std::vector<std::int32_t> yhi;
  [[nodiscard]] std::size_t size() const noexcept { return x.size(); }
};

/// Horizontal polygon edges: edge i sits at y[i] and spans [xlo[i], xhi[i]].
struct HorizontalEdges {
  std::vector<std::int32_t> y;
  std::vector<std::int32_t> xlo;
  std::vector<std::int32_t> xhi;
  [[nodiscard]] std::size_t size() const noexcept { return y.size(); }
};

class GeometryError : public std::runtime_error {
 public:
  enum class Kind { NotRectilinear, Degenerate, SelfIntersecting };

  GeometryError(Kind kind, const std::string& what) : std::runtime_error(what), m_kind(kind) {}
  [[nodiscard]] Kind kind() const noexcept { return m_kind; }

 private:
  Kind m_kind;
};

[[nodiscard]] const char* to_string(GeometryError::Kind kind) noexcept;

struct ValidationOptions {
  /// Rings with at most this many edges get the O(E^2) simplicity check.
  std::size_t simplicity_check_max_edges = 512;
};

/// Closed, simple, axis-aligned ring with integer vertices, normalized to
/// counter-clockwise order with no duplicate or collinear vertices.
/// Only obtainable through validate_polygon, so every instance is canonical.
class RectilinearPolygon {
 public:
  [[nodiscard]] std::int64_t id() const noexcept { return m_id; }
  [[nodiscard]] std::span<const GridPoint> vertices() const noexcept { return m_vertices; }
  [[nodiscard]] const Mbr& mbr() const noexcept { return m_mbr; }
  [[nodiscard]] const VerticalEdges& vertical_edges() const noexcept { return m_vertical; }
  [[nodiscard]] const HorizontalEdges& horizontal_edges() const noexcept { return m_horizontal; }
  [[nodiscard]] std::uint64_t area() const noexcept { return m_area; }

  bool operator==(const RectilinearPolygon& o) const noexcept {
    return m_id == o.m_id && m_vertices == o.m_vertices;
  }

 private:
  friend RectilinearPolygon validate_polygon(std::span<const GridPoint>, std::int64_t,
                                             const ValidationOptions&);
  RectilinearPolygon(std::int64_t id, std::vector<GridPoint> ring);

  std::int64_t m_id = 0;
  std::vector<GridPoint> m_vertices;
  Mbr m_mbr;
  VerticalEdges m_vertical;
  HorizontalEdges m_horizontal;
  std::uint64_t m_area = 0;
};

/// Signed area of an axis-aligned ring (positive for CCW). Exact for
/// coordinates up to 2^30 in magnitude.
[[nodiscard]] std::int64_t signed_area(std::span<const GridPoint> ring) noexcept;

/// Normalizes a raw vertex list and checks it is a valid rectilinear ring.
/// Duplicate consecutive vertices (including a repeated closing vertex) and
/// collinear vertices are dropped, and clockwise rings are reversed with the
/// first vertex kept in place. Throws GeometryError.
[[nodiscard]] RectilinearPolygon validate_polygon(std::span<const GridPoint> raw,
                                                  std::int64_t id = 0,
                                                  const ValidationOptions& opts = {});

/// Number of pixel cells enclosed; exact for rectilinear integer rings.
[[nodiscard]] std::uint64_t polygon_area(const RectilinearPolygon& p) noexcept;

[[nodiscard]] Mbr compute_mbr(const RectilinearPolygon& p) noexcept;

/// Number of vertical edges crossed by a rightward ray from the center of
/// pixel (x, y). Processes edges four at a time.
[[nodiscard]] std::uint32_t count_crossings(const VerticalEdges& edges, std::int32_t x,
                                            std::int32_t y) noexcept;

/// True iff the center of pixel `px` lies inside `p` (even-odd ray casting).
[[nodiscard]] inline bool pixel_in_polygon(GridPoint px, const RectilinearPolygon& p) noexcept {
  return (count_crossings(p.vertical_edges(), px.x, px.y) & 1U) != 0;
}

/// The O(E^2) edge-pair check; true when no two non-adjacent edges touch.
[[nodiscard]] bool ring_is_simple(std::span<const GridPoint> ring) noexcept;

/// Translated copy (same id), re-validated.
[[nodiscard]] RectilinearPolygon translate(const RectilinearPolygon& p, std::int32_t dx,
                                           std::int32_t dy);

/// Copy with every coordinate multiplied by `factor` (same id).
[[nodiscard]] RectilinearPolygon scale(const RectilinearPolygon& p, std::int32_t factor);

}  // namespace rectijac
