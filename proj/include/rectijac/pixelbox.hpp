#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rectijac/executor.hpp"
#include "rectijac/geometry.hpp"

namespace rectijac {

enum class BoxPosition : std::uint8_t { Inside, Outside, Hover };

[[nodiscard]] const char* to_string(BoxPosition pos) noexcept;

/// A box on the sampling stack. `probe` clear means the box is settled and
/// is skipped when popped.
struct SamplingBox {
  Mbr bounds;
  bool probe = true;

  [[nodiscard]] std::uint64_t size() const noexcept { return bounds.pixel_count(); }
  bool operator==(const SamplingBox&) const = default;
};

/// Tuning knobs of the sampling-box engine.
///
/// `group_size` is the number of cooperating workers per pair on a wide
/// device; on the CPU it only sets the defaults below. Boxes with fewer than
/// `pixel_threshold` pixels are resolved pixel by pixel, larger ones are cut
/// into `fanout` sub-boxes.
struct PixelBoxConfig {
  std::uint32_t group_size = 64;
  std::uint64_t pixel_threshold = 2048;
  std::uint32_t fanout = 64;

  /// n, T = n^2/2, F = n.
  [[nodiscard]] static PixelBoxConfig for_group_size(std::uint32_t n);
  /// Same threshold semantics with quadtree fan-out, used by the scalar path.
  [[nodiscard]] PixelBoxConfig scalar() const;
  /// Throws std::invalid_argument when a knob is out of range.
  void check() const;

  bool operator==(const PixelBoxConfig&) const = default;
};

/// Areas of one polygon pair, in pixels.
struct PairAreas {
  std::uint64_t area_p = 0;
  std::uint64_t area_q = 0;
  std::uint64_t area_intersection = 0;
  std::uint64_t area_union = 0;

  /// Derives the union by inclusion-exclusion.
  [[nodiscard]] static PairAreas from(std::uint64_t area_p, std::uint64_t area_q,
                                      std::uint64_t area_intersection) noexcept {
    return {area_p, area_q, area_intersection, area_p + area_q - area_intersection};
  }
  bool operator==(const PairAreas&) const = default;
};

/// Selects how the kernel treats the union.
enum class KernelMode : std::uint8_t {
  /// Intersection only; the union is derived from polygon areas.
  Separated,
  /// Intersection and union sampled together from the union MBR. Kept as a
  /// benchmark baseline.
  Combined,
};

class StackOverflowError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BatchError : public std::runtime_error {
 public:
  BatchError(std::size_t pair_index, const std::string& what)
      : std::runtime_error("pair " + std::to_string(pair_index) + ": " + what),
        m_index(pair_index) {}
  [[nodiscard]] std::size_t pair_index() const noexcept { return m_index; }

 private:
  std::size_t m_index;
};

/// Position of a box relative to a polygon from edge crossings, vertex
/// containment and the box's center pixel. Vertices on the box boundary
/// count as inside the box; edges lying along the box boundary do not cross.
[[nodiscard]] BoxPosition box_position(const Mbr& box, const RectilinearPolygon& p) noexcept;

/// Cuts a box into at most `fanout` disjoint boxes covering it exactly.
[[nodiscard]] std::vector<SamplingBox> partition_box(const SamplingBox& box,
                                                     std::uint32_t fanout);

/// Entries the sampling stack may need for a root box of this size.
[[nodiscard]] std::size_t stack_capacity(std::uint64_t root_pixels, const PixelBoxConfig& cfg);

/// Exact areas of p, q and their intersection via sampling boxes.
[[nodiscard]] PairAreas intersection_area_pixelbox(const RectilinearPolygon& p,
                                                   const RectilinearPolygon& q,
                                                   const PixelBoxConfig& cfg = {},
                                                   KernelMode mode = KernelMode::Separated);

/// Pixel-by-pixel scan of the MBR intersection; the reference result.
[[nodiscard]] PairAreas intersection_area_oracle(const RectilinearPolygon& p,
                                                 const RectilinearPolygon& q);

/// Tests every pixel of the joint MBR against both polygons and counts
/// intersection and union directly. Benchmark baseline.
[[nodiscard]] PairAreas intersection_area_pixelonly(const RectilinearPolygon& p,
                                                    const RectilinearPolygon& q);

/// intersection / union, or nullopt when the pair does not intersect.
[[nodiscard]] std::optional<double> pair_ratio(const PairAreas& a) noexcept;

struct PolygonPairRef {
  const RectilinearPolygon* p = nullptr;
  const RectilinearPolygon* q = nullptr;
};

/// Runs the kernel over a batch on `pool`, one pair per work item. Results
/// are in input order and independent of the pool width. Failures surface
/// as BatchError carrying the pair index.
[[nodiscard]] std::vector<PairAreas> intersection_area_batch(std::span<const PolygonPairRef> pairs,
                                                             const PixelBoxConfig& cfg,
                                                             ExecutorPool& pool,
                                                             KernelMode mode = KernelMode::Separated);

}  // namespace rectijac
