#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "rectijac/geometry.hpp"

namespace rectijac {

/// Position of `cell` along the Hilbert curve filling the 2^order x 2^order
/// grid. Requires 0 <= x, y < 2^order and 1 <= order <= 31.
[[nodiscard]] std::uint64_t hilbert_value(GridPoint cell, unsigned order) noexcept;

/// Inverse of hilbert_value.
[[nodiscard]] GridPoint hilbert_cell(std::uint64_t index, unsigned order) noexcept;

class IndexError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two polygons (indices into their sets) whose MBRs share pixels.
struct CandidatePair {
  std::uint32_t p_ref = 0;
  std::uint32_t q_ref = 0;
  Mbr joint_mbr;

  bool operator==(const CandidatePair&) const = default;
};

/// Static R-tree bulk-loaded in Hilbert order of the MBR centers.
///
/// Leaves hold polygon references sorted by Hilbert value (ties by id);
/// every group of `fanout` consecutive entries on one level becomes a node
/// of the level above, until a single root remains.
class HilbertRTree {
 public:
  static constexpr unsigned kDefaultOrder = 16;
  static constexpr unsigned kDefaultFanout = 16;

  /// Throws IndexError on an empty input.
  [[nodiscard]] static HilbertRTree build(std::span<const RectilinearPolygon> polygons,
                                          unsigned order = kDefaultOrder,
                                          unsigned fanout = kDefaultFanout);

  /// Indices of the polygons whose MBR shares a pixel with `probe`, sorted
  /// by polygon id.
  [[nodiscard]] std::vector<std::uint32_t> query(const Mbr& probe) const;

  /// Number of node levels (1 for a tree that is a single leaf node).
  [[nodiscard]] std::size_t height() const noexcept { return m_levels.size(); }
  [[nodiscard]] std::size_t nodes_on_level(std::size_t level) const { return m_levels.at(level).size(); }
  [[nodiscard]] const Mbr& root_mbr() const noexcept { return m_levels.back().front().mbr; }
  [[nodiscard]] std::size_t size() const noexcept { return m_entries.size(); }
  [[nodiscard]] unsigned order() const noexcept { return m_order; }
  [[nodiscard]] unsigned fanout() const noexcept { return m_fanout; }

  struct Entry {
    Mbr mbr;
    std::uint64_t hilbert = 0;
    std::int64_t id = 0;
    std::uint32_t ref = 0;
  };
  struct Node {
    Mbr mbr;
    std::uint32_t first = 0;  // into the level below, or into entries for level 0
    std::uint32_t count = 0;
  };

  [[nodiscard]] std::span<const Entry> entries() const noexcept { return m_entries; }
  [[nodiscard]] std::span<const Node> level(std::size_t i) const { return m_levels.at(i); }

 private:
  unsigned m_order = kDefaultOrder;
  unsigned m_fanout = kDefaultFanout;
  std::vector<Entry> m_entries;
  std::vector<std::vector<Node>> m_levels;  // [0] = leaf nodes, back() = root
};

/// Index over one side of a join. Absent when the indexed side is empty.
struct JoinIndex {
  std::optional<HilbertRTree> tree;
  bool indexes_p = true;
};

/// Indexes the larger of the two sets (p on ties).
[[nodiscard]] JoinIndex build_join_index(std::span<const RectilinearPolygon> set_p,
                                         std::span<const RectilinearPolygon> set_q);

/// Probes `index` with every member of the other set. Output is sorted by
/// (p id, q id).
[[nodiscard]] std::vector<CandidatePair> probe_join(const JoinIndex& index,
                                                    std::span<const RectilinearPolygon> set_p,
                                                    std::span<const RectilinearPolygon> set_q);

/// All pairs with intersecting MBRs, sorted by (p id, q id).
[[nodiscard]] std::vector<CandidatePair> mbr_join(std::span<const RectilinearPolygon> set_p,
                                                  std::span<const RectilinearPolygon> set_q);

}  // namespace rectijac
