#include "rectijac/hilbert_rtree.hpp"

#include <algorithm>

namespace rectijac {

namespace {

void rotate(std::uint64_t n, std::uint64_t& x, std::uint64_t& y, std::uint64_t rx,
            std::uint64_t ry) noexcept {
  if (ry == 0) {
    if (rx == 1) {
      x = n - 1 - x;
      y = n - 1 - y;
    }
    std::swap(x, y);
  }
}

std::int64_t floor_mid(std::int32_t lo, std::int32_t hi) noexcept {
  const std::int64_t s = std::int64_t{lo} + hi;
  return s >= 0 ? s / 2 : -((-s + 1) / 2);
}

// Maps a coordinate of the frame [lo, hi) onto [0, 2^order).
std::int32_t rescale(std::int64_t v, std::int32_t lo, std::int64_t extent, unsigned order) {
  const std::uint64_t cells = std::uint64_t{1} << order;
  const std::uint64_t off = static_cast<std::uint64_t>(std::max<std::int64_t>(0, v - lo));
  const std::uint64_t scaled = (off << order) / static_cast<std::uint64_t>(std::max<std::int64_t>(1, extent));
  return static_cast<std::int32_t>(std::min(scaled, cells - 1));
}

}  // namespace

std::uint64_t hilbert_value(GridPoint cell, unsigned order) noexcept {
  const std::uint64_t n = std::uint64_t{1} << order;
  std::uint64_t x = static_cast<std::uint32_t>(cell.x);
  std::uint64_t y = static_cast<std::uint32_t>(cell.y);
  std::uint64_t d = 0;
  for (std::uint64_t s = n / 2; s > 0; s /= 2) {
    const std::uint64_t rx = (x & s) ? 1 : 0;
    const std::uint64_t ry = (y & s) ? 1 : 0;
    d += s * s * ((3 * rx) ^ ry);
    rotate(n, x, y, rx, ry);
  }
  return d;
}

GridPoint hilbert_cell(std::uint64_t index, unsigned order) noexcept {
  const std::uint64_t n = std::uint64_t{1} << order;
  std::uint64_t x = 0;
  std::uint64_t y = 0;
  std::uint64_t t = index;
  for (std::uint64_t s = 1; s < n; s *= 2) {
    const std::uint64_t rx = 1 & (t / 2);
    const std::uint64_t ry = 1 & (t ^ rx);
    rotate(s, x, y, rx, ry);
    x += s * rx;
    y += s * ry;
    t /= 4;
  }
  return {static_cast<std::int32_t>(x), static_cast<std::int32_t>(y)};
}

HilbertRTree HilbertRTree::build(std::span<const RectilinearPolygon> polygons, unsigned order,
                                 unsigned fanout) {
  if (polygons.empty()) throw IndexError("cannot index an empty polygon set");
  if (order < 1 || order > 31) throw IndexError("hilbert order must be in [1, 31]");
  if (fanout < 2) throw IndexError("node fanout must be >= 2");

  HilbertRTree tree;
  tree.m_order = order;
  tree.m_fanout = fanout;

  Mbr frame = polygons.front().mbr();
  for (const auto& p : polygons) frame = unite(frame, p.mbr());

  tree.m_entries.reserve(polygons.size());
  for (std::size_t i = 0; i < polygons.size(); ++i) {
    const Mbr& m = polygons[i].mbr();
    const GridPoint cell{rescale(floor_mid(m.xlo, m.xhi), frame.xlo, frame.width(), order),
                         rescale(floor_mid(m.ylo, m.yhi), frame.ylo, frame.height(), order)};
    tree.m_entries.push_back({m, hilbert_value(cell, order), polygons[i].id(),
                              static_cast<std::uint32_t>(i)});
  }
  std::sort(tree.m_entries.begin(), tree.m_entries.end(), [](const Entry& a, const Entry& b) {
    return a.hilbert != b.hilbert ? a.hilbert < b.hilbert : a.id < b.id;
  });

  std::vector<Node> level;
  for (std::size_t i = 0; i < tree.m_entries.size(); i += fanout) {
    const std::size_t end = std::min(tree.m_entries.size(), i + fanout);
    Node node{tree.m_entries[i].mbr, static_cast<std::uint32_t>(i),
              static_cast<std::uint32_t>(end - i)};
    for (std::size_t j = i + 1; j < end; ++j) node.mbr = unite(node.mbr, tree.m_entries[j].mbr);
    level.push_back(node);
  }
  tree.m_levels.push_back(std::move(level));

  while (tree.m_levels.back().size() > 1) {
    const auto& below = tree.m_levels.back();
    std::vector<Node> up;
    for (std::size_t i = 0; i < below.size(); i += fanout) {
      const std::size_t end = std::min(below.size(), i + fanout);
      Node node{below[i].mbr, static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(end - i)};
      for (std::size_t j = i + 1; j < end; ++j) node.mbr = unite(node.mbr, below[j].mbr);
      up.push_back(node);
    }
    tree.m_levels.push_back(std::move(up));
  }
  return tree;
}

std::vector<std::uint32_t> HilbertRTree::query(const Mbr& probe) const {
  std::vector<const Entry*> hits;
  struct Frame {
    std::size_t level;
    std::uint32_t node;
  };
  std::vector<Frame> todo;
  todo.push_back({m_levels.size() - 1, 0});
  while (!todo.empty()) {
    const Frame f = todo.back();
    todo.pop_back();
    const Node& node = m_levels[f.level][f.node];
    if (!node.mbr.intersects(probe)) continue;
    if (f.level == 0) {
      for (std::uint32_t i = node.first; i < node.first + node.count; ++i) {
        if (m_entries[i].mbr.intersects(probe)) hits.push_back(&m_entries[i]);
      }
    } else {
      for (std::uint32_t i = node.first; i < node.first + node.count; ++i) {
        todo.push_back({f.level - 1, i});
      }
    }
  }
  std::sort(hits.begin(), hits.end(), [](const Entry* a, const Entry* b) { return a->id < b->id; });
  std::vector<std::uint32_t> out;
  out.reserve(hits.size());
  for (const Entry* e : hits) out.push_back(e->ref);
  return out;
}

JoinIndex build_join_index(std::span<const RectilinearPolygon> set_p,
                           std::span<const RectilinearPolygon> set_q) {
  JoinIndex index;
  index.indexes_p = set_p.size() >= set_q.size();
  const auto indexed = index.indexes_p ? set_p : set_q;
  if (!indexed.empty()) index.tree = HilbertRTree::build(indexed);
  return index;
}

std::vector<CandidatePair> probe_join(const JoinIndex& index,
                                      std::span<const RectilinearPolygon> set_p,
                                      std::span<const RectilinearPolygon> set_q) {
  std::vector<CandidatePair> out;
  if (!index.tree) return out;
  const auto probes = index.indexes_p ? set_q : set_p;
  const auto indexed = index.indexes_p ? set_p : set_q;
  for (std::size_t i = 0; i < probes.size(); ++i) {
    for (std::uint32_t hit : index.tree->query(probes[i].mbr())) {
      const auto joint = intersect(probes[i].mbr(), indexed[hit].mbr());
      const auto probe_ref = static_cast<std::uint32_t>(i);
      if (index.indexes_p) {
        out.push_back({hit, probe_ref, *joint});
      } else {
        out.push_back({probe_ref, hit, *joint});
      }
    }
  }
  std::sort(out.begin(), out.end(), [&](const CandidatePair& a, const CandidatePair& b) {
    const std::int64_t ap = set_p[a.p_ref].id();
    const std::int64_t bp = set_p[b.p_ref].id();
    if (ap != bp) return ap < bp;
    return set_q[a.q_ref].id() < set_q[b.q_ref].id();
  });
  return out;
}

std::vector<CandidatePair> mbr_join(std::span<const RectilinearPolygon> set_p,
                                    std::span<const RectilinearPolygon> set_q) {
  return probe_join(build_join_index(set_p, set_q), set_p, set_q);
}

}  // namespace rectijac
