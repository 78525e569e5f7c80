#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "rectijac/hilbert_rtree.hpp"
#include "rectijac/parser.hpp"
#include "rectijac/pixelbox.hpp"

namespace rectijac {

/// Where a tile task currently sits in the pipeline.
enum class TaskStage { Parse, Build, Filter, Aggregate };

/// One tile travelling through the pipeline. The payload grows stage by
/// stage: file sources, then parsed files, then the join index, then the
/// candidate pairs.
struct TileTask {
  std::size_t seq = 0;  // manifest position
  std::string tile_id;
  TaskStage stage = TaskStage::Parse;

  TileSpec source;
  std::shared_ptr<const PolygonFile> set_a;
  std::shared_ptr<const PolygonFile> set_b;
  JoinIndex index;
  std::vector<CandidatePair> candidates;
  /// Candidate-pair count once the filter has run.
  std::size_t size_hint = 0;
};

/// Areas of one candidate pair, keyed by polygon ids.
struct PairResult {
  std::int64_t p_id = 0;
  std::int64_t q_id = 0;
  PairAreas areas;

  bool operator==(const PairResult&) const = default;
};

/// Everything the final reduction needs from one tile.
struct TileResult {
  std::string tile_id;
  std::uint64_t polygons_a = 0;
  std::uint64_t polygons_b = 0;
  std::vector<PairResult> pairs;
};

/// A failure while processing one tile. `input_error` separates bad input
/// files from internal faults.
class TileError : public std::runtime_error {
 public:
  TileError(std::string tile_id, bool input_error, const std::string& what)
      : std::runtime_error("tile " + tile_id + ": " + what),
        m_tile(std::move(tile_id)),
        m_input(input_error) {}

  [[nodiscard]] const std::string& tile_id() const noexcept { return m_tile; }
  [[nodiscard]] bool input_error() const noexcept { return m_input; }

 private:
  std::string m_tile;
  bool m_input;
};

/// Rethrows the exception being handled as a TileError for `tile_id`.
/// TileError and BufferAborted pass through unchanged.
[[noreturn]] void rethrow_for_tile(const std::string& tile_id);

/// Pairs the candidates of a filtered task with the computed areas.
[[nodiscard]] TileResult make_tile_result(const TileTask& task, std::span<const PairAreas> areas);

/// Polygon references for every candidate of a filtered task.
[[nodiscard]] std::vector<PolygonPairRef> pair_refs(const TileTask& task);

}  // namespace rectijac
