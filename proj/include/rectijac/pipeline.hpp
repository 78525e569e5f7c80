#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rectijac/migration.hpp"
#include "rectijac/parser.hpp"
#include "rectijac/pixelbox.hpp"
#include "rectijac/tile_task.hpp"

namespace rectijac {

struct PipelineConfig {
  PixelBoxConfig pixelbox;
  /// Parser workers, batch pool width and stage pool width.
  unsigned workers = 4;
  std::size_t buffer_capacity = 64;
  /// The aggregator keeps pulling buffered tasks until it holds this many
  /// candidate pairs or the buffer runs dry.
  std::size_t batch_min = 4096;
  MigrationConfig migration;
  double batch_throttle = 1.0;
  /// Slows the regular parser workers down, to emulate a slow parser stage.
  double parse_throttle = 1.0;
  /// nullopt: detect per file.
  std::optional<InputFormat> format;
  ParseOptions parse;

  /// Throws std::invalid_argument when a knob is out of range.
  void check() const;
};

struct TileReport {
  std::string tile_id;
  std::uint64_t polygons_a = 0;
  std::uint64_t polygons_b = 0;
  /// Candidate pairs (intersecting MBRs).
  std::uint64_t pairs = 0;
  /// Pairs with a nonzero intersection.
  std::uint64_t intersecting = 0;
  double ratio_sum = 0.0;
  /// Informational per-tile average.
  std::optional<double> jaccard;
  std::uint64_t missing_a = 0;
  std::uint64_t missing_b = 0;

  bool operator==(const TileReport&) const = default;
};

/// Busy time per stage summed over its workers, and the wall clock.
struct StageTiming {
  double parse_ms = 0;
  double build_ms = 0;
  double filter_ms = 0;
  double aggregate_ms = 0;
  double total_ms = 0;
};

struct SimilarityReport {
  std::string image;
  std::string set_a;
  std::string set_b;
  std::vector<TileReport> tiles;  // sorted by tile id
  std::uint64_t polygons_a = 0;
  std::uint64_t polygons_b = 0;
  std::uint64_t pairs = 0;
  std::uint64_t intersecting = 0;
  std::uint64_t missing_a = 0;
  std::uint64_t missing_b = 0;
  /// Mean intersection/union over all intersecting pairs; none when there
  /// are none.
  std::optional<double> jaccard;
  std::vector<std::string> unpaired;

  // Run telemetry; varies between runs and is excluded from comparisons.
  StageTiming timing;
  MigrationStats migration;
};

/// Reduces per-tile results in canonical (tile id, p id, q id) order, so
/// the outcome does not depend on which order the tiles finished in.
[[nodiscard]] SimilarityReport aggregate_jaccard(std::vector<TileResult> results);

/// Four-stage pipelined comparison of every tile in the manifest.
[[nodiscard]] SimilarityReport run_pipeline(const Manifest& manifest, const PipelineConfig& cfg);

/// One tile at a time through all four stages; same report as run_pipeline.
[[nodiscard]] SimilarityReport run_sequential(const Manifest& manifest, const PipelineConfig& cfg);

/// `streams` independent sequential loops over interleaved slices of the
/// manifest, sharing one batch pool with no coordination between them.
[[nodiscard]] SimilarityReport run_multistream(const Manifest& manifest, const PipelineConfig& cfg,
                                               unsigned streams);

/// Parses both files of a task in place.
void parse_task(TileTask& task, const PipelineConfig& cfg);

/// JSON rendering. Without telemetry the timing and migration blocks are
/// left out, which makes the output comparable across runs.
[[nodiscard]] std::string to_json(const SimilarityReport& report, bool telemetry = true);

}  // namespace rectijac
