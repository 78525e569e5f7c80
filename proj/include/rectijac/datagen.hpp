#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "rectijac/geometry.hpp"
#include "rectijac/parser.hpp"

namespace rectijac {

struct GenSpec {
  std::uint64_t seed = 1;
  std::size_t tiles = 4;
  std::size_t polygons_per_tile = 100;
  /// Target polygon area in pixels before scaling.
  double mean_area = 150;
  double area_stddev = 100;
  /// Multiplies every coordinate; areas grow by its square.
  std::int32_t scale_factor = 1;
  /// Fraction of set-B polygons moved or regrown relative to set A.
  double perturbation = 0.2;
  /// Fraction of set-A polygons with no counterpart in set B.
  double drop = 0.0;
  /// Bias towards blob-like shapes; 0 grows uniformly from the frontier.
  double compactness = 3.0;
  std::string image = "synth";

  /// Throws std::invalid_argument when a field is out of range.
  void check() const;
};

using Rng = std::mt19937_64;

/// Independent stream for (seed, tile, polygon, purpose), so every polygon
/// can be generated without reference to the others.
[[nodiscard]] Rng keyed_rng(std::uint64_t seed, std::uint64_t tile, std::uint64_t index,
                            std::uint64_t purpose = 0);

using Cell = std::pair<std::int32_t, std::int32_t>;

/// Grows `cells` by accretion until it holds `target` cells. Only cells that
/// keep the region connected, hole-free and free of corner-only contacts are
/// added. An empty set starts from cell (0, 0).
void accrete_cells(Rng& rng, std::set<Cell>& cells, std::uint64_t target, double compactness);

/// Traces the outline of a region produced by accrete_cells.
[[nodiscard]] RectilinearPolygon cells_to_polygon(const std::set<Cell>& cells, std::int64_t id = 0);

/// A polygon of exactly `target_area` pixels with its first cell at (0, 0).
[[nodiscard]] RectilinearPolygon gen_polygon(Rng& rng, std::uint64_t target_area,
                                             double compactness = 3.0, std::int64_t id = 0);

struct TilePair {
  PolygonFile a;
  PolygonFile b;
};

/// Set A on a non-overlapping layout and its perturbed copy B.
[[nodiscard]] TilePair gen_tile_pair(const GenSpec& spec, std::size_t tile_index);

/// Tile id of the i-th generated tile.
[[nodiscard]] TileName gen_tile_name(const GenSpec& spec, std::size_t tile_index,
                                     const std::string& set_tag);

/// Whole corpus in memory: a manifest whose sources carry the encoded bytes.
[[nodiscard]] Manifest generate_corpus(const GenSpec& spec, InputFormat format = InputFormat::Csv);

/// Writes `<dir>/a/*.poly`, `<dir>/b/*.poly` and `<dir>/manifest.tsv`.
Manifest write_corpus(const GenSpec& spec, const std::filesystem::path& dir,
                      InputFormat format = InputFormat::Csv);

/// Encodes a file in the given format.
[[nodiscard]] std::string encode(const PolygonFile& file, InputFormat format);

}  // namespace rectijac
