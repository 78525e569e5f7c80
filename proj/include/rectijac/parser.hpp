#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "rectijac/geometry.hpp"

namespace rectijac {

enum class InputFormat { Csv, WktSubset, Binary };

[[nodiscard]] const char* to_string(InputFormat f) noexcept;
/// Accepts "csv", "wkt" and "bin".
[[nodiscard]] std::optional<InputFormat> parse_format_name(std::string_view name) noexcept;

/// All polygons segmented from one tile by one method.
struct PolygonFile {
  std::string tile_id;
  std::vector<RectilinearPolygon> polygons;
  InputFormat source_format = InputFormat::Csv;

  /// Content equality; the source format is provenance and is ignored.
  bool operator==(const PolygonFile& o) const {
    return tile_id == o.tile_id && polygons == o.polygons;
  }
};

class ParseError : public std::runtime_error {
 public:
  enum class Kind { Syntax, Validation, BadMagic, TruncatedRecord, VersionMismatch, Io };

  /// `line` and `column` are 1-based; 0 means not applicable. For binary
  /// input `line` is the 1-based record number.
  ParseError(Kind kind, std::size_t line, std::size_t column, std::string reason);

  [[nodiscard]] Kind kind() const noexcept { return m_kind; }
  [[nodiscard]] std::size_t line() const noexcept { return m_line; }
  [[nodiscard]] std::size_t column() const noexcept { return m_column; }
  [[nodiscard]] const std::string& reason() const noexcept { return m_reason; }

 private:
  Kind m_kind;
  std::size_t m_line;
  std::size_t m_column;
  std::string m_reason;
};

[[nodiscard]] const char* to_string(ParseError::Kind kind) noexcept;

struct ParseOptions {
  ValidationOptions validation;
};

/// Parses the CSV (`id,x0 y0 x1 y1 ...`) or WKT (`POLYGON((x y, ...))`)
/// text form. Blank lines and lines starting with '#' are skipped. CSV ids
/// come from the id field, WKT ids are the 0-based line number.
[[nodiscard]] PolygonFile parse_text(std::string_view text, InputFormat format,
                                     std::string tile_id = "tile", const ParseOptions& opts = {});

/// Canonical text renderings; parsing them back yields an equal file.
[[nodiscard]] std::string write_csv(const PolygonFile& file);
[[nodiscard]] std::string write_wkt(const PolygonFile& file);

/// Binary cache: "RJPF", u16 version, u32 count, then per polygon u64 id,
/// u32 vertex count and little-endian i32 (x, y) pairs.
[[nodiscard]] std::string write_binary(const PolygonFile& file);
[[nodiscard]] PolygonFile read_binary(std::string_view bytes, std::string tile_id = "tile",
                                      const ParseOptions& opts = {});

inline constexpr std::uint16_t kBinaryVersion = 1;

/// Binary when the magic matches, WKT when the first content line starts
/// with POLYGON or MULTIPOLYGON, CSV otherwise.
[[nodiscard]] InputFormat detect_format(std::string_view bytes) noexcept;

/// Parses in-memory file contents in any of the three formats.
[[nodiscard]] PolygonFile parse_bytes(std::string_view bytes, InputFormat format,
                                      std::string tile_id, const ParseOptions& opts = {});

/// Components of `<image>.<tileRow>.<tileCol>.<setTag>.poly`.
struct TileName {
  std::string image;
  std::int64_t row = 0;
  std::int64_t col = 0;
  std::string set_tag;

  [[nodiscard]] std::string tile_id() const;
};

[[nodiscard]] std::optional<TileName> parse_tile_name(std::string_view filename);

/// Tile id for a file: `<image>.<row>.<col>` for conforming names, the
/// stem without `.poly` otherwise.
[[nodiscard]] std::string tile_id_for(const std::filesystem::path& path);

[[nodiscard]] std::string read_file(const std::filesystem::path& path);

/// Loads a polygon file; format nullopt means detect from content.
[[nodiscard]] PolygonFile load_polygon_file(const std::filesystem::path& path,
                                            std::optional<InputFormat> format = std::nullopt,
                                            const ParseOptions& opts = {});

/// One side of a tile: a path, optionally with its contents preloaded.
struct FileSource {
  std::filesystem::path path;
  std::shared_ptr<const std::string> bytes;
};

/// The two polygon files of one tile.
struct TileSpec {
  std::string tile_id;
  FileSource a;
  FileSource b;
};

struct Manifest {
  std::string image;
  std::string set_a;
  std::string set_b;
  std::vector<TileSpec> tiles;
  /// Files that had no partner; excluded from the comparison.
  std::vector<std::string> unpaired;
};

class ManifestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Pairs `.poly` files of two directories by tile id. Files without a
/// partner are listed in `unpaired`.
[[nodiscard]] Manifest pair_tile_files(const std::filesystem::path& dir_a,
                                       const std::filesystem::path& dir_b);

/// Manifest text file; relative paths resolve against the manifest's folder.
void write_manifest(const Manifest& manifest, const std::filesystem::path& path);
[[nodiscard]] Manifest read_manifest(const std::filesystem::path& path);

/// Reads every file of the manifest into memory.
void preload(Manifest& manifest);

}  // namespace rectijac
