#include "rectijac/parser.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_set>

namespace rectijac {

namespace fs = std::filesystem;

namespace {

constexpr char kMagic[4] = {'R', 'J', 'P', 'F'};

std::string format_message(ParseError::Kind kind, std::size_t line, std::size_t column,
                           const std::string& reason) {
  std::string msg = to_string(kind);
  if (line > 0) msg += " at line " + std::to_string(line);
  if (column > 0) msg += ", column " + std::to_string(column);
  return msg + ": " + reason;
}

// Cursor over one text line with 1-based column reporting.
class LineCursor {
 public:
  LineCursor(std::string_view line, std::size_t line_no) : m_line(line), m_line_no(line_no) {}

  void skip_ws() {
    while (m_pos < m_line.size() && (m_line[m_pos] == ' ' || m_line[m_pos] == '\t')) ++m_pos;
  }
  [[nodiscard]] bool at_end() const { return m_pos >= m_line.size(); }
  [[nodiscard]] char peek() const { return at_end() ? '\0' : m_line[m_pos]; }
  [[nodiscard]] std::size_t column() const { return m_pos + 1; }

  bool accept(char c) {
    if (peek() != c) return false;
    ++m_pos;
    return true;
  }
  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }
  bool accept_keyword(std::string_view kw) {
    if (m_line.size() - m_pos < kw.size()) return false;
    for (std::size_t i = 0; i < kw.size(); ++i) {
      if (std::toupper(static_cast<unsigned char>(m_line[m_pos + i])) != kw[i]) return false;
    }
    m_pos += kw.size();
    return true;
  }

  template <class Int>
  Int integer(const char* what) {
    Int value{};
    const char* begin = m_line.data() + m_pos;
    const char* end = m_line.data() + m_line.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec == std::errc::result_out_of_range) fail(std::string(what) + " out of range");
    if (ec != std::errc{} || ptr == begin) fail(std::string("expected ") + what);
    m_pos += static_cast<std::size_t>(ptr - begin);
    return value;
  }

  [[noreturn]] void fail(const std::string& reason) const {
    throw ParseError(ParseError::Kind::Syntax, m_line_no, column(), reason);
  }

 private:
  std::string_view m_line;
  std::size_t m_line_no;
  std::size_t m_pos = 0;
};

struct RawRecord {
  std::int64_t id;
  std::vector<GridPoint> ring;
};

RawRecord parse_csv_line(std::string_view line, std::size_t line_no) {
  LineCursor cur(line, line_no);
  cur.skip_ws();
  RawRecord rec{cur.integer<std::int64_t>("polygon id"), {}};
  cur.skip_ws();
  cur.expect(',');
  std::vector<std::int32_t> coords;
  for (;;) {
    cur.skip_ws();
    if (cur.at_end()) break;
    coords.push_back(cur.integer<std::int32_t>("integer coordinate"));
  }
  if (coords.size() % 2 != 0) cur.fail("odd number of coordinates");
  if (coords.size() < 8) cur.fail("a rectilinear ring needs at least 4 vertices");
  rec.ring.reserve(coords.size() / 2);
  for (std::size_t i = 0; i < coords.size(); i += 2) rec.ring.push_back({coords[i], coords[i + 1]});
  return rec;
}

RawRecord parse_wkt_line(std::string_view line, std::size_t line_no) {
  LineCursor cur(line, line_no);
  cur.skip_ws();
  if (cur.accept_keyword("MULTIPOLYGON")) {
    throw ParseError(ParseError::Kind::Validation, line_no, 1, "MULTIPOLYGON is not supported");
  }
  if (!cur.accept_keyword("POLYGON")) cur.fail("expected POLYGON");
  cur.skip_ws();
  if (cur.accept_keyword("EMPTY")) {
    throw ParseError(ParseError::Kind::Validation, line_no, cur.column(), "empty polygon");
  }
  cur.expect('(');
  cur.skip_ws();
  cur.expect('(');
  RawRecord rec{static_cast<std::int64_t>(line_no - 1), {}};
  for (;;) {
    cur.skip_ws();
    const auto x = cur.integer<std::int32_t>("integer coordinate");
    const std::size_t gap = cur.column();
    cur.skip_ws();
    if (cur.column() == gap) cur.fail("expected whitespace between coordinates");
    const auto y = cur.integer<std::int32_t>("integer coordinate");
    rec.ring.push_back({x, y});
    cur.skip_ws();
    if (cur.accept(',')) continue;
    if (cur.accept(')')) break;
    cur.fail("expected ',' or ')'");
  }
  cur.skip_ws();
  if (cur.peek() == ',') {
    throw ParseError(ParseError::Kind::Validation, line_no, cur.column(),
                     "polygons with holes are not supported");
  }
  cur.expect(')');
  cur.skip_ws();
  if (!cur.at_end()) cur.fail("unexpected trailing characters");
  if (rec.ring.size() < 5) cur.fail("a rectilinear ring needs at least 4 vertices");
  if (rec.ring.front() != rec.ring.back()) cur.fail("ring is not closed");
  rec.ring.pop_back();
  return rec;
}

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}
void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class ByteReader {
 public:
  explicit ByteReader(std::string_view bytes) : m_bytes(bytes) {}

  template <class UInt>
  UInt read(std::size_t record) {
    if (m_bytes.size() - m_pos < sizeof(UInt)) {
      throw ParseError(ParseError::Kind::TruncatedRecord, record, 0,
                       "file ends at byte " + std::to_string(m_bytes.size()));
    }
    UInt v = 0;
    for (std::size_t i = 0; i < sizeof(UInt); ++i) {
      v |= static_cast<UInt>(static_cast<unsigned char>(m_bytes[m_pos + i])) << (8 * i);
    }
    m_pos += sizeof(UInt);
    return v;
  }
  [[nodiscard]] std::size_t remaining() const { return m_bytes.size() - m_pos; }

 private:
  std::string_view m_bytes;
  std::size_t m_pos = 0;
};

void check_unique(std::unordered_set<std::int64_t>& seen, std::int64_t id, std::size_t line) {
  if (!seen.insert(id).second) {
    throw ParseError(ParseError::Kind::Validation, line, 0,
                     "duplicate polygon id " + std::to_string(id));
  }
}

RectilinearPolygon validated(const std::vector<GridPoint>& ring, std::int64_t id,
                             std::size_t line, const ParseOptions& opts) {
  try {
    return validate_polygon(ring, id, opts.validation);
  } catch (const GeometryError& e) {
    throw ParseError(ParseError::Kind::Validation, line, 0,
                     std::string(to_string(e.kind())) + ": " + e.what());
  }
}

std::string_view first_content_line(std::string_view text) {
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    const auto first = line.find_first_not_of(" \t\r");
    if (first != std::string_view::npos && line[first] != '#') return line.substr(first);
    pos = end + 1;
  }
  return {};
}

}  // namespace

ParseError::ParseError(Kind kind, std::size_t line, std::size_t column, std::string reason)
    : std::runtime_error(format_message(kind, line, column, reason)),
      m_kind(kind),
      m_line(line),
      m_column(column),
      m_reason(std::move(reason)) {}

const char* to_string(ParseError::Kind kind) noexcept {
  switch (kind) {
    case ParseError::Kind::Syntax: return "SyntaxError";
    case ParseError::Kind::Validation: return "ValidationError";
    case ParseError::Kind::BadMagic: return "BadMagic";
    case ParseError::Kind::TruncatedRecord: return "TruncatedRecord";
    case ParseError::Kind::VersionMismatch: return "VersionMismatch";
    case ParseError::Kind::Io: return "IoError";
  }
  return "Unknown";
}

const char* to_string(InputFormat f) noexcept {
  switch (f) {
    case InputFormat::Csv: return "csv";
    case InputFormat::WktSubset: return "wkt";
    case InputFormat::Binary: return "bin";
  }
  return "unknown";
}

std::optional<InputFormat> parse_format_name(std::string_view name) noexcept {
  if (name == "csv") return InputFormat::Csv;
  if (name == "wkt") return InputFormat::WktSubset;
  if (name == "bin") return InputFormat::Binary;
  return std::nullopt;
}

PolygonFile parse_text(std::string_view text, InputFormat format, std::string tile_id,
                       const ParseOptions& opts) {
  if (format == InputFormat::Binary) return read_binary(text, std::move(tile_id), opts);
  PolygonFile file{std::move(tile_id), {}, format};
  std::unordered_set<std::int64_t> seen;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string_view::npos || line[first] == '#') continue;

    RawRecord rec = format == InputFormat::Csv ? parse_csv_line(line, line_no)
                                               : parse_wkt_line(line, line_no);
    check_unique(seen, rec.id, line_no);
    file.polygons.push_back(validated(rec.ring, rec.id, line_no, opts));
  }
  return file;
}

std::string write_csv(const PolygonFile& file) {
  std::string out;
  for (const auto& p : file.polygons) {
    out += std::to_string(p.id());
    char sep = ',';
    for (GridPoint v : p.vertices()) {
      out.push_back(sep);
      out += std::to_string(v.x);
      out.push_back(' ');
      out += std::to_string(v.y);
      sep = ' ';
    }
    out.push_back('\n');
  }
  return out;
}

std::string write_wkt(const PolygonFile& file) {
  // WKT ids are line numbers, so each polygon lands on the line matching its
  // id and the gaps are filled with comment lines. Ids must be non-negative.
  std::vector<const RectilinearPolygon*> by_id;
  for (const auto& p : file.polygons) by_id.push_back(&p);
  std::sort(by_id.begin(), by_id.end(),
            [](const auto* a, const auto* b) { return a->id() < b->id(); });
  std::string out;
  std::int64_t line = 0;
  for (const auto* p : by_id) {
    if (p->id() < line) throw std::invalid_argument("WKT output needs distinct non-negative ids");
    for (; line < p->id(); ++line) out += "#\n";
    out += "POLYGON((";
    for (GridPoint v : p->vertices()) out += std::to_string(v.x) + " " + std::to_string(v.y) + ", ";
    const GridPoint first = p->vertices().front();
    out += std::to_string(first.x) + " " + std::to_string(first.y) + "))\n";
    ++line;
  }
  return out;
}

std::string write_binary(const PolygonFile& file) {
  std::string out(kMagic, sizeof(kMagic));
  put_u16(out, kBinaryVersion);
  put_u32(out, static_cast<std::uint32_t>(file.polygons.size()));
  for (const auto& p : file.polygons) {
    put_u64(out, static_cast<std::uint64_t>(p.id()));
    put_u32(out, static_cast<std::uint32_t>(p.vertices().size()));
    for (GridPoint v : p.vertices()) {
      put_u32(out, static_cast<std::uint32_t>(v.x));
      put_u32(out, static_cast<std::uint32_t>(v.y));
    }
  }
  return out;
}

PolygonFile read_binary(std::string_view bytes, std::string tile_id, const ParseOptions& opts) {
  if (bytes.size() < sizeof(kMagic) || !std::equal(kMagic, kMagic + 4, bytes.begin())) {
    throw ParseError(ParseError::Kind::BadMagic, 0, 0, "not a binary polygon file");
  }
  ByteReader in(bytes.substr(sizeof(kMagic)));
  const auto version = in.read<std::uint16_t>(0);
  if (version != kBinaryVersion) {
    throw ParseError(ParseError::Kind::VersionMismatch, 0, 0,
                     "version " + std::to_string(version) + ", expected " +
                         std::to_string(kBinaryVersion));
  }
  const auto count = in.read<std::uint32_t>(0);
  PolygonFile file{std::move(tile_id), {}, InputFormat::Binary};
  std::unordered_set<std::int64_t> seen;
  // Each record is at least 12 bytes; do not trust the count for reserve.
  file.polygons.reserve(std::min<std::size_t>(count, in.remaining() / 12));
  for (std::uint32_t r = 1; r <= count; ++r) {
    const auto id = static_cast<std::int64_t>(in.read<std::uint64_t>(r));
    const auto nverts = in.read<std::uint32_t>(r);
    if (in.remaining() / 8 < nverts) {
      throw ParseError(ParseError::Kind::TruncatedRecord, r, 0,
                       "record declares " + std::to_string(nverts) + " vertices");
    }
    std::vector<GridPoint> ring(nverts);
    for (auto& v : ring) {
      v.x = static_cast<std::int32_t>(in.read<std::uint32_t>(r));
      v.y = static_cast<std::int32_t>(in.read<std::uint32_t>(r));
    }
    check_unique(seen, id, r);
    file.polygons.push_back(validated(ring, id, r, opts));
  }
  return file;
}

InputFormat detect_format(std::string_view bytes) noexcept {
  if (bytes.size() >= 4 && std::equal(kMagic, kMagic + 4, bytes.begin())) return InputFormat::Binary;
  const std::string_view line = first_content_line(bytes);
  std::string head;
  for (char c : line.substr(0, 12)) head.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  if (head.starts_with("POLYGON") || head.starts_with("MULTIPOLYGON")) return InputFormat::WktSubset;
  return InputFormat::Csv;
}

PolygonFile parse_bytes(std::string_view bytes, InputFormat format, std::string tile_id,
                        const ParseOptions& opts) {
  if (format == InputFormat::Binary) return read_binary(bytes, std::move(tile_id), opts);
  return parse_text(bytes, format, std::move(tile_id), opts);
}

std::string TileName::tile_id() const {
  return image + "." + std::to_string(row) + "." + std::to_string(col);
}

std::optional<TileName> parse_tile_name(std::string_view filename) {
  constexpr std::string_view ext = ".poly";
  if (!filename.ends_with(ext)) return std::nullopt;
  std::string_view stem = filename.substr(0, filename.size() - ext.size());
  std::string_view parts[3];
  for (int i = 2; i >= 0; --i) {
    const auto dot = stem.rfind('.');
    if (dot == std::string_view::npos) return std::nullopt;
    parts[i] = stem.substr(dot + 1);
    stem = stem.substr(0, dot);
  }
  if (stem.empty() || parts[2].empty()) return std::nullopt;
  TileName name{std::string(stem), 0, 0, std::string(parts[2])};
  auto number = [](std::string_view s, std::int64_t& out) {
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size() && !s.empty();
  };
  if (!number(parts[0], name.row) || !number(parts[1], name.col)) return std::nullopt;
  return name;
}

std::string tile_id_for(const fs::path& path) {
  const std::string filename = path.filename().string();
  if (auto name = parse_tile_name(filename)) return name->tile_id();
  return filename.ends_with(".poly") ? filename.substr(0, filename.size() - 5) : path.stem().string();
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(ParseError::Kind::Io, 0, 0, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

PolygonFile load_polygon_file(const fs::path& path, std::optional<InputFormat> format,
                              const ParseOptions& opts) {
  const std::string bytes = read_file(path);
  return parse_bytes(bytes, format.value_or(detect_format(bytes)), tile_id_for(path), opts);
}

namespace {

struct DirEntry {
  fs::path path;
  std::string key;
  std::string tag;
  std::string image;
};

std::vector<DirEntry> list_poly_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ManifestError("not a directory: " + dir.string());
  std::vector<DirEntry> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file() || e.path().extension() != ".poly") continue;
    const auto name = parse_tile_name(e.path().filename().string());
    out.push_back({e.path(), tile_id_for(e.path()), name ? name->set_tag : "",
                   name ? name->image : tile_id_for(e.path())});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.path < b.path; });
  return out;
}

std::string common_or(const std::vector<std::string>& values, const std::string& fallback) {
  if (values.empty()) return fallback;
  for (const auto& v : values) {
    if (v != values.front()) return fallback;
  }
  return values.front().empty() ? fallback : values.front();
}

}  // namespace

Manifest pair_tile_files(const fs::path& dir_a, const fs::path& dir_b) {
  const std::vector<DirEntry> files_a = list_poly_files(dir_a);
  const std::vector<DirEntry> files_b = list_poly_files(dir_b);

  Manifest m;
  std::map<std::string, const DirEntry*> by_key_b;
  for (const auto& f : files_b) {
    if (!by_key_b.emplace(f.key, &f).second) {
      throw ManifestError("two files for tile " + f.key + " in " + dir_b.string());
    }
  }
  std::map<std::string, const DirEntry*> by_key_a;
  for (const auto& f : files_a) {
    if (!by_key_a.emplace(f.key, &f).second) {
      throw ManifestError("two files for tile " + f.key + " in " + dir_a.string());
    }
  }

  std::vector<std::string> images, tags_a, tags_b;
  for (const auto& [key, fa] : by_key_a) {
    auto it = by_key_b.find(key);
    if (it == by_key_b.end()) {
      m.unpaired.push_back(fa->path.string());
      continue;
    }
    m.tiles.push_back({key, {fa->path, nullptr}, {it->second->path, nullptr}});
    images.push_back(fa->image);
    tags_a.push_back(fa->tag);
    tags_b.push_back(it->second->tag);
  }
  for (const auto& [key, fb] : by_key_b) {
    if (!by_key_a.contains(key)) m.unpaired.push_back(fb->path.string());
  }
  std::sort(m.unpaired.begin(), m.unpaired.end());
  m.image = common_or(images, "mixed");
  m.set_a = common_or(tags_a, fs::absolute(dir_a).lexically_normal().filename().string());
  m.set_b = common_or(tags_b, fs::absolute(dir_b).lexically_normal().filename().string());
  return m;
}

void write_manifest(const Manifest& manifest, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw ManifestError("cannot write " + path.string());
  const fs::path base = path.parent_path();
  auto rel = [&](const fs::path& p) { return p.lexically_relative(base).generic_string(); };
  out << "# rectijac manifest v1\n";
  out << "image\t" << manifest.image << "\n";
  out << "sets\t" << manifest.set_a << "\t" << manifest.set_b << "\n";
  for (const auto& t : manifest.tiles) {
    out << "tile\t" << t.tile_id << "\t" << rel(t.a.path) << "\t" << rel(t.b.path) << "\n";
  }
}

Manifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ManifestError("cannot open manifest " + path.string());
  const fs::path base = path.parent_path();
  Manifest m;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, '\t');) fields.push_back(f);
    if (fields[0] == "image" && fields.size() == 2) {
      m.image = fields[1];
    } else if (fields[0] == "sets" && fields.size() == 3) {
      m.set_a = fields[1];
      m.set_b = fields[2];
    } else if (fields[0] == "tile" && fields.size() == 4) {
      m.tiles.push_back({fields[1], {base / fields[2], nullptr}, {base / fields[3], nullptr}});
    } else {
      throw ManifestError(path.string() + ":" + std::to_string(line_no) + ": malformed line");
    }
  }
  return m;
}

void preload(Manifest& manifest) {
  for (auto& t : manifest.tiles) {
    if (!t.a.bytes) t.a.bytes = std::make_shared<const std::string>(read_file(t.a.path));
    if (!t.b.bytes) {
      t.b.bytes = t.b.path == t.a.path ? t.a.bytes
                                       : std::make_shared<const std::string>(read_file(t.b.path));
    }
  }
}

}  // namespace rectijac
