#include "rectijac/datagen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>

namespace rectijac {

namespace fs = std::filesystem;

namespace {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::array<Cell, 4> kEdgeNbrs{{{0, 1}, {1, 0}, {0, -1}, {-1, 0}}};
// Clockwise ring starting north.
constexpr std::array<Cell, 8> kRing{{{0, 1}, {1, 1}, {1, 0}, {1, -1}, {0, -1}, {-1, -1}, {-1, 0}, {-1, 1}}};

Cell add(Cell a, Cell b) noexcept { return {a.first + b.first, a.second + b.second}; }

int edge_neighbors(const std::set<Cell>& cells, Cell c) {
  int n = 0;
  for (Cell d : kEdgeNbrs) n += cells.contains(add(c, d)) ? 1 : 0;
  return n;
}

/// Adding `c` keeps a simply connected, corner-contact-free region in that
/// state exactly when the occupied cells around it form one contiguous arc
/// that includes an edge neighbor.
bool addable(const std::set<Cell>& cells, Cell c) {
  std::array<bool, 8> occ{};
  for (std::size_t i = 0; i < 8; ++i) occ[i] = cells.contains(add(c, kRing[i]));
  int arcs = 0;
  for (std::size_t i = 0; i < 8; ++i) {
    if (occ[i] && !occ[(i + 7) % 8]) ++arcs;
  }
  return arcs == 1 && edge_neighbors(cells, c) > 0;
}

std::uint64_t sample_area(Rng& rng, double mean, double stddev) {
  if (stddev <= 0) return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(mean)));
  const double shape = (mean / stddev) * (mean / stddev);
  std::gamma_distribution<double> dist(shape, stddev * stddev / mean);
  return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(dist(rng))));
}

}  // namespace

void GenSpec::check() const {
  if (polygons_per_tile == 0) throw std::invalid_argument("polygons per tile must be >= 1");
  if (!(mean_area >= 1)) throw std::invalid_argument("mean area must be >= 1");
  if (!(area_stddev >= 0)) throw std::invalid_argument("area stddev must be >= 0");
  if (scale_factor < 1) throw std::invalid_argument("scale factor must be >= 1");
  if (!(perturbation >= 0 && perturbation <= 1)) throw std::invalid_argument("perturbation must be in [0,1]");
  if (!(drop >= 0 && drop <= 1)) throw std::invalid_argument("drop must be in [0,1]");
  if (!(compactness >= 0)) throw std::invalid_argument("compactness must be >= 0");
  if (image.empty() || image.find('.') != std::string::npos) {
    throw std::invalid_argument("image name must be nonempty and dot-free");
  }
}

Rng keyed_rng(std::uint64_t seed, std::uint64_t tile, std::uint64_t index, std::uint64_t purpose) {
  std::uint64_t k = splitmix64(seed);
  k = splitmix64(k ^ tile);
  k = splitmix64(k ^ index);
  k = splitmix64(k ^ purpose);
  std::seed_seq seq{static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
  return Rng(seq);
}

void accrete_cells(Rng& rng, std::set<Cell>& cells, std::uint64_t target, double compactness) {
  if (cells.empty() && target > 0) cells.insert({0, 0});
  // Frontier cells bucketed by how many edge neighbors they have in the
  // region; a cell is drawn with weight (neighbors / 4)^compactness.
  std::array<std::vector<Cell>, 5> bucket;
  std::map<Cell, std::pair<int, std::size_t>> where;
  auto remove = [&](Cell c) {
    const auto it = where.find(c);
    if (it == where.end()) return;
    auto [k, i] = it->second;
    where.erase(it);
    auto& v = bucket[static_cast<std::size_t>(k)];
    if (i + 1 != v.size()) {
      v[i] = v.back();
      where[v[i]].second = i;
    }
    v.pop_back();
  };
  auto refresh = [&](Cell c) {
    if (cells.contains(c)) return;
    remove(c);
    const int k = edge_neighbors(cells, c);
    if (k == 0) return;
    auto& v = bucket[static_cast<std::size_t>(k)];
    where[c] = {k, v.size()};
    v.push_back(c);
  };
  for (Cell c : cells) {
    for (Cell d : kEdgeNbrs) refresh(add(c, d));
  }
  std::array<double, 5> weight{};
  for (int k = 1; k <= 4; ++k) weight[static_cast<std::size_t>(k)] = std::pow(k / 4.0, compactness);

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  while (cells.size() < target) {
    double total = 0;
    for (std::size_t k = 1; k <= 4; ++k) total += weight[k] * static_cast<double>(bucket[k].size());
    double r = unit(rng) * total;
    std::size_t k = 4;
    for (std::size_t j = 1; j <= 4; ++j) {
      const double w = weight[j] * static_cast<double>(bucket[j].size());
      if (r < w) {
        k = j;
        break;
      }
      r -= w;
    }
    while (bucket[k].empty()) --k;
    std::uniform_int_distribution<std::size_t> pick(0, bucket[k].size() - 1);
    const Cell c = bucket[k][pick(rng)];
    if (!addable(cells, c)) continue;
    remove(c);
    cells.insert(c);
    for (Cell d : kEdgeNbrs) refresh(add(c, d));
  }
}

RectilinearPolygon cells_to_polygon(const std::set<Cell>& cells, std::int64_t id) {
  if (cells.empty()) throw std::invalid_argument("empty cell set");
  // Counter-clockwise unit edges of the outline; each corner has one successor.
  std::map<GridPoint, GridPoint> next;
  auto edge = [&](std::int32_t x0, std::int32_t y0, std::int32_t x1, std::int32_t y1) {
    if (!next.emplace(GridPoint{x0, y0}, GridPoint{x1, y1}).second) {
      throw std::logic_error("cell region has a corner-only contact");
    }
  };
  for (const auto& [x, y] : cells) {
    if (!cells.contains({x, y - 1})) edge(x, y, x + 1, y);
    if (!cells.contains({x + 1, y})) edge(x + 1, y, x + 1, y + 1);
    if (!cells.contains({x, y + 1})) edge(x + 1, y + 1, x, y + 1);
    if (!cells.contains({x - 1, y})) edge(x, y + 1, x, y);
  }
  std::vector<GridPoint> ring;
  const GridPoint start = next.begin()->first;
  GridPoint at = start;
  do {
    ring.push_back(at);
    at = next.at(at);
  } while (at != start && ring.size() <= next.size());
  if (ring.size() != next.size()) throw std::logic_error("cell region outline is not one ring");
  return validate_polygon(ring, id);
}

RectilinearPolygon gen_polygon(Rng& rng, std::uint64_t target_area, double compactness,
                               std::int64_t id) {
  if (target_area == 0) throw std::invalid_argument("target area must be >= 1");
  std::set<Cell> cells;
  accrete_cells(rng, cells, target_area, compactness);
  return cells_to_polygon(cells, id);
}

TileName gen_tile_name(const GenSpec& spec, std::size_t tile_index, const std::string& set_tag) {
  const auto cols = static_cast<std::size_t>(
      std::ceil(std::sqrt(static_cast<double>(std::max<std::size_t>(spec.tiles, 1)))));
  return {spec.image, static_cast<std::int64_t>(tile_index / cols),
          static_cast<std::int64_t>(tile_index % cols), set_tag};
}

TilePair gen_tile_pair(const GenSpec& spec, std::size_t tile_index) {
  spec.check();
  const std::size_t n = spec.polygons_per_tile;
  std::vector<std::set<Cell>> shapes(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = keyed_rng(spec.seed, tile_index, i, 0);
    accrete_cells(rng, shapes[i], sample_area(rng, spec.mean_area, spec.area_stddev),
                  spec.compactness);
  }

  // Shelf layout with a gap wide enough that set A never overlaps itself.
  constexpr std::int32_t kGap = 3;
  double total = 0;
  for (const auto& s : shapes) total += static_cast<double>(s.size());
  const auto row_width = static_cast<std::int64_t>(std::ceil(std::sqrt(total * 3.0)));
  std::vector<GridPoint> offsets(n);
  std::int64_t cx = 0;
  std::int64_t cy = 0;
  std::int64_t row_h = 0;
  std::vector<RectilinearPolygon> base;
  base.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    RectilinearPolygon p = cells_to_polygon(shapes[i], static_cast<std::int64_t>(i));
    const Mbr& m = p.mbr();
    if (cx > 0 && cx + m.width() > row_width) {
      cx = 0;
      cy += row_h + kGap;
      row_h = 0;
    }
    offsets[i] = {static_cast<std::int32_t>(cx - m.xlo), static_cast<std::int32_t>(cy - m.ylo)};
    cx += m.width() + kGap;
    row_h = std::max(row_h, m.height());
    base.push_back(translate(p, offsets[i].x, offsets[i].y));
  }

  const std::string tile_id = gen_tile_name(spec, tile_index, "a").tile_id();
  TilePair out;
  out.a.tile_id = tile_id;
  out.b.tile_id = tile_id;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    out.a.polygons.push_back(scale(base[i], spec.scale_factor));

    Rng rng = keyed_rng(spec.seed, tile_index, i, 1);
    if (unit(rng) < spec.drop) continue;
    if (unit(rng) >= spec.perturbation) {
      out.b.polygons.push_back(out.a.polygons.back());
      continue;
    }
    const std::array<std::int32_t, 5> shifts{-2, -1, 0, 1, 2};
    std::uniform_int_distribution<std::size_t> shift(0, shifts.size() - 1);
    if (unit(rng) < 0.5) {
      std::int32_t dx = shifts[shift(rng)];
      const std::int32_t dy = shifts[shift(rng)];
      if (dx == 0 && dy == 0) dx = 1;
      out.b.polygons.push_back(scale(translate(base[i], dx, dy), spec.scale_factor));
    } else {
      std::set<Cell> grown = shapes[i];
      const auto extra = static_cast<std::uint64_t>(
          std::ceil(static_cast<double>(grown.size()) * (0.1 + 0.2 * unit(rng))));
      accrete_cells(rng, grown, grown.size() + extra, spec.compactness);
      const RectilinearPolygon p = cells_to_polygon(grown, static_cast<std::int64_t>(i));
      out.b.polygons.push_back(scale(translate(p, offsets[i].x, offsets[i].y), spec.scale_factor));
    }
  }
  return out;
}

std::string encode(const PolygonFile& file, InputFormat format) {
  switch (format) {
    case InputFormat::Csv: return write_csv(file);
    case InputFormat::WktSubset: return write_wkt(file);
    case InputFormat::Binary: return write_binary(file);
  }
  throw std::invalid_argument("unknown format");
}

namespace {

std::string file_name(const GenSpec& spec, std::size_t tile, const std::string& tag) {
  const TileName t = gen_tile_name(spec, tile, tag);
  return t.image + "." + std::to_string(t.row) + "." + std::to_string(t.col) + "." + tag + ".poly";
}

}  // namespace

Manifest generate_corpus(const GenSpec& spec, InputFormat format) {
  spec.check();
  Manifest m;
  m.image = spec.image;
  m.set_a = "a";
  m.set_b = "b";
  for (std::size_t t = 0; t < spec.tiles; ++t) {
    TilePair pair = gen_tile_pair(spec, t);
    TileSpec ts;
    ts.tile_id = pair.a.tile_id;
    ts.a = {fs::path("a") / file_name(spec, t, "a"),
            std::make_shared<const std::string>(encode(pair.a, format))};
    ts.b = {fs::path("b") / file_name(spec, t, "b"),
            std::make_shared<const std::string>(encode(pair.b, format))};
    m.tiles.push_back(std::move(ts));
  }
  return m;
}

Manifest write_corpus(const GenSpec& spec, const fs::path& dir, InputFormat format) {
  Manifest m = generate_corpus(spec, format);
  fs::create_directories(dir / "a");
  fs::create_directories(dir / "b");
  auto dump = [&](FileSource& src) {
    src.path = dir / src.path;
    std::ofstream out(src.path, std::ios::binary);
    out.write(src.bytes->data(), static_cast<std::streamsize>(src.bytes->size()));
    if (!out) throw std::runtime_error("cannot write " + src.path.string());
    src.bytes.reset();
  };
  for (TileSpec& t : m.tiles) {
    dump(t.a);
    dump(t.b);
  }
  write_manifest(m, dir / "manifest.tsv");
  return m;
}

}  // namespace rectijac
