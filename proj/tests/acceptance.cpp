// Acceptance run: one PASS / FAIL / SKIP line per criterion.
//
//   acceptance            run all criteria
//   acceptance 3 6       run only the listed ones
//
// Exit status is 1 when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include "oracles.hpp"
#include "rectijac/bench.hpp"
#include "rectijac/datagen.hpp"
#include "rectijac/hilbert_rtree.hpp"
#include "rectijac/parser.hpp"
#include "rectijac/pipeline.hpp"

using namespace rectijac;
namespace fs = std::filesystem;

namespace {

// Pinned thresholds.
constexpr std::size_t kExactPairs = 1000;
constexpr std::size_t kAreaPolygons = 10000;
constexpr std::size_t kIndexTiles = 50;
constexpr std::size_t kDeterminismTiles = 100;
constexpr std::size_t kFig8Pairs = 10000;
constexpr double kFig8MaxRatio = 0.5;
constexpr std::uint32_t kFig10N = 64;
constexpr std::size_t kTable1Tiles = 200;
constexpr double kTable1MinSpeedup = 1.5;
constexpr unsigned kTable1MinCores = 4;
constexpr double kFig11SlowBatchMin = 1.05;
constexpr double kFig11SlowParserMin = 1.10;
// A 64-slot buffer holds most of a 100-tile corpus, so it never reaches the
// full state that triggers congestion migration.
constexpr std::size_t kFig11BufferCap = 16;
constexpr int kReps = 3;
constexpr std::size_t kFuzzLines = 10000;

enum class Status { Pass, Fail, Skip };

struct Outcome {
  Status status;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

unsigned cores() { return std::max(1U, std::thread::hardware_concurrency()); }

fs::path scratch() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / ("rectijac_accept_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

int sh(const std::string& args, std::string* out = nullptr) {
  const std::string cmd = std::string(RECTIJAC_BIN) + " " + args + " 2>/dev/null";
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return -1;
  char buf[4096];
  std::string text;
  for (std::size_t n; (n = std::fread(buf, 1, sizeof buf, pipe)) > 0;) text.append(buf, n);
  const int status = ::pclose(pipe);
  if (out) *out = std::move(text);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// 1. PixelBox equals the pixel oracle on every pair for a grid of settings.
Outcome exactness() {
  const std::uint32_t ns[] = {16, 32, 64};
  std::size_t checked = 0;
  std::size_t configs = 0;
  ExecutorPool pool(PoolKind::Batch, cores());
  for (std::int32_t s : {1, 3, 5}) {
    GenSpec spec;
    spec.seed = 101;
    spec.tiles = 6;
    spec.polygons_per_tile = 200;
    spec.perturbation = 0.5;
    spec.scale_factor = s;
    const PairBatch batch = collect_pairs(spec);
    if (batch.pairs.size() < kExactPairs) {
      return {Status::Fail, fmt("only %zu pairs at scale %d", batch.pairs.size(), s)};
    }
    const auto want = run_method(AreaMethod::Oracle, batch, {}, pool);
    configs = 0;
    for (std::uint32_t n : ns) {
      const std::uint64_t n2 = std::uint64_t{n} * n;
      for (std::uint64_t t : {std::uint64_t{n}, n2 / 2, 4 * n2}) {
        for (std::uint32_t f : {4U, n}) {
          const PixelBoxConfig cfg{n, t, f};
          ++configs;
          const auto got = run_method(AreaMethod::PixelBox, batch, cfg, pool);
          for (std::size_t i = 0; i < got.size(); ++i) {
            if (got[i] != want[i]) {
              return {Status::Fail, fmt("scale %d n=%u T=%llu F=%u pair %zu: %llu != %llu", s, n,
                                        static_cast<unsigned long long>(t), f, i,
                                        static_cast<unsigned long long>(got[i].area_intersection),
                                        static_cast<unsigned long long>(want[i].area_intersection))};
            }
          }
          checked += got.size();
        }
      }
    }
  }
  return {Status::Pass, fmt("%zu pair evaluations over %zu settings x 3 scales, all exact", checked, configs)};
}

// 2. Shoelace area equals the number of enclosed pixels.
Outcome area_identity() {
  GenSpec spec;
  spec.seed = 202;
  spec.tiles = 50;
  spec.polygons_per_tile = kAreaPolygons / 50;
  std::size_t n = 0;
  for (std::size_t t = 0; t < spec.tiles; ++t) {
    for (const auto& p : gen_tile_pair(spec, t).a.polygons) {
      const std::uint64_t raster = oracle::raster_area(p.vertices());
      std::uint64_t counted = 0;
      const Mbr m = p.mbr();
      for (std::int32_t y = m.ylo; y < m.yhi; ++y)
        for (std::int32_t x = m.xlo; x < m.xhi; ++x) counted += pixel_in_polygon({x, y}, p) ? 1 : 0;
      if (polygon_area(p) != raster || polygon_area(p) != counted) {
        return {Status::Fail, fmt("polygon %lld: area %llu, raster %llu, pixel count %llu",
                                  static_cast<long long>(p.id()),
                                  static_cast<unsigned long long>(polygon_area(p)),
                                  static_cast<unsigned long long>(raster),
                                  static_cast<unsigned long long>(counted))};
      }
      ++n;
    }
  }
  if (n < kAreaPolygons) return {Status::Fail, fmt("only %zu polygons", n)};
  return {Status::Pass, fmt("%zu polygons exact", n)};
}

// 3. Index query and MBR join equal linear scans.
Outcome index_correctness() {
  std::mt19937_64 rng(303);
  std::size_t probes = 0;
  std::size_t pairs = 0;
  std::size_t largest = 0;
  for (std::size_t k = 0; k < kIndexTiles; ++k) {
    std::vector<RectilinearPolygon> a, b;
    if (k % 10 == 9) {
      // Dense random rectangles up to the tile size limit.
      std::uniform_int_distribution<std::int32_t> pos(0, 4000);
      std::uniform_int_distribution<std::int32_t> size(1, 60);
      for (auto* set : {&a, &b}) {
        for (std::int64_t i = 0; i < 2000; ++i) {
          const std::int32_t x = pos(rng), y = pos(rng), w = size(rng), h = size(rng);
          set->push_back(validate_polygon(
              std::vector<GridPoint>{{x, y}, {x + w, y}, {x + w, y + h}, {x, y + h}}, i));
        }
      }
    } else {
      GenSpec spec;
      spec.seed = 304 + k;
      spec.polygons_per_tile = 50 + (k * 97) % 450;
      spec.drop = 0.05;
      auto tp = gen_tile_pair(spec, k);
      a = std::move(tp.a.polygons);
      b = std::move(tp.b.polygons);
    }
    largest = std::max({largest, a.size(), b.size()});

    std::set<std::pair<std::uint32_t, std::uint32_t>> want, got;
    for (std::uint32_t i = 0; i < a.size(); ++i) {
      const auto bi = oracle::bounds(a[i].vertices());
      for (std::uint32_t j = 0; j < b.size(); ++j) {
        if (oracle::boxes_share_pixel(bi, oracle::bounds(b[j].vertices()))) want.emplace(i, j);
      }
    }
    for (const auto& c : mbr_join(a, b)) got.emplace(c.p_ref, c.q_ref);
    if (got != want) return {Status::Fail, fmt("tile %zu: join has %zu pairs, scan %zu", k, got.size(), want.size())};
    pairs += want.size();

    const auto tree = HilbertRTree::build(b);
    std::vector<std::vector<GridPoint>> rings;
    for (const auto& p : b) rings.emplace_back(p.vertices().begin(), p.vertices().end());
    const Mbr root = tree.root_mbr();
    std::uniform_int_distribution<std::int32_t> px(root.xlo - 50, root.xhi + 50);
    std::uniform_int_distribution<std::int32_t> py(root.ylo - 50, root.yhi + 50);
    std::uniform_int_distribution<std::int32_t> ext(1, 300);
    for (int q = 0; q < 100; ++q) {
      const std::int32_t x = px(rng), y = py(rng);
      const Mbr probe{x, y, x + ext(rng), y + ext(rng)};
      // Query output is sorted by id; in these sets ids equal indices.
      if (tree.query(probe) != oracle::scan_query(rings, {probe.xlo, probe.ylo, probe.xhi, probe.yhi})) {
        return {Status::Fail, fmt("tile %zu: query mismatch", k)};
      }
      ++probes;
    }
  }
  return {Status::Pass, fmt("%zu tiles (largest %zu polygons), %zu join pairs, %zu probes exact",
                            kIndexTiles, largest, pairs, probes)};
}

// 4. J' is exactly 1 for identical sets and absent when nothing intersects.
Outcome jaccard_semantics() {
  GenSpec spec;
  spec.seed = 404;
  spec.tiles = 5;
  spec.polygons_per_tile = 100;
  const fs::path dir = scratch() / "c4";
  write_corpus(spec, dir);
  std::string out;
  if (sh("compare '" + (dir / "a").string() + "' '" + (dir / "a").string() + "'", &out) != 0) {
    return {Status::Fail, "compare on identical sets failed"};
  }
  const auto same = nlohmann::json::parse(out);
  if (!same["jaccard"].is_number() || same["jaccard"].get<double>() != 1.0) {
    return {Status::Fail, "identical sets: jaccard " + same["jaccard"].dump()};
  }

  // L shapes against squares sitting in their notches: MBRs overlap, pixels do not.
  std::string a, b;
  for (int i = 0; i < 20; ++i) {
    const int x = i * 10;
    a += fmt("%d,%d 0 %d 0 %d 2 %d 2 %d 4 %d 4\n", i, x, x + 4, x + 4, x + 2, x + 2, x);
    b += fmt("%d,%d 2 %d 2 %d 4 %d 4\n", i, x + 2, x + 4, x + 4, x + 2);
  }
  const fs::path da = scratch() / "c4z" / "a";
  const fs::path db = scratch() / "c4z" / "b";
  fs::create_directories(da);
  fs::create_directories(db);
  std::ofstream(da / "z.0.0.a.poly") << a;
  std::ofstream(db / "z.0.0.b.poly") << b;
  if (sh("compare '" + da.string() + "' '" + db.string() + "'", &out) != 0) {
    return {Status::Fail, "compare on disjoint sets failed"};
  }
  const auto none = nlohmann::json::parse(out);
  if (!none["jaccard"].is_null()) return {Status::Fail, "disjoint sets: jaccard " + none["jaccard"].dump()};
  if (none["pairs"] != 20 || none["intersecting"] != 0 || none["polygons_a"] != 20 ||
      none["missing_a"] != 20) {
    return {Status::Fail, "disjoint sets: counts " + none.dump()};
  }
  return {Status::Pass, "identical sets give 1.0; 20 MBR-overlapping pixel-disjoint pairs give null with counts"};
}

// 5. compare output without telemetry is identical across execution settings.
Outcome determinism() {
  GenSpec spec;
  spec.seed = 505;
  spec.tiles = kDeterminismTiles;
  spec.polygons_per_tile = 60;
  spec.drop = 0.05;
  const fs::path dir = scratch() / "c5";
  write_corpus(spec, dir);
  const std::string dirs = "'" + (dir / "a").string() + "' '" + (dir / "b").string() + "'";
  std::string reference;
  std::size_t runs = 0;
  for (unsigned w : {1U, 2U, 8U}) {
    for (bool pipelined : {true, false}) {
      for (bool mig : {false, true}) {
        for (int cap : {1, 64}) {
          std::string out;
          const std::string flags = fmt(" --workers %u --buffer-cap %d --migration %s%s", w, cap,
                                        mig ? "on" : "off", pipelined ? "" : " --no-pipeline");
          if (sh("compare " + dirs + flags, &out) != 0) return {Status::Fail, "compare failed:" + flags};
          auto j = nlohmann::json::parse(out);
          j.erase("timing");
          j.erase("migration");
          const std::string body = j.dump(2);
          if (reference.empty()) {
            reference = body;
          } else if (body != reference) {
            return {Status::Fail, "report differs for" + flags};
          }
          ++runs;
        }
      }
    }
  }
  return {Status::Pass, fmt("%zu runs on %zu tiles byte-identical", runs, kDeterminismTiles)};
}

// 6. Sampling boxes and the separated union beat per-pixel testing.
Outcome fig8_trend() {
  GenSpec spec;
  spec.seed = 606;
  spec.tiles = 54;
  spec.polygons_per_tile = 200;
  const auto rows = bench_fig8(spec, {5}, {}, cores(), kReps);
  const auto& r = rows.front();
  const double ratio = r.pixelbox_ms / r.pixelonly_ms;
  const std::string detail = fmt("%zu pairs: PixelBox %.0f ms, NoSep %.0f ms, PixelOnly %.0f ms (ratio %.2f)",
                                 r.pairs, r.pixelbox_ms, r.nosep_ms, r.pixelonly_ms, ratio);
  if (r.pairs < kFig8Pairs) return {Status::Fail, "too few pairs; " + detail};
  const bool ok = r.pixelbox_ms < r.nosep_ms && r.nosep_ms < r.pixelonly_ms && ratio <= kFig8MaxRatio;
  return {ok ? Status::Pass : Status::Fail, detail};
}

// 7. The threshold sweep bottoms out near n^2/2.
Outcome fig10_trend() {
  GenSpec spec;
  spec.seed = 707;
  spec.tiles = 10;
  spec.polygons_per_tile = 200;
  spec.scale_factor = 5;
  const auto rows = bench_fig10(spec, kFig10N, kFig10N, cores(), kReps);
  auto at = [&](const char* label) {
    for (const auto& r : rows) {
      if (r.label == label) return r.ms;
    }
    return -1.0;
  };
  const double mid = at("n^2/2"), lo = at("n/2"), hi = at("16n^2");
  const std::string detail = fmt("T=n/2 %.0f ms, T=n^2/2 %.0f ms, T=16n^2 %.0f ms", lo, mid, hi);
  return {mid <= std::min(lo, hi) ? Status::Pass : Status::Fail, detail};
}

// 8. Pipelining beats a single sequential stream.
Outcome table1_trend() {
  GenSpec spec;
  spec.seed = 808;
  spec.tiles = kTable1Tiles;
  spec.polygons_per_tile = 100;
  PipelineConfig cfg;
  cfg.workers = cores();
  const auto rows = bench_table1(spec, cfg, 1);
  const double speedup = rows[0].ms / rows[2].ms;
  const std::string detail = fmt("%u cores, %zu tiles: sequential %.0f ms, pipelined %.0f ms, speedup %.2f",
                                 cores(), kTable1Tiles, rows[0].ms, rows[2].ms, speedup);
  if (cores() < kTable1MinCores) return {Status::Skip, "needs >= 4 cores; " + detail};
  return {speedup >= kTable1MinSpeedup ? Status::Pass : Status::Fail, detail};
}

// 9. Migration helps when either side is the bottleneck.
Outcome fig11_trend() {
  GenSpec spec;
  spec.seed = 909;
  spec.tiles = 100;
  spec.polygons_per_tile = 100;
  PipelineConfig cfg;
  cfg.workers = cores();
  cfg.buffer_capacity = kFig11BufferCap;
  const auto rows = bench_fig11(spec, cfg, kReps);
  double parser = 0, batch = 0;
  for (const auto& r : rows) {
    if (r.config == "slow-parser") parser = r.off_ms / r.on_ms;
    if (r.config == "slow-batch") batch = r.off_ms / r.on_ms;
  }
  const std::string detail = fmt("slow batch pool %.2fx (need %.2f), slow parser %.2fx (need %.2f)", batch,
                                 kFig11SlowBatchMin, parser, kFig11SlowParserMin);
  return {batch >= kFig11SlowBatchMin && parser >= kFig11SlowParserMin ? Status::Pass : Status::Fail, detail};
}

// 10. Canonical text survives a binary round trip; mutated input never crashes.
Outcome parser_roundtrip() {
  GenSpec spec;
  spec.seed = 1010;
  spec.tiles = 20;
  spec.polygons_per_tile = 150;
  spec.drop = 0.05;
  const Manifest m = generate_corpus(spec);
  std::vector<std::string> lines;
  std::size_t files = 0;
  for (const auto& t : m.tiles) {
    for (const auto* src : {&t.a, &t.b}) {
      const auto parsed = parse_bytes(*src->bytes, InputFormat::Csv, t.tile_id);
      const std::string canon = write_csv(parsed);
      const auto back = read_binary(write_binary(parsed), t.tile_id);
      const std::string again = write_csv(back);
      if (again != canon || write_csv(parse_text(again, InputFormat::Csv, t.tile_id)) != canon) {
        return {Status::Fail, "round trip changed " + src->path.string()};
      }
      if (parse_text(write_wkt(parsed), InputFormat::WktSubset, t.tile_id) != parsed) {
        return {Status::Fail, "WKT round trip changed " + src->path.string()};
      }
      ++files;
      std::istringstream in(canon);
      for (std::string l; std::getline(in, l);) lines.push_back(l);
      std::istringstream win(write_wkt(parsed));
      for (std::string l; std::getline(win, l);) {
        if (l != "#") lines.push_back(l);
      }
    }
  }

  std::mt19937_64 rng(1011);
  const std::string alphabet = "0123456789 ,-()POLYGONMULTI#\t.e+x\r";
  std::size_t ok = 0, structured = 0;
  for (std::size_t k = 0; k < kFuzzLines; ++k) {
    std::string line = lines[rng() % lines.size()];
    for (int e = 0, edits = 1 + static_cast<int>(rng() % 5); e < edits; ++e) {
      const std::size_t at = line.empty() ? 0 : rng() % line.size();
      switch (rng() % 5) {
        case 0: if (!line.empty()) line[at] = alphabet[rng() % alphabet.size()]; break;
        case 1: line.insert(at, 1, alphabet[rng() % alphabet.size()]); break;
        case 2: if (!line.empty()) line.erase(at, 1 + rng() % 4); break;
        case 3: line.insert(at, line.substr(at, rng() % 12)); break;
        default: line.resize(at); break;
      }
    }
    const auto fmt_guess = detect_format(line);
    try {
      const auto f = parse_text(line + "\n", fmt_guess == InputFormat::Binary ? InputFormat::Csv : fmt_guess);
      for (const auto& p : f.polygons) {
        if (polygon_area(p) == 0) return {Status::Fail, "zero-area polygon accepted: " + line};
      }
      ++ok;
    } catch (const ParseError&) {
      ++structured;
    } catch (const std::exception& e) {
      return {Status::Fail, std::string("unstructured error ") + e.what() + " on: " + line};
    }
  }
  return {Status::Pass, fmt("%zu files idempotent; %zu fuzzed lines: %zu parsed, %zu structured errors", files,
                            kFuzzLines, ok, structured)};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "exactness", exactness},           {2, "area identity", area_identity},
      {3, "index correctness", index_correctness}, {4, "jaccard semantics", jaccard_semantics},
      {5, "determinism", determinism},       {6, "sampling-box speedup", fig8_trend},
      {7, "threshold sweep", fig10_trend},   {8, "pipeline speedup", table1_trend},
      {9, "migration benefit", fig11_trend}, {10, "parser round trip", parser_roundtrip},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : all) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {Status::Fail, std::string("exception: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const char* tag = o.status == Status::Pass ? "PASS" : o.status == Status::Fail ? "FAIL" : "SKIP";
    std::printf("[%s] %2d %-21s %s (%.1f s)\n", tag, c.id, c.name, o.detail.c_str(), s);
    std::fflush(stdout);
    if (o.status == Status::Fail) ++failed;
  }
  fs::remove_all(scratch());
  return failed == 0 ? 0 : 1;
}
