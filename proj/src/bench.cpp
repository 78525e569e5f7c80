#include "rectijac/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <stdexcept>

#include <json.hpp>

#include "rectijac/hilbert_rtree.hpp"

namespace rectijac {

namespace {

using Json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

std::string format_row(const std::vector<std::string>& cells, const std::vector<int>& widths) {
  std::string line;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    char buf[128];
    std::snprintf(buf, sizeof buf, i == 0 ? "%-*s" : "%*s", widths[i], cells[i].c_str());
    line += buf;
    if (i + 1 < cells.size()) line += "  ";
  }
  return line + "\n";
}

std::string render(const std::vector<std::string>& header,
                   const std::vector<std::vector<std::string>>& rows) {
  std::vector<int> widths(header.size());
  for (std::size_t i = 0; i < header.size(); ++i) widths[i] = static_cast<int>(header[i].size());
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      widths[i] = std::max(widths[i], static_cast<int>(r[i].size()));
    }
  }
  std::string out = format_row(header, widths);
  for (const auto& r : rows) out += format_row(r, widths);
  return out;
}

std::string num(double v, int decimals = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

Json stats_json(const MigrationStats& m) {
  return Json{{"congestion_steals", m.congestion_steals},
              {"idleness_steals", m.idleness_steals},
              {"parse", {{"stage", m.parse.stage}, {"batch", m.parse.batch}}},
              {"aggregate", {{"stage", m.aggregate.stage}, {"batch", m.aggregate.batch}}}};
}

}  // namespace

PairBatch collect_pairs(const GenSpec& spec) {
  PairBatch batch;
  batch.tiles.reserve(spec.tiles);
  for (std::size_t t = 0; t < spec.tiles; ++t) batch.tiles.push_back(gen_tile_pair(spec, t));
  for (const TilePair& tp : batch.tiles) {
    for (const CandidatePair& c : mbr_join(tp.a.polygons, tp.b.polygons)) {
      batch.pairs.push_back({&tp.a.polygons[c.p_ref], &tp.b.polygons[c.q_ref]});
    }
  }
  return batch;
}

const char* to_string(AreaMethod m) noexcept {
  switch (m) {
    case AreaMethod::PixelOnly: return "PixelOnly";
    case AreaMethod::Oracle: return "Oracle";
    case AreaMethod::PixelBoxNoSep: return "PixelBox-NoSep";
    case AreaMethod::PixelBox: return "PixelBox";
  }
  return "?";
}

std::vector<PairAreas> run_method(AreaMethod method, const PairBatch& batch,
                                  const PixelBoxConfig& cfg, ExecutorPool& pool) {
  switch (method) {
    case AreaMethod::PixelOnly: {
      std::vector<PairAreas> out(batch.pairs.size());
      pool.run_batch(out.size(), [&](std::size_t i) {
        out[i] = intersection_area_pixelonly(*batch.pairs[i].p, *batch.pairs[i].q);
      });
      return out;
    }
    case AreaMethod::Oracle: {
      std::vector<PairAreas> out(batch.pairs.size());
      pool.run_batch(out.size(), [&](std::size_t i) {
        out[i] = intersection_area_oracle(*batch.pairs[i].p, *batch.pairs[i].q);
      });
      return out;
    }
    case AreaMethod::PixelBoxNoSep:
      return intersection_area_batch(batch.pairs, cfg, pool, KernelMode::Combined);
    case AreaMethod::PixelBox:
      return intersection_area_batch(batch.pairs, cfg, pool, KernelMode::Separated);
  }
  throw std::invalid_argument("unknown method");
}

double median(std::vector<double> v) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : (v[m - 1] + v[m]) / 2;
}

std::vector<double> time_reps(int reps, const std::function<void()>& fn) {
  std::vector<double> out;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = Clock::now();
    fn();
    out.push_back(std::chrono::duration<double, std::milli>(Clock::now() - t0).count());
  }
  return out;
}

std::vector<Fig8Row> bench_fig8(GenSpec spec, const std::vector<std::int32_t>& scales,
                                const PixelBoxConfig& cfg, unsigned workers, int reps) {
  ExecutorPool pool(PoolKind::Batch, workers);
  std::vector<Fig8Row> rows;
  for (std::int32_t s : scales) {
    spec.scale_factor = s;
    const PairBatch batch = collect_pairs(spec);
    const auto expected = run_method(AreaMethod::PixelBox, batch, cfg, pool);
    Fig8Row row{s, batch.pairs.size(), 0, 0, 0, 0};
    std::vector<double> t_only, t_nosep, t_box, t_oracle;
    // Interleaved so slow drift of the machine hits all three alike.
    for (int r = 0; r < reps; ++r) {
      for (AreaMethod m : {AreaMethod::PixelOnly, AreaMethod::PixelBoxNoSep, AreaMethod::PixelBox,
                           AreaMethod::Oracle}) {
        std::vector<PairAreas> got;
        const double ms = time_reps(1, [&] { got = run_method(m, batch, cfg, pool); }).front();
        if (got != expected) {
          throw std::logic_error(std::string(to_string(m)) + " disagrees with PixelBox");
        }
        switch (m) {
          case AreaMethod::PixelOnly: t_only.push_back(ms); break;
          case AreaMethod::PixelBoxNoSep: t_nosep.push_back(ms); break;
          case AreaMethod::PixelBox: t_box.push_back(ms); break;
          case AreaMethod::Oracle: t_oracle.push_back(ms); break;
        }
      }
    }
    row.pixelonly_ms = median(t_only);
    row.nosep_ms = median(t_nosep);
    row.pixelbox_ms = median(t_box);
    row.oracle_ms = median(t_oracle);
    rows.push_back(row);
  }
  return rows;
}

std::vector<std::pair<std::string, std::uint64_t>> fig10_thresholds(std::uint32_t n) {
  const std::uint64_t n1 = n;
  const std::uint64_t n2 = n1 * n1;
  return {{"n/2", std::max<std::uint64_t>(1, n1 / 2)},
          {"n", n1},
          {"n^2/8", std::max<std::uint64_t>(1, n2 / 8)},
          {"n^2/2", std::max<std::uint64_t>(1, n2 / 2)},
          {"n^2", n2},
          {"4n^2", 4 * n2},
          {"16n^2", 16 * n2}};
}

std::vector<Fig10Row> bench_fig10(const GenSpec& spec, std::uint32_t n, std::uint32_t fanout,
                                  unsigned workers, int reps) {
  ExecutorPool pool(PoolKind::Batch, workers);
  const PairBatch batch = collect_pairs(spec);
  const auto thresholds = fig10_thresholds(n);
  std::vector<std::vector<double>> times(thresholds.size());
  for (int r = 0; r < reps; ++r) {
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
      PixelBoxConfig cfg{n, thresholds[i].second, fanout};
      times[i].push_back(time_reps(1, [&] {
                           (void)run_method(AreaMethod::PixelBox, batch, cfg, pool);
                         }).front());
    }
  }
  std::vector<Fig10Row> rows;
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    rows.push_back({thresholds[i].first, thresholds[i].second, median(times[i])});
  }
  return rows;
}

std::vector<Table1Row> bench_table1(const GenSpec& spec, const PipelineConfig& cfg, int reps) {
  const Manifest manifest = generate_corpus(spec);
  const auto tiles = static_cast<double>(manifest.tiles.size());
  std::vector<double> seq, multi, pipe;
  for (int r = 0; r < reps; ++r) {
    seq.push_back(time_reps(1, [&] { (void)run_sequential(manifest, cfg); }).front());
    multi.push_back(
        time_reps(1, [&] { (void)run_multistream(manifest, cfg, std::max(2U, cfg.workers)); }).front());
    pipe.push_back(time_reps(1, [&] { (void)run_pipeline(manifest, cfg); }).front());
  }
  std::vector<Table1Row> rows;
  for (auto [name, v] : {std::pair{"sequential", &seq}, std::pair{"multistream", &multi},
                         std::pair{"pipelined", &pipe}}) {
    const double ms = median(*v);
    rows.push_back({name, ms, ms > 0 ? tiles * 1000.0 / ms : 0});
  }
  return rows;
}

std::vector<Fig11Row> bench_fig11(const GenSpec& spec, const PipelineConfig& cfg, int reps) {
  const Manifest manifest = generate_corpus(spec);
  struct Setting {
    const char* name;
    double batch;
    double parse;
  };
  const Setting settings[] = {{"slow-parser", 1.0, 4.0}, {"balanced", 1.0, 1.0}, {"slow-batch", 4.0, 1.0}};
  std::vector<Fig11Row> rows;
  for (const Setting& s : settings) {
    PipelineConfig c = cfg;
    c.batch_throttle = s.batch;
    c.parse_throttle = s.parse;
    std::vector<double> off, on;
    MigrationStats stats;
    for (int r = 0; r < reps; ++r) {
      c.migration.enabled = false;
      off.push_back(time_reps(1, [&] { (void)run_pipeline(manifest, c); }).front());
      c.migration.enabled = true;
      on.push_back(time_reps(1, [&] { stats = run_pipeline(manifest, c).migration; }).front());
    }
    rows.push_back({s.name, s.batch, s.parse, median(off), median(on), stats});
  }
  return rows;
}

std::string fig8_json(const std::vector<Fig8Row>& rows) {
  Json arr = Json::array();
  for (const auto& r : rows) {
    arr.push_back({{"scale", r.scale},
                   {"pairs", r.pairs},
                   {"pixelonly_ms", r.pixelonly_ms},
                   {"nosep_ms", r.nosep_ms},
                   {"pixelbox_ms", r.pixelbox_ms},
                   {"oracle_ms", r.oracle_ms}});
  }
  return Json{{"suite", "fig8"}, {"rows", arr}}.dump(2) + "\n";
}

std::string fig10_json(const std::vector<Fig10Row>& rows) {
  Json arr = Json::array();
  for (const auto& r : rows) arr.push_back({{"T", r.label}, {"threshold", r.threshold}, {"ms", r.ms}});
  return Json{{"suite", "fig10"}, {"rows", arr}}.dump(2) + "\n";
}

std::string table1_json(const std::vector<Table1Row>& rows) {
  Json arr = Json::array();
  for (const auto& r : rows) {
    arr.push_back({{"scheme", r.scheme}, {"ms", r.ms}, {"tiles_per_s", r.tiles_per_s}});
  }
  return Json{{"suite", "table1"}, {"rows", arr}}.dump(2) + "\n";
}

std::string fig11_json(const std::vector<Fig11Row>& rows) {
  Json arr = Json::array();
  for (const auto& r : rows) {
    arr.push_back({{"config", r.config},
                   {"batch_throttle", r.batch_throttle},
                   {"parse_throttle", r.parse_throttle},
                   {"off_ms", r.off_ms},
                   {"on_ms", r.on_ms},
                   {"migration", stats_json(r.on_stats)}});
  }
  return Json{{"suite", "fig11"}, {"rows", arr}}.dump(2) + "\n";
}

std::string fig8_table(const std::vector<Fig8Row>& rows) {
  std::vector<std::vector<std::string>> cells;
  for (const auto& r : rows) {
    cells.push_back({std::to_string(r.scale), std::to_string(r.pairs), num(r.pixelonly_ms),
                     num(r.nosep_ms), num(r.pixelbox_ms), num(r.oracle_ms)});
  }
  return render({"scale", "pairs", "PixelOnly ms", "NoSep ms", "PixelBox ms", "oracle ms"}, cells);
}

std::string fig10_table(const std::vector<Fig10Row>& rows) {
  std::vector<std::vector<std::string>> cells;
  for (const auto& r : rows) cells.push_back({r.label, std::to_string(r.threshold), num(r.ms)});
  return render({"T", "pixels", "ms"}, cells);
}

std::string table1_table(const std::vector<Table1Row>& rows) {
  std::vector<std::vector<std::string>> cells;
  for (const auto& r : rows) cells.push_back({r.scheme, num(r.ms), num(r.tiles_per_s)});
  return render({"scheme", "ms", "tiles/s"}, cells);
}

std::string fig11_table(const std::vector<Fig11Row>& rows) {
  std::vector<std::vector<std::string>> cells;
  for (const auto& r : rows) {
    cells.push_back({r.config, num(r.off_ms), num(r.on_ms), num(r.off_ms / r.on_ms, 3),
                     std::to_string(r.on_stats.congestion_steals),
                     std::to_string(r.on_stats.idleness_steals)});
  }
  return render({"config", "off ms", "on ms", "speedup", "congestion", "idleness"}, cells);
}

}  // namespace rectijac
