#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rectijac/datagen.hpp"
#include "rectijac/pipeline.hpp"
#include "rectijac/pixelbox.hpp"

namespace rectijac {

/// Candidate pairs of a generated corpus, with the polygons they point to.
struct PairBatch {
  std::vector<TilePair> tiles;
  std::vector<PolygonPairRef> pairs;
};

[[nodiscard]] PairBatch collect_pairs(const GenSpec& spec);

/// PixelOnly pixelizes the joint MBR and counts intersection and union
/// directly; Oracle scans only the MBR intersection for the intersection.
enum class AreaMethod { PixelOnly, PixelBoxNoSep, PixelBox, Oracle };

[[nodiscard]] const char* to_string(AreaMethod m) noexcept;

/// Areas of every pair of the batch with the given method on `pool`.
[[nodiscard]] std::vector<PairAreas> run_method(AreaMethod method, const PairBatch& batch,
                                                const PixelBoxConfig& cfg, ExecutorPool& pool);

[[nodiscard]] double median(std::vector<double> v);

/// Wall-clock milliseconds of `fn`, one entry per repetition.
[[nodiscard]] std::vector<double> time_reps(int reps, const std::function<void()>& fn);

struct Fig8Row {
  std::int32_t scale = 1;
  std::size_t pairs = 0;
  double pixelonly_ms = 0;
  double nosep_ms = 0;
  double pixelbox_ms = 0;
  double oracle_ms = 0;
};

/// The area methods on the same pair batch at each scale factor.
/// Throws std::logic_error if the methods disagree on any pair.
[[nodiscard]] std::vector<Fig8Row> bench_fig8(GenSpec spec, const std::vector<std::int32_t>& scales,
                                              const PixelBoxConfig& cfg, unsigned workers, int reps);

struct Fig10Row {
  std::string label;
  std::uint64_t threshold = 0;
  double ms = 0;
};

/// The seven thresholds swept for group size n.
[[nodiscard]] std::vector<std::pair<std::string, std::uint64_t>> fig10_thresholds(std::uint32_t n);

[[nodiscard]] std::vector<Fig10Row> bench_fig10(const GenSpec& spec, std::uint32_t n,
                                                std::uint32_t fanout, unsigned workers, int reps);

struct Table1Row {
  std::string scheme;
  double ms = 0;
  double tiles_per_s = 0;
};

/// Sequential, uncoordinated multi-stream and pipelined runs of one corpus.
[[nodiscard]] std::vector<Table1Row> bench_table1(const GenSpec& spec, const PipelineConfig& cfg,
                                                  int reps);

struct Fig11Row {
  std::string config;
  double batch_throttle = 1;
  double parse_throttle = 1;
  double off_ms = 0;
  double on_ms = 0;
  MigrationStats on_stats;
};

/// Migration off/on under three pool speed settings: a slow parser, a
/// balanced setup and a slow batch pool.
[[nodiscard]] std::vector<Fig11Row> bench_fig11(const GenSpec& spec, const PipelineConfig& cfg,
                                                int reps);

[[nodiscard]] std::string fig8_json(const std::vector<Fig8Row>& rows);
[[nodiscard]] std::string fig10_json(const std::vector<Fig10Row>& rows);
[[nodiscard]] std::string table1_json(const std::vector<Table1Row>& rows);
[[nodiscard]] std::string fig11_json(const std::vector<Fig11Row>& rows);

[[nodiscard]] std::string fig8_table(const std::vector<Fig8Row>& rows);
[[nodiscard]] std::string fig10_table(const std::vector<Fig10Row>& rows);
[[nodiscard]] std::string table1_table(const std::vector<Table1Row>& rows);
[[nodiscard]] std::string fig11_table(const std::vector<Fig11Row>& rows);

}  // namespace rectijac
