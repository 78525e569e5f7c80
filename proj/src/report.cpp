#include <json.hpp>

#include "rectijac/pipeline.hpp"

namespace rectijac {

namespace {

using Json = nlohmann::ordered_json;

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

Json pool_counts(const PoolCounts& c) { return Json{{"stage", c.stage}, {"batch", c.batch}}; }

}  // namespace

std::string to_json(const SimilarityReport& report, bool telemetry) {
  Json tiles = Json::array();
  for (const TileReport& t : report.tiles) {
    tiles.push_back(Json{
        {"tile_id", t.tile_id},
        {"polygons_a", t.polygons_a},
        {"polygons_b", t.polygons_b},
        {"pairs", t.pairs},
        {"intersecting", t.intersecting},
        {"jaccard", optional_number(t.jaccard)},
        {"missing_a", t.missing_a},
        {"missing_b", t.missing_b},
    });
  }
  Json doc{
      {"image", report.image},
      {"set_a", report.set_a},
      {"set_b", report.set_b},
      {"tiles", std::move(tiles)},
      {"polygons_a", report.polygons_a},
      {"polygons_b", report.polygons_b},
      {"pairs", report.pairs},
      {"intersecting", report.intersecting},
      {"jaccard", optional_number(report.jaccard)},
      {"missing_a", report.missing_a},
      {"missing_b", report.missing_b},
      {"unpaired", report.unpaired},
  };
  if (telemetry) {
    const StageTiming& t = report.timing;
    doc["timing"] = Json{
        {"parse_ms", t.parse_ms},         {"build_ms", t.build_ms},
        {"filter_ms", t.filter_ms},       {"aggregate_ms", t.aggregate_ms},
        {"total_ms", t.total_ms},
    };
    const MigrationStats& m = report.migration;
    doc["migration"] = Json{
        {"congestion_steals", m.congestion_steals},
        {"idleness_steals", m.idleness_steals},
        {"tasks_by_pool", Json{{"parse", pool_counts(m.parse)},
                               {"aggregate", pool_counts(m.aggregate)}}},
    };
  }
  return doc.dump(2) + "\n";
}

}  // namespace rectijac
