// Command-line front end: compare, validate, gen and bench.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "rectijac/bench.hpp"
#include "rectijac/datagen.hpp"
#include "rectijac/parser.hpp"
#include "rectijac/pipeline.hpp"

namespace fs = std::filesystem;
using namespace rectijac;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitInput = 2;

/// Bad input reported from inside the tool (as opposed to a library error).
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

unsigned default_workers() {
  if (const char* env = std::getenv("RECTIJAC_WORKERS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) return static_cast<unsigned>(v);
    } catch (const std::exception&) {
    }
    std::cerr << "warning: ignoring RECTIJAC_WORKERS=" << env << "\n";
  }
  return std::max(1U, std::thread::hardware_concurrency());
}

struct KernelFlags {
  std::uint32_t group_size = 64;
  std::optional<std::uint64_t> threshold;
  std::optional<std::uint32_t> fanout;

  void add(CLI::App& app) {
    app.add_option("--group-size", group_size, "cooperating workers per pair (n)")
        ->check(CLI::PositiveNumber);
    app.add_option("--threshold", threshold, "pixelization threshold T (default n^2/2)")
        ->check(CLI::Range(std::uint64_t{1}, std::uint64_t{1} << 40));
    app.add_option("--fanout", fanout, "sub-boxes per partition F (default n)")
        ->check(CLI::Range(std::uint32_t{2}, std::uint32_t{1} << 20));
  }

  [[nodiscard]] PixelBoxConfig config() const {
    PixelBoxConfig c = PixelBoxConfig::for_group_size(group_size);
    if (threshold) c.pixel_threshold = *threshold;
    if (fanout) c.fanout = *fanout;
    c.check();
    return c;
  }
};

struct PipelineFlags {
  unsigned workers = default_workers();
  std::size_t buffer_cap = 64;
  std::size_t batch_min = 4096;
  std::string migration = "off";
  std::size_t steal_count = 1;
  double batch_throttle = 1.0;
  double parse_throttle = 1.0;
  std::string format;

  void add(CLI::App& app) {
    app.add_option("--workers", workers, "parser workers and pool width")->check(CLI::PositiveNumber);
    app.add_option("--buffer-cap", buffer_cap, "inter-stage buffer capacity")->check(CLI::PositiveNumber);
    app.add_option("--batch-min", batch_min, "pairs per aggregator batch")->check(CLI::PositiveNumber);
    app.add_option("--migration", migration, "dynamic task migration")
        ->check(CLI::IsMember({"on", "off"}));
    app.add_option("--steal-count", steal_count, "tasks moved per migration wake-up")
        ->check(CLI::PositiveNumber);
    app.add_option("--batch-throttle", batch_throttle, "slow-down factor of the batch pool")
        ->check(CLI::Range(1.0, 1000.0));
    app.add_option("--parse-throttle", parse_throttle, "slow-down factor of the parser stage")
        ->check(CLI::Range(1.0, 1000.0));
    app.add_option("--format", format, "input format (default: detect)")
        ->check(CLI::IsMember({"csv", "wkt", "bin"}));
  }

  [[nodiscard]] PipelineConfig config(const PixelBoxConfig& kernel) const {
    PipelineConfig c;
    c.pixelbox = kernel;
    c.workers = workers;
    c.buffer_capacity = buffer_cap;
    c.batch_min = batch_min;
    c.migration.enabled = migration == "on";
    c.migration.steal_count = steal_count;
    c.batch_throttle = batch_throttle;
    c.parse_throttle = parse_throttle;
    if (!format.empty()) c.format = parse_format_name(format);
    c.check();
    return c;
  }
};

struct GenFlags {
  GenSpec spec;
  std::string format = "csv";

  void add(CLI::App& app, bool with_format) {
    app.add_option("--seed", spec.seed, "generator seed");
    app.add_option("--tiles", spec.tiles, "tiles")->check(CLI::PositiveNumber);
    app.add_option("--polygons", spec.polygons_per_tile, "polygons per tile")->check(CLI::PositiveNumber);
    app.add_option("--mean-area", spec.mean_area, "mean polygon area in pixels");
    app.add_option("--area-stddev", spec.area_stddev, "polygon area standard deviation");
    app.add_option("--scale", spec.scale_factor, "coordinate scale factor")->check(CLI::Range(1, 64));
    app.add_option("--perturbation", spec.perturbation, "fraction of set-B polygons perturbed");
    app.add_option("--drop", spec.drop, "fraction of polygons missing from set B");
    app.add_option("--compactness", spec.compactness, "bias towards blob-like shapes");
    app.add_option("--image", spec.image, "image name");
    if (with_format) {
      app.add_option("--format", format, "output format")->check(CLI::IsMember({"csv", "wkt", "bin"}));
    }
  }
};

void write_output(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw InputError("cannot write " + path);
}

int cmd_compare(const std::vector<std::string>& dirs, const std::string& manifest_path,
                const KernelFlags& kernel, const PipelineFlags& pipe, bool no_pipeline,
                const std::string& report_path) {
  Manifest manifest;
  if (!manifest_path.empty()) {
    if (!dirs.empty()) throw InputError("give either two directories or --manifest");
    manifest = read_manifest(manifest_path);
  } else {
    if (dirs.size() != 2) throw InputError("compare needs two directories");
    manifest = pair_tile_files(dirs[0], dirs[1]);
  }
  for (const auto& f : manifest.unpaired) std::cerr << "warning: no partner for " << f << "\n";
  if (manifest.tiles.empty()) throw InputError("no pairable .poly files");
  const PipelineConfig cfg = pipe.config(kernel.config());
  const SimilarityReport report =
      no_pipeline ? run_sequential(manifest, cfg) : run_pipeline(manifest, cfg);
  write_output(to_json(report), report_path);
  return kExitOk;
}

int cmd_validate(const std::string& path, const std::string& format_name) {
  std::optional<InputFormat> format;
  if (!format_name.empty()) format = parse_format_name(format_name);
  std::vector<fs::path> files;
  if (fs::is_directory(path)) {
    for (const auto& e : fs::directory_iterator(path)) {
      if (e.is_regular_file() && e.path().extension() == ".poly") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
      std::cerr << "warning: no .poly files in " << path << "\n";
      return kExitOk;
    }
  } else if (fs::exists(path)) {
    files.push_back(path);
  } else {
    throw InputError("no such file or directory: " + path);
  }
  int failures = 0;
  for (const auto& f : files) {
    try {
      const PolygonFile file = load_polygon_file(f, format);
      std::cout << "ok " << f.string() << " (" << file.polygons.size() << " polygons, "
                << to_string(file.source_format) << ")\n";
    } catch (const ParseError& e) {
      ++failures;
      std::cout << "error " << f.string() << ":" << e.line() << ":" << e.column() << ": "
                << to_string(e.kind()) << ": " << e.reason() << "\n";
    }
  }
  return failures == 0 ? kExitOk : kExitInput;
}

int cmd_gen(const GenFlags& gen, const std::string& out_dir) {
  const auto format = parse_format_name(gen.format);
  const Manifest m = write_corpus(gen.spec, out_dir, *format);
  std::cout << "wrote " << m.tiles.size() << " tiles to " << out_dir << "\n";
  return kExitOk;
}

int cmd_bench(const std::string& suite, const GenFlags& gen, const KernelFlags& kernel,
              const PipelineFlags& pipe, int reps, const std::string& report_path) {
  std::string table;
  std::string json;
  const PixelBoxConfig cfg = kernel.config();
  if (suite == "fig8") {
    const auto rows = bench_fig8(gen.spec, {1, 2, 3, 4, 5}, cfg, pipe.workers, reps);
    table = fig8_table(rows);
    json = fig8_json(rows);
  } else if (suite == "fig10") {
    const auto rows = bench_fig10(gen.spec, kernel.group_size, cfg.fanout, pipe.workers, reps);
    table = fig10_table(rows);
    json = fig10_json(rows);
  } else if (suite == "table1") {
    const auto rows = bench_table1(gen.spec, pipe.config(cfg), reps);
    table = table1_table(rows);
    json = table1_json(rows);
  } else {
    const auto rows = bench_fig11(gen.spec, pipe.config(cfg), reps);
    table = fig11_table(rows);
    json = fig11_json(rows);
  }
  std::cout << table;
  if (report_path.empty()) {
    std::cout << "\n" << json;
  } else {
    write_output(json, report_path);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact Jaccard comparison of rectilinear polygon sets"};
  app.require_subcommand(1);

  KernelFlags kernel;
  PipelineFlags pipe;
  GenFlags gen;
  GenFlags bench_gen;
  bench_gen.spec.tiles = 8;
  bench_gen.spec.polygons_per_tile = 200;

  auto* compare = app.add_subcommand("compare", "compare two polygon sets tile by tile");
  std::vector<std::string> dirs;
  std::string manifest_path;
  bool no_pipeline = false;
  std::string report_path;
  compare->add_option("dirs", dirs, "set A and set B directories");
  compare->add_option("--manifest", manifest_path, "manifest file instead of directories");
  compare->add_flag("--no-pipeline", no_pipeline, "process one tile at a time");
  compare->add_option("--report", report_path, "write the JSON report here");
  kernel.add(*compare);
  pipe.add(*compare);

  auto* validate = app.add_subcommand("validate", "parse and validate polygon files");
  std::string validate_path;
  std::string validate_format;
  validate->add_option("path", validate_path, "file or directory")->required();
  validate->add_option("--format", validate_format, "input format (default: detect)")
      ->check(CLI::IsMember({"csv", "wkt", "bin"}));

  auto* gen_cmd = app.add_subcommand("gen", "generate a synthetic corpus");
  std::string out_dir;
  gen_cmd->add_option("out", out_dir, "output directory")->required();
  gen.add(*gen_cmd, true);

  auto* bench = app.add_subcommand("bench", "run a benchmark suite");
  std::string suite;
  int reps = 3;
  std::string bench_report;
  bench->add_option("suite", suite, "fig8, fig10, table1 or fig11")
      ->required()
      ->check(CLI::IsMember({"fig8", "fig10", "table1", "fig11"}));
  bench->add_option("--reps", reps, "repetitions per measurement")->check(CLI::PositiveNumber);
  bench->add_option("--report", bench_report, "write the JSON results here");
  bench_gen.add(*bench, false);
  KernelFlags bench_kernel;
  PipelineFlags bench_pipe;
  bench_kernel.add(*bench);
  bench_pipe.add(*bench);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*compare) return cmd_compare(dirs, manifest_path, kernel, pipe, no_pipeline, report_path);
    if (*validate) return cmd_validate(validate_path, validate_format);
    if (*gen_cmd) return cmd_gen(gen, out_dir);
    return cmd_bench(suite, bench_gen, bench_kernel, bench_pipe, reps, bench_report);
  } catch (const TileError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.input_error() ? kExitInput : kExitInternal;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const ManifestError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}
