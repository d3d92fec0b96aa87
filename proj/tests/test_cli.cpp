#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "ecgsynth/cli.hpp"
#include "ecgsynth/config.hpp"
#include "ecgsynth/error.hpp"
#include "ecgsynth/record_io.hpp"
#include "ecgsynth/simgen.hpp"
#include "ecgsynth/svg.hpp"
#include "json.hpp"
#include "support.hpp"

using namespace ecgsynth;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = fs::temp_directory_path() / ("ecgsynth_test_" + tag);
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "ecgsynth");
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

void write_bundle(const MultiLeadRecord& record, const TempDir& dir, const std::string& stem) {
  write_record_csv(record, fs::path(dir / (stem + ".csv")));
  std::ofstream(dir / (stem + ".json")) << header_json(record);
}

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

// 70 s lagged twelve-lead record, shared by the slow tests.
const TempDir& twelve_lead_dir() {
  static const TempDir dir = [] {
    TempDir d("twelve");
    write_bundle(generate_synthetic_record(lagged_twelve_lead_config(70.0, 30.0), 12).record, d, "hist");
    return d;
  }();
  return dir;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("config text: sections, comments and overrides") {
  PipelineConfig c;
  apply_config_text(c,
                    "# pipeline defaults\n"
                    "[forest]\n"
                    "trees = 37 ; fewer trees\n"
                    "min_leaf=3\n"
                    "\n"
                    "[synthesis]\n"
                    "lag_correction = false\n"
                    "[pipeline]\n"
                    "seed = 9\n");
  CHECK(c.synthesis.forest.trees == 37);
  CHECK(c.synthesis.forest.min_leaf == 3);
  CHECK_FALSE(c.synthesis.lag_correction);
  CHECK(c.seed == 9);
  CHECK(get_config_value(c, "forest.trees") == "37");

  set_config_value(c, "dtw.window_fraction", "0.25");
  CHECK(c.synthesis.dtw.window_fraction == 0.25);

  PipelineConfig back;
  apply_config_text(back, config_text(c));
  for (const auto& key : config_keys()) CHECK(get_config_value(back, key) == get_config_value(c, key));
}

TEST_CASE("config errors name the line") {
  PipelineConfig c;
  for (const std::string text : {"[forest]\ntrees = 10\nbogus = 1\n", "[forest]\n\ntrees = ten\n",
                                 "[forest]\ntrees = 10\n[broken\n"}) {
    try {
      apply_config_text(c, text);
      FAIL("expected InvalidConfig");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::InvalidConfig);
      CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
  }
  CHECK_THROWS_AS(set_config_value(c, "forest.nope", "1"), Error);
  c.synthesis.forest.trees = 0;
  CHECK_THROWS_AS(validate_pipeline_config(c), Error);
}

TEST_CASE("exit codes by failure class") {
  CHECK(exit_code_for(ErrorCode::UnsupportedFormat) == kExitInput);
  CHECK(exit_code_for(ErrorCode::InsufficientBeats) == kExitTraining);
  CHECK(exit_code_for(ErrorCode::NoBeatsFound) == kExitSynthesis);

  TempDir dir("exit");
  CHECK(run({}).code == kExitInput);
  CHECK(run({"frobnicate"}).code == kExitInput);
  CHECK(run({"--version"}).code == kExitOk);

  write_bundle(generate_synthetic_record(lagged_twelve_lead_config(5.0, 0.0), 1).record, dir, "short");
  CHECK(run({"--out", dir / "o1", "train", dir / "short.json"}).code == kExitTraining);

  CHECK(run({"--out", dir / "o2", "simulate", "--simgen", "--duration-s", "20"}).code == kExitInput);

  std::ofstream(dir / "r212.hea") << "r212 1 500 10\nr212.dat 212 200 12 0 0 0 0 I\n";
  std::ofstream(dir / "r212.dat") << std::string(15, '\0');
  CHECK(run({"--out", dir / "o3", "ingest", dir / "r212.hea"}).code == kExitInput);

  CHECK(run({"--out", dir / "o4", "ingest", dir / "missing.csv"}).code == kExitInput);

  std::ofstream(dir / "bad.ini") << "[forest]\ntrees = -1\n";
  CHECK(run({"--config", dir / "bad.ini", "--out", dir / "o5", "ingest", dir / "short.json"}).code == kExitInput);
}

TEST_CASE("ingest writes a canonical bundle that reloads to the same samples") {
  TempDir dir("ingest");
  std::mt19937_64 rng(3);
  const auto record = test::make_record({LeadId::I, LeadId::V2}, {test::gaussian_noise(rng, 700, 0.5),
                                                                  test::gaussian_noise(rng, 700, 0.5)},
                                        250.0, "noise");
  write_bundle(record, dir, "noise");
  const auto r = run({"--out", dir / "out", "ingest", dir / "noise.json"});
  REQUIRE(r.code == kExitOk);
  CHECK(r.out.find("noise: leads=2 fs=250") != std::string::npos);
  const auto back = load_record(dir / "out/noise.json");
  REQUIRE(back.lead_count() == 2);
  CHECK(back.fs() == 250.0);
  CHECK(back.lead_at(1) == LeadId::V2);
  for (std::size_t l = 0; l < 2; ++l) {
    for (std::size_t k = 0; k < record.size(); ++k) CHECK(std::abs(back.lead(l)[k] - record.lead(l)[k]) <= 1e-9);
  }
}

TEST_CASE("train writes eleven models with their importances") {
  const auto& dir = twelve_lead_dir();
  const auto r = run({"--seed", "5", "--forest.trees", "30", "--out", dir / "models", "train", dir / "hist.json"});
  REQUIRE(r.code == kExitOk);
  const auto summary = nlohmann::json::parse(read_text_file(dir / "models/training_summary.json"));
  CHECK(summary["current_lead"] == "I");
  CHECK(summary["seed"] == 5);
  REQUIRE(summary["models"].size() == 11);
  for (const auto& m : summary["models"]) {
    REQUIRE(m.contains("file"));
    CHECK(fs::exists(dir / ("models/" + m["file"].get<std::string>())));
    CHECK(m["importance"].size() == 10);
  }
}

TEST_CASE("synth without lag correction predicts no lag") {
  const auto& dir = twelve_lead_dir();
  const auto hist = load_record(dir / "hist.json");
  const auto current = slice_record(hist, 60.0, 70.0, {LeadId::I});
  write_bundle(current, dir, "current");
  const auto r = run({"--no-lag-correction", "--out", dir / "nolag", "synth", dir / "hist.json", dir / "current.json",
                      "--reference", dir / "hist.json", "--svg"});
  REQUIRE(r.code == kExitOk);
  CHECK(count(r.out, "rho=") == 11);
  std::istringstream lines(read_text_file(dir / "nolag/provenance.jsonl"));
  std::size_t n = 0;
  for (std::string line; std::getline(lines, line); ++n) {
    CHECK(nlohmann::json::parse(line)["delta_hat_ms"] == 0.0);
  }
  CHECK(n > 11 * 10);
  const auto out = load_record(dir / ("nolag/" + current.header().name + "_12lead.json"));
  CHECK(out.lead_count() == 12);
  CHECK(out.size() == current.size());
  CHECK(fs::exists(dir / "nolag/strip_V6.svg"));
}

TEST_CASE("overlay plot") {
  const std::vector<PlotSeries> series = {{"measured", {0.0, 1.0, 0.5, -0.2}, ""},
                                          {"synthesized", {0.1, 0.9, 0.4, -0.1}, ""}};
  const auto svg = overlay_svg("lead V1 & friends", series, 500.0);
  CHECK(count(svg, "<polyline") == 2);
  CHECK(svg.find(">measured<") != std::string::npos);
  CHECK(svg.find(">synthesized<") != std::string::npos);
  CHECK(svg.find("V1 &amp; friends") != std::string::npos);
  CHECK(svg == overlay_svg("lead V1 & friends", series, 500.0));
}

TEST_CASE("vcg loop plot") {
  VcgSignal zero;
  zero.fs = 500.0;
  zero.x.assign(40, 0.0);
  zero.y.assign(40, 0.0);
  zero.z.assign(40, 0.0);
  const auto flat = vcg_loop_svg("flat", zero);
  CHECK(count(flat, "<circle") == 1);
  CHECK(count(flat, "<polyline") == 0);

  VcgSignal loop = zero;
  for (std::size_t k = 0; k < 40; ++k) {
    loop.x[k] = std::cos(0.2 * static_cast<double>(k));
    loop.y[k] = std::sin(0.2 * static_cast<double>(k));
  }
  const auto svg = vcg_loop_svg("loop", loop, 5, 30);
  CHECK(count(svg, "<polyline") == 1);
  CHECK(svg == vcg_loop_svg("loop", loop, 5, 30));
}

TEST_CASE("heatmap plot and escaping") {
  AccuracyMatrix m;
  for (LeadId i : kStandardLeads) {
    for (LeadId j : kStandardLeads) m.at(i, j) = {0.5, 0.7, 10, true};
  }
  const auto svg = heatmap_svg(m);
  CHECK(count(svg, "<rect") >= 144);
  CHECK(svg == heatmap_svg(m));
  CHECK(heatmap_svg(m, false) != svg);
  CHECK(xml_escape("<a & \"b\">") == "&lt;a &amp; &quot;b&quot;&gt;");
}

}
