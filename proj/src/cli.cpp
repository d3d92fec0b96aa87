#include "ecgsynth/cli.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "ecgsynth/config.hpp"
#include "ecgsynth/delineate.hpp"
#include "ecgsynth/forest.hpp"
#include "ecgsynth/metrics.hpp"
#include "ecgsynth/record_io.hpp"
#include "ecgsynth/simgen.hpp"
#include "ecgsynth/svg.hpp"
#include "ecgsynth/synth.hpp"
#include "ecgsynth/vcg.hpp"

namespace ecgsynth {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedHeader:
    case ErrorCode::UnsupportedFormat:
    case ErrorCode::TruncatedPayload:
    case ErrorCode::GainZero:
    case ErrorCode::OutOfRange:
    case ErrorCode::UnknownLead:
    case ErrorCode::IoFailure:
    case ErrorCode::InvalidConfig:
    case ErrorCode::ScheduleOutOfRange:
    case ErrorCode::ModelFormat:
    case ErrorCode::LeadMissing:
    case ErrorCode::MissingLead:
    case ErrorCode::InvalidCutoffs:
      return kExitInput;
    case ErrorCode::InsufficientBeats:
    case ErrorCode::InsufficientData:
      return kExitTraining;
    case ErrorCode::SignalTooShort:
    case ErrorCode::NoBeatsFound:
    case ErrorCode::ImplausibleBeat:
    case ErrorCode::MissingLandmark:
    case ErrorCode::EmptySequence:
    case ErrorCode::EmptyLibrary:
    case ErrorCode::DegenerateTarget:
    case ErrorCode::ModelMissing:
    case ErrorCode::LengthMismatch:
    case ErrorCode::WindowOutOfRange:
    case ErrorCode::ZeroVariance:
    case ErrorCode::RecordTooShort:
      return kExitSynthesis;
  }
  return kExitUnexpected;
}

namespace {

// Thrown by a command to leave with a specific status.
struct Exit {
  int code;
  std::string message;
};

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
}

// Canonical bundle: <dir>/<stem>.csv plus its JSON sidecar.
void write_bundle(const MultiLeadRecord& record, const fs::path& dir, const std::string& stem) {
  fs::create_directories(dir);
  write_record_csv(record, dir / (stem + ".csv"));
  write_text(dir / (stem + ".json"), header_json(record));
}

std::size_t count_beats(const MultiLeadRecord& record) {
  const std::size_t k = record.header().find(LeadId::II).value_or(0);
  try {
    return detect_r_peaks(record.lead(k), record.fs()).size();
  } catch (const Error&) {
    return 0;
  }
}

std::string fixed(double v, int digits) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(digits);
  s << v;
  return s.str();
}

std::string model_file_name(LeadId missing, LeadId current) {
  return std::string(lead_name(missing)) + "_from_" + std::string(lead_name(current)) + ".model";
}

MultiLeadRecord historic_window(const MultiLeadRecord& record, double window_s) {
  if (record.duration() + 1e-9 < window_s) {
    throw Error(ErrorCode::InsufficientBeats,
                "record lasts " + fixed(record.duration(), 3) + " s, training window is " + fixed(window_s, 3) + " s");
  }
  return slice_record(record, 0.0, window_s);
}

// The single lead to synthesize from: the named lead, or the only lead.
std::vector<double> pick_lead(const MultiLeadRecord& record, LeadId lead) {
  if (record.has_lead(lead)) {
    auto s = record.lead(lead);
    return {s.begin(), s.end()};
  }
  if (record.lead_count() == 1) {
    auto s = record.lead(std::size_t{0});
    return {s.begin(), s.end()};
  }
  throw Error(ErrorCode::LeadMissing, "input has no lead " + std::string(lead_name(lead)));
}

int cmd_ingest(const std::vector<std::string>& inputs, const std::string& format, const PipelineConfig& cfg,
               std::ostream& out) {
  for (const auto& input : inputs) {
    const fs::path path(input);
    const auto ext = path.extension().string();
    if (format == "wfdb" && ext != ".hea") {
      throw Error(ErrorCode::UnsupportedFormat, input + " is not a WFDB header");
    }
    if (format == "csv" && ext != ".csv" && ext != ".json") {
      throw Error(ErrorCode::UnsupportedFormat, input + " is not a CSV record");
    }
    const auto record = load_record(path);
    write_bundle(record, cfg.out_dir, record.header().name);
    out << record.header().name << ": leads=" << record.lead_count() << " fs=" << format_double(record.fs())
        << " duration_s=" << fixed(record.duration(), 3) << " beats=" << count_beats(record) << '\n';
  }
  return kExitOk;
}

int cmd_train(const std::string& input, LeadId current, const PipelineConfig& cfg, std::ostream& out) {
  const auto record = load_record(input);
  const auto historic = historic_window(record, cfg.synthesis.train_window_s);
  auto sc = cfg.synthesis;
  sc.forest.seed = cfg.seed;
  HistoricLibrary library(historic, sc);
  library.train_models(current, sc.forest, sc.train_window_s);

  fs::create_directories(cfg.out_dir);
  ojson summary;
  summary["record"] = record.header().name;
  summary["current_lead"] = lead_name(current);
  summary["train_window_s"] = sc.train_window_s;
  summary["seed"] = cfg.seed;
  ojson models = ojson::array();
  std::size_t trained = 0;
  for (LeadId missing : library.leads()) {
    if (missing == current) continue;
    ojson m;
    m["missing_lead"] = lead_name(missing);
    if (const auto* model = library.model(missing, current)) {
      const auto file = model_file_name(missing, current);
      std::ofstream f(cfg.out_dir / file, std::ios::binary);
      save_model(*model, f);
      if (!f) throw Error(ErrorCode::IoFailure, "cannot write " + file);
      m["file"] = file;
      m["samples"] = model->forest.samples;
      m["oob_rmse_ms"] = std::isfinite(model->forest.oob_rmse) ? ojson(model->forest.oob_rmse) : ojson(nullptr);
      ojson imp;
      const auto importance = feature_importance(*model);
      for (std::size_t k = 0; k < importance.size(); ++k) {
        imp[std::string(feature_name(static_cast<Feature>(k)))] = importance[k];
      }
      m["importance"] = imp;
      ++trained;
      out << lead_name(missing) << " from " << lead_name(current) << ": N=" << model->forest.samples
          << " oob_rmse_ms=" << fixed(model->forest.oob_rmse, 3) << '\n';
    } else {
      const auto it = library.failed_models().find({missing, current});
      m["error"] = it != library.failed_models().end() ? it->second : "not trained";
      out << lead_name(missing) << " from " << lead_name(current) << ": failed (" << m["error"].get<std::string>()
          << ")\n";
    }
    models.push_back(m);
  }
  summary["models"] = models;
  write_text(cfg.out_dir / "training_summary.json", summary.dump(2) + "\n");
  if (trained == 0) throw Error(ErrorCode::InsufficientBeats, "no lag model could be trained");
  return kExitOk;
}

int cmd_synth(const std::string& historic_path, const std::string& signal_path, LeadId current,
              const std::string& models_dir, const std::string& reference_path, bool svg,
              const PipelineConfig& cfg, std::ostream& out) {
  const auto historic_record = load_record(historic_path);
  const auto historic = historic_window(historic_record, cfg.synthesis.train_window_s);
  auto sc = cfg.synthesis;
  sc.forest.seed = cfg.seed;
  HistoricLibrary library(historic, sc);
  if (sc.lag_correction) {
    if (models_dir.empty()) {
      library.train_models(current, sc.forest, sc.train_window_s);
    } else {
      for (LeadId missing : library.leads()) {
        if (missing == current) continue;
        const auto file = fs::path(models_dir) / model_file_name(missing, current);
        if (!fs::exists(file)) continue;
        std::ifstream in(file, std::ios::binary);
        auto model = load_model(in);
        if (model.missing != missing || model.current != current) {
          throw Error(ErrorCode::ModelFormat, file.string() + " holds a different lead pair");
        }
        library.set_model(std::move(model));
      }
    }
  }

  const auto current_record = load_record(signal_path);
  auto signal = pick_lead(current_record, current);
  double fs_in = current_record.fs();
  if (std::abs(fs_in - library.fs()) > 1e-9) {
    signal = resample_signal(signal, fs_in, library.fs());
    fs_in = library.fs();
  }
  const auto result = synthesize_all(signal, fs_in, current, library, sc, current_record.start_time());
  const std::string stem = current_record.header().name + "_12lead";
  write_bundle(result.record, cfg.out_dir, stem);
  {
    std::ofstream prov(cfg.out_dir / "provenance.jsonl", std::ios::binary);
    write_provenance_jsonl(result, prov);
  }
  out << "synthesized " << result.leads.size() << " leads from " << lead_name(current) << " ("
      << fixed(result.record.duration(), 3) << " s) into " << (cfg.out_dir / (stem + ".csv")).string() << '\n';

  // The reference is cut to the span the current recording covers.
  std::optional<MultiLeadRecord> reference;
  if (!reference_path.empty()) {
    const auto full = load_record(reference_path);
    const double t0 = result.record.start_time() - full.start_time();
    reference = slice_record(full, t0, t0 + result.record.duration());
  }
  if (reference) {
    for (const auto& lead : result.leads) {
      if (!reference->has_lead(lead.lead)) continue;
      auto measured = preprocess_signal(reference->lead(lead.lead), reference->fs(), sc.preprocess);
      const std::size_t n = std::min(measured.size(), lead.samples.size());
      if (n < 2) continue;
      const std::span<const double> a(measured.data(), n), b(lead.samples.data(), n);
      out << lead_name(lead.lead) << ": r2=" << fixed(r_squared(a, b), 4) << " rho=" << fixed(pearson(a, b), 4)
          << '\n';
    }
  }
  if (svg) {
    const auto strip = static_cast<std::size_t>(std::lround(10.0 * fs_in));
    for (const auto& lead : result.leads) {
      std::vector<PlotSeries> series;
      const std::size_t n = std::min(strip, lead.samples.size());
      if (reference && reference->has_lead(lead.lead)) {
        auto measured = preprocess_signal(reference->lead(lead.lead), reference->fs(), sc.preprocess);
        measured.resize(std::min(n, measured.size()));
        series.push_back({"measured", measured, ""});
      }
      series.push_back({"synthesized", {lead.samples.begin(), lead.samples.begin() + static_cast<long>(n)}, ""});
      write_text(cfg.out_dir / ("strip_" + std::string(lead_name(lead.lead)) + ".svg"),
                 overlay_svg("lead " + std::string(lead_name(lead.lead)) + " from " + std::string(lead_name(current)),
                             series, fs_in));
    }
  }
  return kExitOk;
}

int cmd_eval(const std::string& input, bool compare, const std::vector<std::string>& leads,
             const PipelineConfig& cfg, std::ostream& out) {
  const auto record = load_record(input);
  auto protocol = cfg.protocol();
  if (!leads.empty()) {
    protocol.current_leads.clear();
    for (const auto& l : leads) protocol.current_leads.push_back(lead_from_name(l));
  }
  fs::create_directories(cfg.out_dir);
  if (compare) {
    const auto report = improvement_report(record, protocol);
    write_text(cfg.out_dir / "matrix.json", matrix_json(report.corrected));
    write_text(cfg.out_dir / "matrix.md", matrix_markdown(report.corrected));
    write_text(cfg.out_dir / "heatmap.svg", heatmap_svg(report.corrected));
    write_text(cfg.out_dir / "matrix_uncorrected.json", matrix_json(report.uncorrected));
    write_text(cfg.out_dir / "heatmap_uncorrected.svg", heatmap_svg(report.uncorrected));
    write_text(cfg.out_dir / "report.json", report_json(report));
    write_text(cfg.out_dir / "report.md", report_markdown(report));
    out << report.record << ": with correction r2=" << fixed(report.with_correction.mean_r2, 4)
        << " rho=" << fixed(report.with_correction.mean_rho, 4)
        << "; without r2=" << fixed(report.without_correction.mean_r2, 4)
        << " rho=" << fixed(report.without_correction.mean_rho, 4) << '\n';
  } else {
    const auto matrix = accuracy_matrix(record, protocol);
    write_text(cfg.out_dir / "matrix.json", matrix_json(matrix));
    write_text(cfg.out_dir / "matrix.md", matrix_markdown(matrix));
    write_text(cfg.out_dir / "heatmap.svg", heatmap_svg(matrix));
    const auto a = aggregate(matrix);
    out << matrix.record << ": r2=" << fixed(a.mean_r2, 4) << " (" << fixed(a.std_r2, 4)
        << ") rho=" << fixed(a.mean_rho, 4) << " (" << fixed(a.std_rho, 4) << ") over " << a.cells
        << " cells\n";
  }
  return kExitOk;
}

HandheldSession parse_schedule(const std::string& schedule_file, const std::vector<std::string>& segments,
                               double switch_gap_s) {
  HandheldSession session;
  session.switch_gap_s = switch_gap_s;
  if (!schedule_file.empty()) {
    try {
      const auto j = nlohmann::json::parse(read_text_file(schedule_file));
      session.switch_gap_s = j.value("switch_gap_s", switch_gap_s);
      for (const auto& s : j.at("segments")) {
        session.segments.push_back({lead_from_name(s.at("lead").get<std::string>()), s.at("t_start_s").get<double>(),
                                    s.at("t_end_s").get<double>()});
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::ScheduleOutOfRange, std::string("bad schedule: ") + e.what());
    }
  }
  // LEAD:START:END
  for (const auto& text : segments) {
    const auto a = text.find(':');
    const auto b = text.find(':', a == std::string::npos ? a : a + 1);
    if (a == std::string::npos || b == std::string::npos) {
      throw Error(ErrorCode::ScheduleOutOfRange, "segment '" + text + "' is not LEAD:START:END");
    }
    try {
      session.segments.push_back({lead_from_name(text.substr(0, a)), std::stod(text.substr(a + 1, b - a - 1)),
                                  std::stod(text.substr(b + 1))});
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::ScheduleOutOfRange, "segment '" + text + "' has bad times");
    }
  }
  return session;
}

std::string schedule_json(const HandheldSession& session, const std::vector<RecordedSegment>& recorded) {
  ojson j;
  j["switch_gap_s"] = session.switch_gap_s;
  ojson segs = ojson::array();
  for (std::size_t k = 0; k < recorded.size(); ++k) {
    const auto& r = recorded[k];
    ojson s;
    s["lead"] = lead_name(r.segment.lead);
    s["t_start_s"] = r.segment.t_start_s;
    s["t_end_s"] = r.segment.t_end_s;
    s["file"] = "segment_" + std::to_string(k) + "_" + std::string(lead_name(r.segment.lead)) + ".csv";
    s["beats"] = r.beat_count;
    segs.push_back(s);
  }
  j["segments"] = segs;
  return j.dump(2) + "\n";
}

int cmd_simulate(const std::string& input, bool use_simgen, double duration_s, double sync_s,
                 const std::string& schedule_file, const std::vector<std::string>& segments, double switch_gap_s,
                 const PipelineConfig& cfg, std::ostream& out) {
  auto session = parse_schedule(schedule_file, segments, switch_gap_s);
  if (session.segments.empty()) throw Error(ErrorCode::ScheduleOutOfRange, "empty schedule");
  std::optional<MultiLeadRecord> record;
  if (use_simgen) {
    const auto sim = generate_synthetic_record(lagged_twelve_lead_config(duration_s, sync_s), cfg.seed);
    write_bundle(sim.record, cfg.out_dir, sim.record.header().name);
    write_text(cfg.out_dir / "truth.json", truth_json(sim.truth));
    record = sim.record;
  } else {
    if (input.empty()) throw Error(ErrorCode::IoFailure, "simulate needs a record or --simgen");
    record = load_record(input);
  }
  const auto recorded = simulate_handheld_session(*record, session);
  for (std::size_t k = 0; k < recorded.size(); ++k) {
    const auto& r = recorded[k];
    write_bundle(r.signal, cfg.out_dir, "segment_" + std::to_string(k) + "_" + std::string(lead_name(r.segment.lead)));
    out << "segment " << k << ": " << lead_name(r.segment.lead) << " [" << fixed(r.segment.t_start_s, 3) << ", "
        << fixed(r.segment.t_end_s, 3) << ") s, kappa=" << r.beat_count << '\n';
  }
  write_text(cfg.out_dir / "schedule.json", schedule_json(session, recorded));
  return kExitOk;
}

// Samples of `s` within [t0, t1) seconds on the record's own clock (which
// starts at `start_s`); t1 = 0 runs to the end.
std::span<const double> window(std::span<const double> s, double fs, double start_s, double t0, double t1) {
  auto index = [&](double t) {
    return std::min(s.size(), static_cast<std::size_t>(std::max(0.0, std::round((t - start_s) * fs))));
  };
  const auto a = index(t0);
  const auto b = std::max(a, t1 > 0.0 ? index(t1) : s.size());
  return s.subspan(a, b - a);
}

int cmd_plot(const std::string& kind, const std::vector<std::string>& inputs, const std::string& lead_text,
             double t0, double t1, bool r2, const std::string& output, std::ostream& out) {
  if (inputs.empty()) throw Error(ErrorCode::IoFailure, "plot needs at least one input");
  std::string svg;
  if (kind == "overlay") {
    const LeadId lead = lead_from_name(lead_text);
    std::vector<PlotSeries> series;
    double fs = 0.0;
    std::optional<double> axis_start;
    for (const auto& input : inputs) {
      const auto record = load_record(input);
      if (fs == 0.0) fs = record.fs();
      if (std::abs(record.fs() - fs) > 1e-9) throw Error(ErrorCode::InvalidConfig, "inputs differ in sampling rate");
      const double from = std::max(t0, record.start_time());
      if (!axis_start) axis_start = from;
      auto s = window(record.has_lead(lead) ? record.lead(lead) : record.lead(std::size_t{0}), fs,
                      record.start_time(), from, t1);
      series.push_back({fs::path(input).stem().string(), {s.begin(), s.end()}, ""});
    }
    svg = overlay_svg("lead " + std::string(lead_name(lead)), series, fs, axis_start.value_or(0.0));
  } else if (kind == "vcg") {
    const auto record = load_record(inputs.front());
    const auto vcg = inverse_dower(record);
    auto index = [&](double t) {
      return static_cast<std::size_t>(std::max(0.0, std::round((t - record.start_time()) * vcg.fs)));
    };
    const auto a = index(t0);
    const auto b = t1 > 0.0 ? std::max<std::size_t>(index(t1), 1) : 0;
    svg = vcg_loop_svg(record.header().name + " frontal VCG", vcg, std::min(a, vcg.size()), std::min(b, vcg.size()));
  } else if (kind == "heatmap") {
    svg = heatmap_svg(parse_matrix_json(read_text_file(inputs.front())), !r2);
  } else {
    throw Error(ErrorCode::InvalidConfig, "unknown plot kind '" + kind + "'");
  }
  write_text(output, svg);
  out << "wrote " << output << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Synchronous 12-lead ECG synthesis from a single recorded lead"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "ecgsynth 1.0");

  std::string config_file;
  std::map<std::string, std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<double> train_window;
  bool no_lag = false;
  std::string out_dir;
  app.add_option("--config", config_file, "Configuration file ([section] key = value)");
  app.add_option("--seed", seed, "Seed for every random choice");
  app.add_option("--train-window-s", train_window, "Training window in seconds (default 60)");
  app.add_flag("--no-lag-correction", no_lag, "Synthesize without inter-lead lag correction");
  app.add_option("--out", out_dir, "Output directory");
  for (const auto& key : config_keys()) {
    app.add_option_function<std::string>(
           "--" + key, [&overrides, key](const std::string& v) { overrides[key] = v; }, "Config override")
        ->group("Config overrides");
  }

  std::string current_lead = "I";
  auto* ingest = app.add_subcommand("ingest", "Convert records to canonical CSV + JSON bundles");
  std::vector<std::string> ingest_inputs;
  std::string ingest_format = "auto";
  ingest->add_option("inputs", ingest_inputs, "WFDB .hea, JSON sidecar or CSV files")->required();
  ingest->add_option("--format", ingest_format, "auto, wfdb or csv")
      ->check(CLI::IsMember({"auto", "wfdb", "csv"}));

  auto* train = app.add_subcommand("train", "Train lag models for every lead against the current lead");
  std::string train_input;
  train->add_option("record", train_input, "Synchronous 12-lead record")->required();
  train->add_option("--current-lead", current_lead, "Lead recorded by the handheld device");

  auto* synth = app.add_subcommand("synth", "Synthesize the missing leads of a single-lead recording");
  std::string synth_historic, synth_signal, synth_models, synth_reference;
  bool synth_svg = false;
  synth->add_option("historic", synth_historic, "Historic synchronous 12-lead record")->required();
  synth->add_option("signal", synth_signal, "Current single-lead recording")->required();
  synth->add_option("--current-lead", current_lead, "Lead held by the current recording");
  synth->add_option("--models", synth_models, "Directory written by 'train' (trains in place when absent)");
  synth->add_option("--reference", synth_reference, "Measured 12-lead record to score against");
  synth->add_flag("--svg", synth_svg, "Write 10 s strip plots per lead");

  auto* eval = app.add_subcommand("eval", "Accuracy matrix of a synchronous 12-lead record");
  std::string eval_input;
  bool eval_compare = false;
  std::vector<std::string> eval_leads;
  eval->add_option("record", eval_input, "Synchronous 12-lead record")->required();
  eval->add_flag("--compare", eval_compare, "Also evaluate without lag correction and report the change");
  eval->add_option("--current-lead", eval_leads, "Restrict the current leads (repeatable)");

  auto* simulate = app.add_subcommand("simulate", "Cut a record into a sequential single-lead session");
  std::string sim_input, sim_schedule;
  std::vector<std::string> sim_segments;
  bool sim_simgen = false;
  double sim_duration = 120.0, sim_sync = 60.0, sim_gap = 0.0;
  simulate->add_option("record", sim_input, "Source record (omit with --simgen)");
  simulate->add_flag("--simgen", sim_simgen, "Generate a lagged synthetic 12-lead record first");
  simulate->add_option("--duration-s", sim_duration, "Duration of the generated record");
  simulate->add_option("--sync-s", sim_sync, "Time at which generated lags are zero");
  simulate->add_option("--schedule", sim_schedule, "Schedule JSON file");
  simulate->add_option("--segment", sim_segments, "LEAD:START:END in seconds (repeatable)");
  simulate->add_option("--switch-gap-s", sim_gap, "Minimum gap between segments");

  auto* plot = app.add_subcommand("plot", "Render SVG plots");
  std::string plot_kind, plot_lead = "II", plot_output;
  std::vector<std::string> plot_inputs;
  double plot_t0 = 0.0, plot_t1 = 0.0;
  bool plot_r2 = false;
  plot->add_option("kind", plot_kind, "overlay, vcg or heatmap")->required();
  plot->add_option("inputs", plot_inputs, "Records (overlay, vcg) or matrix JSON (heatmap)")->required();
  plot->add_option("--lead", plot_lead, "Lead to overlay");
  plot->add_option("--start-s", plot_t0, "Window start");
  plot->add_option("--end-s", plot_t1, "Window end (0: to the end)");
  plot->add_flag("--r2", plot_r2, "Heatmap of R2 instead of rho");
  plot->add_option("-o,--output", plot_output, "SVG file")->required();

  for (auto* sub : {ingest, train, synth, eval, simulate, plot}) sub->fallthrough();

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    PipelineConfig cfg;
    if (!config_file.empty()) apply_config_text(cfg, read_text_file(config_file));
    for (const auto& [key, value] : overrides) set_config_value(cfg, key, value);
    if (seed) cfg.seed = *seed;
    if (train_window) cfg.synthesis.train_window_s = *train_window;
    if (no_lag) cfg.synthesis.lag_correction = false;
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    validate_pipeline_config(cfg);

    if (ingest->parsed()) return cmd_ingest(ingest_inputs, ingest_format, cfg, out);
    if (train->parsed()) {
      try {
        return cmd_train(train_input, lead_from_name(current_lead), cfg, out);
      } catch (const Error& e) {
        // Beats that cannot be found in the training record are a training failure.
        const int code = exit_code_for(e.code());
        throw Exit{code == kExitSynthesis ? kExitTraining : code, e.what()};
      }
    }
    if (synth->parsed()) {
      return cmd_synth(synth_historic, synth_signal, lead_from_name(current_lead), synth_models, synth_reference,
                       synth_svg, cfg, out);
    }
    if (eval->parsed()) return cmd_eval(eval_input, eval_compare, eval_leads, cfg, out);
    if (simulate->parsed()) {
      return cmd_simulate(sim_input, sim_simgen, sim_duration, sim_sync, sim_schedule, sim_segments, sim_gap, cfg,
                          out);
    }
    if (plot->parsed()) {
      try {
        return cmd_plot(plot_kind, plot_inputs, plot_lead, plot_t0, plot_t1, plot_r2, plot_output, out);
      } catch (const Error& e) {
        throw Exit{kExitInput, e.what()};
      }
    }
  } catch (const Exit& e) {
    err << "error: " << e.message << '\n';
    return e.code;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    err << "unexpected error: " << e.what() << '\n';
    return kExitUnexpected;
  }
  return kExitUnexpected;
}

}  // namespace ecgsynth
