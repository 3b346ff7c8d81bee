#include "calib/cli.hpp"

#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "calib/calibrate.hpp"
#include "calib/error.hpp"
#include "calib/io.hpp"
#include "calib/metrics.hpp"
#include "calib/pipeline.hpp"
#include "calib/refmodel.hpp"
#include "calib/report.hpp"
#include "calib/synth.hpp"

namespace calib {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct MetricOptions {
  int bins = 10;
  int ranges = 10;
  double threshold = 0.01;
  std::string ace_variant = "standard";
  std::string averaging = "macro";
  std::string pooling = "pooled";

  void add_to(CLI::App* cmd) {
    cmd->add_option("--bins", bins, "Fixed-width bins B")->capture_default_str();
    cmd->add_option("--ranges", ranges, "Adaptive ranges R")->capture_default_str();
    cmd->add_option("--threshold", threshold, "TACE probability threshold")->capture_default_str();
    cmd->add_option("--ace-variant", ace_variant, "standard | as_printed")->capture_default_str();
    cmd->add_option("--average", averaging, "macro | micro")->capture_default_str();
    cmd->add_option("--pooling", pooling, "pooled | per_fold")->capture_default_str();
  }

  MetricConfig config() const {
    MetricConfig c;
    if (bins < 1) throw ConfigError(fmt::format("--bins must be >= 1, got {}", bins));
    if (ranges < 1) throw ConfigError(fmt::format("--ranges must be >= 1, got {}", ranges));
    if (!(threshold >= 0.0 && threshold < 1.0)) throw ConfigError("--threshold must lie in [0, 1)");
    c.fixed_bins = bins;
    c.adaptive_ranges = ranges;
    c.tace_threshold = threshold;
    const auto v = parse_ace_variant(ace_variant);
    const auto a = parse_averaging(averaging);
    const auto p = parse_pooling(pooling);
    if (!v) throw ConfigError(fmt::format("unknown ACE variant '{}'", ace_variant));
    if (!a) throw ConfigError(fmt::format("unknown averaging '{}'", averaging));
    if (!p) throw ConfigError(fmt::format("unknown pooling '{}'", pooling));
    c.ace_variant = *v;
    c.averaging = *a;
    c.pooling = *p;
    return c;
  }
};

struct Context {
  std::ostream& out;
  std::ostream& err;
  std::uint64_t seed = 0;
};

// Writes to `path`, or to standard output when no path was given.
void emit(Context& ctx, const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    ctx.out << text;
  } else {
    io::write_file_atomic(path, text);
  }
}

PredictionSet load_valid(Context& ctx, const std::string& path) {
  auto set = io::read_predictions(fs::path(path));
  const auto violations = validate(set);
  if (!violations.empty()) {
    for (const auto& v : violations) {
      if (v.row == static_cast<std::size_t>(-1)) {
        ctx.err << fmt::format("{}: {}\n", path, v.rule);
      } else {
        // Data rows start on line 2.
        ctx.err << fmt::format("{}: line {}: {}\n", path, v.row + 2, v.rule);
      }
    }
    throw ValidationError(fmt::format("{} violation(s) in {}", violations.size(), path));
  }
  return renormalized(std::move(set));
}

PredictionSet pick_split(const PredictionSet& set, const std::string& split) {
  if (split == "all") return set;
  const auto s = parse_split(split);
  if (!s) throw ConfigError(fmt::format("unknown split '{}'", split));
  if (!set.has_split(*s)) throw MissingSplitError(fmt::format("no records in split '{}'", split));
  return select_split(set, *s);
}

Provenance provenance_for(const std::string& path, std::string command, std::string split) {
  Provenance p;
  p.input_sha256[fs::path(path).filename().string()] = io::sha256_file(path);
  p.command = std::move(command);
  p.split = std::move(split);
  return p;
}

std::string optional_display(const std::optional<double>& v) { return v ? display2(*v) : std::string("n/a"); }

void metric_row(std::ostream& out, std::string_view name, const MetricReport& m) {
  out << fmt::format("{:<28} {:>6.1f} {:>6} {:>6} {:>6} {:>6} {:>6} {:>6}\n", name, 100.0 * m.accuracy, display2(m.ece),
                     display2(m.mce), display2(m.oe), display2(m.sce), optional_display(m.ace),
                     optional_display(m.tace));
}

void metric_header(std::ostream& out) {
  out << fmt::format("{:<28} {:>6} {:>6} {:>6} {:>6} {:>6} {:>6} {:>6}\n", "method", "ACC", "ECE", "MCE", "OE", "SCE",
                     "ACE", "TACE");
}

// evaluate ------------------------------------------------------------------

struct EvaluateOptions {
  std::string input;
  MetricOptions metrics;
  std::string split = "test";
  std::string model = "model";
  std::string dataset = "dataset";
  std::string output;
  std::string svg;
};

int cmd_evaluate(Context& ctx, const EvaluateOptions& o) {
  const auto config = o.metrics.config();
  const auto set = pick_split(load_valid(ctx, o.input), o.split);
  const auto report = build_report(set, config, o.model, o.dataset, provenance_for(o.input, "evaluate", o.split));
  emit(ctx, o.output, io::dump_json(to_json(report)));
  if (!o.svg.empty()) emit(ctx, o.svg, render_svg(report.diagram, fmt::format("{} / {}", o.model, o.dataset)));
  for (const auto& w : report.metrics.warnings) ctx.err << "warning: " << w << '\n';
  if (!o.output.empty()) {
    metric_header(ctx.out);
    metric_row(ctx.out, o.model, report.metrics);
  }
  return 0;
}

// calibrate -----------------------------------------------------------------

struct CalibrateOptions {
  std::string input;
  MetricOptions metrics;
  std::optional<double> temperature;
  bool per_fold = false;
  double t_min = 0.05;
  double t_max = 10.0;
  double tolerance = 1e-4;
  std::string model = "model";
  std::string dataset = "dataset";
  std::string output;
  std::string predictions_out;
};

int cmd_calibrate(Context& ctx, const CalibrateOptions& o) {
  const auto config = o.metrics.config();
  const auto set = load_valid(ctx, o.input);
  if (!set.has_logits()) {
    throw MissingSplitError("temperature scaling needs logit columns; the file only has probabilities");
  }
  if (!set.has_split(Split::test)) throw MissingSplitError("no test split to evaluate");
  if (o.temperature && !(*o.temperature > 0.0)) throw ConfigError("--temperature must be positive");
  if (!o.temperature && !set.has_split(Split::validation)) {
    throw MissingSplitError("no validation split to fit the temperature on");
  }
  if (!(o.t_min > 0.0 && o.t_min < o.t_max) || !(o.tolerance > 0.0)) throw ConfigError("invalid temperature search");
  const TemperatureSearch search{o.t_min, o.t_max, o.tolerance};

  const auto test = select_split(set, Split::test);
  json j;
  j["schema"] = "calibkit.calibration/1";
  PredictionSet scaled_all;
  std::string label;
  if (o.temperature) {
    Temperature t;
    t.t = *o.temperature;
    t.t_min = t.t_max = t.t;
    t.fit_nll = set.has_split(Split::validation) ? mean_nll(select_split(set, Split::validation), t.t) : 0.0;
    j["mode"] = "fixed";
    j["temperature"] = to_json(t);
    scaled_all = apply_temperature(set, t);
    label = fmt::format("temperature scaling (t={:.4g})", t.t);
  } else if (o.per_fold) {
    const auto temps = fit_temperature_per_fold(set, search);
    json per = json::object();
    for (const auto& [fold, t] : temps) {
      per[std::to_string(fold)] = to_json(t);
      if (!t.warning.empty()) ctx.err << fmt::format("warning: fold {}: {}\n", fold, t.warning);
    }
    j["mode"] = "per_fold";
    j["temperatures"] = per;
    scaled_all = apply_temperature_per_fold(set, temps);
    label = "temperature scaling (per fold)";
  } else {
    const auto t = fit_temperature(select_split(set, Split::validation), search);
    if (!t.warning.empty()) ctx.err << "warning: " << t.warning << '\n';
    j["mode"] = "global";
    j["temperature"] = to_json(t);
    scaled_all = apply_temperature(set, t);
    label = fmt::format("temperature scaling (t={:.4g})", t.t);
  }
  const auto scaled = select_split(scaled_all, Split::test);

  const auto prov = provenance_for(o.input, "calibrate", "test");
  const auto before = build_report(test, config, o.model, o.dataset, prov);
  const auto after = build_report(scaled, config, o.model + " (temperature scaling)", o.dataset, prov);
  j["before"] = to_json(before);
  j["after"] = to_json(after);
  emit(ctx, o.output, io::dump_json(j));
  if (!o.predictions_out.empty()) io::write_file_atomic(o.predictions_out, io::predictions_csv(scaled_all));

  std::ostream& table = o.output.empty() ? ctx.err : ctx.out;
  metric_header(table);
  metric_row(table, o.model, before.metrics);
  metric_row(table, label, after.metrics);
  return 0;
}

// score ---------------------------------------------------------------------

struct ScoreOptions {
  std::string input;
  double alpha = 0.6;
  std::string output;
};

int cmd_score(Context& ctx, const ScoreOptions& o) {
  if (!(o.alpha >= 0.0 && o.alpha <= 1.0)) throw ConfigError("--alpha must lie in [0, 1]");
  const auto table = io::read_metrics_table(fs::path(o.input));
  for (const auto& row : table.rows) {
    if (!(row.accuracy > 0.0)) throw ValidationError(fmt::format("model {}: accuracy must be positive", row.name));
  }
  const auto scores = balance_table(table.rows, table.metrics, o.alpha);
  json j = to_json(scores);
  j["schema"] = "calibkit.balance/1";
  emit(ctx, o.output, io::dump_json(j));

  std::ostream& out = o.output.empty() ? ctx.err : ctx.out;
  out << fmt::format("{:<16}", "model");
  for (const auto& m : scores.metrics) out << fmt::format(" {:>6}", m);
  out << '\n';
  for (std::size_t i = 0; i < scores.models.size(); ++i) {
    out << fmt::format("{:<16}", scores.models[i]);
    for (double s : scores.scores[i]) out << fmt::format(" {:>6}", display2(s));
    out << '\n';
  }
  return 0;
}

// preprocess ----------------------------------------------------------------

struct PreprocessOptions {
  std::string manifest;
  std::string profile = "MA";
  std::string out_dir;
  std::string format = "csv";
  std::optional<double> window_s;
  std::optional<double> step_s;
  std::string normalize;
};

int cmd_preprocess(Context& ctx, const PreprocessOptions& o) {
  auto spec = pipeline_profile(o.profile);
  if (!spec) throw ConfigError(fmt::format("unknown profile '{}' (MA, UFFT or custom)", o.profile));
  if (o.format != "csv" && o.format != "binary") throw ConfigError(fmt::format("unknown format '{}'", o.format));
  const auto manifest = io::read_manifest(o.manifest);
  if (spec->profile == "custom") spec = io::apply_pipeline_overrides(*spec, manifest.pipeline);
  if (o.window_s) spec->window_s = *o.window_s;
  if (o.step_s) spec->step_s = *o.step_s;
  if (!o.normalize.empty()) {
    const auto mode = parse_normalize_mode(o.normalize);
    if (!mode) throw ConfigError(fmt::format("unknown normalization '{}'", o.normalize));
    spec->normalize = *mode;
  }
  if (!(spec->window_s > 0.0) || !(spec->step_s > 0.0)) throw ConfigError("window and step must be positive");
  try {
    spec->filter.check(manifest.recordings.empty() ? 1.0 : manifest.recordings.front().fs);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  std::vector<std::string> log;
  const auto epochs = run_pipeline(manifest.recordings, *spec, manifest.optics, manifest.task_duration_s, &log);
  io::write_epochs(o.out_dir, epochs, o.format == "csv" ? io::EpochFormat::csv : io::EpochFormat::binary);
  for (const auto& line : log) ctx.err << line << '\n';
  ctx.out << fmt::format("{} windows ({} channels x {} samples) from {} trials -> {}\n", epochs.windows.size(),
                         epochs.num_channels, epochs.num_samples, trial_keys(epochs).size(), o.out_dir);
  return 0;
}

// train-ref -----------------------------------------------------------------

struct TrainOptions {
  std::string epochs_dir;
  int folds = 5;
  TrainConfig train;
  bool stratified = false;
  std::string output;
  std::string models;
};

int cmd_train_ref(Context& ctx, const TrainOptions& o) {
  if (o.folds < 2) throw ConfigError("--folds must be >= 2");
  if (!(o.train.lambda >= 0.0) || o.train.epochs < 0) throw ConfigError("invalid training hyperparameters");
  if (!(o.train.validation_fraction >= 0.0 && o.train.validation_fraction < 1.0)) {
    throw ConfigError("--validation-fraction must lie in [0, 1)");
  }
  const auto seed = ctx.seed;
  const auto epochs = io::read_epochs(o.epochs_dir);
  std::vector<int> labels;
  const auto trials = trial_keys(epochs, &labels);
  if (trials.size() < static_cast<std::size_t>(o.folds)) {
    throw ValidationError(fmt::format("{} trials cannot fill {} folds", trials.size(), o.folds));
  }
  const auto plan = o.stratified ? make_stratified_folds(trials, labels, o.folds, seed) : make_folds(trials, o.folds, seed);
  const auto results = cross_validate(epochs, plan, o.train);

  json folds = json::array();
  for (const auto& r : results) {
    std::set<std::string> test(r.test_trials.begin(), r.test_trials.end());
    for (const auto& t : r.train_trials) {
      if (test.count(t)) throw std::logic_error(fmt::format("trial {} leaked into fold {} training", t, r.fold));
    }
    for (const auto& t : r.validation_trials) {
      if (test.count(t)) throw std::logic_error(fmt::format("trial {} leaked into fold {} validation", t, r.fold));
    }
    folds.push_back({{"fold", r.fold},
                     {"train_trials", r.train_trials},
                     {"validation_trials", r.validation_trials},
                     {"test_trials", r.test_trials},
                     {"model", to_json(r.model)}});
  }
  const auto predictions = merge_predictions(results);
  emit(ctx, o.output, io::predictions_csv(predictions));
  if (!o.models.empty()) {
    json j = {{"schema", "calibkit.refmodel/1"},
              {"seed", seed},
              {"k", plan.k},
              {"stratified", o.stratified},
              {"lambda", o.train.lambda},
              {"epochs", o.train.epochs},
              {"validation_fraction", o.train.validation_fraction},
              {"channel_names", epochs.channel_names},
              {"num_samples", epochs.num_samples},
              {"folds", folds}};
    io::write_file_atomic(o.models, io::dump_json(j));
  }
  if (!o.output.empty()) {
    std::size_t correct = 0, n = 0;
    for (const auto& r : predictions.records) {
      if (r.split != Split::test) continue;
      ++n;
      correct += derive(r).correct ? 1 : 0;
    }
    ctx.out << fmt::format("{} folds, {} test windows, accuracy {:.1f}%\n", plan.k, n,
                           n ? 100.0 * static_cast<double>(correct) / static_cast<double>(n) : 0.0);
  }
  return 0;
}

// synth ---------------------------------------------------------------------

struct SynthOptions {
  std::string kind = "predictions";
  std::string output;
  // predictions
  std::size_t n = 1000;
  int k = 2;
  double beta = 1.0;
  std::string law = "normal";
  std::vector<double> point_logits;
  double validation_fraction = 0.0;
  int folds = 1;
  // recordings
  RecordingSynthSpec rec;
  bool omit_optics = false;
};

int cmd_synth(Context& ctx, const SynthOptions& o) {
  const auto seed = ctx.seed;
  if (o.kind == "predictions") {
    SynthSpec spec;
    spec.n = o.n;
    spec.k = o.k;
    spec.beta = o.beta;
    const auto law = parse_logit_law(o.law);
    if (!law) throw ConfigError(fmt::format("unknown logit law '{}'", o.law));
    spec.law = *law;
    spec.point_logits = o.point_logits;
    spec.seed = seed;
    spec.validation_fraction = o.validation_fraction;
    spec.folds = o.folds;
    try {
      spec.check();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    emit(ctx, o.output, io::predictions_csv(generate(spec)));
    return 0;
  }
  if (o.kind != "recording") throw ConfigError(fmt::format("unknown synth kind '{}'", o.kind));
  if (o.output.empty()) throw ConfigError("synth --kind recording needs -o DIR");
  auto spec = o.rec;
  spec.seed = seed;
  const auto recordings = generate_recordings(spec);
  const fs::path dir = o.output;
  std::vector<std::string> files;
  for (const auto& r : recordings) {
    files.push_back(r.subject + ".csv");
    io::write_recording_csv(dir / files.back(), r);
  }
  std::optional<BeerLambertConfig> optics;
  if (spec.wavelengths && !o.omit_optics) optics = spec.optics;
  io::write_manifest(dir / "manifest.json", files, recordings, spec.task_s, optics);
  ctx.out << fmt::format("{} recordings -> {}\n", recordings.size(), (dir / "manifest.json").string());
  return 0;
}

// render --------------------------------------------------------------------

struct RenderOptions {
  std::string report;
  std::string output;
  std::string title;
};

int cmd_render(Context& ctx, const RenderOptions& o) {
  json j;
  try {
    j = json::parse(io::read_file(o.report));
  } catch (const json::exception& e) {
    throw ParseError(fmt::format("{}: {}", o.report, e.what()));
  }
  if (const auto problems = check_report_schema(j); !problems.empty()) {
    for (const auto& p : problems) ctx.err << o.report << ": " << p << '\n';
    throw ValidationError(fmt::format("{} is not a valid evaluation report", o.report));
  }
  const auto report = report_from_json(j);
  const auto title = o.title.empty() ? fmt::format("{} / {}", report.model, report.dataset) : o.title;
  emit(ctx, o.output, render_svg(report.diagram, title));
  return 0;
}

int exit_code_for(const CLI::ParseError& e) {
  if (e.get_exit_code() == 0) return 0;
  if (dynamic_cast<const CLI::FileError*>(&e) || dynamic_cast<const CLI::ConfigError*>(&e)) {
    return static_cast<int>(ExitCode::config);
  }
  return static_cast<int>(ExitCode::parse);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Context ctx{out, err};

  CLI::App app{"Calibration metrics, temperature scaling and fNIRS preprocessing", "calibkit"};
  app.set_config("--config", "", "TOML config file; command-line flags take precedence")->envname(kConfigEnv);
  app.set_version_flag("--version", std::string(kToolVersion));
  app.add_option("--seed", ctx.seed, "Seed for every random stage")->capture_default_str();
  app.require_subcommand(1, 1);
  app.fallthrough();

  EvaluateOptions ev;
  auto* evaluate = app.add_subcommand("evaluate", "Compute calibration and accuracy metrics for a prediction file");
  evaluate->add_option("predictions", ev.input, "Prediction CSV")->required();
  ev.metrics.add_to(evaluate);
  evaluate->add_option("--split", ev.split, "test | validation | train | all")->capture_default_str();
  evaluate->add_option("--model", ev.model, "Model name recorded in the report");
  evaluate->add_option("--dataset", ev.dataset, "Dataset name recorded in the report");
  evaluate->add_option("-o,--output", ev.output, "Report JSON (default: stdout)");
  evaluate->add_option("--svg", ev.svg, "Also write the reliability diagram");

  CalibrateOptions ca;
  auto* calibrate = app.add_subcommand("calibrate", "Fit a temperature on the validation split and rescore the test split");
  calibrate->add_option("predictions", ca.input, "Prediction CSV with logits and splits")->required();
  ca.metrics.add_to(calibrate);
  calibrate->add_option("--temperature", ca.temperature, "Use this temperature instead of fitting one");
  calibrate->add_flag("--per-fold", ca.per_fold, "Fit one temperature per fold");
  calibrate->add_option("--t-min", ca.t_min, "Search lower bound")->capture_default_str();
  calibrate->add_option("--t-max", ca.t_max, "Search upper bound")->capture_default_str();
  calibrate->add_option("--tolerance", ca.tolerance, "Search tolerance")->capture_default_str();
  calibrate->add_option("--model", ca.model, "Model name recorded in the report");
  calibrate->add_option("--dataset", ca.dataset, "Dataset name recorded in the report");
  calibrate->add_option("-o,--output", ca.output, "Before/after JSON (default: stdout)");
  calibrate->add_option("--predictions-out", ca.predictions_out, "Write rescaled predictions as CSV");

  ScoreOptions sc;
  auto* score = app.add_subcommand("score", "Balance scores from a table of accuracy and calibration metrics");
  score->add_option("table", sc.input, "CSV: model,accuracy,<metric>...")->required();
  score->add_option("--alpha", sc.alpha, "Weight of calibration against accuracy")->capture_default_str();
  score->add_option("-o,--output", sc.output, "Balance table JSON (default: stdout)");

  PreprocessOptions pp;
  auto* preprocess = app.add_subcommand("preprocess", "Filter, correct and window recordings into an epoch set");
  preprocess->add_option("manifest", pp.manifest, "Recording manifest JSON")->required();
  preprocess->add_option("--profile", pp.profile, "MA | UFFT | custom")->capture_default_str();
  preprocess->add_option("-o,--output", pp.out_dir, "Output directory")->required();
  preprocess->add_option("--format", pp.format, "csv | binary")->capture_default_str();
  preprocess->add_option("--window", pp.window_s, "Window length in seconds");
  preprocess->add_option("--step", pp.step_s, "Window step in seconds");
  preprocess->add_option("--normalize", pp.normalize, "window_zscore | recording_minmax");

  TrainOptions tr;
  auto* train = app.add_subcommand("train-ref", "Trial-wise cross-validation of the softmax-regression reference model");
  train->add_option("epoch_dir", tr.epochs_dir, "Epoch directory written by preprocess")->required();
  train->add_option("--folds", tr.folds, "Number of folds")->capture_default_str();
  train->add_option("--lambda", tr.train.lambda, "L2 weight decay")->capture_default_str();
  train->add_option("--epochs", tr.train.epochs, "Gradient-descent epochs")->capture_default_str();
  train->add_option("--validation-fraction", tr.train.validation_fraction, "Training trials held out per fold")
      ->capture_default_str();
  train->add_flag("--stratified", tr.stratified, "Keep class proportions similar across folds");
  train->add_option("-o,--output", tr.output, "Prediction CSV (default: stdout)");
  train->add_option("--models", tr.models, "Write fitted models and fold plan as JSON");

  SynthOptions sy;
  auto* synth = app.add_subcommand("synth", "Generate synthetic predictions or recordings");
  synth->add_option("--kind", sy.kind, "predictions | recording")->capture_default_str();
  synth->add_option("-o,--output", sy.output, "Prediction CSV, or output directory for recordings");
  synth->add_option("--n", sy.n, "Records")->capture_default_str();
  synth->add_option("--k", sy.k, "Classes")->capture_default_str();
  synth->add_option("--beta", sy.beta, "Logit multiplier (1 = calibrated)")->capture_default_str();
  synth->add_option("--law", sy.law, "normal | point")->capture_default_str();
  synth->add_option("--point-logits", sy.point_logits, "Base logits for the point law")->delimiter(',');
  synth->add_option("--validation-fraction", sy.validation_fraction, "Leading records tagged validation")
      ->capture_default_str();
  synth->add_option("--folds", sy.folds, "Fold ids assigned round-robin")->capture_default_str();
  synth->add_option("--subjects", sy.rec.subjects, "Recordings")->capture_default_str();
  synth->add_option("--trials", sy.rec.trials_per_subject, "Trials per recording")->capture_default_str();
  synth->add_option("--pairs", sy.rec.optode_pairs, "Optode pairs")->capture_default_str();
  synth->add_option("--fs", sy.rec.fs, "Sampling rate in Hz")->capture_default_str();
  synth->add_option("--task", sy.rec.task_s, "Task duration in seconds")->capture_default_str();
  synth->add_option("--amplitude", sy.rec.amplitude, "Response amplitude")->capture_default_str();
  synth->add_option("--noise", sy.rec.noise, "Noise standard deviation")->capture_default_str();
  synth->add_flag("--wavelengths", sy.rec.wavelengths, "Emit optical density instead of HbO/HbR");
  synth->add_flag("--omit-optics", sy.omit_optics, "Leave the extinction table out of the manifest");

  RenderOptions re;
  auto* render = app.add_subcommand("render", "Render the reliability diagram of a report as SVG");
  render->add_option("report", re.report, "Report JSON written by evaluate")->required();
  render->add_option("-o,--output", re.output, "SVG file (default: stdout)");
  render->add_option("--title", re.title, "Diagram title");

  std::vector<std::string> argv_storage;
  argv_storage.reserve(args.size() + 1);
  argv_storage.emplace_back("calibkit");
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_storage) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = exit_code_for(e);
    if (code == 0) {
      app.exit(e, out, err);
    } else {
      err << "error: " << e.what() << '\n';
    }
    return code;
  }

  try {
    if (*evaluate) return cmd_evaluate(ctx, ev);
    if (*calibrate) return cmd_calibrate(ctx, ca);
    if (*score) return cmd_score(ctx, sc);
    if (*preprocess) return cmd_preprocess(ctx, pp);
    if (*train) return cmd_train_ref(ctx, tr);
    if (*synth) return cmd_synth(ctx, sy);
    if (*render) return cmd_render(ctx, re);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(e.code());
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::validation);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::failure);
  }
  return static_cast<int>(ExitCode::failure);
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace calib
