#include "calib/report.hpp"

#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "calib/error.hpp"

namespace calib {

using nlohmann::json;

ReliabilityDiagram make_diagram(const PredictionSet& set, int bins) {
  if (set.empty()) throw std::invalid_argument("cannot draw a diagram for an empty set");
  const auto stats = bin_fixed(set, bins);
  ReliabilityDiagram d;
  d.num_bins = bins;
  d.n = set.size();
  double sum_acc = 0.0, sum_conf = 0.0;
  for (const auto& b : stats) {
    d.bins.push_back({b.lower, b.upper, b.count, b.accuracy, b.mean_confidence, b.mean_confidence - b.accuracy});
    sum_acc += b.accuracy * static_cast<double>(b.count);
    sum_conf += b.mean_confidence * static_cast<double>(b.count);
  }
  d.accuracy = sum_acc / static_cast<double>(d.n);
  d.mean_confidence = sum_conf / static_cast<double>(d.n);
  d.ece = ece(stats, d.n);
  return d;
}

EvaluationReport build_report(const PredictionSet& set, const MetricConfig& config, std::string model,
                              std::string dataset, Provenance provenance) {
  EvaluationReport r;
  r.model = std::move(model);
  r.dataset = std::move(dataset);
  r.metrics = evaluate(set, config);
  r.diagram = make_diagram(set, config.fixed_bins);
  r.provenance = std::move(provenance);
  return r;
}

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> read_optional(const json& j, const char* key) {
  const auto& v = j.at(key);
  if (v.is_null()) return std::nullopt;
  return v.get<double>();
}

template <class T, class Parse>
T parse_enum(const json& j, const char* key, Parse parse) {
  const auto text = j.at(key).get<std::string>();
  const auto v = parse(text);
  if (!v) throw ParseError(fmt::format("unknown {} '{}'", key, text));
  return *v;
}

}  // namespace

json to_json(const MetricConfig& c) {
  return {
      {"fixed_bins", c.fixed_bins},
      {"adaptive_ranges", c.adaptive_ranges},
      {"tace_threshold", c.tace_threshold},
      {"ace_variant", std::string(to_string(c.ace_variant))},
      {"averaging", std::string(to_string(c.averaging))},
      {"pooling", std::string(to_string(c.pooling))},
  };
}

MetricConfig metric_config_from_json(const json& j) {
  MetricConfig c;
  c.fixed_bins = j.at("fixed_bins").get<int>();
  c.adaptive_ranges = j.at("adaptive_ranges").get<int>();
  c.tace_threshold = j.at("tace_threshold").get<double>();
  c.ace_variant = parse_enum<AceVariant>(j, "ace_variant", parse_ace_variant);
  c.averaging = parse_enum<Averaging>(j, "averaging", parse_averaging);
  c.pooling = parse_enum<Pooling>(j, "pooling", parse_pooling);
  return c;
}

json to_json(const MetricReport& r) {
  return {
      {"n", r.n},
      {"ece", r.ece},
      {"mce", r.mce},
      {"oe", r.oe},
      {"sce", r.sce},
      {"ace", optional_number(r.ace)},
      {"tace", optional_number(r.tace)},
      {"accuracy", r.accuracy},
      {"precision", r.precision},
      {"recall", r.recall},
      {"f1", r.f1},
      {"kappa", r.kappa},
      {"config", to_json(r.config)},
      {"warnings", r.warnings},
  };
}

MetricReport metric_report_from_json(const json& j) {
  MetricReport r;
  r.n = j.at("n").get<std::size_t>();
  r.ece = j.at("ece").get<double>();
  r.mce = j.at("mce").get<double>();
  r.oe = j.at("oe").get<double>();
  r.sce = j.at("sce").get<double>();
  r.ace = read_optional(j, "ace");
  r.tace = read_optional(j, "tace");
  r.accuracy = j.at("accuracy").get<double>();
  r.precision = j.at("precision").get<double>();
  r.recall = j.at("recall").get<double>();
  r.f1 = j.at("f1").get<double>();
  r.kappa = j.at("kappa").get<double>();
  r.config = metric_config_from_json(j.at("config"));
  r.warnings = j.at("warnings").get<std::vector<std::string>>();
  return r;
}

json to_json(const ReliabilityDiagram& d) {
  json bins = json::array();
  for (const auto& b : d.bins) {
    bins.push_back({{"lower", b.lower},
                    {"upper", b.upper},
                    {"count", b.count},
                    {"accuracy", b.accuracy},
                    {"mean_confidence", b.mean_confidence},
                    {"gap", b.gap}});
  }
  return {
      {"num_bins", d.num_bins},
      {"n", d.n},
      {"overall", {{"accuracy", d.accuracy}, {"mean_confidence", d.mean_confidence}, {"ece", d.ece}}},
      {"bins", bins},
  };
}

ReliabilityDiagram diagram_from_json(const json& j) {
  ReliabilityDiagram d;
  d.num_bins = j.at("num_bins").get<int>();
  d.n = j.at("n").get<std::size_t>();
  const auto& o = j.at("overall");
  d.accuracy = o.at("accuracy").get<double>();
  d.mean_confidence = o.at("mean_confidence").get<double>();
  d.ece = o.at("ece").get<double>();
  for (const auto& b : j.at("bins")) {
    d.bins.push_back({b.at("lower").get<double>(), b.at("upper").get<double>(), b.at("count").get<std::size_t>(),
                      b.at("accuracy").get<double>(), b.at("mean_confidence").get<double>(),
                      b.at("gap").get<double>()});
  }
  return d;
}

json to_json(const EvaluationReport& r) {
  return {
      {"schema", std::string(kReportSchema)},
      {"model", r.model},
      {"dataset", r.dataset},
      {"metrics", to_json(r.metrics)},
      {"reliability_diagram", to_json(r.diagram)},
      {"provenance",
       {{"input_sha256", r.provenance.input_sha256},
        {"tool_version", r.provenance.tool_version},
        {"command", r.provenance.command},
        {"split", r.provenance.split},
        {"pooling", std::string(to_string(r.metrics.config.pooling))}}},
  };
}

EvaluationReport report_from_json(const json& j) {
  try {
    if (j.at("schema").get<std::string>() != kReportSchema) throw ParseError("unsupported report schema");
    EvaluationReport r;
    r.model = j.at("model").get<std::string>();
    r.dataset = j.at("dataset").get<std::string>();
    r.metrics = metric_report_from_json(j.at("metrics"));
    r.diagram = diagram_from_json(j.at("reliability_diagram"));
    const auto& p = j.at("provenance");
    r.provenance.input_sha256 = p.at("input_sha256").get<std::map<std::string, std::string>>();
    r.provenance.tool_version = p.at("tool_version").get<std::string>();
    r.provenance.command = p.at("command").get<std::string>();
    r.provenance.split = p.at("split").get<std::string>();
    return r;
  } catch (const json::exception& e) {
    throw ParseError(fmt::format("malformed report: {}", e.what()));
  }
}

json to_json(const Temperature& t) {
  json j = {{"t", t.t}, {"fit_nll", t.fit_nll}, {"t_min", t.t_min}, {"t_max", t.t_max}};
  if (!t.warning.empty()) j["warning"] = t.warning;
  return j;
}

json to_json(const BalanceTable& table) {
  json rows = json::array();
  for (std::size_t i = 0; i < table.models.size(); ++i) {
    json scores = json::object();
    for (std::size_t m = 0; m < table.metrics.size(); ++m) scores[table.metrics[m]] = table.scores[i][m];
    rows.push_back({{"model", table.models[i]}, {"scores", scores}});
  }
  json cal = json::object();
  for (std::size_t m = 0; m < table.metrics.size(); ++m) cal[table.metrics[m]] = table.cal_baselines[m];
  return {{"alpha", table.alpha}, {"acc_baseline", table.acc_baseline}, {"cal_baselines", cal},
          {"metrics", table.metrics}, {"rows", rows}};
}

json to_json(const RefModel& m) {
  return {{"classes", m.classes},
          {"features", m.features},
          {"weights", m.weights},
          {"bias", m.bias},
          {"training_log", m.training_log}};
}

RefModel ref_model_from_json(const json& j) {
  RefModel m;
  m.classes = j.at("classes").get<std::size_t>();
  m.features = j.at("features").get<std::size_t>();
  m.weights = j.at("weights").get<std::vector<double>>();
  m.bias = j.at("bias").get<std::vector<double>>();
  m.training_log = j.at("training_log").get<std::vector<double>>();
  if (m.weights.size() != m.classes * m.features || m.bias.size() != m.classes) {
    throw ParseError("model weights do not match the declared shape");
  }
  return m;
}

std::vector<std::string> check_report_schema(const json& j) {
  std::vector<std::string> problems;
  const auto need = [&](const json& obj, const char* key, auto pred, const char* what) -> bool {
    if (!obj.is_object() || !obj.contains(key)) {
      problems.push_back(fmt::format("missing '{}'", key));
      return false;
    }
    if (!pred(obj.at(key))) {
      problems.push_back(fmt::format("'{}' must be {}", key, what));
      return false;
    }
    return true;
  };
  const auto is_string = [](const json& v) { return v.is_string(); };
  const auto is_object = [](const json& v) { return v.is_object(); };
  const auto is_unit = [](const json& v) { return v.is_number() && v.get<double>() >= 0.0 && v.get<double>() <= 1.0; };
  const auto is_unit_or_null = [&](const json& v) { return v.is_null() || is_unit(v); };
  const auto is_count = [](const json& v) { return v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0); };

  if (need(j, "schema", is_string, "a string") && j.at("schema") != kReportSchema) {
    problems.push_back("unknown schema tag");
  }
  need(j, "model", is_string, "a string");
  need(j, "dataset", is_string, "a string");
  if (need(j, "metrics", is_object, "an object")) {
    const auto& m = j.at("metrics");
    need(m, "n", is_count, "a count");
    for (const char* key : {"ece", "mce", "oe", "sce", "accuracy", "precision", "recall", "f1"}) {
      need(m, key, is_unit, "a number in [0, 1]");
    }
    for (const char* key : {"ace", "tace"}) need(m, key, is_unit_or_null, "null or a number in [0, 1]");
    need(m, "kappa", [](const json& v) { return v.is_number() && v.get<double>() >= -1.0 && v.get<double>() <= 1.0; },
         "a number in [-1, 1]");
    need(m, "config", is_object, "an object");
    need(m, "warnings", [](const json& v) { return v.is_array(); }, "an array");
  }
  if (need(j, "reliability_diagram", is_object, "an object")) {
    const auto& d = j.at("reliability_diagram");
    if (need(d, "bins", [](const json& v) { return v.is_array(); }, "an array") && need(d, "n", is_count, "a count")) {
      std::size_t total = 0;
      for (const auto& b : d.at("bins")) {
        if (!b.contains("count") || !is_count(b.at("count"))) {
          problems.push_back("diagram bin without a count");
          continue;
        }
        total += b.at("count").get<std::size_t>();
        for (const char* key : {"lower", "upper", "accuracy", "mean_confidence"}) need(b, key, is_unit, "a number in [0, 1]");
      }
      if (total != d.at("n").get<std::size_t>()) problems.push_back("diagram bin counts do not sum to n");
    }
    need(d, "overall", is_object, "an object");
  }
  need(j, "provenance", is_object, "an object");
  return problems;
}

std::string display2(double value) {
  const double r = std::round(value * 100.0) / 100.0;
  return fmt::format("{:.2f}", r == 0.0 ? 0.0 : r);
}

std::string render_svg(const ReliabilityDiagram& d, std::string_view title) {
  constexpr double kWidth = 420.0, kHeight = 460.0;
  constexpr double kLeft = 60.0, kTop = 40.0, kSize = 320.0;
  const auto px = [&](double v) { return kLeft + v * kSize; };
  const auto py = [&](double v) { return kTop + (1.0 - v) * kSize; };

  std::string s;
  s += fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0f}\" height=\"{:.0f}\" viewBox=\"0 0 {:.0f} {:.0f}\" "
      "font-family=\"sans-serif\" font-size=\"12\">\n",
      kWidth, kHeight, kWidth, kHeight);
  s += "<style>.bar{fill:#3b6fb6;stroke:#1d3f73;stroke-width:1}"
       ".gap{fill:#d9534f;fill-opacity:0.35;stroke:#d9534f;stroke-width:1}"
       ".empty{fill:none;stroke:#999999;stroke-width:2;stroke-dasharray:4 3}"
       ".diag{stroke:#555555;stroke-width:1.5;stroke-dasharray:6 4}</style>\n";
  s += fmt::format("<rect x=\"0\" y=\"0\" width=\"{:.0f}\" height=\"{:.0f}\" fill=\"#ffffff\"/>\n", kWidth, kHeight);
  if (!title.empty()) {
    std::string escaped;
    for (char c : title) {
      switch (c) {
        case '<': escaped += "&lt;"; break;
        case '>': escaped += "&gt;"; break;
        case '&': escaped += "&amp;"; break;
        case '"': escaped += "&quot;"; break;
        default: escaped += c;
      }
    }
    s += fmt::format("<text x=\"{:.1f}\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
                     kLeft + kSize / 2.0, escaped);
  }

  // Frame, grid ticks.
  s += fmt::format("<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"{:.1f}\" height=\"{:.1f}\" fill=\"none\" stroke=\"#000000\"/>\n",
                   kLeft, kTop, kSize, kSize);
  for (int i = 0; i <= 5; ++i) {
    const double v = i / 5.0;
    s += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{:.1f}</text>\n", px(v), py(0.0) + 16.0, v);
    s += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"end\">{:.1f}</text>\n", kLeft - 6.0, py(v) + 4.0, v);
  }
  s += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">Confidence</text>\n", kLeft + kSize / 2.0,
                   py(0.0) + 34.0);
  s += fmt::format("<text x=\"16\" y=\"{:.1f}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.1f})\">Accuracy</text>\n",
                   kTop + kSize / 2.0, kTop + kSize / 2.0);

  for (std::size_t i = 0; i < d.bins.size(); ++i) {
    const auto& b = d.bins[i];
    const double x = px(b.lower), w = px(b.upper) - px(b.lower);
    if (b.count == 0) {
      s += fmt::format(
          "<line class=\"empty\" data-bin=\"{}\" data-count=\"0\" x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\"/>\n",
          i, x + 2.0, py(0.0), x + w - 2.0, py(0.0));
      continue;
    }
    s += fmt::format(
        "<rect class=\"bar\" data-bin=\"{}\" data-count=\"{}\" data-accuracy=\"{:.6f}\" x=\"{:.2f}\" y=\"{:.2f}\" "
        "width=\"{:.2f}\" height=\"{:.2f}\"/>\n",
        i, b.count, b.accuracy, x, py(b.accuracy), w, b.accuracy * kSize);
    const double top = std::max(b.accuracy, b.mean_confidence), bottom = std::min(b.accuracy, b.mean_confidence);
    if (top > bottom) {
      s += fmt::format(
          "<rect class=\"gap\" data-bin=\"{}\" data-gap=\"{:.6f}\" x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" "
          "height=\"{:.2f}\"/>\n",
          i, b.gap, x, py(top), w, (top - bottom) * kSize);
    }
  }
  s += fmt::format("<line class=\"diag\" x1=\"{:.1f}\" y1=\"{:.1f}\" x2=\"{:.1f}\" y2=\"{:.1f}\"/>\n", px(0.0), py(0.0),
                   px(1.0), py(1.0));

  const double ly = py(0.0) + 56.0;
  s += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\">Accuracy {:.4f}  Confidence {:.4f}  ECE {:.4f}</text>\n", kLeft,
                   ly, d.accuracy, d.mean_confidence, d.ece);
  s += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\">N = {}  B = {} fixed-width bins</text>\n", kLeft, ly + 18.0, d.n,
                   d.num_bins);
  s += "</svg>\n";
  return s;
}

}  // namespace calib
