#include <doctest.h>

#include <random>

#include "calib/report.hpp"
#include "calib/synth.hpp"
#include "support.hpp"

using namespace calib;

namespace {

PredictionSet hand_set() {
  PredictionSet set;
  for (const auto& [c, ok] : std::vector<std::pair<double, bool>>{{0.6, true}, {0.6, false}, {0.9, true}, {0.9, true}}) {
    PredictionRecord r;
    r.probs = {1.0 - c, c};
    r.label = ok ? 1 : 0;
    set.records.push_back(r);
  }
  return set;
}

EvaluationReport sample_report() {
  SynthSpec spec;
  spec.n = 500;
  spec.k = 3;
  spec.beta = 2.0;
  spec.seed = 4;
  Provenance prov;
  prov.input_sha256["preds.csv"] = std::string(64, 'a');
  prov.command = "evaluate";
  prov.split = "all";
  return build_report(generate(spec), MetricConfig{}, "model", "dataset", prov);
}

std::size_t count(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST_SUITE("report") {
  TEST_CASE("report JSON round-trips") {
    const auto report = sample_report();
    const auto j = to_json(report);
    const auto back = report_from_json(nlohmann::json::parse(j.dump()));
    CHECK(back == report);
    CHECK(to_json(back) == j);
  }

  TEST_CASE("missing ACE survives the round trip as null") {
    Provenance prov;
    const auto report = build_report(hand_set(), MetricConfig{}, "m", "d", prov);
    CHECK_FALSE(report.metrics.ace.has_value());
    const auto j = to_json(report);
    CHECK(j["metrics"]["ace"].is_null());
    CHECK(report_from_json(j) == report);
    CHECK(check_report_schema(j).empty());
  }

  TEST_CASE("schema check") {
    const auto j = to_json(sample_report());
    CHECK(check_report_schema(j).empty());

    auto bad = j;
    bad.erase("metrics");
    CHECK_FALSE(check_report_schema(bad).empty());

    bad = j;
    bad["metrics"]["ece"] = 1.5;
    CHECK_FALSE(check_report_schema(bad).empty());

    bad = j;
    bad["reliability_diagram"]["bins"][0]["count"] = 100000;
    CHECK_FALSE(check_report_schema(bad).empty());

    bad = j;
    bad["schema"] = "other/1";
    CHECK_FALSE(check_report_schema(bad).empty());

    CHECK_THROWS(report_from_json(nlohmann::json::parse("{\"schema\": 3}")));
  }

  TEST_CASE("diagram of the four-record hand set") {
    const auto d = make_diagram(hand_set());
    REQUIRE(d.bins.size() == 10);
    CHECK(d.bins[5].accuracy == doctest::Approx(0.5));
    CHECK(d.bins[8].accuracy == doctest::Approx(1.0));
    CHECK(d.bins[5].gap == doctest::Approx(0.1));
    CHECK(d.ece == doctest::Approx(0.1));
    CHECK(d.accuracy == doctest::Approx(0.75));
    CHECK(d.mean_confidence == doctest::Approx(0.75));

    const auto svg = render_svg(d);
    CHECK(count(svg, "class=\"bar\"") == 2);
    CHECK(svg.find("data-accuracy=\"0.500000\"") != std::string::npos);
    CHECK(svg.find("data-accuracy=\"1.000000\"") != std::string::npos);
    CHECK(count(svg, "class=\"empty\"") == 8);
    CHECK(count(svg, "class=\"diag\"") == 1);
    CHECK(svg.find("ECE 0.1000") != std::string::npos);
    CHECK(svg.find("B = 10") != std::string::npos);
  }

  TEST_CASE("perfect predictor bars sit on the diagonal") {
    PredictionSet set;
    for (int i = 0; i < 5; ++i) {
      PredictionRecord r;
      r.probs = {0.0, 1.0};
      r.label = 1;
      set.records.push_back(r);
    }
    const auto d = make_diagram(set);
    for (const auto& b : d.bins) CHECK(b.gap == 0.0);
    CHECK(d.ece == 0.0);
    const auto svg = render_svg(d);
    CHECK(count(svg, "class=\"gap\"") == 0);
  }

  TEST_CASE("SVG output is deterministic") {
    const auto d = sample_report().diagram;
    CHECK(render_svg(d, "title") == render_svg(d, "title"));
    CHECK(render_svg(d, "title").find("<svg") != std::string::npos);
    CHECK(render_svg(d, "a & b").find("a &amp; b") != std::string::npos);
  }

  TEST_CASE("other payloads serialize") {
    Temperature t;
    t.t = 2.5;
    t.fit_nll = 0.4;
    const auto tj = to_json(t);
    CHECK(tj["t"] == 2.5);

    const auto table = balance_table({{"a", 60.0, {0.2}}, {"b", 70.0, {0.1}}}, {"ECE"}, 0.6);
    const auto bj = to_json(table);
    CHECK(bj["alpha"] == 0.6);
    CHECK(bj["rows"].size() == 2);

    RefModel m;
    m.classes = 2;
    m.features = 1;
    m.weights = {0.5, -0.5};
    m.bias = {0.1, -0.1};
    m.training_log = {0.7, 0.6};
    const auto back = ref_model_from_json(to_json(m));
    CHECK(back.weights == m.weights);
    CHECK(back.bias == m.bias);
    CHECK(back.classes == 2);
  }

  TEST_CASE("two-decimal display") {
    CHECK(display2(0.8512) == "0.85");
    CHECK(display2(1.0) == "1.00");
    CHECK(display2(0.974) == "0.97");
    CHECK(display2(0.976) == "0.98");
    CHECK(display2(-0.001) == "0.00");
  }
}
