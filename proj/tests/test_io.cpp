#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "calib/error.hpp"
#include "calib/io.hpp"
#include "calib/synth.hpp"
#include "support.hpp"

using namespace calib;
namespace fs = std::filesystem;

TEST_SUITE("io") {
  TEST_CASE("prediction CSV round-trips exactly") {
    SynthSpec spec;
    spec.n = 300;
    spec.k = 3;
    spec.beta = 1.7;
    spec.seed = 2;
    spec.validation_fraction = 0.3;
    spec.folds = 3;
    const auto set = generate(spec);
    std::istringstream in(io::predictions_csv(set));
    const auto back = io::read_predictions(in);
    REQUIRE(back.size() == set.size());
    CHECK(back.num_classes == 3);
    for (std::size_t i = 0; i < set.size(); ++i) {
      CHECK(*back.records[i].logits == *set.records[i].logits);
      CHECK(back.records[i].probs == set.records[i].probs);
      CHECK(back.records[i].label == set.records[i].label);
      CHECK(back.records[i].split == set.records[i].split);
      CHECK(back.records[i].fold_id == set.records[i].fold_id);
    }
    CHECK(io::predictions_csv(back) == io::predictions_csv(set));
  }

  TEST_CASE("probability columns") {
    std::istringstream in("subject,trial,fold,split,label,prob_0,prob_1\ns1,t1,0,test,1,0.25,0.75\n");
    const auto set = io::read_predictions(in);
    REQUIRE(set.size() == 1);
    CHECK_FALSE(set.records[0].logits.has_value());
    CHECK(set.records[0].probs == std::vector<double>{0.25, 0.75});
    CHECK(io::predictions_csv(set).find("prob_1") != std::string::npos);
  }

  TEST_CASE("parse errors name the line") {
    const auto message = [](const std::string& text) {
      std::istringstream in(text);
      try {
        io::read_predictions(in, "preds.csv");
      } catch (const ParseError& e) {
        return std::string(e.what());
      }
      return std::string("no error");
    };
    const std::string header = "subject,trial,fold,split,label,logit_0,logit_1\n";
    CHECK(message(header + "s,t,0,test,0,1.0,0.0\ns,t,0,test,0,abc,0.0\n").find("preds.csv:3:") == 0);
    CHECK(message(header + "s,t,0,test,0,1.0\n").find("preds.csv:2:") == 0);
    CHECK(message(header + "s,t,0,holdout,0,1.0,0.0\n").find("preds.csv:2:") == 0);
    CHECK(message("subject,trial,fold,split,label,x_0,x_1\n").find("preds.csv:1:") == 0);
    CHECK(message("") != "no error");
  }

  TEST_CASE("metrics table") {
    std::istringstream in("model,accuracy,ECE,MCE\nLSTM,56.9,0.19,0.30\nfNIRSNet,71.9,0.07,0.09\n");
    const auto t = io::read_metrics_table(in);
    CHECK(t.metrics == std::vector<std::string>{"ECE", "MCE"});
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[1].name == "fNIRSNet");
    CHECK(t.rows[1].accuracy == 71.9);
    CHECK(t.rows[0].calibration == std::vector<double>{0.19, 0.30});
    std::istringstream bad("model,accuracy,ECE\nLSTM,56.9\n");
    CHECK_THROWS_AS(io::read_metrics_table(bad), ParseError);
  }

  TEST_CASE("recording CSV round trip") {
    testing::TempDir dir("rec");
    SignalRecording rec;
    rec.fs = 12.5;
    rec.t0 = 2.0;
    rec.channels = {{"S1", "D1", ChannelKind::hbo, 0.0}, {"S1", "D1", ChannelKind::hbr, 0.0}};
    rec.samples = {{0.1, 0.2, 0.3, 0.4}, {-1.0, -2.0, 1.0 / 3.0, 4.0}};
    io::write_recording_csv(dir.path() / "r.csv", rec);
    const auto back = io::read_recording_csv(dir.path() / "r.csv");
    CHECK(back.fs == doctest::Approx(12.5));
    CHECK(back.t0 == doctest::Approx(2.0));
    CHECK(back.samples == rec.samples);
    CHECK(back.channels[1].name() == "S1_D1_HbR");

    std::ofstream(dir.path() / "uneven.csv") << "time,S1_D1_HbO\n0,1\n0.1,2\n0.3,3\n";
    CHECK_THROWS_AS(io::read_recording_csv(dir.path() / "uneven.csv"), ParseError);
  }

  TEST_CASE("epoch files round trip in both formats") {
    EpochSet e;
    e.fs = 12.5;
    e.num_channels = 2;
    e.num_samples = 3;
    e.channel_names = {"S1_D1_HbO", "S1_D1_HbR"};
    std::mt19937_64 gen(3);
    std::normal_distribution<double> noise;
    for (int i = 0; i < 6; ++i) {
      Window w;
      w.subject = i < 3 ? "sub01" : "sub02";
      w.trial_id = "t" + std::to_string(i / 2);
      w.window_index = i % 2;
      w.label = i % 2;
      for (int j = 0; j < 6; ++j) w.data.push_back(noise(gen));
      e.windows.push_back(w);
    }
    for (auto format : {io::EpochFormat::csv, io::EpochFormat::binary}) {
      testing::TempDir dir("epochs");
      io::write_epochs(dir.path(), e, format);
      CHECK(fs::exists(dir.path() / "index.json"));
      const auto back = io::read_epochs(dir.path());
      REQUIRE(back.windows.size() == e.windows.size());
      CHECK(back.num_samples == 3);
      CHECK(back.channel_names == e.channel_names);
      for (std::size_t i = 0; i < e.windows.size(); ++i) {
        CHECK(back.windows[i].data == e.windows[i].data);
        CHECK(back.windows[i].subject == e.windows[i].subject);
        CHECK(back.windows[i].trial_id == e.windows[i].trial_id);
        CHECK(back.windows[i].label == e.windows[i].label);
      }
    }
    testing::TempDir dir("epochs_csv");
    io::write_epochs(dir.path(), e, io::EpochFormat::csv);
    CHECK(fs::exists(dir.path() / "epochs_sub01.csv"));
    CHECK(fs::exists(dir.path() / "epochs_sub02.csv"));
  }

  TEST_CASE("manifest round trip") {
    testing::TempDir dir("manifest");
    RecordingSynthSpec spec;
    spec.subjects = 1;
    spec.trials_per_subject = 2;
    spec.wavelengths = true;
    const auto recs = generate_recordings(spec);
    io::write_recording_csv(dir.path() / "sub01.csv", recs[0]);
    io::write_manifest(dir.path() / "manifest.json", {"sub01.csv"}, recs, 10.0, spec.optics);
    const auto m = io::read_manifest(dir.path() / "manifest.json");
    REQUIRE(m.recordings.size() == 1);
    CHECK(m.task_duration_s == 10.0);
    CHECK(m.recordings[0].subject == "sub01");
    CHECK(m.recordings[0].events.size() == 2);
    CHECK(m.recordings[0].events[1].trial_id == recs[0].events[1].trial_id);
    REQUIRE(m.optics.has_value());
    CHECK(m.optics->extinction == spec.optics.extinction);
    CHECK(m.optics->dpf == spec.optics.dpf);
    CHECK(m.pipeline.is_null());
  }

  TEST_CASE("pipeline overrides") {
    const auto base = *pipeline_profile("custom");
    const auto spec = io::apply_pipeline_overrides(
        base, nlohmann::json::parse(R"({"filter_order": 4, "baseline": [-2, 0], "normalize": "recording_minmax"})"));
    CHECK(spec.filter.order == 4);
    REQUIRE(spec.baseline.has_value());
    CHECK(spec.baseline->first == -2.0);
    CHECK(spec.normalize == NormalizeMode::recording_minmax);
    CHECK_THROWS_AS(io::apply_pipeline_overrides(base, nlohmann::json::parse(R"({"order": 4})")), ConfigError);
    CHECK_THROWS_AS(io::apply_pipeline_overrides(base, nlohmann::json::parse(R"({"low_hz": "x"})")), ConfigError);
  }

  TEST_CASE("sha256 and atomic writes") {
    testing::TempDir dir("sha");
    io::write_file_atomic(dir.path() / "abc.txt", "abc");
    CHECK(io::sha256_file(dir.path() / "abc.txt") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    io::write_file_atomic(dir.path() / "abc.txt", "replaced");
    CHECK(io::read_file(dir.path() / "abc.txt") == "replaced");
    std::size_t files = 0;
    for ([[maybe_unused]] const auto& entry : fs::directory_iterator(dir.path())) ++files;
    CHECK(files == 1);
  }

  TEST_CASE("JSON dumps are stable") {
    const auto j = nlohmann::json::parse(R"({"b": 1, "a": [0.1, 2]})");
    CHECK(io::dump_json(j) == io::dump_json(nlohmann::json::parse(io::dump_json(j))));
    CHECK(io::dump_json(j).back() == '\n');
  }
}
