#include <doctest.h>

#include <cmath>

#include "calib/core.hpp"

using namespace calib;

namespace {

PredictionRecord rec(std::vector<double> probs, int label) {
  PredictionRecord r;
  r.probs = std::move(probs);
  r.label = label;
  return r;
}

}  // namespace

TEST_SUITE("core") {
  TEST_CASE("uniform two-class set validates cleanly") {
    PredictionSet set;
    for (int i = 0; i < 4; ++i) set.records.push_back(rec({0.5, 0.5}, i % 2));
    CHECK(validate(set).empty());
  }

  TEST_CASE("probability sum rule") {
    PredictionSet set;
    set.records.push_back(rec({0.7, 0.2}, 0));
    const auto v = validate(set);
    REQUIRE(v.size() == 1);
    CHECK(v[0].row == 0);
    CHECK(v[0].rule.find("probs sum 0.9") != std::string::npos);
  }

  TEST_CASE("label range rule") {
    PredictionSet set;
    set.records.push_back(rec({0.5, 0.5}, 3));
    const auto v = validate(set);
    REQUIRE(v.size() == 1);
    CHECK(v[0].rule.find("out of range") != std::string::npos);
  }

  TEST_CASE("negative and non-finite probabilities are violations") {
    PredictionSet set;
    set.records.push_back(rec({1.2, -0.2}, 0));
    set.records.push_back(rec({std::nan(""), 1.0}, 0));
    CHECK(validate(set).size() >= 2);
  }

  TEST_CASE("logits must agree with probabilities") {
    PredictionSet set;
    auto r = rec({0.5, 0.5}, 0);
    r.logits = std::vector<double>{2.0, 0.0};
    set.records.push_back(r);
    CHECK_FALSE(validate(set).empty());
    set.records[0].probs = softmax(*set.records[0].logits);
    CHECK(validate(set).empty());
  }

  TEST_CASE("derive") {
    auto d = derive(rec({0.2, 0.8}, 1));
    CHECK(d.predicted_label == 1);
    CHECK(d.confidence == 0.8);
    CHECK(d.correct);

    d = derive(rec({0.5, 0.5}, 1));
    CHECK(d.predicted_label == 0);
    CHECK(d.confidence == 0.5);
    CHECK_FALSE(d.correct);

    d = derive(rec({0.1, 0.3, 0.6}, 0));
    CHECK(d.predicted_label == 2);
    CHECK(d.confidence == 0.6);
    CHECK_FALSE(d.correct);
  }

  TEST_CASE("softmax is shift invariant and handles large logits") {
    const auto a = softmax(std::vector<double>{1.0, 2.0, 3.0});
    const auto b = softmax(std::vector<double>{1001.0, 1002.0, 1003.0});
    for (std::size_t i = 0; i < 3; ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-14));
    const auto t = softmax(std::vector<double>{4.0, 0.0}, 10.0);
    CHECK(t[0] == doctest::Approx(0.598687660112452).epsilon(1e-14));
    CHECK(log_sum_exp(std::vector<double>{1000.0, 1000.0}) == doctest::Approx(1000.0 + std::log(2.0)));
  }

  TEST_CASE("split parsing and selection") {
    CHECK(parse_split("val") == Split::validation);
    CHECK(parse_split("validation") == Split::validation);
    CHECK(parse_split("test") == Split::test);
    CHECK_FALSE(parse_split("dev").has_value());

    PredictionSet set;
    set.records.push_back(rec({0.5, 0.5}, 0));
    set.records.push_back(rec({0.5, 0.5}, 1));
    set.records[1].split = Split::validation;
    set.records[1].fold_id = 3;
    CHECK(set.has_split(Split::validation));
    CHECK_FALSE(set.has_split(Split::train));
    CHECK(select_split(set, Split::validation).size() == 1);
    CHECK(fold_ids(set) == std::vector<int>{0, 3});
  }

  TEST_CASE("renormalized removes drift") {
    PredictionSet set;
    set.records.push_back(rec({0.3 + 1e-12, 0.7}, 0));
    const auto out = renormalized(set);
    CHECK(out.records[0].probs[0] + out.records[0].probs[1] == doctest::Approx(1.0).epsilon(1e-15));
  }
}
