#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "calib/cli.hpp"
#include "calib/core.hpp"

namespace testing {

namespace fs = std::filesystem;

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = fs::temp_directory_path() / ("calibkit_" + tag + "_" + std::to_string(::getpid()) + "_" +
                                         std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

inline CliResult run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  CliResult r;
  r.code = calib::run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

// Random prediction set with awkward values mixed in: one-hot rows, exact bin
// edges and tiny tail probabilities.
inline calib::PredictionSet random_set(std::mt19937_64& gen, std::size_t n, int k) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> label(0, k - 1);
  std::uniform_int_distribution<int> style(0, 9);
  calib::PredictionSet set;
  set.num_classes = k;
  for (std::size_t i = 0; i < n; ++i) {
    calib::PredictionRecord r;
    r.label = label(gen);
    r.probs.assign(static_cast<std::size_t>(k), 0.0);
    const int s = style(gen);
    if (s == 0) {
      r.probs[static_cast<std::size_t>(label(gen))] = 1.0;
    } else if (s == 1 && k == 2) {
      const double edge = std::floor(unit(gen) * 10.0) / 10.0;
      r.probs[0] = edge;
      r.probs[1] = 1.0 - edge;
    } else if (s == 2) {
      double rest = 1.0;
      for (int c = 1; c < k; ++c) {
        r.probs[static_cast<std::size_t>(c)] = 0.001;
        rest -= 0.001;
      }
      r.probs[0] = rest;
    } else {
      double total = 0.0;
      for (auto& p : r.probs) {
        p = -std::log(1.0 - unit(gen));
        total += p;
      }
      for (auto& p : r.probs) p /= total;
    }
    set.records.push_back(std::move(r));
  }
  return set;
}

}  // namespace testing
