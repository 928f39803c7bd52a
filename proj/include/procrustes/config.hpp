#pragma once

// JSON configuration for the benchmark driver. Keys mirror the
// BenchmarkConfig field names; an optional "learn" object carries the
// LearnConfig fields. Unknown keys are rejected.

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <utility>

#include "procrustes/bench.hpp"
#include "procrustes/error.hpp"
#include "procrustes/metric_learn.hpp"

namespace procrustes::bench {

struct RunConfig {
  BenchmarkConfig bench;
  LearnConfig learn;
};

namespace detail {

inline void reject_unknown(const nlohmann::json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key)) fail(ErrorCode::ConfigError, "unknown key '" + key + "' in " + where);
}

template <class T>
void read(const nlohmann::json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ConfigError, std::string("bad value for '") + key + "': " + e.what());
  }
}

}  // namespace detail

inline RunConfig parse_config(const nlohmann::json& j) {
  if (!j.is_object()) fail(ErrorCode::ConfigError, "config must be a JSON object");
  detail::reject_unknown(
      j, {"N", "K", "c_grid", "rho_grid", "delta", "gamma", "trials", "seed", "method", "nystrom", "learn"}, "config");
  RunConfig rc;
  BenchmarkConfig& b = rc.bench;
  detail::read(j, "N", b.N);
  detail::read(j, "K", b.K);
  detail::read(j, "c_grid", b.c_grid);
  detail::read(j, "rho_grid", b.rho_grid);
  detail::read(j, "delta", b.delta);
  detail::read(j, "gamma", b.gamma);
  detail::read(j, "trials", b.trials);
  detail::read(j, "seed", b.seed);
  if (j.contains("method")) {
    std::string m;
    detail::read(j, "method", m);
    b.method = parse_method(m);
  }
  if (j.contains("nystrom") && !j.at("nystrom").is_null()) {
    const auto& n = j.at("nystrom");
    if (!n.is_object()) fail(ErrorCode::ConfigError, "nystrom must be an object");
    detail::reject_unknown(n, {"num_random_vectors", "rank", "seed"}, "nystrom");
    SketchConfig s{2 * b.K + 10, b.K, 0};
    detail::read(n, "num_random_vectors", s.num_random_vectors);
    detail::read(n, "rank", s.rank);
    detail::read(n, "seed", s.seed);
    b.nystrom = s;
  }
  if (j.contains("learn")) {
    const auto& l = j.at("learn");
    if (!l.is_object()) fail(ErrorCode::ConfigError, "learn must be an object");
    detail::reject_unknown(l, {"K", "rho", "learning_rate", "max_epochs", "margin", "seed"}, "learn");
    detail::read(l, "rho", rc.learn.rho);
    detail::read(l, "learning_rate", rc.learn.learning_rate);
    detail::read(l, "max_epochs", rc.learn.max_epochs);
    detail::read(l, "margin", rc.learn.margin);
    detail::read(l, "seed", rc.learn.seed);
    rc.learn.k = b.K;
    detail::read(l, "K", rc.learn.k);
    if (rc.learn.k != b.K) fail(ErrorCode::ConfigError, "learn.K must equal K");
  }
  rc.learn.k = b.K;
  return rc;
}

inline RunConfig parse_config_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::ConfigError, std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(j);
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::ConfigError, "cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

}  // namespace procrustes::bench
