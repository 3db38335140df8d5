#pragma once

// Experiment configuration: a flat `key = value` text file. Lists are
// comma-separated; `#` starts a comment. README.md documents the keys.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "imputebench/amputation.hpp"
#include "imputebench/csv.hpp"
#include "imputebench/error.hpp"
#include "imputebench/imputers.hpp"
#include "imputebench/synthetic.hpp"

namespace imputebench {

struct ExperimentConfig {
  int sampleCount = 5;
  Index sampleSize = 5000;
  std::vector<double> missingPcts{0.05, 0.10, 0.15, 0.20, 0.25};
  int iterationsPerCell = 5;
  std::vector<ImputerSpec> methods;  // seeds are assigned per cell
  std::uint64_t masterSeed = 1;
  std::optional<std::string> inputPath;  // CSV; synthetic when absent
  SyntheticSpec synthetic;
  std::string outputDir = "experiment-out";
  std::size_t workers = 1;
  bool freshMaskPerIteration = false;
  AmputationPolicy policy = AmputationPolicy::ExactCount;
  std::vector<Method> similarityMethods;  // defaults to mice, amelia, hmisc when present
  double alpha = 0.05;

  /// Iterations actually run for a method; mean imputation is deterministic.
  int iterationsFor(Method m) const { return m == Method::Mean ? 1 : iterationsPerCell; }

  void validate() const {
    if (sampleCount < 1 || sampleSize < 1 || iterationsPerCell < 1) {
      throw Error(Errc::InvalidOption, "sampleCount, sampleSize and iterationsPerCell must be >= 1");
    }
    if (missingPcts.empty()) throw Error(Errc::InvalidOption, "missingPcts is empty");
    for (double p : missingPcts) {
      if (!(p > 0.0 && p < 1.0)) throw Error(Errc::InvalidOption, "missingPcts must lie in (0, 1)");
    }
    if (methods.empty()) throw Error(Errc::InvalidOption, "no methods configured");
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error(Errc::InvalidOption, "alpha must lie in (0, 1)");
  }

  /// Paper-style benchmark: 10 equicorrelated (0.8) columns plus the two
  /// nonlinear columns, 5 samples of 5000 rows, all six methods.
  static ExperimentConfig defaults() {
    ExperimentConfig c;
    c.synthetic.n = 20000;
    c.synthetic.p = 10;
    c.synthetic.recipe = CovarianceRecipe::ConstantCorrelation;
    c.synthetic.rho = 0.8;
    c.synthetic.nonlinearAugment = true;
    c.synthetic.generatorSeed = 7;
    for (auto m : kAllMethods) c.methods.emplace_back(m);
    return c;
  }
};

namespace detail {

inline std::string trimmed(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> splitList(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trimmed(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
T parseNumber(const std::string& key, const std::string& value) {
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    throw Error(Errc::InvalidOption, "cannot parse value '" + value + "' for key " + key);
  }
  return out;
}

inline bool parseBool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "on" || value == "1") return true;
  if (value == "false" || value == "off" || value == "0") return false;
  throw Error(Errc::InvalidOption, "key " + key + " expects true or false");
}

}  // namespace detail

/// Parses key/value text on top of ExperimentConfig::defaults(). Unknown keys
/// are rejected. Per-method options use `method.<name>.<option> = value`.
inline ExperimentConfig parseConfig(std::istream& in) {
  ExperimentConfig c = ExperimentConfig::defaults();
  std::map<std::string, std::map<std::string, std::string>> methodOptions;
  std::optional<std::vector<Method>> methodList;
  std::optional<std::string> userMatrixPath;
  std::string line;
  int lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trimmed(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(Errc::InvalidOption, "line " + std::to_string(lineNo) + ": expected key = value");
    const std::string key = detail::trimmed(line.substr(0, eq));
    const std::string value = detail::trimmed(line.substr(eq + 1));
    using detail::parseNumber;
    if (key == "sampleCount") {
      c.sampleCount = parseNumber<int>(key, value);
    } else if (key == "sampleSize") {
      c.sampleSize = parseNumber<Index>(key, value);
    } else if (key == "missingPcts") {
      c.missingPcts.clear();
      for (const auto& v : detail::splitList(value)) c.missingPcts.push_back(parseNumber<double>(key, v));
    } else if (key == "iterationsPerCell") {
      c.iterationsPerCell = parseNumber<int>(key, value);
    } else if (key == "methods") {
      methodList.emplace();
      for (const auto& v : detail::splitList(value)) methodList->push_back(parseMethod(v));
    } else if (key.rfind("method.", 0) == 0) {
      const auto dot = key.find('.', 7);
      if (dot == std::string::npos) throw Error(Errc::InvalidOption, "expected method.<name>.<option>: " + key);
      const std::string name = key.substr(7, dot - 7);
      (void)parseMethod(name);
      methodOptions[name][key.substr(dot + 1)] = value;
    } else if (key == "masterSeed") {
      c.masterSeed = parseNumber<std::uint64_t>(key, value);
    } else if (key == "input") {
      if (value == "synthetic") {
        c.inputPath.reset();
      } else {
        c.inputPath = value;
      }
    } else if (key == "synthetic.rows") {
      c.synthetic.n = parseNumber<Index>(key, value);
    } else if (key == "synthetic.p") {
      c.synthetic.p = parseNumber<Index>(key, value);
    } else if (key == "synthetic.covariance") {
      if (value == "identity") {
        c.synthetic.recipe = CovarianceRecipe::Identity;
      } else if (value == "constant") {
        c.synthetic.recipe = CovarianceRecipe::ConstantCorrelation;
      } else if (value == "toeplitz") {
        c.synthetic.recipe = CovarianceRecipe::Toeplitz;
      } else if (value == "user") {
        c.synthetic.recipe = CovarianceRecipe::UserMatrix;
      } else {
        throw Error(Errc::InvalidOption, "synthetic.covariance must be identity|constant|toeplitz|user");
      }
    } else if (key == "synthetic.rho") {
      c.synthetic.rho = parseNumber<double>(key, value);
    } else if (key == "synthetic.matrix") {
      userMatrixPath = value;
    } else if (key == "synthetic.augment") {
      c.synthetic.nonlinearAugment = detail::parseBool(key, value);
    } else if (key == "synthetic.seed") {
      c.synthetic.generatorSeed = parseNumber<std::uint64_t>(key, value);
    } else if (key == "output") {
      c.outputDir = value;
    } else if (key == "workers") {
      c.workers = parseNumber<std::size_t>(key, value);
    } else if (key == "freshMaskPerIteration") {
      c.freshMaskPerIteration = detail::parseBool(key, value);
    } else if (key == "amputation.policy") {
      if (value == "exact") {
        c.policy = AmputationPolicy::ExactCount;
      } else if (value == "bernoulli") {
        c.policy = AmputationPolicy::Bernoulli;
      } else {
        throw Error(Errc::InvalidOption, "amputation.policy must be exact|bernoulli");
      }
    } else if (key == "similarity.methods") {
      c.similarityMethods.clear();
      for (const auto& v : detail::splitList(value)) c.similarityMethods.push_back(parseMethod(v));
    } else if (key == "alpha") {
      c.alpha = parseNumber<double>(key, value);
    } else {
      throw Error(Errc::InvalidOption, "line " + std::to_string(lineNo) + ": unknown key '" + key + "'");
    }
  }
  if (userMatrixPath) {
    const Dataset m = csv::readDataset(*userMatrixPath);
    c.synthetic.userMatrix = m.values();
  }
  if (methodList) {
    c.methods.clear();
    for (auto m : *methodList) c.methods.emplace_back(m);
  }
  for (auto& spec : c.methods) {
    const auto it = methodOptions.find(std::string(methodName(spec.method())));
    if (it != methodOptions.end()) spec = ImputerSpec(spec.method(), it->second);
  }
  for (const auto& [name, opts] : methodOptions) {
    bool used = false;
    for (const auto& spec : c.methods) used |= methodName(spec.method()) == name;
    if (!used) throw Error(Errc::InvalidOption, "options given for method " + name + " which is not in methods");
  }
  c.validate();
  return c;
}

inline ExperimentConfig loadConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open config " + path);
  return parseConfig(in);
}

}  // namespace imputebench
