// Command-line front end: generate, ampute, impute, evaluate, experiment,
// report. Exit codes: 0 success, 1 usage, 2 data, 3 numeric failure.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "imputebench/imputebench.hpp"

namespace ib = imputebench;

namespace {

struct GlobalFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::string out;
};

int exitCodeFor(ib::ErrorCategory category) {
  switch (category) {
    case ib::ErrorCategory::Usage:
      return 1;
    case ib::ErrorCategory::Data:
      return 2;
    case ib::ErrorCategory::Numeric:
      return 3;
  }
  return 2;
}

ib::ExperimentConfig baseConfig(const GlobalFlags& g) {
  ib::ExperimentConfig c = g.config.empty() ? ib::ExperimentConfig::defaults() : ib::loadConfig(g.config);
  if (g.seed) c.masterSeed = *g.seed;
  if (g.workers) c.workers = *g.workers;
  if (!g.out.empty()) c.outputDir = g.out;
  return c;
}

std::string withSuffix(const std::string& path, const std::string& suffix) {
  std::filesystem::path p(path);
  p.replace_extension();
  return p.string() + suffix;
}

std::string requireOutput(const std::string& output, const GlobalFlags& g, const char* what) {
  if (!output.empty()) return output;
  if (!g.out.empty()) {
    std::filesystem::create_directories(g.out);
    return (std::filesystem::path(g.out) / what).string();
  }
  throw ib::Error(ib::Errc::InvalidOption, "--output is required");
}

std::map<std::string, std::string> parseOptions(const std::vector<std::string>& raw) {
  std::map<std::string, std::string> out;
  for (const auto& kv : raw) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) throw ib::Error(ib::Errc::InvalidOption, "--opt expects key=value, got " + kv);
    out[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Imputation benchmark toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalFlags g;
  app.add_option("--config", g.config, "Experiment config file (key = value)");
  app.add_option("--seed", g.seed, "Seed (master seed for experiments)");
  app.add_option("--workers", g.workers, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--out", g.out, "Output directory");

  // generate
  auto* gen = app.add_subcommand("generate", "Write a synthetic complete dataset");
  std::string genOutput;
  std::optional<ib::Index> genRows;
  std::optional<ib::Index> genCols;
  std::string genCovariance;
  std::optional<double> genRho;
  std::optional<bool> genAugment;
  gen->add_option("--output", genOutput, "CSV to write");
  gen->add_option("--rows", genRows, "Row count");
  gen->add_option("--cols", genCols, "Gaussian column count p");
  gen->add_option("--covariance", genCovariance, "identity|constant|toeplitz")
      ->check(CLI::IsMember({"identity", "constant", "toeplitz"}));
  gen->add_option("--rho", genRho, "Correlation parameter");
  gen->add_option("--augment", genAugment, "Append interaction and step columns (true|false)");

  // ampute
  auto* amp = app.add_subcommand("ampute", "Delete cells completely at random");
  std::string ampInput;
  std::string ampOutput;
  std::string ampMask;
  double ampPct = 0.0;
  std::string ampPolicy = "exact";
  amp->add_option("--input", ampInput, "Complete CSV")->required();
  amp->add_option("--output", ampOutput, "Amputed CSV");
  amp->add_option("--mask", ampMask, "Mask CSV (default: <output>.mask.csv)");
  amp->add_option("--pct", ampPct, "Missing fraction per column in [0, 1]")->required();
  amp->add_option("--policy", ampPolicy, "exact|bernoulli")->check(CLI::IsMember({"exact", "bernoulli"}));

  // impute
  auto* imp = app.add_subcommand("impute", "Fill missing cells");
  std::string impInput;
  std::string impOutput;
  std::string impMethod;
  std::string impDiagnostics;
  std::vector<std::string> impOpts;
  bool impRaw = false;
  imp->add_option("--input", impInput, "CSV with NA cells")->required();
  imp->add_option("--output", impOutput, "Completed CSV");
  imp->add_option("--method", impMethod, "mean|mice|mi|amelia|hmisc|missforest")->required();
  imp->add_option("--opt", impOpts, "Method option key=value (repeatable)");
  imp->add_option("--diagnostics", impDiagnostics, "JSON sidecar (default: <output>.diagnostics.json)");
  imp->add_flag("--raw", impRaw, "Impute on the original scale (no standardization)");

  // evaluate
  auto* eva = app.add_subcommand("evaluate", "Per-variable RMSE over imputed cells");
  std::string evaTruth;
  std::string evaCompleted;
  std::string evaMask;
  std::string evaOutput;
  eva->add_option("--truth", evaTruth, "Complete ground-truth CSV")->required();
  eva->add_option("--completed", evaCompleted, "Imputed CSV")->required();
  eva->add_option("--mask", evaMask, "0/1 mask CSV")->required();
  eva->add_option("--output", evaOutput, "CSV to write (default: stdout)");

  // experiment
  auto* exp = app.add_subcommand("experiment", "Run the full benchmark");

  // report
  auto* rep = app.add_subcommand("report", "Rebuild summaries from <out>/scores.csv");
  std::string repDir;
  rep->add_option("dir", repDir, "Experiment output directory (default: --out)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*gen) {
      ib::SyntheticSpec spec = g.config.empty() ? ib::ExperimentConfig::defaults().synthetic : ib::loadConfig(g.config).synthetic;
      if (genRows) spec.n = *genRows;
      if (genCols) spec.p = *genCols;
      if (genCovariance == "identity") spec.recipe = ib::CovarianceRecipe::Identity;
      if (genCovariance == "constant") spec.recipe = ib::CovarianceRecipe::ConstantCorrelation;
      if (genCovariance == "toeplitz") spec.recipe = ib::CovarianceRecipe::Toeplitz;
      if (genRho) spec.rho = *genRho;
      if (genAugment) spec.nonlinearAugment = *genAugment;
      if (g.seed) spec.generatorSeed = *g.seed;
      ib::csv::writeDataset(requireOutput(genOutput, g, "synthetic.csv"), ib::generateSynthetic(spec));
    } else if (*amp) {
      const auto data = ib::csv::readDataset(ampInput);
      const auto policy = ampPolicy == "bernoulli" ? ib::AmputationPolicy::Bernoulli : ib::AmputationPolicy::ExactCount;
      const auto amputed = ib::amputeMcar(data, {ampPct, policy, g.seed.value_or(0)});
      const auto output = requireOutput(ampOutput, g, "amputed.csv");
      ib::csv::writeDataset(output, amputed);
      ib::csv::writeMask(ampMask.empty() ? withSuffix(output, ".mask.csv") : ampMask, amputed.columnNames(),
                         amputed.mask());
    } else if (*imp) {
      const auto data = ib::csv::readDataset(impInput);
      const ib::ImputerSpec spec(ib::parseMethod(impMethod), parseOptions(impOpts), g.seed.value_or(0));
      ib::ImputationResult result;
      if (impRaw) {
        result = ib::impute(data, spec);
      } else {
        // Same pipeline as the benchmark: impute on the standardized scale.
        const auto params = ib::observedColumnStats(data);
        result = ib::impute(ib::standardize(data, params), spec);
        result.completed = ib::unstandardize(result.completed, params);
      }
      const auto output = requireOutput(impOutput, g, "imputed.csv");
      ib::csv::writeDataset(output, result.completed);
      std::ofstream sidecar(impDiagnostics.empty() ? withSuffix(output, ".diagnostics.json") : impDiagnostics);
      if (!sidecar) throw ib::Error(ib::Errc::Io, "cannot write diagnostics sidecar");
      sidecar << ib::io::diagnosticsJson(result).dump(2) << '\n';
    } else if (*eva) {
      const auto truth = ib::csv::readDataset(evaTruth);
      const auto completed = ib::csv::readDataset(evaCompleted);
      const auto mask = ib::csv::readMask(evaMask);
      const auto scores = ib::scoreImputation(truth, completed, mask);
      std::ofstream file;
      if (!evaOutput.empty()) {
        file.open(evaOutput);
        if (!file) throw ib::Error(ib::Errc::Io, "cannot write " + evaOutput);
      }
      std::ostream& out = evaOutput.empty() ? std::cout : file;
      out << "variable,rmse\n";
      for (std::size_t j = 0; j < scores.size(); ++j) {
        out << truth.columnNames()[j] << ',' << (scores[j] ? ib::csv::formatReal(*scores[j]) : std::string("NA")) << '\n';
      }
    } else if (*exp) {
      const auto config = baseConfig(g);
      const auto result = ib::runExperiment(config);
      std::cout << "scores: " << result.scores.size() << ", failed cells: " << result.failures.size() << '\n';
      if (!result.scores.empty()) {
        std::cout << ib::buildReport(result.scores, config.similarityMethods, config.alpha).text;
      }
    } else if (*rep) {
      std::string dir = repDir.empty() ? g.out : repDir;
      std::vector<ib::Method> similarity;
      double alpha = 0.05;
      if (!g.config.empty()) {
        const auto config = ib::loadConfig(g.config);
        similarity = config.similarityMethods;
        alpha = config.alpha;
        if (dir.empty()) dir = config.outputDir;
      }
      if (dir.empty()) throw ib::Error(ib::Errc::InvalidOption, "report needs a directory (positional or --out)");
      std::cout << ib::report(dir, similarity, alpha);
    }
  } catch (const ib::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exitCodeFor(e.category());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
