#pragma once

// End-to-end benchmark: sample, ampute (MCAR), standardize with observed
// statistics, impute, score, and emit the score/summary/rank/ANOVA files.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "imputebench/amputation.hpp"
#include "imputebench/config.hpp"
#include "imputebench/csv.hpp"
#include "imputebench/dataset.hpp"
#include "imputebench/evaluation.hpp"
#include "imputebench/imputers.hpp"
#include "imputebench/parallel.hpp"
#include "imputebench/random.hpp"
#include "imputebench/synthetic.hpp"

namespace imputebench {

struct CellFailure {
  Method method = Method::Mean;
  double pct = 0.0;
  int sample = 0;
  int iteration = 0;
  std::string error;
  std::string message;
};

struct ExperimentResult {
  std::vector<std::string> variables;
  std::vector<CellScore> scores;     // canonical order
  std::vector<CellFailure> failures;  // canonical order
};

inline std::uint64_t pctKey(double pct) { return static_cast<std::uint64_t>(std::llround(pct * 1e6)); }

inline std::uint64_t cellSeed(std::uint64_t masterSeed, int sample, double pct, Method method, int iteration) {
  return stableHash({masterSeed, static_cast<std::uint64_t>(sample), pctKey(pct), hashText(methodName(method)),
                     static_cast<std::uint64_t>(iteration)});
}

inline std::uint64_t maskSeed(const ExperimentConfig& config, int sample, double pct, int iteration) {
  return stableHash({config.masterSeed, static_cast<std::uint64_t>(sample), pctKey(pct), hashText("mask"),
                     static_cast<std::uint64_t>(config.freshMaskPerIteration ? iteration : 0)});
}

/// Complete population the samples are drawn from.
inline Dataset loadPopulation(const ExperimentConfig& config) {
  if (config.inputPath) return completeRows(csv::readDataset(*config.inputPath));
  return generateSynthetic(config.synthetic);
}

/// Row subset of size sampleSize, without replacement, ascending row order.
inline Dataset drawSample(const ExperimentConfig& config, const Dataset& population, int sample) {
  const Index n = population.rows();
  if (config.sampleSize > n) {
    throw Error(Errc::TooFewRows, "sampleSize " + std::to_string(config.sampleSize) + " exceeds population of " +
                                      std::to_string(n) + " complete rows");
  }
  Rng rng(stableHash({config.masterSeed, hashText("sample"), static_cast<std::uint64_t>(sample)}));
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  for (Index k = 0; k < config.sampleSize; ++k) {
    std::uniform_int_distribution<Index> pick(k, n - 1);
    std::swap(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(pick(rng))]);
  }
  order.resize(static_cast<std::size_t>(config.sampleSize));
  std::sort(order.begin(), order.end());
  return population.selectRows(order);
}

/// Standardized truth and standardized amputed data for one (sample, pct)
/// (or one iteration, with freshMaskPerIteration).
struct PreparedCell {
  Dataset truth;
  Dataset amputed;
};

inline PreparedCell prepareCell(const ExperimentConfig& config, const Dataset& sampleData, int sample, double pct,
                                int iteration = 0) {
  const Dataset amputed = amputeMcar(sampleData, {pct, config.policy, maskSeed(config, sample, pct, iteration)});
  const auto params = observedColumnStats(amputed);
  return {standardize(sampleData, params), standardize(amputed, params)};
}

/// Imputes and scores one cell; each column with amputed cells yields one
/// CellScore.
inline std::vector<CellScore> scoreCell(const ExperimentConfig& config, const PreparedCell& prepared,
                                        const ImputerSpec& spec, int sample, double pct, int iteration) {
  const auto seed = cellSeed(config.masterSeed, sample, pct, spec.method(), iteration);
  const auto result = impute(prepared.amputed, spec.withSeed(seed));
  const auto perColumn = scoreImputation(prepared.truth, result.completed, prepared.amputed.mask());
  std::vector<CellScore> out;
  for (Index j = 0; j < prepared.truth.cols(); ++j) {
    if (!perColumn[static_cast<std::size_t>(j)]) continue;
    out.push_back({spec.method(), pct, sample, iteration, j, prepared.truth.columnNames()[static_cast<std::size_t>(j)],
                   *perColumn[static_cast<std::size_t>(j)]});
  }
  return out;
}

/// Recomputes a single cell from its derived seeds alone.
inline std::vector<CellScore> runSingleCell(const ExperimentConfig& config, const Dataset& population, int sample,
                                            double pct, const ImputerSpec& spec, int iteration) {
  const Dataset sampleData = drawSample(config, population, sample);
  const auto prepared = prepareCell(config, sampleData, sample, pct, iteration);
  return scoreCell(config, prepared, spec, sample, pct, iteration);
}

inline ExperimentResult runExperimentOn(const ExperimentConfig& config, const Dataset& population) {
  config.validate();
  ExperimentResult result;
  result.variables = population.columnNames();

  struct Unit {
    int sample;
    std::size_t pctIndex;
    std::size_t methodIndex;
    int iteration;
    std::size_t preparedIndex;
  };
  std::vector<Dataset> samples;
  for (int s = 0; s < config.sampleCount; ++s) samples.push_back(drawSample(config, population, s));

  std::vector<PreparedCell> prepared;
  std::map<std::tuple<int, std::size_t, int>, std::size_t> preparedIndex;
  std::vector<Unit> units;
  const int maskIterations = config.freshMaskPerIteration ? config.iterationsPerCell : 1;
  for (int s = 0; s < config.sampleCount; ++s) {
    for (std::size_t p = 0; p < config.missingPcts.size(); ++p) {
      for (int it = 0; it < maskIterations; ++it) {
        preparedIndex[{s, p, it}] = prepared.size();
        prepared.push_back(prepareCell(config, samples[static_cast<std::size_t>(s)], s, config.missingPcts[p], it));
      }
      for (std::size_t m = 0; m < config.methods.size(); ++m) {
        for (int it = 0; it < config.iterationsFor(config.methods[m].method()); ++it) {
          units.push_back({s, p, m, it, preparedIndex.at({s, p, config.freshMaskPerIteration ? it : 0})});
        }
      }
    }
  }

  std::vector<std::vector<CellScore>> unitScores(units.size());
  std::vector<std::optional<CellFailure>> unitFailures(units.size());
  parallelFor(units.size(), config.workers, [&](std::size_t u) {
    const auto& unit = units[u];
    const auto& spec = config.methods[unit.methodIndex];
    const double pct = config.missingPcts[unit.pctIndex];
    try {
      unitScores[u] = scoreCell(config, prepared[unit.preparedIndex], spec, unit.sample, pct, unit.iteration);
    } catch (const Error& e) {
      unitFailures[u] = CellFailure{spec.method(), pct, unit.sample, unit.iteration, std::string(errc_name(e.code())), e.what()};
    }
  });
  for (std::size_t u = 0; u < units.size(); ++u) {
    result.scores.insert(result.scores.end(), unitScores[u].begin(), unitScores[u].end());
    if (unitFailures[u]) result.failures.push_back(*unitFailures[u]);
  }
  sortScores(result.scores);
  std::stable_sort(result.failures.begin(), result.failures.end(), [](const CellFailure& a, const CellFailure& b) {
    return std::tie(a.method, a.pct, a.sample, a.iteration) < std::tie(b.method, b.pct, b.sample, b.iteration);
  });
  return result;
}

// ---------------------------------------------------------------------------
// File formats

namespace io {

inline std::string formatPct(double pct) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", pct * 100.0);
  return buf;
}

inline void writeScores(std::ostream& out, const std::vector<CellScore>& scores) {
  out << "method,pct,sample,iteration,variable,rmse\n";
  for (const auto& s : scores) {
    out << methodName(s.method) << ',' << formatPct(s.pct) << ',' << s.sample << ',' << s.iteration << ',' << s.variable
        << ',' << csv::formatReal(s.rmse) << '\n';
  }
}

/// Variable indices follow first appearance in the file.
inline std::vector<CellScore> readScores(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || csv::detail::trim(line) != "method,pct,sample,iteration,variable,rmse") {
    throw Error(Errc::ParseError, "scores CSV header must be method,pct,sample,iteration,variable,rmse");
  }
  std::map<std::string, Index> variableIndex;
  std::vector<CellScore> out;
  while (std::getline(in, line)) {
    if (csv::detail::trim(line).empty()) continue;
    const auto f = csv::detail::splitLine(line);
    if (f.size() != 6) throw Error(Errc::ParseError, "scores CSV row needs 6 fields");
    CellScore s;
    s.method = parseMethod(f[0]);
    s.pct = std::stod(std::string(f[1])) / 100.0;
    s.sample = std::stoi(std::string(f[2]));
    s.iteration = std::stoi(std::string(f[3]));
    s.variable = std::string(f[4]);
    const auto [it, inserted] = variableIndex.try_emplace(s.variable, static_cast<Index>(variableIndex.size()));
    s.variableIndex = it->second;
    s.rmse = std::stod(std::string(f[5]));
    out.push_back(std::move(s));
  }
  return out;
}

inline void writeFailures(std::ostream& out, const std::vector<CellFailure>& failures) {
  out << "method,pct,sample,iteration,error,message\n";
  for (const auto& f : failures) {
    std::string msg = f.message;
    std::replace(msg.begin(), msg.end(), ',', ';');
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    out << methodName(f.method) << ',' << formatPct(f.pct) << ',' << f.sample << ',' << f.iteration << ',' << f.error << ','
        << msg << '\n';
  }
}

inline std::string optionalReal(const std::optional<double>& v) { return v ? csv::formatReal(*v) : std::string("NA"); }

inline void writeSummary(std::ostream& out, const std::vector<ScoreSummary>& summary) {
  out << "method,pct,variable,count,mean,median,Q1,Q2,Q3,Q4,sd\n";
  for (const auto& s : summary) {
    out << methodName(s.method) << ',' << formatPct(s.pct) << ',' << s.variable << ',' << s.count << ','
        << csv::formatReal(s.mean) << ',' << csv::formatReal(s.median) << ',' << csv::formatReal(s.q1) << ','
        << csv::formatReal(s.q2) << ',' << csv::formatReal(s.q3) << ',' << csv::formatReal(s.q4) << ',' << optionalReal(s.sd)
        << '\n';
  }
}

/// Five-number summaries for boxplots.
inline void writeBoxplot(std::ostream& out, const std::vector<ScoreSummary>& summary) {
  out << "variable,method,pct,min,Q1,median,Q3,max\n";
  std::vector<const ScoreSummary*> rows;
  for (const auto& s : summary) rows.push_back(&s);
  std::stable_sort(rows.begin(), rows.end(), [](const ScoreSummary* a, const ScoreSummary* b) {
    return std::tie(a->variableIndex, a->method, a->pct) < std::tie(b->variableIndex, b->method, b->pct);
  });
  for (const auto* s : rows) {
    out << s->variable << ',' << methodName(s->method) << ',' << formatPct(s->pct) << ',' << csv::formatReal(s->min) << ','
        << csv::formatReal(s->q1) << ',' << csv::formatReal(s->median) << ',' << csv::formatReal(s->q3) << ','
        << csv::formatReal(s->q4) << '\n';
  }
}

/// Consolidated rank table: one row per method; for each pct the columns
/// meanRank-avg, meanRank-med, sdRank-avg, sdRank-med (rounded half up).
inline void writeRankTable(std::ostream& out, const RankTable& table) {
  out << "method";
  for (const auto& pr : table.pcts) {
    const auto tag = "pct" + formatPct(pr.pct) + "_";
    out << ',' << tag << "meanRank-avg," << tag << "meanRank-med," << tag << "sdRank-avg," << tag << "sdRank-med";
  }
  out << '\n';
  for (std::size_t m = 0; m < table.methods.size(); ++m) {
    out << methodName(table.methods[m]);
    for (const auto& pr : table.pcts) {
      out << ',' << roundHalfUp(pr.meanRank[m].average) << ',' << roundHalfUp(pr.meanRank[m].median) << ','
          << roundHalfUp(pr.sdRank[m].average) << ',' << roundHalfUp(pr.sdRank[m].median);
    }
    out << '\n';
  }
}

inline void writeRankTableRaw(std::ostream& out, const RankTable& table) {
  out << "method,pct,statistic,average,median\n";
  for (const auto& pr : table.pcts) {
    for (std::size_t m = 0; m < table.methods.size(); ++m) {
      out << methodName(table.methods[m]) << ',' << formatPct(pr.pct) << ",mean," << csv::formatReal(pr.meanRank[m].average)
          << ',' << csv::formatReal(pr.meanRank[m].median) << '\n';
      out << methodName(table.methods[m]) << ',' << formatPct(pr.pct) << ",sd," << csv::formatReal(pr.sdRank[m].average)
          << ',' << csv::formatReal(pr.sdRank[m].median) << '\n';
    }
  }
}

inline nlohmann::json testJson(const std::optional<TestResult>& t, bool similar) {
  if (!t) return {{"skipped", "ZeroWithinVariance"}};
  return {{"F", t->statistic}, {"df", {t->df1, t->df2}}, {"p", t->pValue}, {"similar", similar}};
}

inline nlohmann::json similarityJson(const SimilarityReport& r) {
  nlohmann::json j;
  j["alpha"] = r.alpha;
  for (auto m : r.methods) j["methods"].push_back(methodName(m));
  j["variables"] = nlohmann::json::array();
  for (const auto& v : r.variables) {
    nlohmann::json entry;
    entry["variable"] = v.variable;
    entry["all"] = testJson(v.overall, v.overallSimilar);
    for (const auto& p : v.pairs) {
      auto t = testJson(p.test, p.similar);
      t["methods"] = {methodName(p.first), methodName(p.second)};
      entry["pairs"].push_back(t);
    }
    j["variables"].push_back(entry);
  }
  j["similarCounts"]["all"] = r.overallSimilarCount;
  std::size_t k = 0;
  for (std::size_t a = 0; a < r.methods.size(); ++a) {
    for (std::size_t b = a + 1; b < r.methods.size(); ++b, ++k) {
      j["similarCounts"][std::string(methodName(r.methods[a])) + "-" + std::string(methodName(r.methods[b]))] =
          r.pairSimilarCounts[k];
    }
  }
  j["variableCount"] = r.variables.size();
  return j;
}

inline nlohmann::json diagnosticsJson(const ImputationResult& r) {
  const auto& d = r.diagnostics;
  nlohmann::json j;
  j["method"] = methodName(r.spec.method());
  j["seed"] = r.spec.seed();
  j["options"] = r.spec.options();
  j["iterations"] = d.iterations;
  j["changePerCycle"] = d.changePerCycle;
  j["pooled"] = d.pooled;
  if (d.converged) j["converged"] = *d.converged;
  if (d.convergenceRatio) j["convergenceRatio"] = *d.convergenceRatio;
  if (!d.emIterations.empty()) j["emIterations"] = d.emIterations;
  if (d.conditionNumber) j["conditionNumber"] = std::isfinite(*d.conditionNumber) ? nlohmann::json(*d.conditionNumber) : nlohmann::json("inf");
  if (d.missingPatterns) j["missingPatterns"] = d.missingPatterns;
  if (r.spec.method() == Method::Hmisc) j["burnIn"] = d.burnIn;
  if (r.spec.method() == Method::Mi) {
    j["collinearPairs"] = nlohmann::json::array();
    for (const auto& [a, b] : d.collinearPairs) {
      j["collinearPairs"].push_back({r.completed.columnNames()[static_cast<std::size_t>(a)],
                                     r.completed.columnNames()[static_cast<std::size_t>(b)]});
    }
  }
  return j;
}

}  // namespace io

// ---------------------------------------------------------------------------
// Reporting

/// Percentages used for the rank table: 5/15/25 when all present in the
/// scores, otherwise every percentage that was scored.
inline std::vector<double> rankPcts(const std::vector<CellScore>& scores) {
  std::vector<double> present;
  for (const auto& s : scores) {
    bool seen = false;
    for (double p : present) seen |= samePct(p, s.pct);
    if (!seen) present.push_back(s.pct);
  }
  std::sort(present.begin(), present.end());
  std::vector<double> preferred;
  for (double want : {0.05, 0.15, 0.25}) {
    for (double p : present) {
      if (samePct(p, want)) preferred.push_back(p);
    }
  }
  return preferred.size() == 3 ? preferred : present;
}

struct ReportArtifacts {
  std::vector<ScoreSummary> summary;
  RankTable ranks;
  std::optional<SimilarityReport> similarity;
  std::string text;
};

inline ReportArtifacts buildReport(const std::vector<CellScore>& scores, std::vector<Method> similarityMethods = {},
                                   double alpha = 0.05) {
  if (scores.empty()) throw Error(Errc::MissingOutputs, "no scores to report");
  ReportArtifacts art;
  art.summary = summarizeScores(scores);
  std::vector<Method> methods;
  for (auto m : kAllMethods) {
    for (const auto& s : scores) {
      if (s.method == m) {
        methods.push_back(m);
        break;
      }
    }
  }
  art.ranks = buildRankTable(art.summary, rankPcts(scores), methods);

  auto has = [&](Method m) { return std::find(methods.begin(), methods.end(), m) != methods.end(); };
  if (similarityMethods.empty()) {
    if (has(Method::Mice) && has(Method::Amelia) && has(Method::Hmisc)) {
      similarityMethods = {Method::Mice, Method::Amelia, Method::Hmisc};
    } else {
      similarityMethods = methods;
    }
  }
  if (similarityMethods.size() >= 2) {
    try {
      art.similarity = similarityAnova(scores, similarityMethods, alpha);
    } catch (const Error& e) {
      if (e.code() != Errc::MissingCell) throw;
    }
  }

  std::ostringstream text;
  text << "Consolidated mean-RMSE ranks (average / median across " << art.ranks.variables.size() << " variables)\n";
  text << "method      ";
  for (const auto& pr : art.ranks.pcts) text << "  " << io::formatPct(pr.pct) << "%: avg   med ";
  text << '\n';
  for (std::size_t m = 0; m < art.ranks.methods.size(); ++m) {
    char name[16];
    std::snprintf(name, sizeof name, "%-12s", std::string(methodName(art.ranks.methods[m])).c_str());
    text << name;
    for (const auto& pr : art.ranks.pcts) {
      char cell[48];
      std::snprintf(cell, sizeof cell, "      %5.2f %5.1f ", pr.meanRank[m].average, pr.meanRank[m].median);
      text << cell;
    }
    text << '\n';
  }
  if (art.similarity) {
    const auto& r = *art.similarity;
    text << "ANOVA similarity at alpha=" << r.alpha << " (" << r.variables.size() << " variables): all="
         << r.overallSimilarCount;
    std::size_t k = 0;
    for (std::size_t a = 0; a < r.methods.size(); ++a) {
      for (std::size_t b = a + 1; b < r.methods.size(); ++b, ++k) {
        text << ", " << methodName(r.methods[a]) << "-" << methodName(r.methods[b]) << "=" << r.pairSimilarCounts[k];
      }
    }
    text << '\n';
  }
  art.text = text.str();
  return art;
}

namespace detail {
template <typename Writer>
void writeFile(const std::filesystem::path& path, Writer&& writer) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::Io, "cannot write " + path.string());
  writer(out);
}
}  // namespace detail

inline void writeReport(const std::filesystem::path& dir, const ReportArtifacts& art) {
  detail::writeFile(dir / "summary.csv", [&](std::ostream& o) { io::writeSummary(o, art.summary); });
  detail::writeFile(dir / "boxplot.csv", [&](std::ostream& o) { io::writeBoxplot(o, art.summary); });
  detail::writeFile(dir / "ranks.csv", [&](std::ostream& o) { io::writeRankTable(o, art.ranks); });
  detail::writeFile(dir / "ranks_raw.csv", [&](std::ostream& o) { io::writeRankTableRaw(o, art.ranks); });
  const nlohmann::json anova = art.similarity ? io::similarityJson(*art.similarity) : nlohmann::json::object();
  detail::writeFile(dir / "anova.json", [&](std::ostream& o) { o << anova.dump(2) << '\n'; });
}

/// Regenerates the derived report files from <dir>/scores.csv and returns a
/// human-readable summary.
inline std::string report(const std::filesystem::path& dir, std::vector<Method> similarityMethods = {},
                          double alpha = 0.05) {
  std::ifstream in(dir / "scores.csv");
  if (!in) throw Error(Errc::MissingOutputs, "no scores.csv in " + dir.string());
  const auto scores = io::readScores(in);
  const auto art = buildReport(scores, std::move(similarityMethods), alpha);
  writeReport(dir, art);
  return art.text;
}

/// Runs the whole experiment; writes scores.csv, failures.csv and the report
/// files into config.outputDir when it is non-empty.
inline ExperimentResult runExperiment(const ExperimentConfig& config) {
  const auto result = runExperimentOn(config, loadPopulation(config));
  if (!config.outputDir.empty()) {
    const std::filesystem::path dir(config.outputDir);
    std::filesystem::create_directories(dir);
    detail::writeFile(dir / "scores.csv", [&](std::ostream& o) { io::writeScores(o, result.scores); });
    detail::writeFile(dir / "failures.csv", [&](std::ostream& o) { io::writeFailures(o, result.failures); });
    if (!result.scores.empty()) writeReport(dir, buildReport(result.scores, config.similarityMethods, config.alpha));
  }
  return result;
}

}  // namespace imputebench
