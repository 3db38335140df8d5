#pragma once

// CSV reading and writing for datasets and masks. Missing cells are the empty
// string or the literal NA; numbers are written with 17 significant digits.

#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "imputebench/dataset.hpp"
#include "imputebench/error.hpp"

namespace imputebench::csv {

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> splitLine(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
  return out;
}

inline std::string unquote(std::string_view s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return std::string(s);
}

}  // namespace detail

inline std::string formatReal(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline Dataset readDataset(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(Errc::ParseError, "empty CSV input");
  std::vector<std::string> names;
  for (auto field : detail::splitLine(line)) names.push_back(detail::unquote(field));

  const auto p = static_cast<Index>(names.size());
  std::vector<double> cells;
  std::vector<std::uint8_t> missing;
  Index n = 0;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::splitLine(line);
    if (static_cast<Index>(fields.size()) != p) {
      throw Error(Errc::ParseError, "row " + std::to_string(n + 1) + " has " + std::to_string(fields.size()) +
                                        " fields, expected " + std::to_string(p));
    }
    for (auto field : fields) {
      if (field.empty() || field == "NA") {
        cells.push_back(0.0);
        missing.push_back(1);
        continue;
      }
      double value = 0.0;
      const auto* first = field.data();
      const auto* last = field.data() + field.size();
      if (*first == '+') ++first;
      const auto [ptr, ec] = std::from_chars(first, last, value);
      if (ec != std::errc{} || ptr != last) {
        throw Error(Errc::ParseError, "row " + std::to_string(n + 1) + ": cannot parse '" + std::string(field) + "'");
      }
      cells.push_back(value);
      missing.push_back(0);
    }
    ++n;
  }
  if (n == 0) throw Error(Errc::ParseError, "CSV has a header but no rows");

  Eigen::MatrixXd values(n, p);
  MissingMask mask(n, p);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < p; ++j) {
      const auto k = static_cast<std::size_t>(i * p + j);
      values(i, j) = cells[k];
      mask.set(i, j, missing[k] != 0);
    }
  }
  return Dataset(std::move(names), std::move(values), std::move(mask));
}

inline Dataset readDataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open " + path);
  return readDataset(in);
}

inline void writeHeader(std::ostream& out, const std::vector<std::string>& names) {
  for (std::size_t j = 0; j < names.size(); ++j) out << (j ? "," : "") << names[j];
  out << '\n';
}

/// Masked cells are written as NA.
inline void writeDataset(std::ostream& out, const Dataset& data) {
  writeHeader(out, data.columnNames());
  for (Index i = 0; i < data.rows(); ++i) {
    for (Index j = 0; j < data.cols(); ++j) {
      if (j) out << ',';
      out << (data.missing(i, j) ? std::string("NA") : formatReal(data.values()(i, j)));
    }
    out << '\n';
  }
}

inline void writeDataset(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::Io, "cannot write " + path);
  writeDataset(out, data);
}

/// Mask as 0/1 CSV with the dataset's header.
inline void writeMask(std::ostream& out, const std::vector<std::string>& names, const MissingMask& mask) {
  writeHeader(out, names);
  for (Index i = 0; i < mask.rows(); ++i) {
    for (Index j = 0; j < mask.cols(); ++j) out << (j ? "," : "") << (mask(i, j) ? '1' : '0');
    out << '\n';
  }
}

inline void writeMask(const std::string& path, const std::vector<std::string>& names, const MissingMask& mask) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::Io, "cannot write " + path);
  writeMask(out, names, mask);
}

inline MissingMask readMask(std::istream& in) {
  const Dataset flags = readDataset(in);
  if (!flags.complete()) throw Error(Errc::ParseError, "mask CSV contains empty cells");
  MissingMask mask(flags.rows(), flags.cols());
  for (Index i = 0; i < flags.rows(); ++i) {
    for (Index j = 0; j < flags.cols(); ++j) {
      const double v = flags.values()(i, j);
      if (v != 0.0 && v != 1.0) throw Error(Errc::ParseError, "mask CSV cells must be 0 or 1");
      mask.set(i, j, v == 1.0);
    }
  }
  return mask;
}

inline MissingMask readMask(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open " + path);
  return readMask(in);
}

}  // namespace imputebench::csv
