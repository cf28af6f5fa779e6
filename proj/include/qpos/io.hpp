#pragma once

// JSON and CSV serialization.
//
// Complex numbers are [re, im] pairs (a bare number is accepted on input).
// Matrices are arrays of rows. Field CSVs have one row per grid point: the
// real coordinates x1,y1,...,xn,yn followed by the value columns.

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qpos/curvature.hpp"
#include "qpos/expression.hpp"
#include "qpos/q_positivity.hpp"

namespace qpos::io {

using json = nlohmann::json;

inline json to_json(Complex c) { return json::array({c.real(), c.imag()}); }

inline json to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(to_json(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Complex complex_from_json(const json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) {
    return {j[0].get<double>(), j[1].get<double>()};
  }
  if (j.is_object() && j.contains("re")) return {j.at("re").get<double>(), j.value("im", 0.0)};
  throw Error(Errc::parse_error, "expected a number, [re, im] or {\"re\":..,\"im\":..}");
}

inline Matrix matrix_from_json(const json& j, int n) {
  if (!j.is_array() || static_cast<int>(j.size()) != n) {
    throw Error(Errc::parse_error, "matrix must have " + std::to_string(n) + " rows");
  }
  Matrix m(n, n);
  for (int r = 0; r < n; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<int>(row.size()) != n) {
      throw Error(Errc::parse_error, "matrix row " + std::to_string(r) + " must have " + std::to_string(n) + " entries");
    }
    for (int c = 0; c < n; ++c) m(r, c) = complex_from_json(row[static_cast<std::size_t>(c)]);
  }
  return m;
}

inline json to_json(const TorusGeometry& g) {
  return json{{"n", g.complex_dim()}, {"grid", g.grid_shape()}, {"periods", g.periods()}};
}

inline TorusGeometry geometry_from_json(const json& j) {
  const int n = j.at("n").get<int>();
  if (n < 1 || n > kMaxComplexDim) throw Error(Errc::unsupported_dimension, "unsupported complex dimension");
  std::vector<int> grid;
  const json& g = j.at("grid");
  if (g.is_number_integer()) grid.assign(static_cast<std::size_t>(2 * n), g.get<int>());
  else grid = g.get<std::vector<int>>();
  std::vector<double> periods;
  if (j.contains("periods")) {
    const json& p = j.at("periods");
    if (p.is_number()) periods.assign(static_cast<std::size_t>(2 * n), p.get<double>());
    else periods = p.get<std::vector<double>>();
  }
  return TorusGeometry(n, std::move(grid), std::move(periods));
}

inline std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

inline void write_coordinates(std::ostream& out, const TorusGeometry& g, std::size_t p) {
  for (int a = 0; a < g.real_dim(); ++a) out << format_double(g.coordinate(p, a)) << ',';
}

inline void write_header(std::ostream& out, const TorusGeometry& g, const std::vector<std::string>& columns) {
  for (int a = 0; a < g.real_dim(); ++a) out << TorusGeometry::axis_name(a) << ',';
  for (std::size_t i = 0; i < columns.size(); ++i) out << (i ? "," : "") << columns[i];
  out << '\n';
}

inline void write_csv(std::ostream& out, const ScalarField& f, const std::string& column = "value") {
  write_header(out, f.geometry(), {column});
  for (std::size_t p = 0; p < f.size(); ++p) {
    write_coordinates(out, f.geometry(), p);
    out << format_double(f[p]) << '\n';
  }
}

inline void write_csv(std::ostream& out, const EigenvalueField& ev) {
  std::vector<std::string> columns;
  for (int i = 1; i <= ev.dim(); ++i) columns.push_back("lambda" + std::to_string(i));
  write_header(out, ev.geometry(), columns);
  for (std::size_t p = 0; p < ev.size(); ++p) {
    write_coordinates(out, ev.geometry(), p);
    auto v = ev.at(p);
    for (std::size_t i = 0; i < v.size(); ++i) out << (i ? "," : "") << format_double(v[i]);
    out << '\n';
  }
}

inline void write_csv(std::ostream& out, const HermitianMatrixField& m) {
  std::vector<std::string> columns;
  for (int j = 1; j <= m.dim(); ++j) {
    for (int k = 1; k <= m.dim(); ++k) {
      columns.push_back("re_" + std::to_string(j) + std::to_string(k));
      columns.push_back("im_" + std::to_string(j) + std::to_string(k));
    }
  }
  write_header(out, m.geometry(), columns);
  for (std::size_t p = 0; p < m.size(); ++p) {
    write_coordinates(out, m.geometry(), p);
    bool first = true;
    for (int j = 0; j < m.dim(); ++j) {
      for (int k = 0; k < m.dim(); ++k) {
        const Complex c = m.entry(p, j, k);
        out << (first ? "" : ",") << format_double(c.real()) << ',' << format_double(c.imag());
        first = false;
      }
    }
    out << '\n';
  }
}

template <class Field>
void write_csv_file(const std::string& path, const Field& field) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::invalid_argument, "cannot open " + path + " for writing");
  write_csv(out, field);
}

/// Reads a scalar field CSV written by write_csv. Rows must cover the grid in
/// storage order and their coordinates must match the grid.
inline ScalarField read_scalar_csv(std::istream& in, const TorusGeometry& g) {
  std::string line;
  if (!std::getline(in, line)) throw Error(Errc::parse_error, "field CSV is empty");
  std::vector<double> values;
  values.reserve(g.point_count());
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (row >= g.point_count()) throw Error(Errc::geometry_mismatch, "field CSV has more rows than grid points");
    std::vector<double> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc()) throw Error(Errc::parse_error, "bad number '" + cell + "' in field CSV");
      cells.push_back(v);
    }
    if (static_cast<int>(cells.size()) != g.real_dim() + 1) {
      throw Error(Errc::geometry_mismatch, "field CSV row has the wrong number of columns");
    }
    for (int a = 0; a < g.real_dim(); ++a) {
      const double expected = g.coordinate(row, a);
      if (std::abs(cells[static_cast<std::size_t>(a)] - expected) > 1e-9 * g.periods()[static_cast<std::size_t>(a)]) {
        throw Error(Errc::geometry_mismatch, "field CSV coordinates do not match the grid");
      }
    }
    values.push_back(cells.back());
    ++row;
  }
  if (row != g.point_count()) throw Error(Errc::geometry_mismatch, "field CSV has fewer rows than grid points");
  ScalarField field(g, std::move(values));
  field.require_finite("field CSV");
  return field;
}

inline ScalarField read_scalar_csv_file(const std::string& path, const TorusGeometry& g) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::invalid_argument, "cannot open field file " + path);
  return read_scalar_csv(in, g);
}

/// Line-bundle document: {"r_const": [[...]], "phi": "<expression>"} or
/// {"r_const": ..., "phi_file": "<csv path>"}. Missing phi means phi = 0.
inline LineBundleMetric bundle_from_json(const json& j, const TorusGeometry& g, const std::string& base_dir = "") {
  const Matrix r = matrix_from_json(j.at("r_const"), g.complex_dim());
  if (j.contains("phi") && j.contains("phi_file")) {
    throw Error(Errc::parse_error, "give either phi or phi_file, not both");
  }
  if (j.contains("phi_file")) {
    std::string path = j.at("phi_file").get<std::string>();
    if (!base_dir.empty() && !path.empty() && path.front() != '/') path = base_dir + "/" + path;
    return LineBundleMetric(r, read_scalar_csv_file(path, g));
  }
  const std::string phi = j.value("phi", std::string("0"));
  return LineBundleMetric(r, Expression::parse(phi).sample(g));
}

inline json bundle_to_json(const Matrix& r_const, const std::string& phi_expression) {
  return json{{"r_const", to_json(r_const)}, {"phi", phi_expression}};
}

inline json to_json(const PositivityCertificate& cert) {
  json j{{"verdict", cert.verdict}, {"margin", cert.margin}, {"threshold", cert.threshold}, {"reason", cert.reason}};
  json residuals = json::object();
  for (const auto& [k, v] : cert.residuals) residuals[k] = v;
  j["residuals"] = std::move(residuals);
  if (cert.witness_metric) {
    j["witness_metric"] = cert.witness_metric->is_constant() ? to_json(cert.witness_metric->at(0))
                                                             : json("non-constant field");
  }
  return j;
}

inline json extrema(const ScalarField& f) {
  return json{{"min", f.min()}, {"max", f.max()}, {"mean", f.mean()}};
}

inline json extrema(const EigenvalueField& ev) {
  json out = json::array();
  for (int i = 1; i <= ev.dim(); ++i) {
    double lo = ev.value(0, i), hi = lo;
    for (std::size_t p = 1; p < ev.size(); ++p) {
      lo = std::min(lo, ev.value(p, i));
      hi = std::max(hi, ev.value(p, i));
    }
    out.push_back(json{{"index", i}, {"min", lo}, {"max", hi}});
  }
  return out;
}

}  // namespace qpos::io
