#include "core/csvio.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace hydroschro {

namespace {

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

template <class Path>
void write_path(const std::string& file, const Path& p, bool faces) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot open for writing: " + file);
  out << "t,x,value\n";
  for (int k = 0; k <= p.n_steps(); ++k) {
    const double t = p.node_time(k);
    const auto& s = p[k];
    for (int i = 0; i < s.n(); ++i) {
      const double x = faces ? s.grid.face_pos(i) : s.grid.cell_center(i);
      out << fmt(t) << ',' << fmt(x) << ',' << fmt(s[i]) << '\n';
    }
  }
}

struct RawRows {
  std::vector<double> t, x, value;
};

RawRows read_rows(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open: " + file);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty CSV: " + file);
  RawRows r;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string a, b, c;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, c))
      throw std::runtime_error("malformed CSV row in " + file + ": " + line);
    r.t.push_back(std::stod(a));
    r.x.push_back(std::stod(b));
    r.value.push_back(std::stod(c));
  }
  return r;
}

struct Layout {
  int n = 0;
  int nodes = 0;
  double t_final = 0.0;
  double x0 = 0.0, dx = 0.0;
};

Layout infer_layout(const RawRows& r, const std::string& file) {
  Layout lay;
  const size_t total = r.t.size();
  if (total == 0) throw std::runtime_error("no data rows in " + file);
  size_t n = 1;
  while (n < total && r.t[n] == r.t[0]) ++n;
  if (total % n != 0) throw std::runtime_error("ragged CSV layout in " + file);
  lay.n = static_cast<int>(n);
  lay.nodes = static_cast<int>(total / n);
  lay.t_final = r.t[total - n];
  lay.x0 = r.x[0];
  lay.dx = lay.n > 1 ? r.x[1] - r.x[0] : 0.0;
  return lay;
}

}  // namespace

void write_csv(const std::string& path, const CellPath& p) { write_path(path, p, false); }
void write_csv(const std::string& path, const FacePath& p) { write_path(path, p, true); }

void write_csv(const std::string& path, const CellField& c) {
  CellPath p(0.0, {c});
  // single snapshot at t = 0
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "t,x,value\n";
  for (int i = 0; i < c.n(); ++i)
    out << "0," << fmt(c.grid.cell_center(i)) << ',' << fmt(c[i]) << '\n';
}

void write_csv_multi(const std::string& path, const std::vector<NamedCellPath>& vars) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "t,x,variable,value\n";
  for (const auto& var : vars) {
    const CellPath& p = *var.path;
    for (int k = 0; k <= p.n_steps(); ++k) {
      const double t = p.node_time(k);
      for (int i = 0; i < p[k].n(); ++i)
        out << fmt(t) << ',' << fmt(p[k].grid.cell_center(i)) << ','
            << var.name << ',' << fmt(p[k][i]) << '\n';
    }
  }
}

CellPath read_cell_path_csv(const std::string& file) {
  const RawRows r = read_rows(file);
  const Layout lay = infer_layout(r, file);
  // cell centers start at dx/2
  const double L = lay.dx * lay.n;
  Grid g = make_grid(lay.n, L);
  std::vector<CellField> slices;
  for (int k = 0; k < lay.nodes; ++k) {
    CellField c(g);
    for (int i = 0; i < lay.n; ++i) c[i] = r.value[size_t(k) * lay.n + i];
    slices.push_back(std::move(c));
  }
  return CellPath(lay.t_final, std::move(slices));
}

FacePath read_face_path_csv(const std::string& file) {
  const RawRows r = read_rows(file);
  const Layout lay = infer_layout(r, file);
  const double L = lay.dx * lay.n;
  Grid g = make_grid(lay.n, L);
  std::vector<FaceField> slices;
  for (int k = 0; k < lay.nodes; ++k) {
    FaceField f(g);
    for (int i = 0; i < lay.n; ++i) f[i] = r.value[size_t(k) * lay.n + i];
    slices.push_back(std::move(f));
  }
  return FacePath(lay.t_final, std::move(slices));
}

void write_matrix_csv(const std::string& path, const std::vector<std::vector<double>>& m) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  for (const auto& row : m) {
    for (size_t j = 0; j < row.size(); ++j) {
      if (j) out << ',';
      out << fmt(row[j]);
    }
    out << '\n';
  }
}

}  // namespace hydroschro
