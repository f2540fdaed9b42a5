#include "netwatt/vfs.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "netwatt/isa.hpp"
#include "netwatt/num_io.hpp"

namespace netwatt {

double idle_power_watts(double vdd, double f_pll, double f_core, const VfsParams& p) {
  double bracket = vdd * vdd * p.c_pll * f_pll + vdd * vdd * p.c_idle * f_core + vdd * p.i_leak;
  double supply = vdd * p.i_ext;
  return p.supply == SupplyModel::Scale ? bracket * supply : bracket * (1.0 + supply);
}

double idle_power_watts(const OperatingPoint& op, const VfsParams& p) {
  return idle_power_watts(op.vdd, op.f_pll(), op.f_core(), p);
}

namespace {

double fit_objective(const std::vector<VfsObservation>& obs, const double* x, SupplyModel supply) {
  for (int i = 0; i < 4; i++)
    if (x[i] < 0) return 1e30; // params are non-negative by definition
  VfsParams p;
  p.c_pll = x[0];
  p.c_idle = x[1];
  p.i_leak = x[2];
  p.i_ext = x[3];
  p.supply = supply;
  double sum = 0;
  for (const VfsObservation& o : obs) {
    double r = (idle_power_watts(o.op, p) - o.watts) / o.watts;
    sum += r * r;
  }
  return sum / static_cast<double>(obs.size());
}

} // namespace

VfsFitResult fit_vfs_params(const std::vector<VfsObservation>& obs, SupplyModel supply) {
  if (obs.size() < 4) throw ParseError("VFS fit needs at least 4 observations");
  std::set<double> volts;
  std::set<double> fcores;
  for (const VfsObservation& o : obs) {
    if (o.watts <= 0) throw ParseError("VFS observations must have positive power");
    volts.insert(o.op.vdd);
    fcores.insert(o.op.f_core());
  }
  if (volts.size() < 2 || fcores.size() < 2)
    throw ParseError("VFS fit needs observations spanning >= 2 voltages and >= 2 frequencies");

  constexpr int kDim = 4;
  constexpr int kMaxIter = 10000;
  constexpr double kSpreadTol = 1e-12;
  constexpr double kDisplace = 0.05;
  const double init[kDim] = {1e-9, 1e-9, 0.1, 0.1};

  struct Vertex {
    double x[kDim];
    double f;
  };
  std::vector<Vertex> simplex(kDim + 1);
  for (int v = 0; v <= kDim; v++) {
    for (int i = 0; i < kDim; i++) simplex[v].x[i] = init[i] * (v == i + 1 ? 1.0 + kDisplace : 1.0);
    simplex[v].f = fit_objective(obs, simplex[v].x, supply);
  }

  auto order = [&]() {
    std::stable_sort(simplex.begin(), simplex.end(), [](const Vertex& a, const Vertex& b) { return a.f < b.f; });
  };

  int iter = 0;
  bool converged = false;
  for (; iter < kMaxIter; iter++) {
    order();
    double denom = std::max(std::fabs(simplex[0].f), 1e-300);
    if (std::fabs(simplex[kDim].f - simplex[0].f) / denom <= kSpreadTol) {
      converged = true;
      break;
    }
    double centroid[kDim] = {};
    for (int v = 0; v < kDim; v++)
      for (int i = 0; i < kDim; i++) centroid[i] += simplex[v].x[i] / kDim;

    auto make_point = [&](double coeff, Vertex& out) {
      for (int i = 0; i < kDim; i++) out.x[i] = centroid[i] + coeff * (centroid[i] - simplex[kDim].x[i]);
      out.f = fit_objective(obs, out.x, supply);
    };

    Vertex refl;
    make_point(1.0, refl);
    if (refl.f < simplex[0].f) {
      Vertex expd;
      make_point(2.0, expd);
      simplex[kDim] = expd.f < refl.f ? expd : refl;
    } else if (refl.f < simplex[kDim - 1].f) {
      simplex[kDim] = refl;
    } else {
      Vertex contr;
      make_point(-0.5, contr);
      if (contr.f < simplex[kDim].f) {
        simplex[kDim] = contr;
      } else {
        for (int v = 1; v <= kDim; v++) {
          for (int i = 0; i < kDim; i++) simplex[v].x[i] = simplex[0].x[i] + 0.5 * (simplex[v].x[i] - simplex[0].x[i]);
          simplex[v].f = fit_objective(obs, simplex[v].x, supply);
        }
      }
    }
  }
  order();

  VfsFitResult res;
  res.params.c_pll = simplex[0].x[0];
  res.params.c_idle = simplex[0].x[1];
  res.params.i_leak = simplex[0].x[2];
  res.params.i_ext = simplex[0].x[3];
  res.params.supply = supply;
  res.mse = simplex[0].f;
  res.iterations = iter;
  res.converged = converged;
  return res;
}

VfsParams parse_vfs_params(std::string_view text) {
  VfsParams p;
  bool have[4] = {};
  bool saw_version = false;
  int line_no = 0;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t eol = text.find('\n', pos);
    std::string_view line = text.substr(pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    line_no++;
    std::string_view rest = line, key, val;
    if (!next_token(rest, key)) continue;
    if (key == "version") {
      saw_version = true;
      continue;
    }
    if (key == "supply") {
      if (!next_token(rest, val)) throw ParseError("supply needs scale|affine", line_no);
      if (val == "scale") p.supply = SupplyModel::Scale;
      else if (val == "affine") p.supply = SupplyModel::Affine;
      else throw ParseError("supply must be scale or affine", line_no);
      continue;
    }
    if (!next_token(rest, val)) throw ParseError("missing value for " + std::string(key), line_no);
    double v;
    if (!parse_double(val, v)) throw ParseError("bad number '" + std::string(val) + "'", line_no);
    if (v < 0) throw ParseError(std::string(key) + " must be non-negative", line_no);
    if (key == "cpll") { p.c_pll = v; have[0] = true; }
    else if (key == "cidle") { p.c_idle = v; have[1] = true; }
    else if (key == "ileak") { p.i_leak = v; have[2] = true; }
    else if (key == "iext") { p.i_ext = v; have[3] = true; }
    else if (key == "chot") p.c_hot = v;
    else throw ParseError("unknown key '" + std::string(key) + "'", line_no);
  }
  if (!saw_version) throw ParseError("params file missing version header");
  if (!(have[0] && have[1] && have[2] && have[3]))
    throw ParseError("params file must define cpll, cidle, ileak and iext");
  return p;
}

std::string print_vfs_params(const VfsParams& p) {
  std::ostringstream os;
  os << "version 1\n";
  os << "supply " << (p.supply == SupplyModel::Scale ? "scale" : "affine") << '\n';
  os << "cpll " << num_str(p.c_pll) << '\n';
  os << "cidle " << num_str(p.c_idle) << '\n';
  os << "ileak " << num_str(p.i_leak) << '\n';
  os << "iext " << num_str(p.i_ext) << '\n';
  if (p.c_hot >= 0) os << "chot " << num_str(p.c_hot) << '\n';
  return os.str();
}

std::vector<VfsObservation> parse_vfs_observations(std::string_view text) {
  std::vector<VfsObservation> out;
  bool saw_version = false;
  int line_no = 0;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t eol = text.find('\n', pos);
    std::string_view line = text.substr(pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    line_no++;
    std::string_view rest = line, tok;
    if (!next_token(rest, tok)) continue;
    if (tok == "version") {
      saw_version = true;
      continue;
    }
    if (tok != "obs") throw ParseError("expected 'obs' record", line_no);
    std::string_view vs, fs, ds, ws;
    if (!next_token(rest, vs) || !next_token(rest, fs) || !next_token(rest, ds) || !next_token(rest, ws))
      throw ParseError("obs record needs vdd fpll divider watts", line_no);
    VfsObservation o;
    std::uint64_t u;
    if (!parse_double(vs, o.op.vdd)) throw ParseError("bad vdd", line_no);
    if (!parse_u64(fs, o.op.fpll_hz)) throw ParseError("bad fpll", line_no);
    if (!parse_u64(ds, u) || u < 1) throw ParseError("bad divider", line_no);
    o.op.divider = static_cast<int>(u);
    if (!parse_double(ws, o.watts)) throw ParseError("bad watts", line_no);
    out.push_back(o);
  }
  if (!saw_version) throw ParseError("observations file missing version header");
  return out;
}

std::string print_vfs_observations(const std::vector<VfsObservation>& obs) {
  std::ostringstream os;
  os << "version 1\n";
  for (const VfsObservation& o : obs)
    os << "obs " << num_str(o.op.vdd) << ' ' << num_str(o.op.fpll_hz) << ' ' << o.op.divider << ' '
       << num_str(o.watts) << '\n';
  return os.str();
}

} // namespace netwatt
