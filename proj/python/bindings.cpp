#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "steiner_pf/eikonal.hpp"
#include "steiner_pf/extraction.hpp"
#include "steiner_pf/functional.hpp"
#include "steiner_pf/io.hpp"
#include "steiner_pf/mm_energy.hpp"
#include "steiner_pf/oracle.hpp"
#include "steiner_pf/pipeline.hpp"

namespace py = pybind11;
using namespace steiner_pf;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// Fields cross the boundary as (ny, nx) arrays, row j holding y = y0 + j*h.
ScalarField to_field(const Array& a, double h, Point origin) {
  if (a.ndim() != 2) throw std::invalid_argument("expected a 2-D array");
  const Grid2D g(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)), h, origin);
  return ScalarField(g, std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const ScalarField& f) {
  Array out({f.grid().ny(), f.grid().nx()});
  std::copy(f.data().begin(), f.data().end(), out.mutable_data());
  return out;
}

Array mask_to_array(const Grid2D& g, const std::vector<char>& mask) {
  Array out({g.ny(), g.nx()});
  for (std::size_t k = 0; k < mask.size(); ++k) out.mutable_data()[k] = mask[k] ? 1.0 : 0.0;
  return out;
}

std::vector<Point> to_points(const std::vector<std::pair<double, double>>& xy) {
  std::vector<Point> pts;
  for (auto [x, y] : xy) pts.push_back({x, y});
  return pts;
}

py::list paths_to_list(const Grid2D& g, const std::vector<std::vector<std::size_t>>& paths) {
  py::list out;
  for (const auto& path : paths) {
    py::list pts;
    for (std::size_t k : path) {
      const Point p = g.position(k);
      pts.append(py::make_tuple(p.x, p.y));
    }
    out.append(pts);
  }
  return out;
}

py::dict solution_dict(const SteinerSolution& s) {
  py::dict d;
  d["length"] = s.length;
  py::list sp;
  for (Point p : s.steiner_points) sp.append(py::make_tuple(p.x, p.y));
  d["steiner_points"] = sp;
  d["edges"] = s.topology.edges;
  d["angles"] = s.angles;
  d["degenerate"] = s.degenerate;
  return d;
}

py::dict junctions_list_entry(const Junction& j) {
  py::dict d;
  d["position"] = py::make_tuple(j.position.x, j.position.y);
  d["branches"] = j.branches;
  d["angles"] = j.angles;
  return d;
}

py::dict solve(const std::vector<std::pair<double, double>>& terminals, const py::dict& options) {
  TerminalSet t;
  t.points = to_points(terminals);
  RunConfig c;
  for (auto item : options) {
    const std::string key = py::str(item.first);
    py::object v = py::reinterpret_borrow<py::object>(item.second);
    std::string text;
    if (py::isinstance<py::bool_>(v))
      text = v.cast<bool>() ? "on" : "off";
    else
      text = py::str(v);
    c.set(key, text);
  }
  c.validate();

  SolveArtifacts a;
  {
    py::gil_scoped_release release;
    a = run_solve(t, c);
  }
  const SolveReport& r = a.report;
  py::dict d;
  d["h"] = r.grid.h();
  d["origin"] = py::make_tuple(r.grid.origin().x, r.grid.origin().y);
  d["phi"] = to_array(r.phi);
  d["u"] = to_array(r.distance.u);
  d["set"] = mask_to_array(r.grid, a.set.mask);
  d["connected"] = a.set.connected;
  d["contains_terminals"] = a.set.contains_all_terminals();
  d["length_via_graph"] = a.lengths.via_graph;
  d["length_via_skeleton"] = a.lengths.via_skeleton;
  d["length_via_energy"] = a.lengths.via_energy;
  d["source"] = r.terminals.source_index;
  d["geodesics"] = paths_to_list(r.grid, a.geodesics);
  py::list js;
  for (const Junction& j : a.junctions) js.append(junctions_list_entry(j));
  d["junctions"] = js;
  py::list stages;
  for (const StageReport& s : r.stages) {
    py::dict sd;
    sd["eps"] = s.eps;
    sd["energy"] = s.energy;
    sd["iterations"] = s.iterations;
    sd["stop"] = to_string(s.stop);
    stages.append(sd);
  }
  d["stages"] = stages;
  if (a.oracle) d["oracle"] = solution_dict(*a.oracle);
  return d;
}

}  // namespace

PYBIND11_MODULE(_steiner_pf, m) {
  m.doc() = "Phase-field Steiner tree approximation";

  m.def(
      "fast_march",
      [](const Array& phi, double h, std::pair<int, int> source) {
        const ScalarField f = to_field(phi, h, {});
        if (!f.grid().in_range(source.first, source.second))
          throw std::invalid_argument("source node out of range");
        return to_array(fast_march(f, f.grid().index(source.first, source.second)).u);
      },
      py::arg("phi"), py::arg("h"), py::arg("source"),
      "Distance map u with |grad u| = phi and u(source) = 0; source is the node (i, j), "
      "i along axis 1.");

  m.def(
      "adjoint_gradient",
      [](const Array& phi, double h, std::pair<int, int> source,
         const std::vector<std::pair<std::pair<int, int>, double>>& weighted) {
        const ScalarField f = to_field(phi, h, {});
        const Grid2D& g = f.grid();
        if (!g.in_range(source.first, source.second))
          throw std::invalid_argument("source node out of range");
        const DistanceResult r = fast_march(f, g.index(source.first, source.second));
        std::vector<WeightedNode> w;
        for (auto [n, weight] : weighted) {
          if (!g.in_range(n.first, n.second)) throw std::invalid_argument("node out of range");
          w.push_back({g.index(n.first, n.second), weight});
        }
        return to_array(adjoint_gradient(r, w));
      },
      py::arg("phi"), py::arg("h"), py::arg("source"), py::arg("weighted_nodes"));

  m.def(
      "mm_energy",
      [](const Array& phi, double h, double eps) {
        MmParams p;
        p.eps = eps;
        return mm_value(to_field(phi, h, {}), p);
      },
      py::arg("phi"), py::arg("h"), py::arg("eps"));

  m.def(
      "mm_gradient",
      [](const Array& phi, double h, double eps) {
        MmParams p;
        p.eps = eps;
        return to_array(mm_gradient(to_field(phi, h, {}), p));
      },
      py::arg("phi"), py::arg("h"), py::arg("eps"));

  m.def(
      "p_slack",
      [](const Array& phi, double h, double eps) {
        MmParams p;
        p.eps = eps;
        return p_diagnostic(to_field(phi, h, {}), p).worst_slack;
      },
      py::arg("phi"), py::arg("h"), py::arg("eps"));

  m.def(
      "i_lambda",
      [](const Array& mask, double h, double lambda, int directions) {
        const ScalarField f = to_field(mask, h, {});
        std::vector<char> m(f.size());
        for (std::size_t k = 0; k < f.size(); ++k) m[k] = f[k] != 0.0;
        return i_lambda(f.grid(), m, lambda, directions);
      },
      py::arg("mask"), py::arg("h"), py::arg("lam"), py::arg("directions") = 360);

  m.def(
      "steiner_exact",
      [](const std::vector<std::pair<double, double>>& terminals) {
        return solution_dict(solve_exact(to_points(terminals)));
      },
      py::arg("terminals"), "Exact Euclidean Steiner tree for 2 to 5 terminals.");

  m.def(
      "mst_length",
      [](const std::vector<std::pair<double, double>>& terminals) {
        return mst_length(to_points(terminals));
      },
      py::arg("terminals"));

  m.def("solve", &solve, py::arg("terminals"), py::arg("options") = py::dict(),
        "Full pipeline. options uses the config-file keys (grid, eps_ratio, source_search, ...).");

  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<SolverInvariantError>(m, "SolverInvariantError", PyExc_RuntimeError);
}
