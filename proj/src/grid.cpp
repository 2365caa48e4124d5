#include "steiner_pf/grid.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace steiner_pf {

Grid2D::Grid2D(int nx, int ny, double h, Point origin) : nx_(nx), ny_(ny), h_(h), origin_(origin) {
  if (nx < 3 || ny < 3) throw std::invalid_argument("Grid2D: nx and ny must be >= 3");
  if (!(h > 0.0) || !std::isfinite(h)) throw std::invalid_argument("Grid2D: h must be positive");
}

double Grid2D::diameter() const { return std::hypot(width(), height()); }

bool Grid2D::contains(Point p) const {
  return p.x >= origin_.x && p.y >= origin_.y && p.x <= origin_.x + width() &&
         p.y <= origin_.y + height();
}

bool Grid2D::contains_strictly(Point p) const {
  return p.x > origin_.x && p.y > origin_.y && p.x < origin_.x + width() &&
         p.y < origin_.y + height();
}

double Grid2D::quadrature_weight(int i, int j) const {
  double w = h_ * h_;
  if (i == 0 || i == nx_ - 1) w *= 0.5;
  if (j == 0 || j == ny_ - 1) w *= 0.5;
  return w;
}

Grid2D square_grid(int n, double side, Point origin) { return Grid2D(n, n, side / (n - 1), origin); }

ScalarField::ScalarField(Grid2D grid, double fill) : grid_(grid), values_(grid.size(), fill) {}

ScalarField::ScalarField(Grid2D grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.size()) {
    throw std::invalid_argument("ScalarField: value count does not match grid");
  }
}

double ScalarField::min() const { return *std::min_element(values_.begin(), values_.end()); }
double ScalarField::max() const { return *std::max_element(values_.begin(), values_.end()); }

void TerminalSet::validate() const {
  if (points.size() < 2) throw std::invalid_argument("terminal set needs at least 2 points");
  if (source_index >= points.size()) throw std::invalid_argument("source index out of range");
  for (std::size_t a = 0; a < points.size(); ++a) {
    if (!std::isfinite(points[a].x) || !std::isfinite(points[a].y)) {
      throw std::invalid_argument("terminal " + std::to_string(a) + " is not finite");
    }
    for (std::size_t b = a + 1; b < points.size(); ++b) {
      if (points[a].x == points[b].x && points[a].y == points[b].y) {
        throw std::invalid_argument("terminals " + std::to_string(a) + " and " +
                                    std::to_string(b) + " coincide");
      }
    }
  }
}

void TerminalSet::validate(const Grid2D& grid) const {
  validate();
  for (std::size_t a = 0; a < points.size(); ++a) {
    if (!grid.contains_strictly(points[a])) {
      std::ostringstream msg;
      msg << "terminal " << a << " (" << points[a].x << ", " << points[a].y
          << ") is not strictly inside the grid";
      throw std::invalid_argument(msg.str());
    }
  }
}

SnappedNode snap_to_grid(Point p, const Grid2D& grid) {
  if (!grid.contains(p)) {
    std::ostringstream msg;
    msg << "point (" << p.x << ", " << p.y << ") lies outside the grid rectangle";
    throw std::out_of_range(msg.str());
  }
  const double h = grid.h();
  int i = static_cast<int>(std::lround((p.x - grid.origin().x) / h));
  int j = static_cast<int>(std::lround((p.y - grid.origin().y) / h));
  i = std::clamp(i, 0, grid.nx() - 1);
  j = std::clamp(j, 0, grid.ny() - 1);
  SnappedNode s;
  s.node = {i, j};
  s.index = grid.index(i, j);
  s.displacement = distance(p, grid.position(i, j));
  return s;
}

std::vector<SnappedNode> snap_terminals(const TerminalSet& terminals, const Grid2D& grid) {
  std::vector<SnappedNode> out;
  out.reserve(terminals.size());
  for (Point p : terminals.points) out.push_back(snap_to_grid(p, grid));
  return out;
}

ScalarField gradient_sq(const ScalarField& f) {
  const Grid2D& g = f.grid();
  const int nx = g.nx();
  const int ny = g.ny();
  const double h = g.h();
  ScalarField out(g);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      double dx;
      if (i == 0) {
        dx = (f(1, j) - f(0, j)) / h;
      } else if (i == nx - 1) {
        dx = (f(i, j) - f(i - 1, j)) / h;
      } else {
        dx = (f(i + 1, j) - f(i - 1, j)) / (2.0 * h);
      }
      double dy;
      if (j == 0) {
        dy = (f(i, 1) - f(i, 0)) / h;
      } else if (j == ny - 1) {
        dy = (f(i, j) - f(i, j - 1)) / h;
      } else {
        dy = (f(i, j + 1) - f(i, j - 1)) / (2.0 * h);
      }
      out(i, j) = dx * dx + dy * dy;
    }
  }
  return out;
}

double integrate(const Grid2D& grid, std::span<const double> values) {
  double sum = 0.0;
  for (int j = 0; j < grid.ny(); ++j) {
    for (int i = 0; i < grid.nx(); ++i) {
      sum += grid.quadrature_weight(i, j) * values[grid.index(i, j)];
    }
  }
  return sum;
}

double integrate(const ScalarField& f) { return integrate(f.grid(), f.values()); }

std::vector<std::size_t> boundary_mask(const Grid2D& grid) {
  std::vector<std::size_t> out;
  out.reserve(2 * grid.nx() + 2 * grid.ny() - 4);
  for (int j = 0; j < grid.ny(); ++j) {
    for (int i = 0; i < grid.nx(); ++i) {
      if (grid.on_boundary(i, j)) out.push_back(grid.index(i, j));
    }
  }
  return out;
}

double hull_diameter(const TerminalSet& terminals) {
  double d = 0.0;
  for (std::size_t a = 0; a < terminals.size(); ++a) {
    for (std::size_t b = a + 1; b < terminals.size(); ++b) {
      d = std::max(d, distance(terminals.points[a], terminals.points[b]));
    }
  }
  return d;
}

namespace {

struct Box {
  Point lo;
  double side;
};

Box padded_box(const TerminalSet& terminals, double margin_factor) {
  terminals.validate();
  if (!(margin_factor > 0.0)) throw std::invalid_argument("margin factor must be positive");
  Point lo = terminals.points.front();
  Point hi = lo;
  for (Point p : terminals.points) {
    lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
    hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
  }
  const double margin = margin_factor * hull_diameter(terminals);
  const double side = std::max(hi.x - lo.x, hi.y - lo.y) + 2.0 * margin;
  const Point centre{0.5 * (lo.x + hi.x), 0.5 * (lo.y + hi.y)};
  return {{centre.x - 0.5 * side, centre.y - 0.5 * side}, side};
}

}  // namespace

Grid2D fit_square_grid(const TerminalSet& terminals, int n, double margin_factor) {
  const Box box = padded_box(terminals, margin_factor);
  return square_grid(n, box.side, box.lo);
}

Grid2D fit_square_grid_h(const TerminalSet& terminals, double h, double margin_factor) {
  if (!(h > 0.0)) throw std::invalid_argument("h must be positive");
  const Box box = padded_box(terminals, margin_factor);
  const int n = std::max(3, static_cast<int>(std::ceil(box.side / h)) + 1);
  return square_grid(n, box.side, box.lo);
}

}  // namespace steiner_pf
