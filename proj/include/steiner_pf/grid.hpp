#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace steiner_pf {

struct Point {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(Point, Point) = default;
};

struct Node {
  int i = 0;
  int j = 0;
  friend bool operator==(Node, Node) = default;
};

/// Uniform square grid with nx*ny nodes; node (i,j) sits at origin + (i*h, j*h).
class Grid2D {
 public:
  Grid2D() = default;
  Grid2D(int nx, int ny, double h, Point origin = {});

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double h() const { return h_; }
  Point origin() const { return origin_; }
  std::size_t size() const { return static_cast<std::size_t>(nx_) * ny_; }

  double width() const { return (nx_ - 1) * h_; }
  double height() const { return (ny_ - 1) * h_; }
  double diameter() const;

  std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * nx_ + i; }
  std::size_t index(Node n) const { return index(n.i, n.j); }
  Node node(std::size_t idx) const {
    return {static_cast<int>(idx % nx_), static_cast<int>(idx / nx_)};
  }
  Point position(int i, int j) const { return {origin_.x + i * h_, origin_.y + j * h_}; }
  Point position(Node n) const { return position(n.i, n.j); }
  Point position(std::size_t idx) const { return position(node(idx)); }

  bool contains(Point p) const;
  bool contains_strictly(Point p) const;
  bool in_range(int i, int j) const { return i >= 0 && j >= 0 && i < nx_ && j < ny_; }
  bool on_boundary(int i, int j) const {
    return i == 0 || j == 0 || i == nx_ - 1 || j == ny_ - 1;
  }
  bool on_boundary(std::size_t idx) const {
    Node n = node(idx);
    return on_boundary(n.i, n.j);
  }

  /// Trapezoidal quadrature weight of a node (h^2, halved per boundary axis).
  double quadrature_weight(int i, int j) const;

  friend bool operator==(const Grid2D&, const Grid2D&) = default;

 private:
  int nx_ = 3;
  int ny_ = 3;
  double h_ = 1.0;
  Point origin_{};
};

/// Square grid of n x n nodes covering the box [x0, x0+side] x [y0, y0+side].
Grid2D square_grid(int n, double side, Point origin = {});

class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(Grid2D grid, double fill = 0.0);
  ScalarField(Grid2D grid, std::vector<double> values);

  const Grid2D& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }

  double& operator[](std::size_t idx) { return values_[idx]; }
  double operator[](std::size_t idx) const { return values_[idx]; }
  double& operator()(int i, int j) { return values_[grid_.index(i, j)]; }
  double operator()(int i, int j) const { return values_[grid_.index(i, j)]; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::vector<double>& data() { return values_; }
  const std::vector<double>& data() const { return values_; }

  double min() const;
  double max() const;

  friend bool operator==(const ScalarField&, const ScalarField&) = default;

 private:
  Grid2D grid_;
  std::vector<double> values_;
};

/// Distance-map sentinel for nodes the front has not reached.
inline constexpr double kUnreached = std::numeric_limits<double>::max();

struct TerminalSet {
  std::vector<Point> points;
  std::size_t source_index = 0;

  std::size_t size() const { return points.size(); }
  Point source() const { return points.at(source_index); }

  /// Throws std::invalid_argument unless N >= 2, points distinct and strictly inside `grid`.
  void validate(const Grid2D& grid) const;
  void validate() const;
};

struct SnappedNode {
  std::size_t index = 0;
  Node node;
  double displacement = 0.0;
};

/// Nearest grid node; throws std::out_of_range when p lies outside the grid rectangle.
SnappedNode snap_to_grid(Point p, const Grid2D& grid);
std::vector<SnappedNode> snap_terminals(const TerminalSet& terminals, const Grid2D& grid);

/// Per-node |grad f|^2: central differences inside, one-sided on the boundary.
ScalarField gradient_sq(const ScalarField& f);

/// Trapezoidal integral over the grid rectangle, summed in index order.
double integrate(const ScalarField& f);
double integrate(const Grid2D& grid, std::span<const double> values);

std::vector<std::size_t> boundary_mask(const Grid2D& grid);

/// Largest pairwise distance between the terminals.
double hull_diameter(const TerminalSet& terminals);

/// Square n x n grid centred on the terminals' bounding box, padded on every side by
/// margin_factor * hull_diameter.
Grid2D fit_square_grid(const TerminalSet& terminals, int n, double margin_factor);
/// Same box, node count chosen so that the spacing is at most h.
Grid2D fit_square_grid_h(const TerminalSet& terminals, double h, double margin_factor);

inline double distance(Point a, Point b) {
  double dx = a.x - b.x;
  double dy = a.y - b.y;
  return std::sqrt(dx * dx + dy * dy);
}

}  // namespace steiner_pf
