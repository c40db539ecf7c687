#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

namespace ias {

/// Weighted grid vertices whose convex combination reproduces a belief;
/// at most dim entries.
struct BarycentricSupport {
  std::vector<std::pair<int, double>> terms;  // (point index, weight)
};

/// Regular discretization of the belief simplex: all integer compositions
/// (k_1,...,k_dim) with sum k_i = G, scaled by 1/G, in lexicographic order.
/// Off-grid beliefs are evaluated by piecewise-linear interpolation on the
/// Kuhn triangulation, which is exact at grid points and for affine
/// functions of the belief.
class SimplexGrid {
 public:
  SimplexGrid(int dim, int resolution);

  int dim() const { return dim_; }
  int resolution() const { return resolution_; }
  int size() const { return static_cast<int>(points_.size()) / dim_; }

  /// Integer composition of point i (coordinates sum to resolution()).
  std::span<const int> composition(int i) const {
    return {points_.data() + static_cast<std::size_t>(i) * dim_, static_cast<std::size_t>(dim_)};
  }

  /// Belief coordinates of point i.
  std::vector<double> point(int i) const;

  /// Index of an exact composition; -1 if out of range.
  int index_of(std::span<const int> comp) const;

  /// Barycentric weights of `mu` within its containing sub-simplex.
  /// Coordinates within 1e-9 * G of a lattice hyperplane are snapped so
  /// grid points reproduce stored values exactly.
  BarycentricSupport locate(std::span<const double> mu) const;

  /// Piecewise-linear interpolation of a per-point table at `mu`.
  double interpolate(std::span<const double> table, std::span<const double> mu) const;

  /// Unordered pairs of grid points that differ by one unit step
  /// (+1/-1 in two coordinates); the edges of the grid graph.
  const std::vector<std::pair<int, int>>& adjacent_pairs() const;

  /// C(G + dim - 1, dim - 1) with an overflow guard (throws ValidationError
  /// if the count does not fit in an int).
  static std::int64_t point_count(int dim, int resolution);

 private:
  int dim_;
  int resolution_;
  std::vector<int> points_;  // flattened compositions, lexicographic
  std::unordered_map<std::uint64_t, int> index_;
  mutable std::vector<std::pair<int, int>> adjacency_;

  std::uint64_t key_of(std::span<const int> comp) const;
};

}  // namespace ias
