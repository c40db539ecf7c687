#include "ias/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ias/errors.hpp"

namespace ias {

namespace {

constexpr double kSnapTol = 1e-9;

void enumerate_compositions(int dim, int remaining, std::vector<int>& prefix,
                            std::vector<int>& out) {
  if (dim == 1) {
    out.insert(out.end(), prefix.begin(), prefix.end());
    out.push_back(remaining);
    return;
  }
  for (int k = 0; k <= remaining; ++k) {
    prefix.push_back(k);
    enumerate_compositions(dim - 1, remaining - k, prefix, out);
    prefix.pop_back();
  }
}

}  // namespace

std::int64_t SimplexGrid::point_count(int dim, int resolution) {
  // C(resolution + dim - 1, dim - 1)
  std::int64_t count = 1;
  for (int i = 1; i < dim; ++i) {
    count = count * (resolution + i) / i;
    if (count > std::numeric_limits<int>::max())
      throw ValidationError("simplex grid too large for this (dim, resolution)");
  }
  return count;
}

SimplexGrid::SimplexGrid(int dim, int resolution) : dim_(dim), resolution_(resolution) {
  if (dim < 1) throw ValidationError("simplex grid needs dim >= 1");
  if (resolution < 1) throw ValidationError("simplex grid needs resolution >= 1");
  const std::int64_t count = point_count(dim, resolution);
  points_.reserve(static_cast<std::size_t>(count) * dim);
  std::vector<int> prefix;
  enumerate_compositions(dim, resolution, prefix, points_);
  index_.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < size(); ++i) index_.emplace(key_of(composition(i)), i);
}

std::uint64_t SimplexGrid::key_of(std::span<const int> comp) const {
  // Positional packing in base (resolution + 1); falls back to FNV mixing if
  // the base power would overflow (only reachable for very high dimensions).
  const std::uint64_t base = static_cast<std::uint64_t>(resolution_) + 1;
  std::uint64_t key = 0;
  bool overflow = false;
  for (int v : comp) {
    if (key > (std::numeric_limits<std::uint64_t>::max() - static_cast<std::uint64_t>(v)) / base) {
      overflow = true;
      break;
    }
    key = key * base + static_cast<std::uint64_t>(v);
  }
  if (!overflow) return key;
  std::uint64_t h = 1469598103934665603ULL;
  for (int v : comp) {
    h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(v));
    h *= 1099511628211ULL;
  }
  return h;
}

std::vector<double> SimplexGrid::point(int i) const {
  std::vector<double> mu(dim_);
  auto comp = composition(i);
  for (int j = 0; j < dim_; ++j) mu[j] = static_cast<double>(comp[j]) / resolution_;
  return mu;
}

int SimplexGrid::index_of(std::span<const int> comp) const {
  auto it = index_.find(key_of(comp));
  if (it == index_.end()) return -1;
  // Guard against the (hash-collision) fallback path.
  auto stored = composition(it->second);
  if (!std::equal(stored.begin(), stored.end(), comp.begin())) return -1;
  return it->second;
}

BarycentricSupport SimplexGrid::locate(std::span<const double> mu) const {
  const int n = dim_;
  const int g = resolution_;
  BarycentricSupport support;
  if (n == 1) {
    support.terms.emplace_back(0, 1.0);
    return support;
  }

  // Cumulative coordinates y_i = sum_{j >= i} mu_j * G are monotone
  // decreasing; the Freudenthal cell in y-space maps back to admissible
  // compositions, and the weights reproduce mu exactly (so affine functions
  // of the belief interpolate without error).
  std::vector<double> y(n + 1, 0.0);
  for (int i = n - 1; i >= 0; --i) y[i] = y[i + 1] + mu[i] * g;
  y[0] = static_cast<double>(g);

  std::vector<int> base(n + 1, 0);
  std::vector<double> frac(n + 1, 0.0);
  base[0] = g;
  for (int i = 1; i < n; ++i) {
    double yi = std::min(std::max(y[i], 0.0), static_cast<double>(g));
    double rounded = std::round(yi);
    if (std::abs(yi - rounded) <= kSnapTol) yi = rounded;
    base[i] = static_cast<int>(std::floor(yi));
    if (base[i] > g) base[i] = g;
    frac[i] = yi - base[i];
  }

  // Axes 1..n-1 sorted by descending fractional part, ties by index so that
  // equal cumulative coordinates keep their order (which keeps every chain
  // vertex admissible).
  std::vector<int> order(n - 1);
  std::iota(order.begin(), order.end(), 1);
  std::sort(order.begin(), order.end(), [&frac](int a, int b) {
    if (frac[a] != frac[b]) return frac[a] > frac[b];
    return a < b;
  });

  std::vector<int> z(base);
  std::vector<int> comp(n);
  auto push_vertex = [&](double weight) {
    if (weight <= 0.0) return;
    for (int i = 0; i < n; ++i) comp[i] = z[i] - z[i + 1];
    int idx = index_of(comp);
    if (idx >= 0) support.terms.emplace_back(idx, weight);
  };

  push_vertex(1.0 - frac[order[0]]);
  for (int k = 0; k < n - 1; ++k) {
    z[order[k]] += 1;
    const double next = (k + 1 < n - 1) ? frac[order[k + 1]] : 0.0;
    push_vertex(frac[order[k]] - next);
  }

  // Numerical slop can drop a sliver of weight at cell boundaries.
  double total = 0.0;
  for (auto& [idx, w] : support.terms) total += w;
  if (total > 0.0 && std::abs(total - 1.0) > 1e-12)
    for (auto& [idx, w] : support.terms) w /= total;
  return support;
}

double SimplexGrid::interpolate(std::span<const double> table,
                                std::span<const double> mu) const {
  double value = 0.0;
  for (const auto& [idx, w] : locate(mu).terms) value += w * table[idx];
  return value;
}

const std::vector<std::pair<int, int>>& SimplexGrid::adjacent_pairs() const {
  if (!adjacency_.empty() || size() <= 1) return adjacency_;
  std::vector<int> comp(dim_);
  for (int i = 0; i < size(); ++i) {
    auto c = composition(i);
    for (int a = 0; a < dim_; ++a) {
      if (c[a] == 0) continue;
      for (int b = 0; b < dim_; ++b) {
        if (b == a || c[b] == resolution_) continue;
        std::copy(c.begin(), c.end(), comp.begin());
        comp[a] -= 1;
        comp[b] += 1;
        int j = index_of(comp);
        if (j > i) adjacency_.emplace_back(i, j);
      }
    }
  }
  return adjacency_;
}

}  // namespace ias
