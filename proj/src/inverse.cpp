#include "ias/inverse.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>

#include "ias/errors.hpp"

namespace ias {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// log sum_i exp(-rho * (q_i - q_min)), the max-shifted normalizer of the
/// Boltzmann distribution.
double boltzmann_log_normalizer(std::span<const double> q, double rho, double q_min) {
  double total = 0.0;
  for (double v : q) total += std::exp(-rho * (v - q_min));
  return std::log(total);
}

}  // namespace

std::vector<double> Lattice::default_rho_grid() {
  return {0.01, 0.03, 0.1, 0.3, 1.0, 3.0, 10.0, 30.0, 100.0};
}

Lattice::Lattice(Criterion criterion, const DecisionProblem& problem, double resolution,
                 std::vector<double> rho_grid)
    : criterion_(criterion),
      n_theta_(problem.n_theta),
      n_lambda_(problem.n_lambda),
      rho_grid_(std::move(rho_grid)) {
  if (!(resolution > 0.0 && resolution <= 1.0))
    throw ValidationError("lattice resolution must lie in (0, 1]");
  const double steps = 1.0 / resolution;
  steps_ = static_cast<int>(std::llround(steps));
  if (steps_ < 1 || std::abs(steps_ * resolution - 1.0) > 1e-9)
    throw ValidationError("lattice resolution must divide 1 exactly");
  if (rho_grid_.size() < 2) throw ValidationError("rho grid needs at least two values");
  for (std::size_t i = 0; i < rho_grid_.size(); ++i) {
    if (!(rho_grid_[i] > 0.0)) throw ValidationError("rho grid values must be positive");
    if (i > 0 && !(rho_grid_[i] > rho_grid_[i - 1]))
      throw ValidationError("rho grid must be strictly increasing");
  }
  // Optimal and infomax walk (eta_a, eta_b, eta_c); greedy lookahead walks
  // (eta_b, eta_c, eta_d). Either way the dimension is 2|Theta| + |Lambda|.
  eta_dim_ = 2 * n_theta_ + n_lambda_;
}

std::int64_t Lattice::eta_point_count() const {
  std::int64_t count = 1;
  for (int i = 0; i < eta_dim_; ++i) {
    if (count > std::numeric_limits<std::int64_t>::max() / (steps_ + 1))
      return std::numeric_limits<std::int64_t>::max();
    count *= steps_ + 1;
  }
  return count;
}

Preferences Lattice::to_preferences(const LatticePoint& pt) const {
  Preferences prefs;
  prefs.criterion = criterion_;
  prefs.rho = rho_grid_[pt.rho_idx];
  auto block = [this, &pt](int offset, int len) {
    std::vector<double> v(len);
    for (int i = 0; i < len; ++i) v[i] = eta_value(pt.eta[offset + i]);
    return v;
  };
  if (criterion_ == Criterion::GreedyLookahead) {
    // eta_a is pinned at 1: the walk expresses decision behavior through
    // eta_d instead.
    prefs.eta_a.assign(n_theta_, 1.0);
    prefs.eta_b = block(0, n_theta_);
    prefs.eta_c = block(n_theta_, n_lambda_);
    prefs.eta_d = block(n_theta_ + n_lambda_, n_theta_);
  } else {
    prefs.eta_a = block(0, n_theta_);
    prefs.eta_b = block(n_theta_, n_theta_);
    prefs.eta_c = block(2 * n_theta_, n_lambda_);
  }
  return prefs;
}

std::vector<std::string> Lattice::axis_names() const {
  std::vector<std::string> names;
  auto add = [&names](const std::string& prefix, int len) {
    for (int i = 0; i < len; ++i) names.push_back(prefix + "[" + std::to_string(i) + "]");
  };
  if (criterion_ == Criterion::GreedyLookahead) {
    add("eta_b", n_theta_);
    add("eta_c", n_lambda_);
    add("eta_d", n_theta_);
  } else {
    add("eta_a", n_theta_);
    add("eta_b", n_theta_);
    add("eta_c", n_lambda_);
  }
  return names;
}

bool Lattice::contains(const LatticePoint& pt) const {
  if (static_cast<int>(pt.eta.size()) != eta_dim_) return false;
  for (int v : pt.eta)
    if (v < 0 || v > steps_) return false;
  return pt.rho_idx >= 0 && pt.rho_idx < static_cast<int>(rho_grid_.size());
}

std::vector<LatticePoint> Lattice::feasible_moves(const LatticePoint& pt) const {
  std::vector<LatticePoint> moves;
  moves.reserve(2 * (eta_dim_ + 1));
  for (int axis = 0; axis < eta_dim_; ++axis) {
    for (int step : {-1, +1}) {
      int v = pt.eta[axis] + step;
      if (v < 0 || v > steps_) continue;
      LatticePoint next = pt;
      next.eta[axis] = v;
      moves.push_back(std::move(next));
    }
  }
  for (int step : {-1, +1}) {
    int r = pt.rho_idx + step;
    if (r < 0 || r >= static_cast<int>(rho_grid_.size())) continue;
    LatticePoint next = pt;
    next.rho_idx = r;
    moves.push_back(std::move(next));
  }
  return moves;
}

LatticePoint Lattice::neighbor(const LatticePoint& pt, Rng& rng) const {
  const std::vector<LatticePoint> moves = feasible_moves(pt);
  return moves[rng.uniform_int(static_cast<int>(moves.size()))];
}

LatticePoint Lattice::random_point(Rng& rng) const {
  LatticePoint pt;
  pt.eta.resize(eta_dim_);
  for (int& v : pt.eta) v = rng.uniform_int(steps_ + 1);
  pt.rho_idx = rng.uniform_int(static_cast<int>(rho_grid_.size()));
  return pt;
}

LatticePoint Lattice::lexicographic_first() const {
  LatticePoint pt;
  pt.eta.assign(eta_dim_, 0);
  pt.rho_idx = 0;
  return pt;
}

PriorSpec PriorSpec::uniform(const std::vector<Criterion>& criteria) {
  PriorSpec priors;
  const double log_k = -std::log(static_cast<double>(criteria.size()));
  for (Criterion k : criteria) priors.log_criterion[k] = log_k;
  priors.log_eta = [](const Lattice& lattice, const LatticePoint&) {
    return -lattice.eta_dim() * std::log(static_cast<double>(lattice.steps_per_unit() + 1));
  };
  priors.log_rho = [](const Lattice& lattice, int) {
    return -std::log(static_cast<double>(lattice.rho_grid().size()));
  };
  return priors;
}

std::vector<std::string> PriorSpec::validate(const Lattice& lattice,
                                             std::int64_t eta_check_limit) const {
  std::vector<std::string> report;
  double k_total = 0.0;
  for (const auto& [k, lp] : log_criterion) k_total += std::exp(lp);
  if (std::abs(k_total - 1.0) > 1e-9) report.push_back("criterion prior does not normalize");

  double rho_total = 0.0;
  for (int i = 0; i < static_cast<int>(lattice.rho_grid().size()); ++i)
    rho_total += std::exp(log_rho(lattice, i));
  if (std::abs(rho_total - 1.0) > 1e-9) report.push_back("rho prior does not normalize");

  const std::int64_t count = lattice.eta_point_count();
  if (count <= eta_check_limit) {
    double eta_total = 0.0;
    LatticePoint pt = lattice.lexicographic_first();
    const int d = lattice.eta_dim();
    const int steps = lattice.steps_per_unit();
    bool done = false;
    while (!done) {
      eta_total += std::exp(log_eta(lattice, pt));
      int axis = d - 1;
      while (axis >= 0) {
        if (++pt.eta[axis] <= steps) break;
        pt.eta[axis] = 0;
        --axis;
      }
      done = axis < 0;
    }
    if (std::abs(eta_total - 1.0) > 1e-9) report.push_back("eta prior does not normalize");
  }
  return report;
}

namespace {

// Binary persistence for disk-cached policies. Tables are written as raw
// little-endian doubles; the key encodes everything that determines them.
bool load_policy_file(const std::string& path, const DecisionProblem& problem,
                      const Preferences& prefs, int resolution, SolvedPolicy& policy) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::int64_t n_points = 0;
  in.read(reinterpret_cast<char*>(&n_points), sizeof(n_points));
  const std::int64_t expected = SimplexGrid::point_count(problem.n_theta, resolution);
  if (!in || n_points != expected) return false;
  policy.grid = std::make_shared<SimplexGrid>(problem.n_theta, resolution);
  policy.prefs = prefs;
  policy.gamma = problem.gamma();
  auto read_vec = [&in](std::vector<double>& v, std::size_t n) {
    v.resize(n);
    in.read(reinterpret_cast<char*>(v.data()), n * sizeof(double));
  };
  const std::size_t n = static_cast<std::size_t>(n_points);
  read_vec(policy.v.alive, n);
  read_vec(policy.v.dead, n);
  read_vec(policy.q_acq, n * problem.n_lambda);
  read_vec(policy.q_dec, n * problem.n_theta);
  in.read(reinterpret_cast<char*>(&policy.residual), sizeof(double));
  in.read(reinterpret_cast<char*>(&policy.iterations), sizeof(int));
  return static_cast<bool>(in);
}

void store_policy_file(const std::string& path, const SolvedPolicy& policy) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) return;
    const std::int64_t n_points = policy.grid->size();
    out.write(reinterpret_cast<const char*>(&n_points), sizeof(n_points));
    auto write_vec = [&out](const std::vector<double>& v) {
      out.write(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double));
    };
    write_vec(policy.v.alive);
    write_vec(policy.v.dead);
    write_vec(policy.q_acq);
    write_vec(policy.q_dec);
    out.write(reinterpret_cast<const char*>(&policy.residual), sizeof(double));
    out.write(reinterpret_cast<const char*>(&policy.iterations), sizeof(int));
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
}

}  // namespace

PolicyCache::PolicyCache(int resolution, double tol, std::size_t capacity, std::string disk_dir)
    : resolution_(resolution),
      tol_(tol),
      capacity_(capacity == 0 ? 1 : capacity),
      disk_dir_(std::move(disk_dir)) {
  if (!disk_dir_.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(disk_dir_, ec);
  }
}

std::shared_ptr<const SolvedPolicy> PolicyCache::get_or_solve(const DecisionProblem& problem,
                                                              const Preferences& prefs) {
  std::string key;
  auto append = [&key](const std::vector<double>& v) {
    const char* bytes = reinterpret_cast<const char*>(v.data());
    key.append(bytes, v.size() * sizeof(double));
  };
  append(prefs.eta_a);
  append(prefs.eta_b);
  append(prefs.eta_c);

  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = entries_.find(key);
    if (it != entries_.end()) {
      ++hits_;
      order_.splice(order_.begin(), order_, it->second.second);
      return it->second.first;
    }
    ++misses_;
  }

  std::string disk_path;
  if (!disk_dir_.empty()) {
    std::uint64_t h = 1469598103934665603ULL;
    for (char ch : key) {
      h ^= static_cast<unsigned char>(ch);
      h *= 1099511628211ULL;
    }
    char name[128];
    std::snprintf(name, sizeof(name), "/policy_%s_%016llx_g%d_t%.3e.bin",
                  problem_fingerprint(problem).c_str(), static_cast<unsigned long long>(h),
                  resolution_, tol_);
    disk_path = disk_dir_ + name;
  }

  std::shared_ptr<const SolvedPolicy> policy;
  if (!disk_path.empty()) {
    SolvedPolicy from_disk;
    if (load_policy_file(disk_path, problem, prefs, resolution_, from_disk))
      policy = std::make_shared<const SolvedPolicy>(std::move(from_disk));
  }
  if (!policy) {
    // Solve outside the lock; races solve the same key twice but the result
    // is deterministic, so first-in wins and the duplicate is discarded.
    Preferences solve_prefs = prefs;
    solve_prefs.criterion = Criterion::Optimal;
    policy = std::make_shared<const SolvedPolicy>(
        solve_optimal(problem, solve_prefs, resolution_, tol_));
    if (!disk_path.empty()) store_policy_file(disk_path, *policy);
  }

  std::lock_guard<std::mutex> lock(mutex_);
  auto it = entries_.find(key);
  if (it != entries_.end()) return it->second.first;
  order_.push_front(key);
  entries_.emplace(key, std::make_pair(policy, order_.begin()));
  while (entries_.size() > capacity_) {
    entries_.erase(order_.back());
    order_.pop_back();
  }
  return policy;
}

std::vector<BeliefState> replay_beliefs(const DecisionProblem& problem, const Episode& episode) {
  std::vector<BeliefState> beliefs;
  beliefs.reserve(episode.steps.size() + 1);
  std::vector<double> mu = episode.prior;
  if (episode.steps.empty()) {
    beliefs.push_back({mu, 1});
    return beliefs;
  }
  for (const EpisodeStep& step : episode.steps) {
    beliefs.push_back({mu, 1});  // every recorded action was taken while alive
    if (step.is_acquire && step.survived) mu = continual_update(problem, mu, step.index, *step.outcome);
  }
  return beliefs;
}

double data_log_likelihood(const DecisionProblem& problem, const EpisodeDataset& dataset,
                           Criterion kappa, const Preferences& prefs, PolicyCache& cache) {
  std::shared_ptr<const SolvedPolicy> policy;
  if (kappa == Criterion::Optimal) policy = cache.get_or_solve(problem, prefs);

  const double rho = prefs.rho;
  double total = 0.0;
  for (const Episode& episode : dataset.episodes) {
    const std::vector<BeliefState> beliefs = replay_beliefs(problem, episode);
    for (std::size_t t = 0; t < episode.steps.size(); ++t) {
      const EpisodeStep& step = episode.steps[t];
      const std::vector<double> q =
          generalized_q(kappa, problem, prefs, policy.get(), beliefs[t].mu, 1);
      const int action = step.is_acquire ? step.index : problem.n_lambda + step.index;
      double q_min = std::numeric_limits<double>::infinity();
      for (double v : q) q_min = std::min(q_min, v);
      total += -rho * (q[action] - q_min) - boltzmann_log_normalizer(q, rho, q_min);
    }
  }
  return total;
}

double log_posterior(const DecisionProblem& problem, const EpisodeDataset& dataset,
                     Criterion kappa, const LatticePoint& point, const Lattice& lattice,
                     const PriorSpec& priors, PolicyCache& cache) {
  auto it = priors.log_criterion.find(kappa);
  if (it == priors.log_criterion.end() || !std::isfinite(it->second)) return kNegInf;
  const Preferences prefs = lattice.to_preferences(point);
  return it->second + priors.log_eta(lattice, point) + priors.log_rho(lattice, point.rho_idx) +
         data_log_likelihood(problem, dataset, kappa, prefs, cache);
}

PosteriorChain mcmc_sample(const DecisionProblem& problem, const EpisodeDataset& dataset,
                           Criterion kappa, const PriorSpec& priors, const Lattice& lattice,
                           int n_samples, int burn_in, std::uint64_t seed, PolicyCache& cache) {
  if (!(n_samples > burn_in && burn_in >= 0))
    throw ValidationError("mcmc_sample: need n_samples > burn_in >= 0");
  if (!priors.log_criterion.contains(kappa))
    throw ValidationError("mcmc_sample: criterion has zero prior probability");

  Rng rng(seed);
  PosteriorChain chain;
  chain.burn_in = burn_in;
  chain.seed = seed;
  chain.total_steps = n_samples;
  chain.samples.reserve(n_samples - burn_in);

  LatticePoint current = lattice.random_point(rng);
  double lp_current = log_posterior(problem, dataset, kappa, current, lattice, priors, cache);
  std::size_t moves_current = lattice.feasible_moves(current).size();

  for (int i = 0; i < n_samples; ++i) {
    const std::vector<LatticePoint> moves = lattice.feasible_moves(current);
    const LatticePoint& proposal = moves[rng.uniform_int(static_cast<int>(moves.size()))];
    const double lp_proposal =
        log_posterior(problem, dataset, kappa, proposal, lattice, priors, cache);
    const std::size_t moves_proposal = lattice.feasible_moves(proposal).size();
    // Acceptance in log space. The move count ratio corrects the proposal
    // asymmetry at the lattice boundary, keeping the stationary law equal to
    // the posterior rather than degree-biased.
    const double log_ratio = (lp_proposal - lp_current) +
                             std::log(static_cast<double>(moves_current)) -
                             std::log(static_cast<double>(moves_proposal));
    bool accepted = false;
    if (log_ratio >= 0.0) {
      accepted = true;
    } else {
      double u = rng.uniform();
      if (u <= 0.0) u = 0x1.0p-53;
      accepted = std::log(u) < log_ratio;
    }
    if (accepted) {
      current = proposal;
      lp_current = lp_proposal;
      moves_current = moves_proposal;
      ++chain.acceptance_count;
    }
    if (i >= burn_in) chain.samples.push_back({current, lp_current, accepted});
  }
  return chain;
}

MapResult map_estimate(const DecisionProblem& problem, const EpisodeDataset& dataset,
                       Criterion kappa, const PriorSpec& priors, const Lattice& lattice,
                       PolicyCache& cache, const PosteriorChain* chain, int coarse_per_axis) {
  std::set<LatticePoint> candidates;
  if (chain)
    for (const ChainSample& s : chain->samples) candidates.insert(s.point);

  // Coarse sub-lattice: a few evenly spread indices per axis, shrunk until
  // the product stays within budget. Always contains the lexicographically
  // smallest point, which therefore wins on a flat posterior.
  const int steps = lattice.steps_per_unit();
  const int n_rho = static_cast<int>(lattice.rho_grid().size());
  int per_axis = std::max(1, coarse_per_axis);
  auto sweep_size = [&](int k) {
    double size = static_cast<double>(std::min(k, n_rho));
    for (int i = 0; i < lattice.eta_dim(); ++i) size *= std::min(k, steps + 1);
    return size;
  };
  while (per_axis > 1 && sweep_size(per_axis) > 20000.0) --per_axis;

  auto axis_values = [per_axis](int max_index) {
    std::set<int> values;
    if (per_axis == 1) {
      values.insert(0);
    } else {
      for (int j = 0; j < per_axis; ++j)
        values.insert(static_cast<int>(std::llround(
            static_cast<double>(j) * max_index / (per_axis - 1))));
    }
    return std::vector<int>(values.begin(), values.end());
  };
  const std::vector<int> eta_values = axis_values(steps);
  const std::vector<int> rho_values = axis_values(n_rho - 1);
  std::vector<LatticePoint> stack;
  LatticePoint seed_pt;
  seed_pt.eta.assign(lattice.eta_dim(), 0);
  std::vector<int> cursor(lattice.eta_dim(), 0);
  bool sweeping = true;
  while (sweeping) {
    for (int a = 0; a < lattice.eta_dim(); ++a) seed_pt.eta[a] = eta_values[cursor[a]];
    for (int r : rho_values) {
      seed_pt.rho_idx = r;
      candidates.insert(seed_pt);
    }
    int axis = lattice.eta_dim() - 1;
    while (axis >= 0) {
      if (++cursor[axis] < static_cast<int>(eta_values.size())) break;
      cursor[axis] = 0;
      --axis;
    }
    sweeping = axis >= 0;
  }

  std::map<LatticePoint, double> memo;
  auto evaluate = [&](const LatticePoint& pt) {
    auto it = memo.find(pt);
    if (it != memo.end()) return it->second;
    double lp = log_posterior(problem, dataset, kappa, pt, lattice, priors, cache);
    memo.emplace(pt, lp);
    return lp;
  };

  // std::set iterates candidates in lexicographic order, so on ties the
  // lexicographically smallest point is kept throughout.
  std::vector<std::pair<double, LatticePoint>> ranked;
  ranked.reserve(candidates.size());
  for (const LatticePoint& pt : candidates) ranked.emplace_back(-evaluate(pt), pt);
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });

  // Greedy hill-climb from each of the best few starts; basins around
  // near-optimal candidates can differ, and extra starts are cheap next to
  // the sweep.
  auto climb = [&](LatticePoint pt, double lp) {
    for (;;) {
      const std::vector<LatticePoint> moves = lattice.feasible_moves(pt);
      LatticePoint best_move;
      double best_move_lp = lp;
      bool improved = false;
      for (const LatticePoint& mv : moves) {
        const double mv_lp = evaluate(mv);
        if (mv_lp > best_move_lp || (improved && mv_lp == best_move_lp && mv < best_move)) {
          best_move = mv;
          best_move_lp = mv_lp;
          improved = true;
        }
      }
      if (!improved) return std::make_pair(lp, pt);
      pt = std::move(best_move);
      lp = best_move_lp;
    }
  };

  MapResult best;
  best.point = ranked.front().second;
  best.log_post = -ranked.front().first;
  const std::size_t starts = std::min<std::size_t>(ranked.size(), 5);
  for (std::size_t s = 0; s < starts; ++s) {
    auto [lp, pt] = climb(ranked[s].second, -ranked[s].first);
    if (lp > best.log_post || (lp == best.log_post && pt < best.point)) {
      best.point = std::move(pt);
      best.log_post = lp;
    }
  }

  best.prefs = lattice.to_preferences(best.point);
  return best;
}

std::vector<CriterionScore> compare_criteria(
    const DecisionProblem& problem, const EpisodeDataset& dataset, const PriorSpec& priors,
    const std::map<Criterion, Lattice>& lattices,
    const std::map<Criterion, const PosteriorChain*>& chains, PolicyCache& cache) {
  std::vector<CriterionScore> scores;
  for (const auto& [kappa, lattice] : lattices) {
    auto it = priors.log_criterion.find(kappa);
    if (it == priors.log_criterion.end() || !std::isfinite(it->second)) continue;
    const PosteriorChain* chain = nullptr;
    if (auto cit = chains.find(kappa); cit != chains.end()) chain = cit->second;
    CriterionScore score;
    score.criterion = kappa;
    score.map = map_estimate(problem, dataset, kappa, priors, lattice, cache, chain);
    score.map_log_posterior = score.map.log_post;
    scores.push_back(std::move(score));
  }
  return scores;
}

double split_rhat(const std::vector<std::vector<double>>& chains) {
  std::vector<std::vector<double>> halves;
  std::size_t min_len = std::numeric_limits<std::size_t>::max();
  for (const auto& c : chains) min_len = std::min(min_len, c.size());
  if (chains.empty() || min_len < 4) return std::numeric_limits<double>::quiet_NaN();
  const std::size_t half = min_len / 2;
  for (const auto& c : chains) {
    halves.emplace_back(c.begin(), c.begin() + half);
    halves.emplace_back(c.begin() + half, c.begin() + 2 * half);
  }
  const double m = static_cast<double>(halves.size());
  const double n = static_cast<double>(half);
  std::vector<double> means;
  double within = 0.0;
  for (const auto& h : halves) {
    double mean = 0.0;
    for (double x : h) mean += x;
    mean /= n;
    double var = 0.0;
    for (double x : h) var += (x - mean) * (x - mean);
    var /= (n - 1.0);
    means.push_back(mean);
    within += var;
  }
  within /= m;
  double grand = 0.0;
  for (double x : means) grand += x;
  grand /= m;
  double between = 0.0;
  for (double x : means) between += (x - grand) * (x - grand);
  between *= n / (m - 1.0);
  if (within <= 0.0) return 1.0;
  const double var_est = (n - 1.0) / n * within + between / n;
  return std::sqrt(var_est / within);
}

}  // namespace ias
