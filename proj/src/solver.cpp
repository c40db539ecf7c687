#include "ias/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ias/errors.hpp"
#include "ias/recognition.hpp"

namespace ias {

namespace {

double dead_value(const Preferences& prefs, std::span<const double> mu) {
  double v = 0.0;
  for (std::size_t t = 0; t < mu.size(); ++t) v += prefs.eta_b[t] * mu[t];
  return v;
}

double min_weighted_cost(const DecisionProblem& problem, const Preferences& prefs) {
  double m = std::numeric_limits<double>::infinity();
  for (int l = 0; l < problem.n_lambda; ++l)
    m = std::min(m, prefs.eta_c[l] * problem.c[l]);
  return m;
}

// Precomputed sweep structure: grid-point posteriors and their barycentric
// supports never change across Bellman iterations, so each sweep reduces to
// dot products against the value tables. Outcome and deadline masses are
// folded into the support weights.
struct SweepPlan {
  const DecisionProblem& problem;
  const Preferences& prefs;
  const SimplexGrid& grid;

  std::vector<double> cost;         // per lambda: eta_c * c
  std::vector<int> offsets;         // CSR over (point, lambda), alive entries
  std::vector<std::pair<int, double>> entries;  // (grid index, weight * outcome mass)
  std::vector<int> dead_offsets;    // CSR over (point, lambda), terminal entries
  std::vector<std::pair<int, double>> dead_entries;  // (grid index, weight * pbar)
  std::vector<double> qdec_min;     // per point: aggregate decision factor, alive
  std::vector<double> dead;         // closed-form dead values
  double min_cost;

  SweepPlan(const DecisionProblem& pr, const Preferences& pf, const SimplexGrid& g)
      : problem(pr), prefs(pf), grid(g), min_cost(min_weighted_cost(pr, pf)) {
    const int n_points = g.size();
    const int nl = pr.n_lambda;
    cost.resize(nl);
    for (int l = 0; l < nl; ++l) cost[l] = pf.eta_c[l] * pr.c[l];
    offsets.assign(static_cast<std::size_t>(n_points) * nl + 1, 0);
    dead_offsets.assign(static_cast<std::size_t>(n_points) * nl + 1, 0);
    qdec_min.resize(n_points);
    dead.resize(n_points);

    std::vector<double> mu;
    for (int i = 0; i < n_points; ++i) {
      mu = g.point(i);
      dead[i] = dead_value(pf, mu);
      qdec_min[i] = decision_q_aggregate(pr, pf, mu, 1);
      for (int l = 0; l < nl; ++l) {
        const double pbar = failure_prob(pr, mu, l);
        if (pbar > 0.0) {
          auto terminal = terminal_update(pr, mu, l);
          for (const auto& [idx, w] : g.locate(terminal).terms)
            dead_entries.emplace_back(idx, w * pbar);
        }
        dead_offsets[static_cast<std::size_t>(i) * nl + l + 1] =
            static_cast<int>(dead_entries.size());
        for (int o = 0; o < pr.n_omega; ++o) {
          double mass = 0.0;
          for (int t = 0; t < pr.n_theta; ++t)
            mass += (1.0 - pr.p_at(t, l)) * pr.q_at(t, l, o) * mu[t];
          if (mass <= 0.0) continue;
          auto posterior = continual_update(pr, mu, l, o);
          for (const auto& [idx, w] : g.locate(posterior).terms)
            entries.emplace_back(idx, w * mass);
        }
        offsets[static_cast<std::size_t>(i) * nl + l + 1] = static_cast<int>(entries.size());
      }
    }
  }

  double acquisition(int point, int lam, const ValueTables& tables) const {
    const std::size_t cell = static_cast<std::size_t>(point) * problem.n_lambda + lam;
    double q = cost[lam];
    for (int e = dead_offsets[cell]; e < dead_offsets[cell + 1]; ++e)
      q += dead_entries[e].second * tables.dead[dead_entries[e].first];
    for (int e = offsets[cell]; e < offsets[cell + 1]; ++e)
      q += entries[e].second * tables.alive[entries[e].first];
    return q;
  }

  /// One Jacobi sweep; returns the sup-norm residual. Points are independent
  /// given the previous iterate, so this loop is safe to split across
  /// workers with a barrier between sweeps.
  double apply(const ValueTables& in, ValueTables& out) const {
    const int n_points = grid.size();
    const int nl = problem.n_lambda;
    out.alive.resize(n_points);
    out.dead.resize(n_points);
    double residual = 0.0;
    for (int i = 0; i < n_points; ++i) {
      double best = qdec_min[i];
      for (int l = 0; l < nl; ++l) best = std::min(best, acquisition(i, l, in));
      out.alive[i] = best;
      out.dead[i] = std::min(dead[i], in.dead[i] + min_cost);
      residual = std::max(residual, std::abs(out.alive[i] - in.alive[i]));
      residual = std::max(residual, std::abs(out.dead[i] - in.dead[i]));
    }
    return residual;
  }
};

}  // namespace

std::vector<double> dead_value_table(const Preferences& prefs, const SimplexGrid& grid) {
  std::vector<double> table(grid.size());
  for (int i = 0; i < grid.size(); ++i) table[i] = dead_value(prefs, grid.point(i));
  return table;
}

double decision_q(const DecisionProblem& problem, const Preferences& prefs,
                  std::span<const double> mu, int nu, int theta_hat) {
  if (nu == 0) return dead_value(prefs, mu);
  double risk = 0.0;
  for (int t = 0; t < problem.n_theta; ++t)
    if (t != theta_hat) risk += prefs.eta_a[t] * mu[t];
  return risk;
}

double decision_q_aggregate(const DecisionProblem& problem, const Preferences& prefs,
                            std::span<const double> mu, int nu) {
  double best = std::numeric_limits<double>::infinity();
  for (int t = 0; t < problem.n_theta; ++t)
    best = std::min(best, decision_q(problem, prefs, mu, nu, t));
  return best;
}

double acquisition_q(const DecisionProblem& problem, const Preferences& prefs,
                     const SimplexGrid& grid, const ValueTables& tables,
                     std::span<const double> mu, int nu, int lam) {
  const double cost = prefs.eta_c[lam] * problem.c[lam];
  if (nu == 0) return grid.interpolate(tables.dead, mu) + cost;

  const double pbar = failure_prob(problem, mu, lam);
  double q = cost;
  if (pbar > 0.0) q += grid.interpolate(tables.dead, terminal_update(problem, mu, lam)) * pbar;
  for (int o = 0; o < problem.n_omega; ++o) {
    double mass = 0.0;
    for (int t = 0; t < problem.n_theta; ++t)
      mass += (1.0 - problem.p_at(t, lam)) * problem.q_at(t, lam, o) * mu[t];
    if (mass <= 0.0) continue;
    q += grid.interpolate(tables.alive, continual_update(problem, mu, lam, o)) * mass;
  }
  return q;
}

ValueTables bellman_apply(const DecisionProblem& problem, const Preferences& prefs,
                          const SimplexGrid& grid, const ValueTables& tables) {
  SweepPlan plan(problem, prefs, grid);
  ValueTables out;
  plan.apply(tables, out);
  return out;
}

double SolvedPolicy::q_acq_at(int point, int lam) const {
  return q_acq[static_cast<std::size_t>(point) * prefs.eta_c.size() + lam];
}

double SolvedPolicy::q_dec_at(int point, int theta_hat) const {
  return q_dec[static_cast<std::size_t>(point) * prefs.eta_a.size() + theta_hat];
}

double SolvedPolicy::value(std::span<const double> mu, int nu) const {
  return grid->interpolate(nu == 1 ? v.alive : v.dead, mu);
}

double SolvedPolicy::grid_lipschitz() const {
  double max_step = 0.0;
  for (const auto& [i, j] : grid->adjacent_pairs())
    max_step = std::max(max_step, std::abs(v.alive[i] - v.alive[j]));
  return max_step * grid->resolution();
}

SolvedPolicy solve_optimal(const DecisionProblem& problem, const Preferences& prefs,
                           int resolution, double tol) {
  if (tol <= 0.0) throw ValidationError("solve_optimal: tol must be positive");
  const double gamma = problem.gamma();
  if (!(gamma < 1.0))
    throw ValidationError("solve_optimal: contraction requires every hazard > 0");

  SolvedPolicy policy;
  policy.grid = std::make_shared<SimplexGrid>(problem.n_theta, resolution);
  policy.prefs = prefs;
  policy.gamma = gamma;
  const SimplexGrid& grid = *policy.grid;
  SweepPlan plan(problem, prefs, grid);

  ValueTables cur;
  cur.alive.assign(grid.size(), 0.0);
  cur.dead = plan.dead;  // closed form, the dead branch's own fixed point
  ValueTables next;

  double residual = plan.apply(cur, next);
  std::swap(cur, next);
  int iterations = 1;
  // Geometric rate: residuals shrink by gamma per sweep, so the sweep budget
  // follows from the first delta. A cap breach means gamma is effectively 1.
  long cap = 64;
  if (residual > tol && gamma > 0.0)
    cap = static_cast<long>(std::ceil(std::log(tol / residual) / std::log(gamma))) + 64;
  while (residual > tol) {
    if (iterations > cap)
      throw ConvergenceError("solve_optimal: iteration cap exceeded (gamma too close to 1)");
    residual = plan.apply(cur, next);
    std::swap(cur, next);
    ++iterations;
  }

  // Final sweep populates the Q tables; v_alive is set to their pointwise
  // min so the stored tables satisfy the Bellman identity exactly.
  const int n_points = grid.size();
  policy.q_acq.resize(static_cast<std::size_t>(n_points) * problem.n_lambda);
  policy.q_dec.resize(static_cast<std::size_t>(n_points) * problem.n_theta);
  policy.v.alive.resize(n_points);
  policy.v.dead = cur.dead;
  for (int i = 0; i < n_points; ++i) {
    auto mu = grid.point(i);
    double best = std::numeric_limits<double>::infinity();
    for (int t = 0; t < problem.n_theta; ++t) {
      double q = decision_q(problem, prefs, mu, 1, t);
      policy.q_dec[static_cast<std::size_t>(i) * problem.n_theta + t] = q;
      best = std::min(best, q);
    }
    for (int l = 0; l < problem.n_lambda; ++l) {
      double q = plan.acquisition(i, l, cur);
      policy.q_acq[static_cast<std::size_t>(i) * problem.n_lambda + l] = q;
      best = std::min(best, q);
    }
    policy.v.alive[i] = best;
  }
  policy.residual = residual;
  policy.iterations = iterations;
  return policy;
}

int TerminationMap::termination_count() const {
  int n = 0;
  for (const auto& label : labels) n += label.terminate ? 1 : 0;
  return n;
}

TerminationMap termination_set(const SolvedPolicy& policy, const DecisionProblem& problem) {
  TerminationMap map;
  const int n_points = policy.grid->size();
  map.labels.resize(n_points);
  map.regions.assign(problem.n_theta, {});
  for (int i = 0; i < n_points; ++i) {
    double q_continue = std::numeric_limits<double>::infinity();
    int best_lam = 0;
    for (int l = 0; l < problem.n_lambda; ++l) {
      double q = policy.q_acq_at(i, l);
      if (q < q_continue) {
        q_continue = q;
        best_lam = l;
      }
    }
    double q_stop = std::numeric_limits<double>::infinity();
    for (int t = 0; t < problem.n_theta; ++t) q_stop = std::min(q_stop, policy.q_dec_at(i, t));
    TerminationMap::Label& label = map.labels[i];
    if (q_continue >= q_stop) {  // ties terminate
      label.terminate = true;
      label.index = optimal_decision(policy.prefs, policy.grid->point(i));
      map.regions[label.index].push_back(i);
    } else {
      label.terminate = false;
      label.index = best_lam;
    }
  }
  return map;
}

double surprise_u(const DecisionProblem& problem,
                  const std::function<double(std::span<const double>, int)>& uncertainty,
                  std::span<const double> mu, int nu, int lam) {
  const double pbar = failure_prob(problem, mu, lam);
  if (nu == 0) return pbar * uncertainty(mu, 0);
  double expected = 0.0;  // (1 - pbar) * E[U(posterior) | survival]
  for (int o = 0; o < problem.n_omega; ++o) {
    double mass = 0.0;
    for (int t = 0; t < problem.n_theta; ++t)
      mass += (1.0 - problem.p_at(t, lam)) * problem.q_at(t, lam, o) * mu[t];
    if (mass <= 0.0) continue;
    expected += uncertainty(continual_update(problem, mu, lam, o), 1) * mass;
  }
  return uncertainty(mu, 1) - expected;
}

double surprise(const DecisionProblem& problem, const SolvedPolicy& policy,
                std::span<const double> mu, int nu, int lam) {
  return surprise_u(
      problem,
      [&policy](std::span<const double> b, int n) { return policy.value(b, n); }, mu, nu, lam);
}

double suspense(const DecisionProblem& problem, const Preferences& prefs,
                std::span<const double> mu, int lam) {
  double num = 0.0;
  double denom = 0.0;
  for (int t = 0; t < problem.n_theta; ++t) {
    num += prefs.eta_b[t] * problem.p_at(t, lam) * mu[t];
    denom += prefs.eta_b[t] * mu[t];
  }
  if (denom <= 0.0)
    throw ValidationError("suspense: eta_b-weighted belief mass is zero (degenerate preferences)");
  return 1.0 - num / denom;
}

double acquisition_q_decomposed(const DecisionProblem& problem, const SolvedPolicy& policy,
                                std::span<const double> mu, int lam) {
  const Preferences& prefs = policy.prefs;
  double weighted_mass = 0.0;
  for (int t = 0; t < problem.n_theta; ++t) weighted_mass += prefs.eta_b[t] * mu[t];
  const double i_t = surprise(problem, policy, mu, 1, lam);
  const double s_t = suspense(problem, prefs, mu, lam);
  return policy.value(mu, 1) - i_t + (1.0 - s_t) * weighted_mass +
         prefs.eta_c[lam] * problem.c[lam];
}

int optimal_acquisition(const SolvedPolicy& policy, const DecisionProblem& problem,
                        std::span<const double> mu) {
  double q_continue = std::numeric_limits<double>::infinity();
  int best = 0;
  for (int l = 0; l < problem.n_lambda; ++l) {
    double q = acquisition_q(problem, policy.prefs, *policy.grid, policy.v, mu, 1, l);
    if (q < q_continue) {
      q_continue = q;
      best = l;
    }
  }
  if (q_continue >= decision_q_aggregate(problem, policy.prefs, mu, 1))
    throw ValidationError(
        "optimal_acquisition: belief is in the termination set; dispatch to optimal_decision");
  return best;
}

int optimal_decision(const Preferences& prefs, std::span<const double> mu) {
  int best = 0;
  double score = -std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < mu.size(); ++t) {
    double s = prefs.eta_a[t] * mu[t];
    if (s > score) {
      score = s;
      best = static_cast<int>(t);
    }
  }
  return best;
}

double gl_q(const DecisionProblem& problem, const Preferences& prefs,
            std::span<const double> mu, int nu, int lam) {
  if (prefs.eta_d.size() != static_cast<std::size_t>(problem.n_theta))
    throw ValidationError("gl_q: greedy lookahead requires eta_d");
  double g = 0.0;  // belief-weighted continuation bonus: higher eta_d raises the bar to decide
  for (int t = 0; t < problem.n_theta; ++t) g -= prefs.eta_d[t] * mu[t];
  const double cost = prefs.eta_c[lam] * problem.c[lam];
  if (nu == 0) return cost + g + dead_value(prefs, mu);

  double q = cost + g;
  for (int t = 0; t < problem.n_theta; ++t)
    q += prefs.eta_b[t] * problem.p_at(t, lam) * mu[t];  // Qbar at the terminal posterior
  for (int o = 0; o < problem.n_omega; ++o) {
    double mass = 0.0;
    for (int t = 0; t < problem.n_theta; ++t)
      mass += (1.0 - problem.p_at(t, lam)) * problem.q_at(t, lam, o) * mu[t];
    if (mass <= 0.0) continue;
    q += decision_q_aggregate(problem, prefs, continual_update(problem, mu, lam, o), 1) * mass;
  }
  return q;
}

double belief_entropy(std::span<const double> mu, const std::vector<double>* eta_b) {
  double h = 0.0;
  for (std::size_t t = 0; t < mu.size(); ++t) {
    if (mu[t] <= 0.0) continue;
    double w = eta_b ? (*eta_b)[t] : 1.0;
    h -= w * mu[t] * std::log(mu[t]);
  }
  return h;
}

double im_q(const DecisionProblem& problem, const Preferences& prefs,
            std::span<const double> mu, int nu, int lam) {
  const std::vector<double>* weights = prefs.im_weighted_entropy ? &prefs.eta_b : nullptr;
  const double gain = surprise_u(
      problem,
      [weights](std::span<const double> b, int) { return belief_entropy(b, weights); }, mu, nu,
      lam);
  return prefs.eta_c[lam] * problem.c[lam] - gain;
}

std::vector<double> generalized_q(Criterion criterion, const DecisionProblem& problem,
                                  const Preferences& prefs, const SolvedPolicy* policy,
                                  std::span<const double> mu, int nu) {
  std::vector<double> q;
  q.reserve(problem.n_lambda + problem.n_theta);
  for (int l = 0; l < problem.n_lambda; ++l) {
    switch (criterion) {
      case Criterion::Optimal:
        if (!policy)
          throw ValidationError("generalized_q: the optimal criterion requires a solved policy");
        q.push_back(acquisition_q(problem, prefs, *policy->grid, policy->v, mu, nu, l));
        break;
      case Criterion::GreedyLookahead:
        q.push_back(gl_q(problem, prefs, mu, nu, l));
        break;
      case Criterion::InfoMax:
        q.push_back(im_q(problem, prefs, mu, nu, l));
        break;
    }
  }
  for (int t = 0; t < problem.n_theta; ++t)
    q.push_back(decision_q(problem, prefs, mu, nu, t));
  return q;
}

}  // namespace ias
