#include <doctest.h>

#include <cmath>

#include "ias/errors.hpp"
#include "ias/recognition.hpp"
#include "ias/rng.hpp"
#include "tests/support/instances.hpp"
#include "tests/support/rational.hpp"

using namespace ias;
using ias::testing::Rational;

namespace {

DecisionProblem random_problem(Rng& rng, int n_theta, int n_lambda, int n_omega) {
  DecisionProblem pr;
  pr.n_theta = n_theta;
  pr.n_lambda = n_lambda;
  pr.n_omega = n_omega;
  pr.q.resize(n_theta * n_lambda * n_omega);
  pr.p.resize(n_theta * n_lambda);
  pr.c.assign(n_lambda, 1.0);
  for (int t = 0; t < n_theta; ++t)
    for (int l = 0; l < n_lambda; ++l) {
      double total = 0.0;
      for (int o = 0; o < n_omega; ++o) {
        pr.q_at(t, l, o) = 0.05 + rng.uniform();
        total += pr.q_at(t, l, o);
      }
      for (int o = 0; o < n_omega; ++o) pr.q_at(t, l, o) /= total;
      pr.p_at(t, l) = 0.05 + 0.5 * rng.uniform();
    }
  pr.mu0 = rng.uniform_simplex(n_theta);
  return pr;
}

}  // namespace

TEST_CASE("continual update reproduces the worked example exactly") {
  // Exact rational route first: (1 - 1/10)(8/10)(1/2) / (...) = 18/25.
  ias::testing::RationalProblem rp;
  rp.q = {{Rational(8, 10), Rational(2, 10)}, {Rational(4, 10), Rational(6, 10)}};
  rp.p = {Rational(1, 10), Rational(3, 10)};
  std::vector<Rational> mu{Rational(1, 2), Rational(1, 2)};
  auto posterior = rational_continual(rp, mu, 0);
  CHECK(posterior[0] == Rational(18, 25));
  CHECK(posterior[1] == Rational(7, 25));

  auto pr = ias::testing::worked_problem();
  auto out = continual_update(pr, std::vector<double>{0.5, 0.5}, 0, 0);
  CHECK(out[0] == doctest::Approx(0.72).epsilon(1e-14));
  CHECK(out[1] == doctest::Approx(0.28).epsilon(1e-14));
}

TEST_CASE("continual update is the identity for uninformative outcomes") {
  auto pr = ias::testing::worked_problem();
  for (int t = 0; t < 2; ++t) {
    pr.p_at(t, 0) = 0.2;
    pr.q_at(t, 0, 0) = 0.5;
    pr.q_at(t, 0, 1) = 0.5;
  }
  auto out = continual_update(pr, std::vector<double>{0.3, 0.7}, 0, 1);
  CHECK(out[0] == doctest::Approx(0.3).epsilon(1e-14));
  CHECK(out[1] == doctest::Approx(0.7).epsilon(1e-14));
}

TEST_CASE("certainty is absorbing under both updates") {
  auto pr = ias::testing::worked_problem();
  auto c = continual_update(pr, std::vector<double>{1.0, 0.0}, 0, 1);
  CHECK(c[0] == 1.0);
  auto t = terminal_update(pr, std::vector<double>{0.0, 1.0}, 0);
  CHECK(t[1] == 1.0);
}

TEST_CASE("continual update rejects impossible outcomes") {
  auto pr = ias::testing::worked_problem();
  pr.q_at(0, 0, 0) = 0.0;
  pr.q_at(0, 0, 1) = 1.0;
  CHECK_THROWS_AS(continual_update(pr, std::vector<double>{1.0, 0.0}, 0, 0), DataError);
}

TEST_CASE("terminal update reproduces the worked example exactly") {
  ias::testing::RationalProblem rp;
  rp.q = {{Rational(1, 2), Rational(1, 2)}, {Rational(1, 2), Rational(1, 2)}};
  rp.p = {Rational(1, 10), Rational(3, 10)};
  std::vector<Rational> mu{Rational(1, 2), Rational(1, 2)};
  auto posterior = rational_terminal(rp, mu);
  CHECK(posterior[0] == Rational(1, 4));
  CHECK(posterior[1] == Rational(3, 4));
  CHECK(rational_failure_prob(rp, mu) == Rational(1, 5));

  auto pr = ias::testing::worked_problem();
  auto out = terminal_update(pr, std::vector<double>{0.5, 0.5}, 0);
  CHECK(out[0] == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(out[1] == doctest::Approx(0.75).epsilon(1e-14));
  CHECK(failure_prob(pr, std::vector<double>{0.5, 0.5}, 0) == doctest::Approx(0.2).epsilon(1e-14));
}

TEST_CASE("an exogenous deadline carries no information") {
  auto pr = ias::testing::worked_problem();
  pr.p = {0.25, 0.25};
  auto out = terminal_update(pr, std::vector<double>{0.3, 0.7}, 0);
  CHECK(out[0] == doctest::Approx(0.3).epsilon(1e-14));
  CHECK(failure_prob(pr, std::vector<double>{0.125, 0.875}, 0) == doctest::Approx(0.25));
}

TEST_CASE("degenerate average at a vertex") {
  auto pr = ias::testing::worked_problem();
  CHECK(failure_prob(pr, std::vector<double>{1.0, 0.0}, 0) == doctest::Approx(0.1));
  CHECK(failure_prob(pr, std::vector<double>{0.0, 1.0}, 0) == doctest::Approx(0.3));
}

TEST_CASE("updates stay on the simplex") {
  Rng rng(11);
  for (int rep = 0; rep < 200; ++rep) {
    auto pr = random_problem(rng, 2 + rng.uniform_int(3), 1 + rng.uniform_int(2),
                             2 + rng.uniform_int(2));
    std::vector<double> mu = rng.uniform_simplex(pr.n_theta);
    const int lam = rng.uniform_int(pr.n_lambda);
    for (int step = 0; step < 20; ++step) {
      const int omega = rng.uniform_int(pr.n_omega);
      mu = rng.uniform() < 0.3 ? terminal_update(pr, mu, lam) : continual_update(pr, mu, lam, omega);
      double sum = 0.0;
      for (double v : mu) {
        CHECK(v >= 0.0);
        sum += v;
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("decomposition increments match the worked example") {
  auto pr = ias::testing::worked_problem();
  std::vector<double> mu{0.5, 0.5};
  auto state = Decomposition::initial(mu);
  auto next = step_decomposition(state, pr, mu, 0, 1, 1, 0);
  CHECK(next.alpha[0] == doctest::Approx(0.0625).epsilon(1e-14));
  CHECK(next.alpha[1] == doctest::Approx(-0.0625).epsilon(1e-14));
  CHECK(next.beta[0] == 0.0);
  // components sum to the posterior
  auto posterior = continual_update(pr, mu, 0, 0);
  for (int t = 0; t < 2; ++t)
    CHECK(next.mu_tilde[t] + next.alpha[t] + next.beta[t] ==
          doctest::Approx(posterior[t]).epsilon(1e-12));
}

TEST_CASE("exogenous deadlines make the posterior a pure martingale") {
  auto pr = ias::testing::worked_problem();
  pr.p = {0.25, 0.25};
  std::vector<double> mu{0.5, 0.5};
  auto state = Decomposition::initial(mu);
  auto survived = step_decomposition(state, pr, mu, 0, 1, 1, 1);
  CHECK(survived.alpha[0] == 0.0);
  CHECK(survived.alpha[1] == 0.0);
  auto stopped = step_decomposition(state, pr, mu, 0, 1, 0, std::nullopt);
  CHECK(stopped.beta[0] == 0.0);
  CHECK(stopped.beta[1] == 0.0);
}

TEST_CASE("a dead process freezes the decomposition") {
  auto pr = ias::testing::worked_problem();
  std::vector<double> mu{0.4, 0.6};
  auto state = Decomposition::initial(mu);
  auto frozen = step_decomposition(state, pr, mu, 0, 0, 0, std::nullopt);
  CHECK(frozen.alpha == state.alpha);
  CHECK(frozen.beta == state.beta);
  CHECK(frozen.mu_tilde == state.mu_tilde);
}

TEST_CASE("surviving steps require an outcome") {
  auto pr = ias::testing::worked_problem();
  std::vector<double> mu{0.4, 0.6};
  auto state = Decomposition::initial(mu);
  CHECK_THROWS_AS(step_decomposition(state, pr, mu, 0, 1, 1, std::nullopt), ValidationError);
}

TEST_CASE("one-step expectation of the martingale component is invariant") {
  // Exact enumeration of {deadline fires} and {survive, omega}.
  Rng rng(23);
  for (int rep = 0; rep < 100; ++rep) {
    auto pr = random_problem(rng, 2 + rng.uniform_int(2), 1, 2 + rng.uniform_int(2));
    std::vector<double> mu = rng.uniform_simplex(pr.n_theta);
    auto state = Decomposition::initial(mu);
    // run a couple of steps so alpha, beta are non-trivial
    for (int warm = 0; warm < 2; ++warm) {
      const int omega = rng.uniform_int(pr.n_omega);
      state = step_decomposition(state, pr, mu, 0, 1, 1, omega);
      mu = continual_update(pr, mu, 0, omega);
    }
    const double pbar = failure_prob(pr, mu, 0);
    std::vector<double> expectation(pr.n_theta, 0.0);
    auto stopped = step_decomposition(state, pr, mu, 0, 1, 0, std::nullopt);
    for (int t = 0; t < pr.n_theta; ++t) expectation[t] += pbar * stopped.mu_tilde[t];
    for (int o = 0; o < pr.n_omega; ++o) {
      double mass = 0.0;
      for (int t = 0; t < pr.n_theta; ++t)
        mass += (1.0 - pr.p_at(t, 0)) * pr.q_at(t, 0, o) * mu[t];
      auto survived = step_decomposition(state, pr, mu, 0, 1, 1, o);
      for (int t = 0; t < pr.n_theta; ++t) expectation[t] += mass * survived.mu_tilde[t];
    }
    for (int t = 0; t < pr.n_theta; ++t)
      CHECK(expectation[t] == doctest::Approx(state.mu_tilde[t]).epsilon(1e-10));
  }
}

TEST_CASE("posterior is a supermartingale for above-average hazards") {
  Rng rng(31);
  for (int rep = 0; rep < 100; ++rep) {
    auto pr = random_problem(rng, 3, 1, 3);
    std::vector<double> mu = rng.uniform_simplex(3);
    const double pbar = failure_prob(pr, mu, 0);
    for (int t = 0; t < 3; ++t) {
      // E[mu'(t) | survival] = (1 - p_t) mu_t / (1 - pbar)
      double expectation = 0.0;
      for (int o = 0; o < pr.n_omega; ++o) {
        double mass = 0.0;
        for (int tt = 0; tt < 3; ++tt) mass += (1.0 - pr.p_at(tt, 0)) * pr.q_at(tt, 0, o) * mu[tt];
        expectation += continual_update(pr, mu, 0, o)[t] * mass / (1.0 - pbar);
      }
      if (pr.p_at(t, 0) > pbar) CHECK(expectation <= mu[t] + 1e-12);
      if (pr.p_at(t, 0) < pbar) CHECK(expectation >= mu[t] - 1e-12);
    }
  }
}

TEST_CASE("belief replay depends only on the current state, not deeper history") {
  Rng rng(47);
  auto pr = random_problem(rng, 3, 2, 2);
  std::vector<int> lams, omegas;
  for (int i = 0; i < 12; ++i) {
    lams.push_back(rng.uniform_int(2));
    omegas.push_back(rng.uniform_int(2));
  }
  std::vector<double> full = pr.mu0;
  std::vector<double> snapshot;
  for (int i = 0; i < 12; ++i) {
    if (i == 5) snapshot = full;
    full = continual_update(pr, full, lams[i], omegas[i]);
  }
  for (int i = 5; i < 12; ++i) snapshot = continual_update(pr, snapshot, lams[i], omegas[i]);
  for (int t = 0; t < 3; ++t) CHECK(snapshot[t] == doctest::Approx(full[t]).epsilon(1e-13));
}
