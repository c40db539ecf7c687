#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "ias/errors.hpp"
#include "ias/io.hpp"
#include "tests/support/instances.hpp"

using namespace ias;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("ias_test_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("problem configs round-trip exactly") {
  TempDir dir;
  auto pr = ias::testing::ternary_problem();
  auto labels = ProblemLabels::defaults(pr);
  labels.theta = {"flu", "cold", "covid"};
  const fs::path path = dir.path / "problem.json";
  save_problem(path, pr, labels);
  auto loaded = load_problem(path);
  CHECK(loaded.problem.n_theta == pr.n_theta);
  CHECK(loaded.problem.q == pr.q);  // bitwise: shortest-round-trip doubles
  CHECK(loaded.problem.p == pr.p);
  CHECK(loaded.problem.c == pr.c);
  CHECK(loaded.problem.mu0 == pr.mu0);
  CHECK(loaded.labels.theta == labels.theta);
  CHECK(loaded.labels.lambda == labels.lambda);
}

TEST_CASE("invalid problem configs are rejected with every violation listed") {
  TempDir dir;
  const fs::path path = dir.path / "bad.json";
  atomic_write(path, R"({"theta": ["a", "b"], "lambda": ["t"], "omega_count": 2,
    "q": [[[0.7, 0.2]], [[0.5, 0.5]]], "p": [[0.0], [0.3]], "c": [1.0], "mu0": [0.5, 0.5]})");
  try {
    load_problem(path);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    const std::string what = e.what();
    CHECK(what.find("sums to") != std::string::npos);
    CHECK(what.find("contraction") != std::string::npos);
  }
  CHECK_THROWS_AS(load_problem(dir.path / "missing.json"), ValidationError);
}

TEST_CASE("preferences round-trip including criterion-specific fields") {
  TempDir dir;
  auto pr = ias::testing::preoperative_problem();
  auto prefs = ias::testing::gl_prefs();
  const fs::path path = dir.path / "prefs.json";
  save_preferences(path, prefs);
  auto loaded = load_preferences(path, pr);
  CHECK(loaded.criterion == Criterion::GreedyLookahead);
  CHECK(loaded.eta_a == prefs.eta_a);
  CHECK(loaded.eta_d == prefs.eta_d);
  CHECK(loaded.rho == prefs.rho);
}

TEST_CASE("preference configs are validated against the problem") {
  TempDir dir;
  auto pr = ias::testing::preoperative_problem();
  const fs::path path = dir.path / "prefs.json";
  atomic_write(path, R"({"criterion": "optimal", "eta_a": [0.25, 0.75, 0.5],
    "eta_b": [0.5, 0.5], "eta_c": [0.2], "rho": 10.0})");
  CHECK_THROWS_AS(load_preferences(path, pr), ValidationError);
}

TEST_CASE("episode logs round-trip and strip truths on request") {
  TempDir dir;
  auto pr = ias::testing::preoperative_problem();
  Strategy strat{.criterion = Criterion::Optimal, .prefs = ias::testing::preoperative_prefs()};
  auto dataset = simulate_dataset(pr, strat, 25, 7, PriorMode::UniformSimplex);
  const fs::path path = dir.path / "episodes.jsonl";
  write_dataset(path, dataset);

  auto loaded = load_dataset(path, pr);
  REQUIRE(loaded.episodes.size() == dataset.episodes.size());
  CHECK(loaded.problem_fingerprint == dataset.problem_fingerprint);
  CHECK(loaded.meta.seed == dataset.meta.seed);
  CHECK(loaded.meta.criterion == dataset.meta.criterion);
  for (std::size_t i = 0; i < loaded.episodes.size(); ++i) {
    CHECK(loaded.episodes[i].prior == dataset.episodes[i].prior);
    CHECK(loaded.episodes[i].truth == dataset.episodes[i].truth);
    CHECK(loaded.episodes[i].decision == dataset.episodes[i].decision);
    REQUIRE(loaded.episodes[i].steps.size() == dataset.episodes[i].steps.size());
    for (std::size_t t = 0; t < loaded.episodes[i].steps.size(); ++t) {
      CHECK(loaded.episodes[i].steps[t].index == dataset.episodes[i].steps[t].index);
      CHECK(loaded.episodes[i].steps[t].outcome == dataset.episodes[i].steps[t].outcome);
    }
  }

  auto stripped = load_dataset(path, pr, /*strip_truths=*/true);
  for (const auto& e : stripped.episodes) CHECK(!e.truth.has_value());
}

TEST_CASE("fingerprint mismatches are data errors") {
  TempDir dir;
  auto pr = ias::testing::preoperative_problem();
  Strategy strat{.criterion = Criterion::Optimal, .prefs = ias::testing::preoperative_prefs()};
  auto dataset = simulate_dataset(pr, strat, 3, 2, PriorMode::Fixed);
  const fs::path path = dir.path / "episodes.jsonl";
  write_dataset(path, dataset);
  CHECK_THROWS_AS(load_dataset(path, pr, false, std::string("deadbeef")), DataError);
  CHECK_NOTHROW(load_dataset(path, pr, false, problem_fingerprint(pr)));
}

TEST_CASE("malformed episode lines are reported with their line number") {
  TempDir dir;
  auto pr = ias::testing::preoperative_problem();
  const fs::path path = dir.path / "episodes.jsonl";
  atomic_write(path,
               "{\"n\": 1, \"seed\": 0, \"problem_fingerprint\": \"\"}\n"
               "{\"episode_id\": 0, \"prior\": [0.5, 0.5], \"steps\": "
               "[{\"t\": 0, \"action\": {\"kind\": \"acquire\", \"index\": 3}, "
               "\"outcome\": 0, \"survived\": true}], \"truth\": null}\n");
  try {
    load_dataset(path, pr);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find(":2") != std::string::npos);
  }
}

TEST_CASE("unknown keys in episode records are ignored") {
  TempDir dir;
  auto pr = ias::testing::preoperative_problem();
  const fs::path path = dir.path / "episodes.jsonl";
  atomic_write(path,
               "{\"episode_id\": 0, \"prior\": [0.5, 0.5], \"future_field\": 17, \"steps\": "
               "[{\"t\": 0, \"action\": {\"kind\": \"decide\", \"index\": 1}, "
               "\"outcome\": null, \"survived\": true, \"note\": \"x\"}], \"truth\": null}\n");
  auto loaded = load_dataset(path, pr);
  REQUIRE(loaded.episodes.size() == 1);
  CHECK(loaded.episodes[0].decision == 1);
}

TEST_CASE("policy and chain exports are deterministic") {
  TempDir dir;
  auto pr = ias::testing::preoperative_problem();
  auto prefs = ias::testing::preoperative_prefs();
  auto policy = solve_optimal(pr, prefs, 20, 1e-8);
  auto map = termination_set(policy, pr);
  auto labels = ProblemLabels::defaults(pr);
  const fs::path p1 = dir.path / "policy1.tsv";
  const fs::path p2 = dir.path / "policy2.tsv";
  write_policy_export(p1, policy, map, pr, labels);
  write_policy_export(p2, policy, map, pr, labels);
  const std::string text = slurp(p1);
  CHECK(text == slurp(p2));
  // one header plus one row per grid point
  CHECK(std::count(text.begin(), text.end(), '\n') == policy.grid->size() + 1);
  CHECK(text.find("terminate:theta1") != std::string::npos);

  Strategy strat{.criterion = Criterion::Optimal, .prefs = prefs};
  auto data = simulate_dataset(pr, strat, 10, 3, PriorMode::UniformSimplex).without_truths();
  Lattice lattice(Criterion::Optimal, pr, 0.25);
  auto priors = PriorSpec::uniform({Criterion::Optimal});
  PolicyCache cache(20, 1e-7);
  auto chain = mcmc_sample(pr, data, Criterion::Optimal, priors, lattice, 60, 20, 5, cache);
  const fs::path c1 = dir.path / "chain.tsv";
  write_chain(c1, chain, lattice);
  const std::string chain_text = slurp(c1);
  CHECK(std::count(chain_text.begin(), chain_text.end(), '\n') ==
        static_cast<long>(chain.samples.size()) + 1);
  CHECK(chain_text.find("eta_a[0]") != std::string::npos);

  auto map_result = map_estimate(pr, data, Criterion::Optimal, priors, lattice, cache, &chain);
  const fs::path m1 = dir.path / "map.json";
  write_map_summary(m1, map_result, lattice);
  CHECK(slurp(m1).find("log_posterior") != std::string::npos);
}

TEST_CASE("format_double round-trips exactly") {
  for (double v : {0.1, 1.0 / 3.0, 1e-17, 123456.789, -0.0, 2.5e300}) {
    CHECK(std::stod(format_double(v)) == v);
  }
}

TEST_CASE("atomic_write replaces the target and leaves no temp file") {
  TempDir dir;
  const fs::path path = dir.path / "file.txt";
  atomic_write(path, "first");
  atomic_write(path, "second");
  CHECK(slurp(path) == "second");
  CHECK(!fs::exists(dir.path / "file.txt.tmp"));
}
