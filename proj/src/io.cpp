#include "ias/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ias/errors.hpp"

namespace ias {

using nlohmann::json;

namespace {

std::vector<double> as_double_vector(const json& j, const std::string& what) {
  if (!j.is_array()) throw ValidationError(what + " must be an array");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number()) throw ValidationError(what + " must contain numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

json parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  return j;
}

void throw_if_violations(const std::vector<std::string>& report, const std::string& what) {
  if (report.empty()) return;
  std::ostringstream msg;
  msg << what << ":";
  for (const auto& r : report) msg << "\n  - " << r;
  throw ValidationError(msg.str());
}

json episode_to_json(const Episode& episode, int id) {
  json steps = json::array();
  for (std::size_t t = 0; t < episode.steps.size(); ++t) {
    const EpisodeStep& s = episode.steps[t];
    json step{{"t", t},
              {"action", {{"kind", s.is_acquire ? "acquire" : "decide"}, {"index", s.index}}},
              {"outcome", s.outcome ? json(*s.outcome) : json(nullptr)},
              {"survived", s.survived}};
    steps.push_back(std::move(step));
  }
  return json{{"episode_id", id},
              {"prior", episode.prior},
              {"steps", std::move(steps)},
              {"truth", episode.truth ? json(*episode.truth) : json(nullptr)}};
}

Episode episode_from_json(const json& j) {
  Episode episode;
  episode.prior = as_double_vector(j.at("prior"), "prior");
  for (const auto& js : j.at("steps")) {
    EpisodeStep step;
    const json& action = js.at("action");
    const std::string kind = action.at("kind").get<std::string>();
    if (kind != "acquire" && kind != "decide") throw ValidationError("unknown action kind " + kind);
    step.is_acquire = kind == "acquire";
    step.index = action.at("index").get<int>();
    if (js.contains("outcome") && !js.at("outcome").is_null())
      step.outcome = js.at("outcome").get<int>();
    step.survived = js.at("survived").get<bool>();
    episode.steps.push_back(std::move(step));
  }
  if (!episode.steps.empty()) {
    const EpisodeStep& last = episode.steps.back();
    if (!last.is_acquire) episode.decision = last.index;
  }
  if (j.contains("truth") && !j.at("truth").is_null()) episode.truth = j.at("truth").get<int>();
  return episode;
}

}  // namespace

ProblemLabels ProblemLabels::defaults(const DecisionProblem& problem) {
  ProblemLabels labels;
  for (int t = 0; t < problem.n_theta; ++t) labels.theta.push_back("theta" + std::to_string(t + 1));
  for (int l = 0; l < problem.n_lambda; ++l)
    labels.lambda.push_back("lambda" + std::to_string(l + 1));
  return labels;
}

LoadedProblem load_problem(const std::filesystem::path& path) {
  const json j = parse_file(path);
  LoadedProblem loaded;
  DecisionProblem& problem = loaded.problem;
  try {
    const json& theta = j.at("theta");
    const json& lambda = j.at("lambda");
    problem.n_theta = static_cast<int>(theta.size());
    problem.n_lambda = static_cast<int>(lambda.size());
    problem.n_omega = j.at("omega_count").get<int>();
    for (const auto& name : theta) loaded.labels.theta.push_back(name.get<std::string>());
    for (const auto& name : lambda) loaded.labels.lambda.push_back(name.get<std::string>());

    const json& q = j.at("q");
    if (static_cast<int>(q.size()) != problem.n_theta)
      throw ValidationError("q must have one block per hypothesis");
    for (const auto& per_theta : q) {
      if (static_cast<int>(per_theta.size()) != problem.n_lambda)
        throw ValidationError("q blocks must have one row per acquisition");
      for (const auto& row : per_theta) {
        const auto values = as_double_vector(row, "q row");
        if (static_cast<int>(values.size()) != problem.n_omega)
          throw ValidationError("q rows must have omega_count entries");
        problem.q.insert(problem.q.end(), values.begin(), values.end());
      }
    }
    const json& p = j.at("p");
    if (static_cast<int>(p.size()) != problem.n_theta)
      throw ValidationError("p must have one row per hypothesis");
    for (const auto& row : p) {
      const auto values = as_double_vector(row, "p row");
      if (static_cast<int>(values.size()) != problem.n_lambda)
        throw ValidationError("p rows must have one entry per acquisition");
      problem.p.insert(problem.p.end(), values.begin(), values.end());
    }
    problem.c = as_double_vector(j.at("c"), "c");
    problem.mu0 = as_double_vector(j.at("mu0"), "mu0");
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  throw_if_violations(validate_problem(problem), path.string());
  return loaded;
}

void save_problem(const std::filesystem::path& path, const DecisionProblem& problem,
                  const ProblemLabels& labels) {
  json q = json::array();
  for (int t = 0; t < problem.n_theta; ++t) {
    json per_theta = json::array();
    for (int l = 0; l < problem.n_lambda; ++l) {
      json row = json::array();
      for (int o = 0; o < problem.n_omega; ++o) row.push_back(problem.q_at(t, l, o));
      per_theta.push_back(std::move(row));
    }
    q.push_back(std::move(per_theta));
  }
  json p = json::array();
  for (int t = 0; t < problem.n_theta; ++t) {
    json row = json::array();
    for (int l = 0; l < problem.n_lambda; ++l) row.push_back(problem.p_at(t, l));
    p.push_back(std::move(row));
  }
  const json doc{{"theta", labels.theta}, {"lambda", labels.lambda},
                 {"omega_count", problem.n_omega}, {"q", std::move(q)}, {"p", std::move(p)},
                 {"c", problem.c}, {"mu0", problem.mu0}};
  atomic_write(path, doc.dump(2) + "\n");
}

Preferences load_preferences(const std::filesystem::path& path, const DecisionProblem& problem) {
  const json j = parse_file(path);
  Preferences prefs;
  try {
    if (j.contains("criterion")) {
      const auto k = criterion_from_name(j.at("criterion").get<std::string>());
      if (!k) throw ValidationError("unknown criterion " + j.at("criterion").dump());
      prefs.criterion = *k;
    }
    prefs.eta_a = as_double_vector(j.at("eta_a"), "eta_a");
    prefs.eta_b = as_double_vector(j.at("eta_b"), "eta_b");
    prefs.eta_c = as_double_vector(j.at("eta_c"), "eta_c");
    if (j.contains("eta_d") && !j.at("eta_d").is_null())
      prefs.eta_d = as_double_vector(j.at("eta_d"), "eta_d");
    if (j.contains("rho")) prefs.rho = j.at("rho").get<double>();
    if (j.contains("im_weighted_entropy"))
      prefs.im_weighted_entropy = j.at("im_weighted_entropy").get<bool>();
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  throw_if_violations(validate_preferences(prefs, problem), path.string());
  return prefs;
}

void save_preferences(const std::filesystem::path& path, const Preferences& prefs) {
  json doc{{"criterion", criterion_name(prefs.criterion)},
           {"eta_a", prefs.eta_a},
           {"eta_b", prefs.eta_b},
           {"eta_c", prefs.eta_c},
           {"rho", prefs.rho}};
  if (!prefs.eta_d.empty()) doc["eta_d"] = prefs.eta_d;
  if (prefs.im_weighted_entropy) doc["im_weighted_entropy"] = true;
  atomic_write(path, doc.dump(2) + "\n");
}

void write_dataset(const std::filesystem::path& path, const EpisodeDataset& dataset) {
  std::ostringstream out;
  json header{{"problem_fingerprint", dataset.problem_fingerprint},
              {"seed", dataset.meta.seed},
              {"n", dataset.meta.n}};
  if (dataset.meta.criterion) header["criterion"] = *dataset.meta.criterion;
  if (dataset.meta.rho) header["rho"] = *dataset.meta.rho;
  if (dataset.meta.prior_mode) header["prior_mode"] = *dataset.meta.prior_mode;
  out << header.dump() << "\n";
  for (std::size_t i = 0; i < dataset.episodes.size(); ++i)
    out << episode_to_json(dataset.episodes[i], static_cast<int>(i)).dump() << "\n";
  atomic_write(path, out.str());
}

EpisodeDataset load_dataset(const std::filesystem::path& path, const DecisionProblem& problem,
                            bool strip_truths,
                            const std::optional<std::string>& expected_fingerprint,
                            bool check_consistency) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  EpisodeDataset dataset;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (!j.contains("episode_id")) {
      // Metadata header; unknown keys are ignored.
      if (j.contains("problem_fingerprint"))
        dataset.problem_fingerprint = j.at("problem_fingerprint").get<std::string>();
      if (j.contains("seed")) dataset.meta.seed = j.at("seed").get<std::uint64_t>();
      if (j.contains("n")) dataset.meta.n = j.at("n").get<int>();
      if (j.contains("criterion")) dataset.meta.criterion = j.at("criterion").get<std::string>();
      if (j.contains("rho")) dataset.meta.rho = j.at("rho").get<double>();
      if (j.contains("prior_mode")) dataset.meta.prior_mode = j.at("prior_mode").get<std::string>();
      continue;
    }
    Episode episode;
    try {
      episode = episode_from_json(j);
    } catch (const json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    const auto report = validate_episode(episode, problem);
    if (!report.empty())
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + report.front());
    if (check_consistency) {
      try {
        replay_beliefs(problem, episode);
      } catch (const DataError& e) {
        throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
      }
    }
    if (strip_truths) episode.truth.reset();
    dataset.episodes.push_back(std::move(episode));
  }
  if (expected_fingerprint && !dataset.problem_fingerprint.empty() &&
      dataset.problem_fingerprint != *expected_fingerprint)
    throw DataError(path.string() + ": episode log was generated for a different problem (" +
                    dataset.problem_fingerprint + " != " + *expected_fingerprint + ")");
  return dataset;
}

std::string format_double(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

void write_policy_export(const std::filesystem::path& path, const SolvedPolicy& policy,
                         const TerminationMap& map, const DecisionProblem& problem,
                         const ProblemLabels& labels) {
  std::ostringstream out;
  out << "point";
  for (int t = 0; t < problem.n_theta; ++t) out << "\tmu_" << labels.theta[t];
  out << "\tv_alive\tv_dead";
  for (int l = 0; l < problem.n_lambda; ++l) out << "\tq_acq_" << labels.lambda[l];
  for (int t = 0; t < problem.n_theta; ++t) out << "\tq_dec_" << labels.theta[t];
  out << "\tlabel\n";
  for (int i = 0; i < policy.grid->size(); ++i) {
    out << i;
    for (double m : policy.grid->point(i)) out << "\t" << format_double(m);
    out << "\t" << format_double(policy.v.alive[i]) << "\t" << format_double(policy.v.dead[i]);
    for (int l = 0; l < problem.n_lambda; ++l) out << "\t" << format_double(policy.q_acq_at(i, l));
    for (int t = 0; t < problem.n_theta; ++t) out << "\t" << format_double(policy.q_dec_at(i, t));
    const TerminationMap::Label& label = map.labels[i];
    if (label.terminate)
      out << "\tterminate:" << labels.theta[label.index];
    else
      out << "\tcontinue:" << labels.lambda[label.index];
    out << "\n";
  }
  atomic_write(path, out.str());
}

void write_chain(const std::filesystem::path& path, const PosteriorChain& chain,
                 const Lattice& lattice) {
  std::ostringstream out;
  out << "sample";
  for (const std::string& name : lattice.axis_names()) out << "\t" << name;
  out << "\trho\tlog_posterior\taccepted\n";
  for (std::size_t i = 0; i < chain.samples.size(); ++i) {
    const ChainSample& s = chain.samples[i];
    out << i;
    for (int v : s.point.eta) out << "\t" << format_double(lattice.eta_value(v));
    out << "\t" << format_double(lattice.rho_value(s.point)) << "\t"
        << format_double(s.log_post) << "\t" << (s.accepted ? 1 : 0) << "\n";
  }
  atomic_write(path, out.str());
}

void write_map_summary(const std::filesystem::path& path, const MapResult& map,
                       const Lattice& lattice) {
  json eta = json::object();
  const std::vector<std::string> names = lattice.axis_names();
  for (std::size_t i = 0; i < names.size(); ++i)
    eta[names[i]] = lattice.eta_value(map.point.eta[i]);
  const json doc{{"criterion", criterion_name(lattice.criterion())},
                 {"eta", std::move(eta)},
                 {"rho", lattice.rho_value(map.point)},
                 {"log_posterior", map.log_post}};
  atomic_write(path, doc.dump(2) + "\n");
}

void write_comparison(const std::filesystem::path& path,
                      const std::vector<CriterionScore>& scores) {
  json doc = json::object();
  for (const CriterionScore& score : scores)
    doc[criterion_name(score.criterion)] = {{"map_log_posterior", score.map_log_posterior},
                                            {"rho", score.map.prefs.rho}};
  atomic_write(path, doc.dump(2) + "\n");
}

void atomic_write(const std::filesystem::path& path, const std::string& contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write " + tmp.string());
    out << contents;
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace ias
