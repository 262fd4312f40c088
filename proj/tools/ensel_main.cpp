#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "ensel/catalog.hpp"
#include "ensel/correctness.hpp"
#include "ensel/csv.hpp"
#include "ensel/error.hpp"
#include "ensel/estimation.hpp"
#include "ensel/oracle.hpp"
#include "ensel/random.hpp"
#include "ensel/runtime.hpp"
#include "ensel/selection.hpp"
#include "ensel/simharness.hpp"

using namespace ensel;

namespace {

struct Common {
  double epsilon = 0.1;
  double delta = 0.01;
  std::uint64_t seed = 1;
  std::uint64_t exact_threshold = kDefaultExactThreshold;
  std::string out;
};

void check_unit(double v, const char* name) {
  if (!(v > 0 && v < 1)) throw Error(ErrorKind::validation, fmt::format("--{} must lie in (0,1)", name));
}

// Writes to --out when given, otherwise stdout.
template <class F>
void emit(const std::string& path, F&& write) {
  if (path.empty()) {
    write(std::cout);
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::validation, fmt::format("cannot write '{}'", path));
  write(out);
}

// ---- estimate

struct EstimateArgs {
  std::string matrix, embeddings, costs, catalog;
  int classes = 2;
  double eps = 0.2;
  std::size_t min_pts = 3;
  double delta_l = 0.05;
  std::uint64_t in_tokens = 0, out_tokens = 0;
};

std::vector<double> model_costs(const EstimateArgs& a, const HistoricalMatrix& m) {
  std::map<std::string, double, std::less<>> by_id;
  if (!a.costs.empty()) {
    auto rows = csv::read_file(a.costs);
    if (rows.empty() || rows[0].fields != std::vector<std::string>{"model_id", "query_cost"})
      throw Error(ErrorKind::validation, fmt::format("'{}': expected header model_id,query_cost", a.costs));
    for (std::size_t i = 1; i < rows.size(); ++i) {
      if (rows[i].fields.size() != 2)
        throw Error(ErrorKind::validation, fmt::format("'{}' line {}: expected 2 fields", a.costs, rows[i].line));
      by_id[rows[i].fields[0]] = csv::parse_double(rows[i].fields[1], rows[i].line);
    }
  } else if (!a.catalog.empty()) {
    for (const auto& spec : load_catalog(a.catalog))
      by_id[spec.id] = query_cost_from_tokens(spec, a.in_tokens, a.out_tokens);
  } else {
    throw Error(ErrorKind::validation, "estimate needs --costs or --catalog");
  }
  std::vector<double> costs;
  for (const auto& id : m.model_ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw Error(ErrorKind::validation, fmt::format("no cost for model '{}'", id));
    costs.push_back(it->second);
  }
  return costs;
}

int cmd_estimate(const EstimateArgs& a, const Common& c) {
  check_unit(a.delta_l, "delta-l");
  if (c.out.empty()) throw Error(ErrorKind::validation, "estimate needs --out <prefix>");
  const auto matrix = load_historical_matrix(a.matrix);
  const auto emb = load_embeddings(a.embeddings);
  const Eigen::MatrixXd x = align_embeddings(emb, matrix.query_ids);
  const auto costs = model_costs(a, matrix);
  const auto clusters = cluster_queries(x, a.eps, a.min_pts);

  emit(c.out + ".clusters.csv", [&](std::ostream& out) {
    out << "query_id,cluster\n";
    for (std::size_t q = 0; q < matrix.query_ids.size(); ++q)
      out << matrix.query_ids[q] << ',' << clusters.cluster_of[q] << '\n';
  });
  for (std::size_t k = 0; k < clusters.cluster_count; ++k) {
    const auto b = profile_bounds(matrix, clusters.members(k), a.classes, costs, a.delta_l);
    const auto base = fmt::format("{}.cluster{}", c.out, k);
    save_profile(base + ".low", b.low);
    save_profile(base + ".hat", b.hat);
    save_profile(base + ".up", b.up);
  }
  fmt::print("clusters={} queries={} models={} out={}\n", clusters.cluster_count, matrix.query_ids.size(),
             matrix.model_ids.size(), c.out);
  return 0;
}

// ---- select

struct SelectArgs {
  std::string profile;
  double budget = 0.0;
  bool exact = false;
};

int cmd_select(const SelectArgs& a, const Common& c) {
  check_unit(c.epsilon, "epsilon");
  check_unit(c.delta, "delta");
  if (!(a.budget > 0)) throw Error(ErrorKind::validation, "--budget must be positive");
  const SelectionProblem problem{load_profile(a.profile), a.budget};
  const SelectionPlan plan =
      a.exact ? plan_exact(problem, c.exact_threshold) : plan_thrift(problem, c.epsilon, c.delta, c.seed);
  const double ratio = guarantee_ratio(plan.diagnostics, a.exact ? 0.0 : c.epsilon);
  const auto& est = plan.pa_estimate;

  emit(c.out, [&](std::ostream& out) {
    out << fmt::format("# seed={}\n# budget={:.17g}\n# planned_cost={:.17g}\n", c.seed, plan.budget,
                       plan.planned_cost);
    out << fmt::format("# pa={:.12f}\n# pa_method={}\n# pa_samples={}\n# guarantee_ratio={:.12f}\n", est.value,
                       to_string(est.method), est.samples_used, ratio);
    out << "model_id,success_prob,query_cost\n";
    for (auto m : plan.chosen)
      out << fmt::format("{},{:.17g},{:.17g}\n", problem.profile.id(m), problem.profile.prob(m),
                         problem.profile.cost(m));
  });
  auto& log = c.out.empty() ? std::cerr : std::cout;
  fmt::print(log, "seed={}\nchosen={}\nplanned_cost={:.9g} budget={:.9g}\npa={:.6f} method={} samples={}\n"
                  "guarantee_ratio={:.6f}\n",
             c.seed, format_ids(problem.profile, plan.chosen), plan.planned_cost, plan.budget, est.value,
             to_string(est.method), est.samples_used, ratio);
  return 0;
}

// ---- run

SelectionPlan load_plan(const std::string& path, const ClassProfile& profile) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::validation, fmt::format("cannot open '{}'", path));
  SelectionPlan plan;
  std::optional<double> budget;
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      auto key = line.substr(1, eq - 1);
      key.erase(0, key.find_first_not_of(' '));
      if (key == "budget") budget = csv::parse_double(line.substr(eq + 1), lineno);
      continue;
    }
    auto fields = csv::split(line);
    if (!header) {
      if (fields.empty() || fields[0] != "model_id")
        throw Error(ErrorKind::validation, fmt::format("'{}' line {}: expected plan header", path, lineno));
      header = true;
      continue;
    }
    auto idx = profile.index_of(fields[0]);
    if (!idx)
      throw Error(ErrorKind::validation,
                  fmt::format("'{}' line {}: model '{}' not in profile", path, lineno, fields[0]));
    plan.chosen.push_back(*idx);
  }
  if (!budget) throw Error(ErrorKind::validation, fmt::format("'{}': missing '# budget=' line", path));
  plan.budget = *budget;
  plan.planned_cost = profile.total_cost(plan.chosen);
  if (plan.planned_cost > plan.budget)
    throw Error(ErrorKind::budget_exceeded, fmt::format("'{}': plan cost exceeds its budget", path));
  return plan;
}

struct RunArgs {
  std::string plan, profile, backend = "simulated", truth;
  std::size_t queries = 0;
  bool full = false;
};

int cmd_run(const RunArgs& a, const Common& c) {
  const auto profile = load_profile(a.profile);
  const auto plan = load_plan(a.plan, profile);

  std::vector<TruthRow> truths;
  if (!a.truth.empty()) {
    truths = load_truths(a.truth);
  } else if (a.queries > 0) {
    Rng rng(derive_seed(c.seed, hash_string("truths")));
    std::uniform_int_distribution<int> pick(0, profile.class_count - 1);
    for (std::size_t q = 0; q < a.queries; ++q) truths.push_back({fmt::format("q{}", q), pick(rng)});
  } else {
    throw Error(ErrorKind::validation, "run needs --truth or --queries");
  }

  std::unique_ptr<ModelBackend> backend;
  std::vector<ReplayEntry> replay;
  if (a.backend == "simulated") {
    std::map<std::string, int, std::less<>> map;
    for (const auto& t : truths) map[t.query_id] = t.true_class;
    backend = std::make_unique<SimulatedBackend>(profile, std::move(map), c.seed);
  } else if (a.backend.rfind("replay:", 0) == 0) {
    replay = load_replay(a.backend.substr(7));
    backend = std::make_unique<ReplayBackend>(replay);
  } else {
    throw Error(ErrorKind::validation, fmt::format("unknown backend '{}'", a.backend));
  }

  std::size_t correct = 0;
  double spent = 0.0, saved = 0.0;
  std::ostringstream rows;
  for (const auto& t : truths) {
    auto rec = a.full ? full_run(plan, profile, *backend, t.query_id, c.seed)
                      : adaptive_run(plan, profile, *backend, t.query_id, c.seed);
    correct += rec.prediction == t.true_class ? 1 : 0;
    spent += rec.spent;
    saved += rec.saved;
    rows << fmt::format("{},{},{},{},{:.17g},{:.17g}\n", t.query_id, t.true_class, rec.prediction,
                        format_ids(profile, rec.invoked), rec.spent, rec.saved);
  }
  emit(c.out, [&](std::ostream& out) {
    out << fmt::format("# seed={}\n", c.seed);
    out << "query_id,true_class,prediction,invoked,spent,saved\n" << rows.str();
  });
  const double n = truths.empty() ? 1.0 : static_cast<double>(truths.size());
  auto& log = c.out.empty() ? std::cerr : std::cout;
  fmt::print(log, "seed={} queries={} accuracy={:.6f} mean_spent={:.9g} mean_saved={:.9g}\n", c.seed, truths.size(),
             static_cast<double>(correct) / n, spent / n, saved / n);
  return 0;
}

// ---- oracle

int cmd_oracle(const std::string& problem_path, const Common& c) {
  const auto problem = load_problem(problem_path);
  if (problem.profile.size() > kBruteForceMaxModels)
    throw Error(ErrorKind::size_guard, fmt::format("instance too large: L={} exceeds {} models",
                                                   problem.profile.size(), kBruteForceMaxModels));
  const auto sur = plan_exact(problem, c.exact_threshold);
  auto pa = PaEvaluator::exact(problem.profile, c.exact_threshold);
  SelectionPlan greedy_plan;
  greedy_plan.budget = problem.budget;
  greedy_plan.chosen = greedy(problem, pa.as_function());
  greedy_plan.planned_cost = problem.profile.total_cost(greedy_plan.chosen);
  greedy_plan.diagnostics = sur.diagnostics;  // bound computed from the surrogate run

  const auto g = audit_guarantee(problem, greedy_plan, 0.0, c.exact_threshold);
  const auto s = audit_guarantee(problem, sur, 0.0, c.exact_threshold);
  emit(c.out, [&](std::ostream& out) {
    write_report_header(out);
    write_report_row(out, g, "greedy");
    write_report_row(out, s, "surgreedy");
  });
  return 0;
}

// ---- sweep

std::vector<double> parse_budgets(const std::string& text) {
  std::vector<double> out;
  for (const auto& f : csv::split(text)) {
    if (f.empty()) continue;
    out.push_back(csv::parse_double(f, 0));
  }
  if (out.empty()) throw Error(ErrorKind::validation, "budget list is empty");
  return out;
}

int cmd_sweep(const std::string& spec_path, const std::optional<std::string>& budgets_text, const Common& c) {
  check_unit(c.epsilon, "epsilon");
  check_unit(c.delta, "delta");
  const InstanceSpec spec = spec_path.empty() ? InstanceSpec{} : load_instance_spec(spec_path);
  const std::vector<double> budgets =
      budgets_text ? parse_budgets(*budgets_text) : std::vector<double>(kDefaultBudgets.begin(), kDefaultBudgets.end());
  SweepConfig config;
  config.seed = c.seed;
  config.epsilon = c.epsilon;
  config.delta = c.delta;
  const auto rows = run_sweep(gen_instances(spec), budgets, config);
  emit(c.out, [&](std::ostream& out) { write_sweep_csv(out, rows); });
  auto& log = c.out.empty() ? std::cerr : std::cout;
  fmt::print(log, "seed={} instance_seed={} instances={} budgets={} rows={}\n", c.seed, spec.seed, spec.instances,
             budgets.size(), rows.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Budget-constrained LLM ensemble selection"};
  app.require_subcommand(1);
  Common common;

  auto add_common = [&](CLI::App* sub, bool sampling) {
    sub->add_option("--seed", common.seed, "Master seed")->capture_default_str();
    sub->add_option("--out", common.out, "Output path (stdout when omitted)");
    sub->add_option("--exact-threshold", common.exact_threshold, "Largest K^|S| enumerated exactly")
        ->capture_default_str();
    if (sampling) {
      sub->add_option("--epsilon", common.epsilon, "Relative PA error")->capture_default_str();
      sub->add_option("--delta", common.delta, "Failure probability")->capture_default_str();
    }
  };

  EstimateArgs est;
  auto* estimate = app.add_subcommand("estimate", "Cluster historical queries and write per-cluster profiles");
  estimate->add_option("--matrix", est.matrix, "Historical correctness CSV")->required();
  estimate->add_option("--embeddings", est.embeddings, "Query embedding CSV")->required();
  estimate->add_option("--classes", est.classes, "Number of classes K")->capture_default_str();
  estimate->add_option("--costs", est.costs, "CSV model_id,query_cost");
  estimate->add_option("--catalog", est.catalog, "Catalog CSV id,price_in,price_out");
  estimate->add_option("--in-tokens", est.in_tokens, "Input tokens per query (with --catalog)");
  estimate->add_option("--out-tokens", est.out_tokens, "Output tokens per query (with --catalog)");
  estimate->add_option("--eps", est.eps, "DBSCAN radius in cosine distance")->capture_default_str();
  estimate->add_option("--min-pts", est.min_pts, "DBSCAN core size")->capture_default_str();
  estimate->add_option("--delta-l", est.delta_l, "Interval failure probability")->capture_default_str();
  add_common(estimate, false);

  SelectArgs sel;
  auto* select = app.add_subcommand("select", "Choose a model set under a budget");
  select->add_option("--profile", sel.profile, "Profile file")->required();
  select->add_option("--budget", sel.budget, "Per-query budget")->required();
  select->add_flag("--exact", sel.exact, "Exact PA instead of Monte Carlo");
  add_common(select, true);

  RunArgs run;
  auto* runc = app.add_subcommand("run", "Execute a plan on queries with early termination");
  runc->add_option("--plan", run.plan, "Plan CSV from select")->required();
  runc->add_option("--profile", run.profile, "Profile file")->required();
  runc->add_option("--backend", run.backend, "simulated | replay:<path>")->capture_default_str();
  runc->add_option("--truth", run.truth, "CSV query_id,true_class");
  runc->add_option("--queries", run.queries, "Synthesize this many queries (simulated backend)");
  runc->add_flag("--full", run.full, "Invoke every planned model");
  add_common(runc, false);

  std::string problem_path;
  auto* oracle = app.add_subcommand("oracle", "Audit greedy and surrogate greedy against brute force");
  oracle->add_option("--problem", problem_path, "Problem file (profile with B=)")->required();
  add_common(oracle, false);

  std::string spec_path;
  std::optional<std::string> budgets;
  auto* sweep = app.add_subcommand("sweep", "Accuracy and spend across a budget grid");
  sweep->add_option("--spec", spec_path, "Instance spec JSON (defaults built in)");
  sweep->add_option("--budgets", budgets, "Comma-separated budgets");
  add_common(sweep, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : exit_code(ErrorKind::validation);
  }

  try {
    if (*estimate) return cmd_estimate(est, common);
    if (*select) return cmd_select(sel, common);
    if (*runc) return cmd_run(run, common);
    if (*oracle) return cmd_oracle(problem_path, common);
    if (*sweep) return cmd_sweep(spec_path, budgets, common);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(ErrorKind::backend);
  }
  return 0;
}
