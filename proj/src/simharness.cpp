#include "ensel/simharness.hpp"

#include <algorithm>
#include <fstream>
#include <cmath>
#include <map>
#include <optional>
#include <ostream>

#include <fmt/format.h>
#include <json.hpp>

#include "ensel/error.hpp"
#include "ensel/random.hpp"
#include "ensel/runtime.hpp"
#include "ensel/selection.hpp"

namespace ensel {

void check_instance_spec(const InstanceSpec& s) {
  auto fail = [](const char* what) { throw Error(ErrorKind::validation, fmt::format("instance spec: {}", what)); };
  if (s.models.lo < 1 || s.models.lo > s.models.hi) fail("models range must satisfy 1 <= lo <= hi");
  if (s.classes.lo < 2 || s.classes.lo > s.classes.hi) fail("classes range must satisfy 2 <= lo <= hi");
  if (!(s.prob.lo > 0 && s.prob.lo <= s.prob.hi && s.prob.hi < 1)) fail("prob range must lie in (0,1), lo <= hi");
  if (!(s.cost.lo > 0 && s.cost.lo <= s.cost.hi)) fail("cost range must be positive, lo <= hi");
}

InstanceSpec load_instance_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::validation, fmt::format("cannot open '{}'", path.string()));
  InstanceSpec spec;
  try {
    auto j = nlohmann::json::parse(in);
    if (j.contains("seed")) spec.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("instances")) spec.instances = j.at("instances").get<std::size_t>();
    if (j.contains("queries")) spec.queries = j.at("queries").get<std::size_t>();
    auto pair = [&](const char* key, auto& range) {
      if (!j.contains(key)) return;
      const auto& a = j.at(key);
      if (!a.is_array() || a.size() != 2) throw Error(ErrorKind::validation, fmt::format("'{}' needs [lo, hi]", key));
      a.at(0).get_to(range.lo);
      a.at(1).get_to(range.hi);
    };
    pair("models", spec.models);
    pair("classes", spec.classes);
    pair("prob", spec.prob);
    pair("cost", spec.cost);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::validation, fmt::format("instance spec '{}': {}", path.string(), e.what()));
  }
  check_instance_spec(spec);
  return spec;
}

SyntheticInstance gen_instance(const InstanceSpec& spec) {
  check_instance_spec(spec);
  Rng rng(spec.seed);
  std::uniform_int_distribution<int> models(spec.models.lo, spec.models.hi);
  std::uniform_int_distribution<int> classes(spec.classes.lo, spec.classes.hi);
  std::uniform_real_distribution<double> prob(spec.prob.lo, std::nextafter(spec.prob.hi, 1.0));
  std::uniform_real_distribution<double> cost(spec.cost.lo, std::nextafter(spec.cost.hi, INFINITY));

  SyntheticInstance inst;
  const int l = models(rng);
  inst.profile.class_count = classes(rng);
  for (int i = 0; i < l; ++i) {
    const double p = spec.prob.lo == spec.prob.hi ? spec.prob.lo : prob(rng);
    const double b = spec.cost.lo == spec.cost.hi ? spec.cost.lo : cost(rng);
    inst.profile.models.push_back({fmt::format("m{}", i), p, b});
  }
  inst.profile = validate_profile(std::move(inst.profile));
  std::uniform_int_distribution<int> truth(0, inst.profile.class_count - 1);
  inst.truths.resize(spec.queries);
  for (auto& t : inst.truths) t = truth(rng);
  return inst;
}

std::vector<SyntheticInstance> gen_instances(const InstanceSpec& spec) {
  std::vector<SyntheticInstance> out;
  for (std::size_t i = 0; i < spec.instances; ++i) {
    InstanceSpec one = spec;
    one.seed = derive_seed(spec.seed, i);
    out.push_back(gen_instance(one));
  }
  return out;
}

std::string_view to_string(Method method) noexcept {
  switch (method) {
    case Method::thrift: return "thrift";
    case Method::surgreedy_full: return "surgreedy_full";
    case Method::greedy: return "greedy";
    case Method::best_single: return "best_single";
    case Method::random_feasible: return "random_feasible";
  }
  return "unknown";
}

namespace {

struct Accumulator {
  std::size_t instances = 0;
  std::size_t queries = 0;
  std::size_t correct = 0;
  double spent = 0.0;
  double saved = 0.0;
};

SelectionPlan plan_from_set(const SelectionProblem& problem, ModelSet set) {
  SelectionPlan plan;
  plan.budget = problem.budget;
  plan.planned_cost = problem.profile.total_cost(set);
  plan.chosen = std::move(set);
  return plan;
}

ModelSet random_feasible_set(const SelectionProblem& problem, Rng& rng) {
  ModelSet order(problem.profile.size());
  for (ModelIndex i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  ModelSet chosen;
  for (auto m : order) {
    chosen.push_back(m);
    if (problem.profile.total_cost(chosen) > problem.budget) chosen.pop_back();
  }
  return chosen;
}

}  // namespace

std::vector<SweepRow> run_sweep(const std::vector<SyntheticInstance>& instances, std::span<const double> budgets,
                                const SweepConfig& config, SweepStats* stats) {
  if (budgets.empty()) throw Error(ErrorKind::validation, "sweep: budget list is empty");
  for (double b : budgets)
    if (!(b > 0)) throw Error(ErrorKind::validation, "sweep: budgets must be positive");

  std::map<std::pair<std::size_t, std::size_t>, Accumulator> cells;  // (budget idx, method idx)
  auto method_index = [](Method m) { return static_cast<std::size_t>(m); };
  const bool want_full = std::find(config.methods.begin(), config.methods.end(), Method::surgreedy_full) !=
                         config.methods.end();

  for (std::size_t ii = 0; ii < instances.size(); ++ii) {
    const auto& inst = instances[ii];
    const std::uint64_t inst_seed = derive_seed(config.seed, ii);
    std::map<std::string, int, std::less<>> truths;
    std::vector<std::string> query_ids;
    for (std::size_t q = 0; q < inst.truths.size(); ++q) {
      query_ids.push_back(fmt::format("q{}", q));
      truths.emplace(query_ids.back(), inst.truths[q]);
    }
    SimulatedBackend backend(inst.profile, truths, inst_seed);

    for (std::size_t bi = 0; bi < budgets.size(); ++bi) {
      const SelectionProblem problem{inst.profile, budgets[bi]};
      const auto single = best_single_model(problem);

      // Monte Carlo PA shared by thrift, surgreedy_full and greedy in this cell.
      std::optional<PaEvaluator> pa;
      std::optional<SelectionPlan> thrift_plan;
      if (single) {
        const auto theta =
            required_samples(config.epsilon, config.delta, inst.profile.prob(*single), inst.profile.size());
        pa.emplace(PaEvaluator::monte_carlo(inst.profile, theta, inst_seed));
        thrift_plan = surrogate_greedy(problem, *pa);
      }

      for (Method method : config.methods) {
        SelectionPlan plan;
        if (method == Method::thrift || method == Method::surgreedy_full) {
          plan = thrift_plan ? *thrift_plan : plan_from_set(problem, {});
        } else if (method == Method::greedy) {
          plan = plan_from_set(problem, pa ? greedy(problem, pa->as_function()) : ModelSet{});
        } else if (method == Method::best_single) {
          plan = plan_from_set(problem, single ? ModelSet{*single} : ModelSet{});
        } else {
          Rng rng(derive_seed(config.seed, ii, bi, method_index(method)));
          plan = plan_from_set(problem, random_feasible_set(problem, rng));
        }

        auto& acc = cells[{bi, method_index(method)}];
        ++acc.instances;
        double cell_saved = 0.0;
        for (std::size_t q = 0; q < query_ids.size(); ++q) {
          int prediction = 0;
          double spent = 0.0;
          double saved = 0.0;
          if (plan.chosen.empty()) {
            Rng guess(derive_seed(config.seed, ii, bi, method_index(method), q));
            prediction = std::uniform_int_distribution<int>(0, inst.profile.class_count - 1)(guess);
          } else {
            auto rec = method == Method::thrift ? adaptive_run(plan, inst.profile, backend, query_ids[q], inst_seed)
                                                : full_run(plan, inst.profile, backend, query_ids[q], inst_seed);
            prediction = rec.prediction;
            spent = rec.spent;
            saved = rec.saved;
            if (method == Method::thrift && stats && want_full) {
              auto ref = full_run(plan, inst.profile, backend, query_ids[q], inst_seed);
              if (ref.prediction != rec.prediction) ++stats->thrift_prediction_mismatches;
            }
          }
          if (spent > problem.budget)
            throw Error(ErrorKind::budget_exceeded,
                        fmt::format("sweep: query spend {} exceeds budget {}", spent, problem.budget));
          if (stats) {
            ++stats->queries_checked;
            stats->max_spend_ratio = std::max(stats->max_spend_ratio, spent / problem.budget);
          }
          ++acc.queries;
          acc.correct += prediction == inst.truths[q] ? 1 : 0;
          acc.spent += spent;
          acc.saved += saved;
          cell_saved += saved;
        }
        if (method == Method::thrift && stats && plan.chosen.size() >= 2 && !query_ids.empty())
          stats->thrift_saving_fraction.push_back(cell_saved /
                                                  (plan.planned_cost * static_cast<double>(query_ids.size())));
      }
    }
  }

  std::vector<SweepRow> rows;
  for (const auto& [key, acc] : cells) {
    const double n = acc.queries ? static_cast<double>(acc.queries) : 1.0;
    rows.push_back({budgets[key.first], kAllMethods[key.second], static_cast<double>(acc.correct) / n,
                    acc.spent / n, acc.saved / n, acc.instances, acc.queries});
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows) {
  out << "budget,method,accuracy,mean_spent,mean_saved,instances,queries\n";
  for (const auto& r : rows)
    out << fmt::format("{:.6e},{},{:.6f},{:.9e},{:.9e},{},{}\n", r.budget, to_string(r.method), r.accuracy,
                       r.mean_spent, r.mean_saved, r.instances, r.queries);
}

}  // namespace ensel
