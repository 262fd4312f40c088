#include <doctest.h>

#include <sstream>

#include "ensel/error.hpp"
#include "ensel/simharness.hpp"
#include "support.hpp"

using namespace ensel;

TEST_CASE("instance generation") {
  InstanceSpec spec;
  spec.seed = 17;
  auto a = gen_instance(spec);
  auto b = gen_instance(spec);
  CHECK(a.profile == b.profile);
  CHECK(a.truths == b.truths);
  CHECK(a.truths.size() == spec.queries);

  spec.prob = {0.6, 0.6};
  for (const auto& m : gen_instance(spec).profile.models) CHECK(m.success_prob == 0.6);

  spec.models = {3, 3};
  spec.classes = {2, 2};
  auto pinned = gen_instance(spec);
  CHECK(pinned.profile.size() == 3);
  CHECK(pinned.profile.class_count == 2);
  for (int t : pinned.truths) CHECK((t == 0 || t == 1));

  InstanceSpec bad;
  bad.prob = {0.9, 0.5};
  CHECK_THROWS_AS(check_instance_spec(bad), Error);
  bad = {};
  bad.classes = {1, 3};
  CHECK_THROWS_AS(check_instance_spec(bad), Error);
}

TEST_CASE("instance spec file") {
  auto path = test::write_temp("spec.json", R"({"seed": 5, "instances": 3, "queries": 10, "models": [2, 4],
    "classes": [3, 3], "prob": [0.5, 0.9], "cost": [1e-6, 2e-6]})");
  auto spec = load_instance_spec(path);
  CHECK(spec.seed == 5);
  CHECK(spec.instances == 3);
  CHECK(spec.models.hi == 4);
  CHECK(spec.cost.hi == 2e-6);
  auto broken = test::write_temp("broken.json", R"({"models": [2]})");
  CHECK_THROWS_AS((void)load_instance_spec(broken), Error);
}

TEST_CASE("sweep output") {
  InstanceSpec spec;
  spec.instances = 3;
  spec.queries = 40;
  auto instances = gen_instances(spec);
  SweepConfig config;
  std::vector<double> budgets(kDefaultBudgets.begin(), kDefaultBudgets.end());
  SweepStats stats;
  auto rows = run_sweep(instances, budgets, config, &stats);
  CHECK(rows.size() == budgets.size() * kAllMethods.size());
  for (const auto& r : rows) {
    CHECK(r.mean_spent <= r.budget);
    CHECK(r.accuracy >= 0.0);
    CHECK(r.accuracy <= 1.0);
    CHECK(r.instances == 3);
    CHECK(r.queries == 120);
  }
  CHECK(stats.thrift_prediction_mismatches == 0);
  CHECK(stats.max_spend_ratio <= 1.0);

  std::ostringstream a, b;
  write_sweep_csv(a, rows);
  write_sweep_csv(b, run_sweep(instances, budgets, config));
  CHECK(a.str() == b.str());
  CHECK(a.str().rfind("budget,method,accuracy,mean_spent,mean_saved,instances,queries\n", 0) == 0);

  CHECK(run_sweep({}, budgets, config).empty());
  CHECK_THROWS_AS((void)run_sweep(instances, std::vector<double>{}, config), Error);
}

TEST_CASE("thrift matches the full plan and never spends more") {
  InstanceSpec spec;
  spec.instances = 4;
  spec.queries = 100;
  auto instances = gen_instances(spec);
  SweepConfig config;
  config.methods = {Method::thrift, Method::surgreedy_full};
  auto rows = run_sweep(instances, std::vector<double>{1e-3}, config);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].method == Method::thrift);
  CHECK(rows[0].accuracy == rows[1].accuracy);
  CHECK(rows[0].mean_spent <= rows[1].mean_spent);
}

TEST_CASE("a generous budget beats every single model") {
  InstanceSpec spec;
  spec.instances = 1;
  spec.queries = 2000;
  spec.prob = {0.95, 0.99};
  spec.seed = 3;
  auto instances = gen_instances(spec);
  SweepConfig config;
  config.methods = {Method::thrift};
  const double budget = instances[0].profile.total_cost(test::all_models(instances[0].profile));
  auto rows = run_sweep(instances, std::vector<double>{budget}, config);
  for (const auto& m : instances[0].profile.models) CHECK(rows[0].accuracy > m.success_prob - 0.02);
}
