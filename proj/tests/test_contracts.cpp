#include <doctest.h>

#include <cmath>
#include <random>

#include "ledgerflow/contracts.hpp"
#include "ledgerflow/error.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace ledgerflow;
using testkit::TestNet;

TEST_SUITE_BEGIN("contracts");

namespace {

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return Errc::IoError;
}

struct Rig {
  TestNet net = testkit::make_members(2, "contracts");
  DatasetStore datasets;
  ResourceStore resources;
  ContractRegistry contracts = builtin_contracts();

  ContractResult run(const WorkflowDescription& wf, std::int64_t base_time = 10) {
    Transaction tx = testkit::make_tx(
        net, 0, 1, workflow_asset(wf), base_time,
        {{kWorkflowStateKey, serialize_workflow(wf)}}, kWorkflowContractId);
    ExecutionContext ctx{&datasets, &resources, base_time};
    return execute_contract(contracts, kWorkflowContractId, tx, ctx);
  }
};

}  // namespace

TEST_CASE("contract registry: insert, duplicate, miss") {
  ContractRegistry registry;
  registry.add(make_workflow_contract());
  CHECK(registry.has(kWorkflowContractId));
  CHECK(registry.find(kWorkflowContractId)->contract_id == kWorkflowContractId);
  CHECK(code_of([&] { registry.add(make_workflow_contract()); }) ==
        Errc::DuplicateContract);
  CHECK_FALSE(registry.has("not_registered"));
  CHECK(registry.find("not_registered") == nullptr);
}

TEST_CASE("executing an unregistered contract raises ContractNotFound") {
  Rig rig;
  Transaction tx = testkit::make_tx(rig.net, 0, 1, "A", 1, {}, "nope");
  ExecutionContext ctx{&rig.datasets, &rig.resources, 1};
  CHECK(code_of([&] { execute_contract(rig.contracts, "nope", tx, ctx); }) ==
        Errc::ContractNotFound);
}

TEST_CASE("collinear points force slope 1, intercept 0") {
  Rig rig;
  rig.datasets.put("B", testkit::collinear_points());
  const ContractResult result = rig.run(testkit::linreg_store_workflow());
  CHECK(result.execution_trace.size() == 2);
  CHECK(result.state_entries.at("out.A.slope") == "1");
  CHECK(result.state_entries.at("out.A.intercept") == "0");
  CHECK(result.output_digests.count("A") == 1);
  CHECK(result.output_digests.count("C") == 1);
  CHECK(result.output_digests.at("A") == result.output_digests.at("C"));
}

TEST_CASE("the exact line y = 2x + 1 is recovered") {
  Rig rig;
  rig.datasets.put("B", testkit::exact_line_points());
  const ContractResult result = rig.run(testkit::linreg_store_workflow());
  CHECK(result.state_entries.at("out.A.slope") == "2");
  CHECK(result.state_entries.at("out.A.intercept") == "1");
}

TEST_CASE("execution is deterministic to the byte") {
  Rig rig;
  rig.datasets.put("B", {{0.25, 1.125}, {1.5, -3}, {2.75, 9.0625}, {4, 0.1}});
  const WorkflowDescription wf = parse_workflow_expression(
      "linreg:points=B,model=A;scale:points=B,scaled=S,factor=2.5;store:data=A,file=C");
  const ContractResult first = rig.run(wf);
  const ContractResult second = rig.run(wf);
  CHECK(canon::serialize(to_value(first)) == canon::serialize(to_value(second)));
  CHECK(first == second);
}

TEST_CASE("trace covers every step in order and carries digests") {
  Rig rig;
  rig.datasets.put("B", testkit::collinear_points());
  const WorkflowDescription wf = parse_workflow_expression(
      "scale:points=B,scaled=S,factor=3;linreg:points=S,model=M;store:data=M,file=F");
  const ContractResult result = rig.run(wf, 40);
  REQUIRE(result.execution_trace.size() == 3);
  for (std::size_t k = 0; k < 3; ++k) {
    const StepEvent& ev = result.execution_trace[k];
    CHECK(ev.step_index == static_cast<std::int64_t>(k));
    CHECK(ev.op == wf.steps[k].op);
    CHECK(ev.logical_time == 40 + static_cast<std::int64_t>(k));
    CHECK(ev.input_digests.size() == 1);
    CHECK(ev.output_digests.size() == 1);
  }
  // scale tripled the y values
  CHECK(result.output_digests.at("S") ==
        dataset_digest({{0, 0}, {1, 3}, {2, 6}}));
  // store moved the model into the resource store
  CHECK(rig.resources.contains(result.output_digests.at("F")));
}

TEST_CASE("state injection exposes the declared output digests") {
  Rig rig;
  rig.datasets.put("B", testkit::exact_line_points());
  const ContractResult result = rig.run(testkit::linreg_store_workflow());
  CHECK(result.state_entries.at("out.A.digest") ==
        result.output_digests.at("A").hex());
  CHECK(result.state_entries.at("out.C.digest") ==
        result.output_digests.at("C").hex());
}

TEST_CASE("missing datasets and malformed workflows fail loudly") {
  Rig rig;  // no datasets registered
  CHECK(code_of([&] { rig.run(testkit::linreg_store_workflow()); }) ==
        Errc::StepFailure);

  Transaction tx = testkit::make_tx(rig.net, 0, 1, "A", 1, {}, kWorkflowContractId);
  ExecutionContext ctx{&rig.datasets, &rig.resources, 1};
  CHECK(code_of([&] {
          execute_contract(rig.contracts, kWorkflowContractId, tx, ctx);
        }) == Errc::MalformedWorkflow);

  CHECK(code_of([] { parse_workflow_expression("fly:points=B,model=A"); }) ==
        Errc::MalformedWorkflow);
  CHECK(code_of([] {
          parse_workflow_expression("linreg:points=M,model=A;scale:points=A,scaled=M,factor=2");
        }) == Errc::MalformedWorkflow);  // M consumed before produced
  CHECK(code_of([] { parse_workflow_expression("scale:points=B,scaled=S"); }) ==
        Errc::MalformedWorkflow);  // missing factor
}

TEST_CASE("step failures carry the failing step index") {
  Rig rig;
  rig.datasets.put("B", {{1, 1}, {1, 2}});  // degenerate x for step 1
  const WorkflowDescription wf = parse_workflow_expression(
      "scale:points=B,scaled=S,factor=2;linreg:points=S,model=M");
  try {
    rig.run(wf);
    FAIL("expected StepFailure");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::StepFailure);
    CHECK(e.index() == 1);
  }
}

TEST_CASE("step_linreg handles the documented examples") {
  const auto [s1, i1] = step_linreg({{0, 0}, {1, 1}});
  CHECK(s1 == doctest::Approx(1.0));
  CHECK(i1 == doctest::Approx(0.0));
  const auto [s2, i2] = step_linreg({{0, 5}, {1, 5}, {2, 5}});
  CHECK(s2 == doctest::Approx(0.0));
  CHECK(i2 == doctest::Approx(5.0));

  CHECK(code_of([] { step_linreg({{1, 1}}); }) == Errc::DegenerateInput);
  CHECK(code_of([] { step_linreg({{2, 1}, {2, 9}, {2, -4}}); }) ==
        Errc::DegenerateInput);
}

TEST_CASE("step_linreg matches the normal-equations oracle on random data") {
  std::mt19937_64 rng(424242);
  std::uniform_real_distribution<double> coord(-10.0, 10.0);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng() % 100;
    Dataset points;
    std::vector<std::pair<double, double>> pairs;
    for (std::size_t i = 0; i < n; ++i) {
      const double x = coord(rng) + static_cast<double>(i) * 1e-6;
      const double y = coord(rng);
      points.push_back({x, y});
      pairs.emplace_back(x, y);
    }
    const auto [slope, intercept] = step_linreg(points);
    const oracle::LinregFit ref = oracle::normal_equations_fit(pairs);
    CHECK(std::abs(slope - ref.slope) <=
          1e-9 * std::max(1.0, std::abs(ref.slope)));
    CHECK(std::abs(intercept - ref.intercept) <=
          1e-9 * std::max(1.0, std::abs(ref.intercept)));
  }
}

TEST_CASE("residuals are orthogonal to the regressors") {
  std::mt19937_64 rng(515151);
  std::uniform_real_distribution<double> coord(-5.0, 5.0);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + rng() % 200;
    Dataset points;
    for (std::size_t i = 0; i < n; ++i) {
      points.push_back({coord(rng) + static_cast<double>(i) * 1e-7, coord(rng)});
    }
    const auto [slope, intercept] = step_linreg(points);
    double sum_r = 0.0, sum_rx = 0.0, scale_r = 1.0, scale_rx = 1.0;
    for (const DataPoint& p : points) {
      const double r = p.y - (slope * p.x + intercept);
      sum_r += r;
      sum_rx += r * p.x;
      scale_r += std::abs(p.y);
      scale_rx += std::abs(p.y * p.x);
    }
    CHECK(std::abs(sum_r) <= 1e-9 * scale_r);
    CHECK(std::abs(sum_rx) <= 1e-9 * scale_rx);
  }
}

TEST_CASE("workflow serialization round-trips and enforces limits") {
  const WorkflowDescription wf = testkit::linreg_store_workflow();
  const std::string bytes = serialize_workflow(wf);
  CHECK(parse_workflow(bytes) == wf);
  CHECK(workflow_asset(wf) == "A");

  WorkflowDescription deep;
  for (int i = 0; i < 11; ++i) {
    Step s;
    s.op = "scale";
    s.inputs.emplace("points", i == 0 ? "B" : "S" + std::to_string(i - 1));
    s.outputs.emplace("scaled", "S" + std::to_string(i));
    s.params.emplace("factor", "2");
    deep.steps.push_back(s);
  }
  CHECK(code_of([&] { check_workflow(deep); }) == Errc::MalformedWorkflow);
}

TEST_SUITE_END();
