#include <gtest/gtest.h>

#include "hqsim/metrics.hpp"
#include "hqsim/splitter.hpp"
#include "support/generators.hpp"
#include "support/trace_checks.hpp"

using namespace hqsim;

namespace {

JobSpec canonical_job(const std::string& id) {
  return {id, {classical(2, "C1"), quantum(1, "Q1"), classical(3, "C2"), quantum(1, "Q2"), classical(2, "C3")}};
}

const WorkloadSpec kCanonical{{2, 1}, {canonical_job("1"), canonical_job("2")}, 0};

MetricsReport run(const WorkloadSpec& w, bool split) {
  return compute_metrics(
      simulate(w.pool, split ? units_from_split(split_workload(w)) : units_from_monolithic(w)));
}

}  // namespace

TEST(ComputeMetrics, CanonicalMonolithic) {
  const auto m = run(kCanonical, false);
  EXPECT_EQ(m.makespan, 18);
  EXPECT_EQ(m.quantum_busy, 4);
  EXPECT_EQ(m.quantum_allocated_idle, 14);
  EXPECT_EQ(m.quantum_unallocated_idle, 0);
  EXPECT_EQ(m.turnaround.at("1"), 9);
  EXPECT_EQ(m.turnaround.at("2"), 18);
}

TEST(ComputeMetrics, CanonicalSplit) {
  const auto m = run(kCanonical, true);
  EXPECT_EQ(m.makespan, 12);
  EXPECT_EQ(m.quantum_busy, 4);
  EXPECT_EQ(m.quantum_allocated_idle, 4);
  EXPECT_EQ(m.quantum_unallocated_idle, 4);
  EXPECT_EQ(m.turnaround.at("1"), 9);
  EXPECT_EQ(m.turnaround.at("2"), 12);
}

TEST(ComputeMetrics, EmptyWorkload) {
  const auto m = compute_metrics(ScheduleTrace{});
  EXPECT_EQ(m, MetricsReport{});
}

TEST(ComputeMetrics, TurnaroundUsesParentSubmitTime) {
  WorkloadSpec w{{1, 1}, {canonical_job("late")}, 0};
  w.jobs[0].submit_time = 5;
  EXPECT_EQ(run(w, true).turnaround.at("late"), 9);
}

TEST(ComputeMetrics, OverlappingQuantumAllocationsAreRejected) {
  ScheduleTrace t;
  t.events = {{0, EventKind::Start, "a"}, {0, EventKind::Start, "b"}, {4, EventKind::Complete, "a"},
              {4, EventKind::Complete, "b"}};
  t.allocations = {{"a", ResourceKind::QuantumDevice, 0, 0, 3, {{0, 1}}},
                   {"b", ResourceKind::QuantumDevice, 0, 2, 4, {{2, 3}}}};
  EXPECT_THROW(compute_metrics(t), IntegrityError);
}

TEST(ComputeMetrics, BusyOutsideAllocationIsRejected) {
  ScheduleTrace t;
  t.events = {{5, EventKind::Complete, "a"}};
  t.allocations = {{"a", ResourceKind::QuantumDevice, 0, 0, 3, {{2, 4}}}};
  EXPECT_THROW(compute_metrics(t), IntegrityError);
}

TEST(Compare, Canonical) {
  const auto c = compare(run(kCanonical, false), run(kCanonical, true));
  EXPECT_EQ(c.at("makespan").delta, -6);
  EXPECT_NEAR(c.at("makespan").ratio, -6.0 / 18.0, 1e-12);
  EXPECT_EQ(c.at("allocated_idle").delta, -10);
  EXPECT_NEAR(c.at("allocated_idle").ratio, -10.0 / 14.0, 1e-12);
  EXPECT_EQ(c.at("makespan").verdict, Verdict::Improved);
  EXPECT_EQ(c.at("total_idle").delta, -6);
  const auto text = comparison_summary(c);
  EXPECT_NE(text.find("makespan: 18 -> 12 (-6, -33.3%) improved"), std::string::npos);
  EXPECT_NE(text.find("allocated_idle: 14 -> 4 (-10, -71.4%) improved"), std::string::npos);
}

TEST(Compare, IdenticalReports) {
  const auto m = run(kCanonical, true);
  for (const auto& d : compare(m, m).deltas) {
    EXPECT_EQ(d.delta, 0);
    EXPECT_EQ(d.ratio, 0.0);
    EXPECT_EQ(d.verdict, Verdict::Unchanged);
  }
}

TEST(Compare, SingleBlockJobBoundedByOverhead) {
  gen::Rng rng(0x5eed31);
  for (int i = 0; i < 200; ++i) {
    auto job = gen::random_alternating_job(rng, "j", 1, 10);
    const SimTime eps = gen::uniform(rng, 0, 3);
    const WorkloadSpec w{{1, 1}, {job}, eps};
    for (const auto& d : compare(run(w, false), run(w, true)).deltas) {
      ASSERT_LE(d.delta, 0);
      ASSERT_GE(d.delta, -2 * eps);
    }
  }
}

TEST(MetricsProperty, PartitionIdentityAndIndependentAgreement) {
  gen::Rng rng(0x5eed32);
  for (int i = 0; i < 500; ++i) {
    const auto w = gen::random_workload(rng, {});
    for (const bool split : {false, true}) {
      const auto units = split ? units_from_split(split_workload(w)) : units_from_monolithic(w);
      const auto t = simulate(w.pool, units);
      const auto m = compute_metrics(t);
      const auto ref = gen::independent_metrics(units, t);
      ASSERT_EQ(m.quantum_busy + m.quantum_allocated_idle + m.quantum_unallocated_idle, m.makespan);
      ASSERT_EQ(m.makespan, ref.makespan);
      ASSERT_EQ(m.quantum_busy, ref.busy);
      ASSERT_EQ(m.quantum_allocated_idle, ref.allocated_idle());
      ASSERT_EQ(m.quantum_unallocated_idle, ref.unallocated_idle());
      ASSERT_GE(m.quantum_allocated_idle, 0);
      ASSERT_GE(m.quantum_unallocated_idle, 0);
    }
  }
}

TEST(Gantt, CanonicalSplitRows) {
  const auto csv = gantt_csv(simulate(kCanonical.pool, units_from_split(split_workload(kCanonical))));
  EXPECT_EQ(csv.rfind("unit,resource,start,end,busy_start,busy_end\n", 0), 0u);
  EXPECT_NE(csv.find("J_1_1,quantum,0,3,2,3\n"), std::string::npos);
  EXPECT_NE(csv.find("J_2_2,quantum,9,10,9,10\n"), std::string::npos);
}
