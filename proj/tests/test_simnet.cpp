#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "flowtel/errors.hpp"
#include "flowtel/hashing.hpp"
#include "flowtel/simnet.hpp"

using namespace flowtel;

namespace {

SwitchConfig sim_config(uint64_t master_seed) {
   SwitchConfig cfg = SwitchConfig::make(master_seed);
   cfg.m_uf = 1024;
   cfg.m_df = 768;
   cfg.layout = EncoderLayout{768, 256, 0};
   TowerConfig tower;
   tower.levels = {TowerLevel{4096, 8, derive_seed(master_seed, "sim-test-tower", 0)},
                   TowerLevel{2048, 16, derive_seed(master_seed, "sim-test-tower", 1)}};
   cfg.tower = tower;
   cfg.validate();
   return cfg;
}

WorkloadSpec small_workload() {
   WorkloadSpec w;
   w.n_flows = 1000;
   w.model = WorkloadSpec::SizeModel::Uniform;
   w.min_size = 1;
   w.max_size = 8;
   return w;
}

}  // namespace

TEST_CASE("two identical networks replay the same epochs") {
   SimNet n1(sim_config(21), 3);
   SimNet n2(sim_config(21), 3);
   for (auto* n : {&n1, &n2}) {
      n->set_workload(small_workload());
      LossSpec l;
      l.victim_ratio = 0.1;
      l.drop_rate = 0.5;
      n->set_loss(l);
   }
   for (int e = 0; e < 2; ++e) {
      EpochTruth t1 = n1.run_epoch();
      EpochTruth t2 = n2.run_epoch();
      CHECK(t1.generated == t2.generated);
      CHECK(t1.dropped == t2.dropped);
      CHECK(t1.flows.size() == t2.flows.size());
      auto g1 = n1.rotate_all();
      auto g2 = n2.rotate_all();
      REQUIRE(g1.size() == 3);
      for (size_t i = 0; i < 3; ++i) {
         CHECK(g1[i].up_hl == g2[i].up_hl);
         CHECK(g1[i].down_hl == g2[i].down_hl);
         CHECK(g1[i].classifier == g2[i].classifier);
      }
   }
}

TEST_CASE("ground truth balances generated against delivered plus dropped") {
   SimNet net(sim_config(22), 2);
   net.set_workload(small_workload());
   LossSpec l;
   l.victim_ratio = 0.2;
   l.drop_rate = 0.6;
   net.set_loss(l);
   EpochTruth t = net.run_epoch();
   CHECK(t.conserved());
   CHECK(t.generated > 0);
   CHECK(t.dropped > 0);

   SimNet quiet(sim_config(23), 2);
   quiet.set_workload(small_workload());
   EpochTruth tq = quiet.run_epoch();
   CHECK(tq.conserved());
   CHECK(tq.dropped == 0);
   CHECK(tq.delivered == tq.generated);
}

TEST_CASE("the victim count is exact at full drop rate") {
   SimNet net(sim_config(24), 2);
   net.set_workload(small_workload());
   LossSpec l;
   l.victim_ratio = 0.25;
   l.drop_rate = 1.0;
   net.set_loss(l);
   EpochTruth t = net.run_epoch();
   uint64_t victims = 0;
   for (const auto& [f, ft] : t.flows) {
      (void)f;
      if (ft.dropped > 0) {
         ++victims;
         CHECK(ft.delivered == 0);
      }
   }
   CHECK(victims == 250);
}

TEST_CASE("scripted victim refresh draws new victims each epoch") {
   SimNet net(sim_config(25), 2);
   net.set_workload(small_workload());
   LossSpec l;
   l.victim_ratio = 0.3;
   l.drop_rate = 1.0;
   l.per_epoch_victims = true;
   net.set_loss(l);

   std::set<uint64_t> victims0, victims1;
   EpochTruth t0 = net.run_epoch();
   net.rotate_all();
   for (const auto& [f, ft] : t0.flows)
      if (ft.dropped > 0) victims0.insert(f);
   EpochTruth t1 = net.run_epoch();
   for (const auto& [f, ft] : t1.flows)
      if (ft.dropped > 0) victims1.insert(f);

   CHECK(victims0.size() == 300);
   CHECK(victims1.size() == 300);
   CHECK(victims0 != victims1);
}

TEST_CASE("zipf sizes follow the rank law and meet the packet budget") {
   SimNet net(sim_config(26), 2);
   WorkloadSpec w;
   w.n_flows = 1000;
   w.model = WorkloadSpec::SizeModel::Zipf;
   w.zipf_exponent = 1.0;
   w.total_packets = 100000;
   net.set_workload(w);
   auto plan = net.plan_epoch(0);
   REQUIRE(plan.size() == 1000);
   uint64_t total = 0, largest = 0;
   for (const auto& f : plan) {
      total += f.packets;
      largest = std::max(largest, f.packets);
   }
   CHECK(std::abs((double)total - 100000.0) < 1000.0);
   double share = (double)largest / (double)total;
   CHECK(share > 0.10);
   CHECK(share < 0.17);
   CHECK(plan[0].packets > plan[999].packets);
}

TEST_CASE("flows never ingress and egress at the same switch") {
   SimNet net(sim_config(27), 4);
   net.set_workload(small_workload());
   for (const auto& f : net.plan_epoch(0)) CHECK(f.ingress != f.egress);
}

TEST_CASE("trace rows parse with and without explicit placement") {
   std::istringstream in(
       "flow_id,packets,ingress,egress\n"
       "# comment line\n"
       "12,5\n"
       "\n"
       "34,7,0,2\n"
       "56,1,3,3\n");
   auto rows = parse_trace_csv(in);
   REQUIRE(rows.size() == 3);
   CHECK(rows[0].flow == 12);
   CHECK(rows[0].packets == 5);
   CHECK(rows[0].ingress == -1);
   CHECK(rows[1].flow == 34);
   CHECK(rows[1].ingress == 0);
   CHECK(rows[1].egress == 2);
   CHECK(rows[2].ingress == 3);

   std::istringstream bad("12,notanumber\n");
   CHECK_THROWS_AS(parse_trace_csv(bad), Error);
   std::istringstream short_row("12\n");
   CHECK_THROWS_AS(parse_trace_csv(short_row), Error);
   CHECK_THROWS_AS(load_trace_csv("no_such_trace_file.csv"), Error);
}

TEST_CASE("trace workloads honor explicit placement modulo the switch count") {
   SimNet net(sim_config(28), 3);
   WorkloadSpec w;
   w.model = WorkloadSpec::SizeModel::Trace;
   w.trace = {
       TraceRow{100, 4, 0, 2},
       TraceRow{101, 2, -1, -1},
       TraceRow{102, 3, 1, 1},  // explicit self-loop falls back to hashing
       TraceRow{103, 5, 5, 4},  // wraps to 2 -> 1
   };
   net.set_workload(w);
   auto plan = net.plan_epoch(0);
   REQUIRE(plan.size() == 4);
   CHECK(plan[0].ingress == 0);
   CHECK(plan[0].egress == 2);
   CHECK(plan[0].packets == 4);
   CHECK(plan[1].ingress != plan[1].egress);
   CHECK(plan[2].ingress != plan[2].egress);
   CHECK(plan[3].ingress == 2);
   CHECK(plan[3].egress == 1);
}

TEST_CASE("a failed link drops exactly its own traffic") {
   SimNet net(sim_config(29), 3);
   net.set_workload(small_workload());
   LossSpec l;
   l.link_failure = true;
   l.fail_ingress = 0;
   l.fail_egress = 1;
   l.fail_drop_rate = 1.0;
   net.set_loss(l);
   auto plan = net.plan_epoch(0);
   EpochTruth t = net.run_epoch();
   for (const auto& f : plan) {
      const FlowTruth& ft = t.flows.at(f.id);
      if (f.ingress == 0 && f.egress == 1) {
         CHECK(ft.dropped == ft.generated);
      } else {
         CHECK(ft.dropped == 0);
      }
   }
}

TEST_CASE("the epoch counter advances on rotation only") {
   SimNet net(sim_config(30), 2);
   net.set_workload(small_workload());
   CHECK(net.epoch_index() == 0);
   net.run_epoch();
   CHECK(net.epoch_index() == 0);
   auto groups = net.rotate_all();
   CHECK(net.epoch_index() == 1);
   REQUIRE(groups.size() == 2);
   CHECK(groups[0].epoch_index == 0);
   CHECK(groups[1].epoch_index == 0);
   CHECK(groups[0].switch_id == 0);
   CHECK(groups[1].switch_id == 1);
}

TEST_CASE("networks need at least two switches") {
   CHECK_THROWS_AS(SimNet(sim_config(31), 1), Error);
   CHECK_THROWS_AS(SimNet(sim_config(31), 0), Error);
}

TEST_CASE("loss diffs classify mismatches") {
   std::map<uint64_t, int64_t> expected = {{1, 2}, {2, 1}};
   Flowset exact;
   exact.add(1, 2);
   exact.add(2, 1);
   CHECK(diff_losses(expected, exact).exact);

   Flowset missing;
   missing.add(1, 2);
   OracleDiff dm = diff_losses(expected, missing);
   CHECK_FALSE(dm.exact);
   CHECK(dm.missing == 1);

   Flowset extra = exact;
   extra.add(3, 4);
   OracleDiff de = diff_losses(expected, extra);
   CHECK_FALSE(de.exact);
   CHECK(de.extra == 1);

   Flowset wrong;
   wrong.add(1, 2);
   wrong.add(2, 9);
   OracleDiff dw = diff_losses(expected, wrong);
   CHECK_FALSE(dw.exact);
   CHECK(dw.wrong_value == 1);
}
