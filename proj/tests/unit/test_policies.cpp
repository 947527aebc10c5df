#include <numeric>

#include "doctest.h"
#include "sparselb/kernel.hpp"
#include "sparselb/policies.hpp"

using namespace sparselb;

namespace {

// Accessible queue with the smallest (cost, not-own, index) key.
NodeId brute_force_argmin(NodeId i, const Topology& g, const std::vector<double>& cost) {
  NodeId best = i;
  for (NodeId j : g.neighbors(i)) {
    const bool better = cost[j] < cost[best] || (cost[j] == cost[best] && best != i && j < best);
    if (better) best = j;
  }
  return best;
}

NodeId chosen(NodeId i, const Topology& g, const TargetDistribution& t) {
  CHECK(t.size() == g.degree(i) + 1);
  CHECK(std::accumulate(t.begin(), t.end(), 0.0) == doctest::Approx(1.0));
  const auto slot = std::max_element(t.begin(), t.end()) - t.begin();
  CHECK(t[slot] == 1.0);
  return slot == 0 ? i : g.neighbors(i)[slot - 1];
}

std::vector<double> rates_of(const Policy& p, const Topology& g, const std::vector<int>& queues,
                             const SystemParams& params, double lambda) {
  RoutingTable table(g);
  const ArrivalRegime regime(params.regime, Regime::High);
  p.decide({g, queues, params, regime}, table);
  return table.induced_rates(lambda);
}

}  // namespace

TEST_CASE("jsq examples") {
  const Topology tri = build_cyc1d(3);
  // node 0 has neighbours 1 and 2
  CHECK(chosen(0, tri, jsq_rule(0, std::vector<int>{0, 3, 2}, tri)) == 0);
  CHECK(chosen(0, tri, jsq_rule(0, std::vector<int>{2, 2, 5}, tri)) == 0);
  CHECK(chosen(0, tri, jsq_rule(0, std::vector<int>{4, 1, 1}, tri)) == 1);
}

TEST_CASE("sed examples") {
  const Topology pair(Family::Custom, {{1}, {0}});
  SystemParams params;
  params.service_rates = {2.0, 1.0};
  CHECK(chosen(0, pair, sed_rule(0, std::vector<int>{2, 1}, pair, params)) == 0);

  const Topology tri = build_cyc1d(3);
  params.service_rates = {1.0, 2.0, 1.0};
  CHECK(chosen(0, tri, sed_rule(0, std::vector<int>{0, 0, 0}, tri, params)) == 1);
}

TEST_CASE("jsq, sed and own against brute force on every snapshot") {
  // B = 2 on a 4-cycle (degree 2): all 81 snapshots.
  const Topology g = build_cyc1d(4);
  SystemParams homo;
  homo.buffer = 2;
  SystemParams hetero = homo;
  hetero.service_rates = {1.0, 2.0, 1.0, 2.0};
  std::vector<int> q(4);
  for (int code = 0; code < 81; ++code) {
    for (int k = 0, c = code; k < 4; ++k, c /= 3) q[k] = c % 3;
    std::vector<double> len(q.begin(), q.end());
    std::vector<double> delay(4);
    for (int j = 0; j < 4; ++j) delay[j] = (q[j] + 1.0) / hetero.service_rates[j];
    for (NodeId i = 0; i < 4; ++i) {
      const NodeId j = chosen(i, g, jsq_rule(i, q, g));
      CHECK(j == brute_force_argmin(i, g, len));
      CHECK(chosen(i, g, sed_rule(i, q, g, homo)) == j);
      CHECK(chosen(i, g, sed_rule(i, q, g, hetero)) == brute_force_argmin(i, g, delay));
      bool own_shortest = true;
      for (NodeId n : g.neighbors(i)) own_shortest = own_shortest && q[i] <= q[n];
      if (own_shortest) CHECK(j == i);
      CHECK(chosen(i, g, own_rule(i, g)) == i);
    }
  }
}

TEST_CASE("rnd rule") {
  const Topology tri = build_cyc1d(3);
  const auto t = rnd_rule(0, tri);
  CHECK(t.size() == 3);
  for (double p : t) CHECK(p == doctest::Approx(1.0 / 3));
  const Topology iso(Family::Custom, {{1}, {0}, {}});
  CHECK(rnd_rule(2, iso) == TargetDistribution{1.0});
}

TEST_CASE("own and rnd induce the same rates on regular graphs") {
  SystemParams params;
  const OwnPolicy own;
  const RndPolicy rnd;
  for (const Topology& g : {build_cyc1d(101), build_ccc(5), build_torus(11)}) {
    const std::vector<int> q(g.size(), 0);
    const auto a = rates_of(own, g, q, params, 0.9);
    const auto b = rates_of(rnd, g, q, params, 0.9);
    for (std::size_t i = 0; i < g.size(); ++i) {
      CHECK(a[i] == 0.9);
      CHECK(b[i] == doctest::Approx(0.9).epsilon(1e-15));
    }
  }
  // not on the star: the root collects more
  const Topology star = build_bethe(1, 3);
  const auto r = rates_of(rnd, star, std::vector<int>(4, 0), params, 1.0);
  CHECK(r[0] > 1.0);
}

TEST_CASE("zeta policies") {
  const Topology g = build_torus(5);
  SystemParams params;
  std::vector<int> q(g.size());
  for (std::size_t i = 0; i < q.size(); ++i) q[i] = static_cast<int>(i % 6);

  const ZetaPolicy zero(std::vector<double>(6, 0.0));
  const auto own_rates = rates_of(OwnPolicy{}, g, q, params, 0.9);
  CHECK(rates_of(zero, g, q, params, 0.9) == own_rates);

  const ZetaPolicy constant(std::vector<double>(6, 0.4));
  const auto expected = effective_rates(g, std::vector<double>(g.size(), 0.4), 0.9);
  const auto got = rates_of(constant, g, q, params, 0.9);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(got[i] == doctest::Approx(expected[i]).epsilon(1e-14));

  const std::vector<double> threshold{0, 0, 0, 0, 0, 1};
  const auto offload = offload_from_zeta(threshold, q);
  const auto thr_rates = rates_of(ZetaPolicy(threshold), g, q, params, 0.9);
  const auto thr_expected = effective_rates(g, offload, 0.9);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(thr_rates[i] == doctest::Approx(thr_expected[i]).epsilon(1e-14));

  CHECK_THROWS_AS(ZetaPolicy(std::vector<double>{0.5, 1.2}), std::invalid_argument);
  const ZetaPolicy wrong_length(std::vector<double>(3, 0.0));
  CHECK_THROWS(rates_of(wrong_length, g, q, params, 0.9));
}

TEST_CASE("mfr with saturated outputs reduces to own and to full offload") {
  Rng rng(1);
  PolicyNetwork net = PolicyNetwork::create(5, ObservationMode::Global, false, {8}, rng);
  const Topology g = build_cyc1d(11);
  SystemParams params;
  std::vector<int> q(11);
  for (int i = 0; i < 11; ++i) q[i] = i % 6;

  // Zero weights, large negative output bias -> zeta ~ 0.
  Eigen::VectorXd p = Eigen::VectorXd::Zero(net.net.num_params());
  p.tail(6).setConstant(-40.0);
  net.net.set_params(p);
  for (auto mode : {ObservationMode::Global, ObservationMode::Neighborhood, ObservationMode::OwnState}) {
    const MfrPolicy mfr(net, mode, "mfr");
    const auto r = rates_of(mfr, g, q, params, 0.9);
    for (double x : r) CHECK(x == doctest::Approx(0.9).epsilon(1e-12));
  }

  p.tail(6).setConstant(40.0);
  net.net.set_params(p);
  const MfrPolicy all(net);
  RoutingTable table(g);
  const ArrivalRegime regime(params.regime, Regime::Low);
  all.decide({g, q, params, regime}, table);
  for (NodeId i = 0; i < g.size(); ++i) {
    const auto row = table.row(i);
    CHECK(row[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(row[1] == doctest::Approx(0.5));
    CHECK(row[2] == doctest::Approx(0.5));
  }
}

TEST_CASE("routing table") {
  const Topology tri = build_cyc1d(3);
  RoutingTable table(tri);
  table.set_offload(0, 0.5);
  CHECK(table.route(0, 0.2) == 0);
  CHECK(table.route(0, 0.6) == 1);
  CHECK(table.route(0, 0.9) == 2);
  CHECK(table.offload(0) == doctest::Approx(0.5));
  table.set_target(1, 2);
  CHECK(table.route(1, 0.0) == 2);
  CHECK(table.route(1, 0.999) == 2);
  CHECK_THROWS(table.set_distribution(2, std::vector<double>{0.5, 0.2, 0.2}));
  CHECK_THROWS(table.set_offload(2, 1.5));

  const Topology iso(Family::Custom, {{1}, {0}, {}});
  RoutingTable t2(iso);
  t2.set_offload(2, 1.0);
  CHECK(t2.route(2, 0.9) == 2);
}
