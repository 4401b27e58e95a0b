#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oio/demand.hpp"
#include "oio/dynamics.hpp"
#include "oio/errors.hpp"
#include "oio/feasible_set.hpp"
#include "oio/loss.hpp"
#include "oio/policy.hpp"
#include "oio/simulator.hpp"
#include "oracles.hpp"

using oio::Vec;

namespace {

struct Bench {
  oio::FeasibleSet set = oio::FeasibleSet::box({0.0, 0.0}, {8.0, 8.0});
  oio::NewsvendorLoss loss{{1.0, 2.0}, {5.0, 3.0}};
  std::unique_ptr<oio::DemandSource> demand = oio::make_poisson({1.5, 2.5});
  std::unique_ptr<oio::Dynamic> dynamic = oio::make_lost_sales(2);
};

}  // namespace

TEST_CASE("run records the protocol row by row") {
  Bench b;
  auto policy = oio::make_maxcosd(b.set, {4.0, 4.0}, 0.2);
  auto traj = oio::run(*policy, *b.dynamic, *b.demand, b.loss, b.set,
                       oio::Feedback::Censored, 300, 99);

  CHECK(traj.periods() == 300);
  CHECK(traj.products() == 2);
  CHECK(traj.seed == 99);
  CHECK(traj.x(1, 0) == 0.0);
  CHECK(traj.x(1, 1) == 0.0);
  CHECK(traj.cycle(1) == 1);
  CHECK(traj.updated(1));

  double total = 0.0;
  for (long t = 1; t <= traj.periods(); ++t) {
    Vec y = traj.y_row(t);
    Vec x = traj.x_row(t);
    Vec d(2), s(2), g(2);
    for (int i = 0; i < 2; ++i) {
      d[static_cast<std::size_t>(i)] = traj.d(t, i);
      s[static_cast<std::size_t>(i)] = traj.s(t, i);
      g[static_cast<std::size_t>(i)] = traj.g(t, i);
    }
    CHECK(oio::dominated_by(x, y));
    CHECK(s == oio::cwise_min(y, d));
    CHECK(traj.loss(t) == b.loss.evaluate(y, d));
    CHECK(g == b.loss.subgradient_censored(y, s));
    total += traj.loss(t);
    if (t > 1) {
      CHECK(traj.cycle(t) >= traj.cycle(t - 1));
      CHECK(traj.cycle(t) <= traj.cycle(t - 1) + 1);
      CHECK(traj.updated(t) == (traj.cycle(t) == traj.cycle(t - 1) + 1));
    }
  }
  CHECK(traj.total_loss() == doctest::Approx(total).epsilon(1e-15));

  // replay the carry-over rule on the recorded orders and demands
  auto replay = oio::make_lost_sales(2);
  replay->reset();
  for (long t = 1; t < traj.periods(); ++t) {
    Vec next = replay->step(traj.y_row(t), {traj.d(t, 0), traj.d(t, 1)});
    CHECK(next == traj.x_row(t + 1));
  }

  CHECK(oio::feasibility_audit(traj).pass);

  auto rows = traj.demand_rows();
  REQUIRE(rows.size() == 300);
  CHECK(rows[0][0] == traj.d(1, 0));
  CHECK(rows[299][1] == traj.d(300, 1));
}

TEST_CASE("run validates dimensions and horizon") {
  Bench b;
  auto policy = oio::make_maxcosd(b.set, {4.0, 4.0}, 0.2);
  auto one = oio::make_lost_sales(1);
  CHECK_THROWS_AS(oio::run(*policy, *one, *b.demand, b.loss, b.set,
                           oio::Feedback::Censored, 10, 1),
                  oio::ConfigError);
  CHECK_THROWS_AS(oio::run(*policy, *b.dynamic, *b.demand, b.loss, b.set,
                           oio::Feedback::Censored, 0, 1),
                  oio::ConfigError);
}

TEST_CASE("full and censored feedback leave identical trajectories") {
  Bench b;
  for (uint64_t seed : {3u, 11u}) {
    auto p1 = oio::make_maxcosd(b.set, {4.0, 4.0}, 0.3);
    auto p2 = oio::make_maxcosd(b.set, {4.0, 4.0}, 0.3);
    auto d1 = b.demand->clone_fresh();
    auto d2 = b.demand->clone_fresh();
    auto dyn1 = b.dynamic->clone_fresh();
    auto dyn2 = b.dynamic->clone_fresh();
    auto ta = oio::run(*p1, *dyn1, *d1, b.loss, b.set, oio::Feedback::Censored, 400, seed);
    auto tb = oio::run(*p2, *dyn2, *d2, b.loss, b.set, oio::Feedback::FullInformation,
                       400, seed);
    REQUIRE(ta.periods() == tb.periods());
    for (long t = 1; t <= ta.periods(); ++t) {
      for (int i = 0; i < 2; ++i) {
        CHECK(ta.y(t, i) == tb.y(t, i));
        CHECK(ta.g(t, i) == tb.g(t, i));
        CHECK(ta.x(t, i) == tb.x(t, i));
      }
      CHECK(ta.loss(t) == tb.loss(t));
      CHECK(ta.cycle(t) == tb.cycle(t));
    }
  }
}

TEST_CASE("hindsight picks the empirical quantile") {
  std::vector<Vec> demands = {{1.0}, {2.0}, {3.0}, {4.0}};
  auto set = oio::FeasibleSet::box({0.0}, {10.0});

  oio::NewsvendorLoss even({1.0}, {1.0});
  auto best = oio::hindsight_best(demands, even, set);
  CHECK(best.y == Vec{2.0});
  CHECK(best.value == doctest::Approx(4.0));

  oio::NewsvendorLoss steep({1.0}, {200.0});
  best = oio::hindsight_best(demands, steep, set);
  CHECK(best.y == Vec{4.0});
  CHECK(best.value == doctest::Approx(6.0));

  // clamping against the box
  auto tight = oio::FeasibleSet::box({0.0}, {1.5});
  best = oio::hindsight_best(demands, steep, tight);
  CHECK(best.y == Vec{1.5});
  CHECK(best.value == doctest::Approx(oracles::cost_1d(1.5, {1.0, 2.0, 3.0, 4.0}, 1.0, 200.0)));

  auto floor = oio::FeasibleSet::box({3.0}, {10.0});
  oio::NewsvendorLoss flat({200.0}, {1.0});
  best = oio::hindsight_best(demands, flat, floor);
  CHECK(best.y == Vec{3.0});

  CHECK_THROWS_AS(oio::hindsight_best({}, even, set), oio::ConfigError);
}

TEST_CASE("hindsight matches grid search on random instances") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> ucost(0.1, 5.0);
  std::uniform_real_distribution<double> udem(0.0, 8.0);
  std::uniform_int_distribution<int> ulen(5, 40);
  auto set = oio::FeasibleSet::box({0.0}, {10.0});
  for (int trial = 0; trial < 60; ++trial) {
    int len = ulen(rng);
    std::vector<Vec> demands;
    std::vector<double> flat;
    for (int t = 0; t < len; ++t) {
      double d = udem(rng);
      demands.push_back({d});
      flat.push_back(d);
    }
    oio::NewsvendorLoss loss({ucost(rng)}, {ucost(rng)});
    auto best = oio::hindsight_best(demands, loss, set);
    CHECK(best.value ==
          doctest::Approx(oracles::cost_1d(best.y[0], flat, loss.holding()[0],
                                           loss.penalty()[0]))
              .epsilon(1e-12));
    auto grid = oracles::grid_min_1d(flat, loss.holding()[0], loss.penalty()[0], 0.0,
                                     10.0, 1e-4);
    CHECK(best.value <= grid.cost + 1e-9);
  }
}

TEST_CASE("capacity solver agrees with the unconstrained quantile when slack") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> ucost(0.5, 4.0);
  std::uniform_real_distribution<double> udem(0.0, 6.0);
  for (int trial = 0; trial < 8; ++trial) {
    std::vector<Vec> demands;
    for (int t = 0; t < 30; ++t) demands.push_back({udem(rng), udem(rng)});
    oio::NewsvendorLoss loss({ucost(rng), ucost(rng)}, {ucost(rng), ucost(rng)});
    Vec q = oio::hindsight_box_quantile(demands, loss, {0.0, 0.0}, {100.0, 100.0});
    double cap = 1.5 * oio::sum(q) + 1.0;
    auto set = oio::FeasibleSet::capacity(2, cap);
    auto best = oio::hindsight_best(demands, loss, set);
    double tol = 1e-4 * set.diameter();
    CHECK(std::abs(best.y[0] - q[0]) <= tol);
    CHECK(std::abs(best.y[1] - q[1]) <= tol);
    double quantile_cost = 0.0;
    for (const auto& d : demands) quantile_cost += loss.evaluate(q, d);
    CHECK(best.value <= quantile_cost + 1e-6 * std::max(1.0, quantile_cost));
  }
}

TEST_CASE("tight capacity solution beats sampled feasible points") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> udem(2.0, 4.0);
  std::vector<Vec> demands;
  for (int t = 0; t < 25; ++t) demands.push_back({udem(rng), udem(rng)});
  oio::NewsvendorLoss loss({1.0, 2.0}, {4.0, 3.0});
  auto set = oio::FeasibleSet::capacity(2, 1.0);
  auto best = oio::hindsight_best(demands, loss, set);
  CHECK(set.contains(best.y, 1e-9));
  double cost = 0.0;
  for (const auto& d : demands) cost += loss.evaluate(best.y, d);
  CHECK(best.value == doctest::Approx(cost).epsilon(1e-12));
  for (int s = 0; s < 2000; ++s) {
    Vec z = oracles::sample_feasible(set, rng);
    double zc = 0.0;
    for (const auto& d : demands) zc += loss.evaluate(z, d);
    CHECK(best.value <= zc + 1e-6 * std::max(1.0, zc));
  }
}

TEST_CASE("regret vanishes for the constant policy at the hindsight level") {
  auto demand = oio::make_deterministic({{1.0}, {2.0}, {3.0}, {4.0}}, false);
  auto dynamic = oio::make_lost_sales(1);
  oio::NewsvendorLoss loss({1.0}, {1.0});
  auto set = oio::FeasibleSet::box({0.0}, {10.0});
  oio::ConstantPolicy policy({2.0});
  auto traj = oio::run(policy, *dynamic, *demand, loss, set, oio::Feedback::Censored, 4, 0);
  auto report = oio::regret(traj, loss, set);
  CHECK(report.cumulative_loss == doctest::Approx(4.0));
  CHECK(report.hindsight_y == Vec{2.0});
  CHECK(report.hindsight_value == doctest::Approx(4.0));
  CHECK(std::abs(report.regret) <= 1e-12);
  REQUIRE(report.checks.size() == 1);
  CHECK(report.checks[0].name == "coarse_ceiling");
  CHECK(report.checks[0].value == doctest::Approx(10.0 * 1.0 * 4.0));
  CHECK(report.checks[0].satisfied);
}

TEST_CASE("regret report flags a planted ceiling breach") {
  oio::Trajectory traj(1);
  // absurd per-period losses blow past D * G * T for the unit box
  traj.append({0.0}, {1.0}, {0.0}, {0.0}, {1.0}, 100.0, 1, true);
  traj.append({0.0}, {1.0}, {0.0}, {0.0}, {1.0}, 100.0, 2, true);
  oio::NewsvendorLoss loss({1.0}, {1.0});
  auto set = oio::FeasibleSet::box({0.0}, {1.0});
  auto report = oio::regret(traj, loss, set);
  CHECK(report.regret == doctest::Approx(200.0));
  REQUIRE(report.checks.size() == 1);
  CHECK_FALSE(report.checks[0].satisfied);
}

TEST_CASE("feasibility audit reports the first planted breach") {
  oio::Trajectory traj(2);
  traj.append({0.0, 0.0}, {1.0, 1.0}, {0.5, 0.5}, {0.5, 0.5}, {1.0, 1.0}, 1.0, 1, true);
  traj.append({0.5, 2.0}, {1.0, 1.0}, {0.5, 0.5}, {0.5, 0.5}, {1.0, 1.0}, 1.0, 2, true);
  traj.append({3.0, 3.0}, {1.0, 1.0}, {0.5, 0.5}, {0.5, 0.5}, {1.0, 1.0}, 1.0, 3, true);
  auto audit = oio::feasibility_audit(traj);
  CHECK_FALSE(audit.pass);
  CHECK(audit.period == 2);
  CHECK(audit.y == Vec{1.0, 1.0});
  CHECK(audit.x == Vec{0.5, 2.0});
}

TEST_CASE("closed form ceilings match their formulas") {
  const double T = 400.0, G = 2.0, D = 3.0, gamma = 0.25, mu = 0.5, delta = 0.05;
  auto bounds = oio::theoretical_bounds(T, G, D, gamma, mu, delta);
  REQUIRE(bounds.size() == 4);
  const double gd = G * D;
  const double coef = 1.0 / (2.0 * gamma) + gamma + 1.0;
  CHECK(bounds[0].name == "adaptive_expected");
  CHECK(bounds[0].value ==
        doctest::Approx(std::sqrt(2.0) * gd * coef * std::sqrt(T) / mu).epsilon(1e-15));
  CHECK(bounds[1].name == "adaptive_high_prob");
  CHECK(bounds[1].value ==
        doctest::Approx(gd * coef * (1.0 + std::log(T / delta) / mu) * std::sqrt(T))
            .epsilon(1e-15));
  CHECK(bounds[2].name == "descent_sqrt_t");
  CHECK(bounds[2].value ==
        doctest::Approx((1.0 + 2.0 * gamma) / (2.0 * gamma) * gd * std::sqrt(T))
            .epsilon(1e-15));
  CHECK(bounds[3].name == "coarse_ceiling");
  CHECK(bounds[3].value == doctest::Approx(gd * T).epsilon(1e-15));

  auto nomu = oio::theoretical_bounds(T, G, D, gamma, std::nullopt, delta);
  REQUIRE(nomu.size() == 2);
  CHECK(nomu[0].name == "descent_sqrt_t");
  CHECK(nomu[1].name == "coarse_ceiling");

  CHECK_THROWS_AS(oio::theoretical_bounds(0.0, G, D, gamma, mu, delta), oio::ConfigError);
  CHECK_THROWS_AS(oio::theoretical_bounds(T, G, D, 0.0, mu, delta), oio::ConfigError);
  CHECK_THROWS_AS(oio::theoretical_bounds(T, G, D, gamma, 0.0, delta), oio::ConfigError);
  CHECK_THROWS_AS(oio::theoretical_bounds(T, G, D, gamma, 1.5, delta), oio::ConfigError);
  CHECK_THROWS_AS(oio::theoretical_bounds(T, G, D, gamma, mu, 0.0), oio::ConfigError);
  CHECK_THROWS_AS(oio::theoretical_bounds(T, G, D, gamma, mu, 1.0), oio::ConfigError);
  CHECK_NOTHROW(oio::theoretical_bounds(T, G, D, gamma, 1.0, delta));
}

TEST_CASE("cycle lengths are the gaps between update periods") {
  oio::Trajectory traj(1);
  // updates at t = 1, 4, 5, 7 over 9 periods: lengths 3, 1, 2; open tail 3
  bool updated[] = {true, false, false, true, true, false, true, false, false};
  int cycle = 0;
  for (bool u : updated) {
    if (u) ++cycle;
    traj.append({0.0}, {1.0}, {0.0}, {0.0}, {0.0}, 0.0, cycle, u);
  }
  auto [lengths, open_tail] = oio::cycle_lengths(traj);
  CHECK(lengths == std::vector<long>{3, 1, 2});
  CHECK(open_tail == 3);

  auto st = oio::cycle_stats(traj, 0.5);
  CHECK(st.status == "insufficient_data");
  CHECK(st.completed == 3);
  CHECK(st.open_tail == 3);
  CHECK(st.checks.empty());
  CHECK(st.lengths == std::vector<long>{3, 1, 2});
}

TEST_CASE("cycle statistics summarize an explicit pool") {
  std::vector<long> lengths;
  for (int i = 0; i < 20; ++i) lengths.push_back(1);
  for (int i = 0; i < 10; ++i) lengths.push_back(2);
  for (int i = 0; i < 10; ++i) lengths.push_back(3);
  auto st = oio::cycle_stats_from_lengths(lengths, 5, 0.5);
  CHECK(st.status == "ok");
  CHECK(st.completed == 40);
  CHECK(st.open_tail == 5);
  CHECK(st.mean == doctest::Approx(1.75));
  CHECK(st.second_moment == doctest::Approx(3.75));
  double var = (3.75 - 1.75 * 1.75) * 40.0 / 39.0;
  CHECK(st.stderr_mean == doctest::Approx(std::sqrt(var / 40.0)));
  REQUIRE(st.tail_freq.size() == 8);
  CHECK(st.tail_freq[0] == doctest::Approx(0.5));
  CHECK(st.tail_freq[1] == doctest::Approx(0.25));
  CHECK(st.tail_freq[2] == doctest::Approx(0.0));

  REQUIRE(st.checks.size() == 9);
  CHECK(st.checks[0].name == "mean_length");
  CHECK(st.checks[0].empirical == doctest::Approx(1.75));
  CHECK(st.checks[0].limit == doctest::Approx(1.0 / 0.5 + 3.0 * st.stderr_mean));
  CHECK(st.checks[0].satisfied);
  for (int m = 1; m <= 8; ++m) {
    const auto& c = st.checks[static_cast<std::size_t>(m)];
    CHECK(c.name == "tail_gt_" + std::to_string(m));
    double target = std::pow(0.5, m);
    double slack = 3.0 * std::sqrt(target * (1.0 - target) / 40.0);
    CHECK(c.limit == doctest::Approx(std::min(1.0, target + slack)));
    CHECK(c.empirical == doctest::Approx(st.tail_freq[static_cast<std::size_t>(m - 1)]));
  }
  // the m = 1 tail sits right at its target, within slack
  CHECK(st.checks[1].satisfied);

  auto nomu = oio::cycle_stats_from_lengths(lengths, 5, std::nullopt);
  CHECK(nomu.status == "ok");
  CHECK(nomu.checks.empty());
}

TEST_CASE("cycle bookkeeping covers the whole horizon") {
  Bench b;
  auto policy = oio::make_maxcosd(b.set, {4.0, 4.0}, 0.2);
  auto traj = oio::run(*policy, *b.dynamic, *b.demand, b.loss, b.set,
                       oio::Feedback::Censored, 5000, 5);
  auto [lengths, open_tail] = oio::cycle_lengths(traj);
  long covered = open_tail;
  for (long len : lengths) covered += len;
  CHECK(covered == traj.periods());
  CHECK(traj.updated(1));
  auto st = oio::cycle_stats(traj, 1.0 - std::exp(-1.5) * std::exp(-2.5));
  CHECK(st.completed == static_cast<int>(lengths.size()));
}

TEST_CASE("a finite source ends the run") {
  auto demand = oio::make_deterministic({{1.0}, {1.0}, {1.0}}, false);
  auto dynamic = oio::make_lost_sales(1);
  oio::NewsvendorLoss loss({1.0}, {1.0});
  auto set = oio::FeasibleSet::box({0.0}, {5.0});
  oio::ConstantPolicy p1({2.0});
  CHECK_THROWS_AS(oio::run(p1, *dynamic, *demand, loss, set, oio::Feedback::Censored,
                           5, 0),
                  oio::EndOfData);
  oio::ConstantPolicy p2({2.0});
  auto fresh = demand->clone_fresh();
  auto dyn = dynamic->clone_fresh();
  CHECK_NOTHROW(oio::run(p2, *dyn, *fresh, loss, set, oio::Feedback::Censored, 3, 0));
}

TEST_CASE("csv sink mirrors the trajectory") {
  Bench b;
  auto policy = oio::make_maxcosd(b.set, {4.0, 4.0}, 0.2);
  std::string path = "sink_check.csv";
  oio::Trajectory traj(2);
  {
    oio::CsvTrajectorySink sink(path, 2);
    traj = oio::run(*policy, *b.dynamic, *b.demand, b.loss, b.set,
                    oio::Feedback::Censored, 7, 13, &sink);
  }
  std::ifstream in(path);
  REQUIRE(in.good());
  std::string header;
  std::getline(in, header);
  CHECK(header == "t,x0,x1,y0,y1,d0,d1,s0,s1,g0,g1,loss,cycle_k,updated");
  long rows = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++rows;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    REQUIRE(cells.size() == 14);
    CHECK(std::stol(cells[0]) == rows);
    long t = rows;
    CHECK(std::stod(cells[1]) == traj.x(t, 0));
    CHECK(std::stod(cells[3]) == traj.y(t, 0));
    CHECK(std::stod(cells[4]) == traj.y(t, 1));
    CHECK(std::stod(cells[5]) == traj.d(t, 0));
    CHECK(std::stod(cells[9]) == traj.g(t, 0));
    CHECK(std::stod(cells[11]) == traj.loss(t));
    CHECK(std::stol(cells[12]) == traj.cycle(t));
    CHECK((cells[13] == "0" || cells[13] == "1"));
    CHECK((cells[13] == "1") == traj.updated(t));
  }
  CHECK(rows == 7);
  std::remove(path.c_str());

  CHECK_THROWS_AS(oio::CsvTrajectorySink("/nonexistent_dir_42/x.csv", 2),
                  oio::IngestionError);
}
