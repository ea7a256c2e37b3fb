#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "lobfluid/ctmc.hpp"
#include "lobfluid/error.hpp"
#include "lobfluid/fluid_ode.hpp"

using namespace lobfluid;

namespace {

ModelParams unit(std::size_t n) {
  ModelParams p;
  p.n_levels = n;
  return validate_params(p);
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double stdev(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

} // namespace

TEST_CASE("rng streams are reproducible and distinct") {
  Rng a(5), b(5), c(6);
  for (int i = 0; i < 100; ++i) {
    const auto va = a();
    CHECK(va == b());
    (void)c;
  }
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0, 1) != derive_seed(1, 1, 0));
  Rng u(9);
  for (int i = 0; i < 10000; ++i) {
    const double x = u.uniform();
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
    CHECK(u.exponential(2.0) > 0.0);
  }
}

TEST_CASE("step from the empty book picks arrivals in proportion to their rates") {
  ModelParams p{3, 1.0, 3.0, 1.0, 1.0, 1.0, std::nullopt};
  p = validate_params(p);
  Rng rng(2024);
  const int draws = 100000;
  int buyers = 0;
  double hold = 0.0;
  for (int i = 0; i < draws; ++i) {
    const auto r = step(DiscreteState::empty(3), p, ScalingLevel(1), rng);
    if (r.event.kind == EventKind::BuyerArrival) {
      ++buyers;
      CHECK(r.next == DiscreteState{{1, 0, 0}, {0, 0, 0}});
    } else {
      REQUIRE(r.event.kind == EventKind::SellerArrival);
      CHECK(r.next == DiscreteState{{0, 0, 0}, {0, 0, 1}});
    }
    hold += r.holding_time;
  }
  const double pb = 0.25;
  const double sigma = std::sqrt(draws * pb * (1 - pb));
  CHECK(std::fabs(buyers - draws * pb) < 3 * sigma);
  // Exp(4): mean 1/4, sd of the mean 1/(4 sqrt(n))
  CHECK(std::fabs(hold / draws - 0.25) < 3 * 0.25 / std::sqrt(double(draws)));
}

TEST_CASE("step holding time and event frequencies at b=(2), s=(3)") {
  const auto p = unit(1);
  const DiscreteState s{{2}, {3}};
  const auto events = enumerate_events(s, p, ScalingLevel(1));
  Rng rng(77);
  const int draws = 140000;
  std::map<EventKind, int> counts;
  double hold = 0.0;
  for (int i = 0; i < draws; ++i) {
    const auto r = step(s, p, ScalingLevel(1), rng);
    counts[r.event.kind]++;
    hold += r.holding_time;
    CHECK(r.next == apply_event(s, r.event));
  }
  CHECK(std::fabs(hold / draws - 1.0 / 14.0) < 3 * (1.0 / 14.0) / std::sqrt(double(draws)));
  for (const auto& e : events) {
    const double pe = e.rate / 14.0;
    const double sigma = std::sqrt(draws * pe * (1 - pe));
    CHECK(std::fabs(counts[e.kind] - draws * pe) < 3.5 * sigma);
  }
}

TEST_CASE("step is deterministic for a fixed seed") {
  const auto p = unit(2);
  const DiscreteState s{{4, 1}, {2, 5}};
  Rng a(123), b(123);
  for (int i = 0; i < 50; ++i) {
    const auto ra = step(s, p, ScalingLevel(3), a);
    const auto rb = step(s, p, ScalingLevel(3), b);
    CHECK(ra.event == rb.event);
    CHECK(ra.holding_time == rb.holding_time);
    CHECK(ra.next == rb.next);
  }
}

TEST_CASE("simulate: zero horizon") {
  const auto p = unit(2);
  const FluidState x0{{0.3, 0.1}, {0.0, 0.2}};
  const auto tr = simulate(p, ScalingLevel(10), x0, 0.0, 0.1, 1);
  REQUIRE(tr.times.size() == 1);
  CHECK(tr.times[0] == 0.0);
  CHECK(tr.states[0] == x0);
  CHECK(tr.counters.total() == 0);
  CHECK(tr.n_events == 0);
  CHECK(tr.final_state == tr.initial);
}

TEST_CASE("simulate: argument checks and budget") {
  const auto p = unit(1);
  CHECK_THROWS_AS(simulate(p, ScalingLevel(10), FluidState::zeros(1), -1.0, 0.1, 1), ParamError);
  CHECK_THROWS_AS(simulate(p, ScalingLevel(10), FluidState::zeros(1), 1.0, 0.0, 1), ParamError);
  CHECK_THROWS_AS(simulate(p, ScalingLevel(10), FluidState::zeros(2), 1.0, 0.1, 1), ParamError);
  SimulationOptions o;
  o.max_events = 5;
  CHECK_THROWS_AS(simulate(p, ScalingLevel(100), FluidState::zeros(1), 1.0, 0.1, 1, o), BudgetExceeded);
}

TEST_CASE("simulate: sample grid and sampled states") {
  const auto p = unit(2);
  const auto tr = simulate(p, ScalingLevel(50), FluidState::zeros(2), 1.05, 0.1, 3);
  REQUIRE(tr.times.size() == 12);
  for (std::size_t j = 0; j + 1 < tr.times.size(); ++j) CHECK(tr.times[j] < tr.times[j + 1]);
  CHECK(tr.times.back() == 1.05);
  CHECK(tr.states.back() == scale_state(tr.final_state, ScalingLevel(50)));
  for (const auto& st : tr.states)
    for (std::size_t k = 0; k < 2; ++k) {
      const double bx = st.x[k] * 50.0, sy = st.y[k] * 50.0;
      CHECK(bx == doctest::Approx(std::round(bx)).epsilon(1e-12));
      CHECK(sy == doctest::Approx(std::round(sy)).epsilon(1e-12));
    }
}

TEST_CASE("simulate: conservation holds on fuzzed runs") {
  std::mt19937_64 gen(99);
  std::uniform_real_distribution<double> rate(0.1, 5.0);
  std::uniform_real_distribution<double> occ(0.0, 2.0);
  for (int run = 0; run < 200; ++run) {
    ModelParams p{1 + static_cast<std::size_t>(run % 5), rate(gen), rate(gen), rate(gen),
                  run % 10 == 0 ? 0.0 : rate(gen), rate(gen), std::nullopt};
    p = validate_params(p);
    FluidState x0 = FluidState::zeros(p.n_levels);
    for (std::size_t k = 0; k < p.n_levels; ++k) {
      x0.x[k] = occ(gen);
      x0.y[k] = occ(gen);
    }
    const auto tr = simulate(p, ScalingLevel(20), x0, 0.5, 0.05, derive_seed(5, run));
    CHECK(conservation_holds(tr.initial, tr.final_state, tr.counters));
    CHECK(tr.counters.total() == tr.n_events);
    CHECK(tr.counters.buyer_moves.back() == 0);
    CHECK(tr.counters.seller_moves.front() == 0);
    const auto arrivals = static_cast<double>(tr.counters.buyer_arrivals + tr.counters.seller_arrivals);
    for (const auto& st : tr.states) {
      double pop = 0.0;
      for (std::size_t k = 0; k < p.n_levels; ++k) pop += (st.x[k] + st.y[k]) * 20.0;
      CHECK(pop <= static_cast<double>(tr.initial.population()) + arrivals + 1e-9);
    }
  }
}

TEST_CASE("conservation_holds detects tampering") {
  const auto p = unit(2);
  auto tr = simulate(p, ScalingLevel(30), FluidState::zeros(2), 1.0, 0.1, 8);
  REQUIRE(conservation_holds(tr.initial, tr.final_state, tr.counters));
  tr.counters.trades[1] += 1;
  CHECK_FALSE(conservation_holds(tr.initial, tr.final_state, tr.counters));
}

TEST_CASE("simulate is bit-reproducible and seed-sensitive") {
  ModelParams p{3, 1.5, 0.7, 1.0, 0.3, 2.0, std::nullopt};
  p = validate_params(p);
  const auto a = simulate(p, ScalingLevel(200), FluidState::zeros(3), 2.0, 0.05, 17);
  const auto b = simulate(p, ScalingLevel(200), FluidState::zeros(3), 2.0, 0.05, 17);
  const auto c = simulate(p, ScalingLevel(200), FluidState::zeros(3), 2.0, 0.05, 18);
  CHECK(a == b);
  CHECK_FALSE(a == c);
}

TEST_CASE("incremental rate table agrees with full recomputation") {
  ModelParams p{4, 2.0, 1.0, 0.5, 0.25, 3.0, std::nullopt};
  p = validate_params(p);
  SimulationOptions checked;
  checked.verify_rate_table = true;
  const FluidState x0{{0.5, 0.1, 0.0, 0.2}, {0.0, 0.3, 0.4, 1.0}};
  const auto a = simulate(p, ScalingLevel(40), x0, 3.0, 0.1, 4, checked);
  const auto b = simulate(p, ScalingLevel(40), x0, 3.0, 0.1, 4);
  CHECK(a == b);
}

TEST_CASE("final state tracks the fluid limit at L = 1000") {
  const auto p = unit(1);
  const auto ode = integrate(FluidState::zeros(1), p, 1.0);
  int close = 0;
  for (std::uint64_t r = 0; r < 100; ++r) {
    const auto tr = simulate(p, ScalingLevel(1000), FluidState::zeros(1), 1.0, 0.1, derive_seed(31, r));
    if (distance(tr.states.back(), ode.back()) < 0.2) ++close;
  }
  CHECK(close >= 95);
}

TEST_CASE("empirical equilibrium") {
  const auto p = unit(1);
  CHECK(empirical_equilibrium(p, ScalingLevel(1000), 10.0, 0, 0.5, 1).empty());
  CHECK_THROWS_AS(empirical_equilibrium(p, ScalingLevel(1000), 0.0, 10, 0.5, 1), ParamError);

  auto sample_mean = [&](std::uint64_t seed) {
    const auto samples = empirical_equilibrium(p, ScalingLevel(1000), 10.0, 200, 0.5, seed);
    REQUIRE(samples.size() == 200);
    std::vector<double> xs, ys;
    for (const auto& s : samples) {
      xs.push_back(s.x[0]);
      ys.push_back(s.y[0]);
    }
    return std::pair{mean(xs), mean(ys)};
  };
  const auto [mx1, my1] = sample_mean(1);
  const auto [mx2, my2] = sample_mean(2);
  CHECK(std::fabs(mx1 - 1.0 / 3.0) < 0.05);
  CHECK(std::fabs(my1 - 1.0 / 3.0) < 0.05);
  CHECK(std::fabs(mx1 - mx2) < 0.05);
  CHECK(std::fabs(my1 - my2) < 0.05);
}

TEST_CASE("spread across replicas shrinks as L grows") {
  const auto p = unit(2);
  const FluidState x0{{0.2, 0.2}, {0.2, 0.2}};
  auto median_sd = [&](std::uint64_t L) {
    std::vector<std::vector<double>> coords(4);
    for (std::uint64_t r = 0; r < 50; ++r) {
      const auto tr = simulate(p, ScalingLevel(L), x0, 1.0, 1.0, derive_seed(L, r));
      const auto& s = tr.states.back();
      coords[0].push_back(s.x[0]);
      coords[1].push_back(s.x[1]);
      coords[2].push_back(s.y[0]);
      coords[3].push_back(s.y[1]);
    }
    std::vector<double> sd;
    for (const auto& c : coords) sd.push_back(stdev(c));
    std::sort(sd.begin(), sd.end());
    return 0.5 * (sd[1] + sd[2]);
  };
  CHECK(median_sd(10000) < median_sd(100));
}
