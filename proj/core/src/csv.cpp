#include "lobfluid/csv.hpp"

#include <algorithm>
#include <iomanip>
#include <locale>
#include <ostream>
#include <sstream>

namespace lobfluid::csv {

std::string format_double(double v) {
  std::ostringstream ss;
  ss.imbue(std::locale::classic());
  ss << std::setprecision(17) << v;
  return ss.str();
}

namespace {

void state_header(std::ostream& os, std::size_t n) {
  os << "tau";
  for (std::size_t k = 1; k <= n; ++k) os << ",x_" << k;
  for (std::size_t k = 1; k <= n; ++k) os << ",y_" << k;
  os << '\n';
}

void state_row(std::ostream& os, double tau, const FluidState& s) {
  os << format_double(tau);
  for (double v : s.x) os << ',' << format_double(v);
  for (double v : s.y) os << ',' << format_double(v);
  os << '\n';
}

} // namespace

void write_trajectory(std::ostream& os, const Trajectory& traj) {
  state_header(os, traj.initial.size());
  for (std::size_t j = 0; j < traj.times.size(); ++j) state_row(os, traj.times[j], traj.states[j]);
}

void write_solution(std::ostream& os, const OdeSolution& sol) {
  state_header(os, sol.states.front().size());
  for (std::size_t j = 0; j < sol.times.size(); ++j) state_row(os, sol.times[j], sol.states[j]);
}

void write_counters(std::ostream& os, const EventCounters& c) {
  os << "counter,level,value\n";
  auto per_level = [&](const char* name, const std::vector<std::uint64_t>& v) {
    for (std::size_t k = 0; k < v.size(); ++k) os << name << ',' << k + 1 << ',' << v[k] << '\n';
  };
  os << "buyer_arrivals,0," << c.buyer_arrivals << '\n';
  os << "seller_arrivals,0," << c.seller_arrivals << '\n';
  os << "buyer_exit_top,0," << c.buyer_exit_top << '\n';
  os << "seller_exit_bottom,0," << c.seller_exit_bottom << '\n';
  per_level("trades", c.trades);
  per_level("buyer_quits", c.buyer_quits);
  per_level("seller_quits", c.seller_quits);
  per_level("buyer_moves", c.buyer_moves);
  per_level("seller_moves", c.seller_moves);
}

void write_fixed_point(std::ostream& os, const FixedPoint& fp, const ModelParams& params) {
  os << "level,x_star,y_star,min,cumulative_trade_volume\n";
  double cumulative = 0.0;
  for (std::size_t k = 0; k < fp.x_star.size(); ++k) {
    const double m = std::min(fp.x_star[k], fp.y_star[k]);
    cumulative += params.gamma * m;
    os << k + 1 << ',' << format_double(fp.x_star[k]) << ',' << format_double(fp.y_star[k]) << ','
       << format_double(m) << ',' << format_double(cumulative) << '\n';
  }
}

void write_fixed_point_summary_header(std::ostream& os) {
  os << "solver,ell,regime,ties,residual,iterations,trade_volume\n";
}

void write_fixed_point_summary_row(std::ostream& os, const FixedPoint& fp) {
  os << to_string(fp.solver) << ',' << fp.crossing << ',' << regime_label(fp.regime) << ',' << fp.ties << ','
     << format_double(fp.residual) << ',' << fp.iterations << ',' << format_double(fp.trade_volume) << '\n';
}

void write_convergence(std::ostream& os, const ConvergenceReport& rep) {
  os << "L,replica,seed,sup_dist\n";
  for (const auto& lvl : rep.levels)
    for (std::size_t r = 0; r < lvl.distances.size(); ++r)
      os << lvl.scale << ',' << r << ',' << lvl.seeds[r] << ',' << format_double(lvl.distances[r]) << '\n';
}

void write_equilibrium(std::ostream& os, const ConvergenceReport& rep) {
  os << "L,sample_idx,dist\n";
  for (const auto& lvl : rep.levels)
    for (std::size_t j = 0; j < lvl.distances.size(); ++j)
      os << lvl.scale << ',' << j << ',' << format_double(lvl.distances[j]) << '\n';
}

void write_sweep(std::ostream& os, const SweepReport& rep) {
  os << "lambda_s,ell,regime,trade_volume,residual\n";
  for (const auto& pt : rep.points)
    os << format_double(pt.lambda_s) << ',' << pt.crossing << ',' << regime_label(pt.regime) << ','
       << format_double(pt.trade_volume) << ',' << format_double(pt.residual) << '\n';
}

} // namespace lobfluid::csv
