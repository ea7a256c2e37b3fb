#pragma once
#include <iosfwd>
#include <string>

#include "lobfluid/ctmc.hpp"
#include "lobfluid/experiments.hpp"
#include "lobfluid/fixed_point.hpp"
#include "lobfluid/fluid_ode.hpp"

// CSV writers for every artifact the toolkit produces. Numbers are written
// with 17 significant digits so a reader recovers the exact doubles.
namespace lobfluid::csv {

std::string format_double(double v);

// tau,x_1..x_N,y_1..y_N
void write_trajectory(std::ostream& os, const Trajectory& traj);
void write_solution(std::ostream& os, const OdeSolution& sol);

// counter,level,value (level 0 for the scalar counters)
void write_counters(std::ostream& os, const EventCounters& counters);

// level,x_star,y_star,min,cumulative_trade_volume
void write_fixed_point(std::ostream& os, const FixedPoint& fp, const ModelParams& params);

// solver,ell,regime,ties,residual,iterations,trade_volume
void write_fixed_point_summary_header(std::ostream& os);
void write_fixed_point_summary_row(std::ostream& os, const FixedPoint& fp);

// L,replica,seed,sup_dist
void write_convergence(std::ostream& os, const ConvergenceReport& rep);

// L,sample_idx,dist
void write_equilibrium(std::ostream& os, const ConvergenceReport& rep);

// lambda_s,ell,regime,trade_volume,residual
void write_sweep(std::ostream& os, const SweepReport& rep);

} // namespace lobfluid::csv
