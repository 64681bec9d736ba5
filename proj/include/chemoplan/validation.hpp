#pragma once

// Seeded property suites over the shipped dynamics and solver layers:
// stability guards, the Euler global error bound against the Runge-Kutta
// reference, the schedule-dominance property, built-in-solver equivalence
// with brute-force enumeration, and the branching-process mean. These back
// the `validate` command and the acceptance checks.

#include <cstdint>
#include <string>
#include <vector>

#include "chemoplan/domain.hpp"

namespace chemoplan {

struct property_report {
    std::string name;
    bool passed = false;
    std::string detail;  // one-line evidence: measured values vs limits
};

// Unstable grid steps are refused by both the stability predicate and the
// model builder.
property_report check_stability_guards(const model_params& params);

// Single-drug five-day instance at one-hour and half-hour steps: the Euler
// trajectories stay within the analytic global error bound of the RK4
// reference at every grid point, and halving the step roughly halves the
// worst error (ratio in [0.3, 0.7]).
property_report check_euler_error_bound(const model_params& params);

// pairs seeded random effective-concentration schedule pairs with
// E1 >= E2 pointwise: the final log burden under the stronger schedule
// never exceeds the weaker one's, for every cell type.
property_report check_dominance(const model_params& params, std::uint64_t seed, int pairs = 200);

// The built-in branch-and-bound engine agrees with brute-force enumeration
// on seeded random micro MILPs (statuses match, objectives within 1e-7) and
// on a two-day single-drug planning model.
property_report check_oracle_equivalence(std::uint64_t seed, int instances = 50);

// Monte Carlo mean of the drug-free population after 30 generations falls
// within three standard errors of the closed-form expectation.
property_report check_branching_mean(std::uint64_t seed, int replications = 10000);

// All of the above, in order.
std::vector<property_report> run_property_suites(const model_params& params, std::uint64_t seed);

// The two-day, six-hour-step, single-oral-drug planning instance small
// enough for the built-in engine and the enumeration oracle; also the
// shared fixture for solver-equivalence checks.
model_params micro_instance();

}  // namespace chemoplan
