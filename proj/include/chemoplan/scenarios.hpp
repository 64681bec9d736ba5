#pragma once

// Tumor-heterogeneity scenario generation: a branching process grows the
// tumor from a single drug-sensitive cell, mutations seed drug-resistant
// subpopulations, and k-means over the simulated log-populations compresses
// the replications into a weighted scenario set for the chance-constrained
// planner.

#include <cstdint>
#include <string>
#include <vector>

#include "chemoplan/domain.hpp"

namespace chemoplan {

// Per-division offspring distribution of a sensitive cell: with probability
// alpha_self both daughters stay sensitive, with probability alpha_mut[j]
// one daughter mutates to resistant type j. Resistant cells always produce
// two daughters of their own type. alpha_self + sum(alpha_mut) must be 1.
struct branching_params {
    double alpha_self = 0.985;
    std::vector<double> alpha_mut;
    long long initial_cells = 1;

    int n_types() const { return 1 + static_cast<int>(alpha_mut.size()); }
};

// Simulates the branching process for a number of synchronous generations.
// Returns one row per replication with final counts per type (sensitive
// first). Each replication draws from its own mt19937_64 stream derived
// from (seed, replication), so results are reproducible and independent of
// the replication order.
std::vector<std::vector<long long>> simulate_branching(const branching_params& params,
                                                       int generations, int replications,
                                                       std::uint64_t seed);

// Exact expected counts per type after the given number of generations:
// E[sensitive] grows by (1 + alpha_self) per generation, resistant types
// double and gain alpha_mut[j] * E[sensitive] mutants.
std::vector<double> expected_populations(const branching_params& params, int generations);

// Which space the per-dimension Studentized normalization acts in before
// clustering. In raw space the heavy-tailed resistant counts dominate the
// standard deviation, so the bulk of typical replications concentrates into
// one dominant cluster; log space spreads that bulk out instead.
enum class studentize_space { raw, log };

// Compresses replications into k scenarios: populations (counts floored at
// one cell) are studentized per dimension, clustered with seeded k-means++
// and Lloyd iterations (until the relative inertia improvement drops below
// 1e-6, at most 500 rounds; best restart by inertia), and the
// centroids are mapped back to log-population space. Scenario probability
// is the fraction of replications assigned to the cluster; scenarios come
// back sorted by probability descending.
scenario_set cluster_scenarios(const std::vector<std::vector<long long>>& populations,
                               const std::vector<std::string>& type_names, int k,
                               std::uint64_t seed,
                               studentize_space space = studentize_space::raw,
                               int restarts = 50);

}  // namespace chemoplan
