#include "chemoplan/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace chemoplan {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

void check_branching(const branching_params& p) {
    if (p.initial_cells < 1) throw param_error("branching: initial_cells must be at least 1");
    if (p.alpha_self <= 0.0 || p.alpha_self > 1.0)
        throw param_error("branching: alpha_self must lie in (0, 1]");
    double total = p.alpha_self;
    for (double a : p.alpha_mut) {
        if (a < 0.0) throw param_error("branching: mutation probabilities must be nonnegative");
        total += a;
    }
    if (std::fabs(total - 1.0) > 1e-9)
        throw param_error("branching: offspring probabilities must sum to 1");
}

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

}  // namespace

std::vector<std::vector<long long>> simulate_branching(const branching_params& params,
                                                       int generations, int replications,
                                                       std::uint64_t seed) {
    check_branching(params);
    if (generations < 0) throw param_error("branching: generations must be nonnegative");
    if (replications < 1) throw param_error("branching: need at least one replication");
    const int R = static_cast<int>(params.alpha_mut.size());
    std::vector<std::vector<long long>> out(replications);
    for (int rep = 0; rep < replications; ++rep) {
        std::mt19937_64 rng(splitmix64(seed ^ (0x9e3779b97f4a7c15ULL * (rep + 1))));
        std::vector<long long> pop(1 + R, 0);
        pop[0] = params.initial_cells;
        for (int g = 0; g < generations; ++g) {
            // every sensitive cell divides; split the divisions into
            // "both daughters sensitive" vs one mutant of each type with
            // sequential conditional binomials
            long long dividing = pop[0];
            std::binomial_distribution<long long> self(dividing, params.alpha_self);
            long long x0 = self(rng);
            long long remaining = dividing - x0;
            double rem_prob = 1.0 - params.alpha_self;
            std::vector<long long> mutants(R, 0);
            for (int j = 0; j < R && remaining > 0; ++j) {
                if (j == R - 1) {
                    mutants[j] = remaining;
                    break;
                }
                double cond = rem_prob > 0.0 ? params.alpha_mut[j] / rem_prob : 0.0;
                std::binomial_distribution<long long> mut(remaining, std::min(cond, 1.0));
                mutants[j] = mut(rng);
                remaining -= mutants[j];
                rem_prob -= params.alpha_mut[j];
            }
            pop[0] += x0;
            for (int j = 0; j < R; ++j) pop[1 + j] = 2 * pop[1 + j] + mutants[j];
        }
        out[rep] = std::move(pop);
    }
    return out;
}

std::vector<double> expected_populations(const branching_params& params, int generations) {
    check_branching(params);
    if (generations < 0) throw param_error("branching: generations must be nonnegative");
    const int R = static_cast<int>(params.alpha_mut.size());
    std::vector<double> e(1 + R, 0.0);
    e[0] = static_cast<double>(params.initial_cells);
    for (int g = 0; g < generations; ++g) {
        for (int j = 0; j < R; ++j) e[1 + j] = 2.0 * e[1 + j] + params.alpha_mut[j] * e[0];
        e[0] *= 1.0 + params.alpha_self;
    }
    return e;
}

namespace {

struct kmeans_result {
    double inertia = std::numeric_limits<double>::max();
    std::vector<std::vector<double>> centers;
    std::vector<long long> count;
};

kmeans_result lloyd_once(const std::vector<std::vector<double>>& pts, int k,
                         std::mt19937_64& rng) {
    const int n = static_cast<int>(pts.size());
    const int dim = static_cast<int>(pts.front().size());

    // k-means++ seeding
    std::vector<std::vector<double>> centers;
    std::uniform_int_distribution<int> first(0, n - 1);
    centers.push_back(pts[first(rng)]);
    std::vector<double> d2(n);
    while (static_cast<int>(centers.size()) < k) {
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::max();
            for (const auto& c : centers) best = std::min(best, sq_dist(pts[i], c));
            d2[i] = best;
            total += best;
        }
        if (total <= 0.0) {
            // all points coincide with existing centers; duplicate one
            centers.push_back(centers.back());
            continue;
        }
        std::uniform_real_distribution<double> u(0.0, total);
        double pick = u(rng);
        int chosen = n - 1;
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            acc += d2[i];
            if (acc >= pick) {
                chosen = i;
                break;
            }
        }
        centers.push_back(pts[chosen]);
    }

    std::vector<int> assign(n, 0);
    std::vector<long long> count(k, 0);
    double prev_inertia = std::numeric_limits<double>::max();
    double inertia = 0.0;
    for (int round = 0; round < 500; ++round) {
        inertia = 0.0;
        std::fill(count.begin(), count.end(), 0);
        for (int i = 0; i < n; ++i) {
            int best = 0;
            double bd = sq_dist(pts[i], centers[0]);
            for (int c = 1; c < k; ++c) {
                double d = sq_dist(pts[i], centers[c]);
                if (d < bd) {
                    bd = d;
                    best = c;
                }
            }
            assign[i] = best;
            count[best]++;
            inertia += bd;
        }
        std::vector<std::vector<double>> sums(k, std::vector<double>(dim, 0.0));
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < dim; ++j) sums[assign[i]][j] += pts[i][j];
        for (int c = 0; c < k; ++c) {
            if (count[c] == 0) {
                // revive an empty cluster at the point farthest from its center
                int far = 0;
                double fd = -1.0;
                for (int i = 0; i < n; ++i) {
                    double d = sq_dist(pts[i], centers[assign[i]]);
                    if (d > fd) {
                        fd = d;
                        far = i;
                    }
                }
                centers[c] = pts[far];
            } else {
                for (int j = 0; j < dim; ++j) centers[c][j] = sums[c][j] / count[c];
            }
        }
        if (std::fabs(prev_inertia - inertia) <= 1e-6 * std::max(inertia, 1.0)) break;
        prev_inertia = inertia;
    }

    // final assignment against the converged centers
    std::fill(count.begin(), count.end(), 0);
    for (int i = 0; i < n; ++i) {
        int best = 0;
        double bd = sq_dist(pts[i], centers[0]);
        for (int c = 1; c < k; ++c) {
            double d = sq_dist(pts[i], centers[c]);
            if (d < bd) {
                bd = d;
                best = c;
            }
        }
        count[best]++;
    }
    return {inertia, std::move(centers), std::move(count)};
}

}  // namespace

scenario_set cluster_scenarios(const std::vector<std::vector<long long>>& populations,
                               const std::vector<std::string>& type_names, int k,
                               std::uint64_t seed, studentize_space space, int restarts) {
    if (populations.empty()) throw param_error("clustering: no replications given");
    const int n = static_cast<int>(populations.size());
    const int dim = static_cast<int>(populations.front().size());
    if (dim == 0 || static_cast<int>(type_names.size()) != dim)
        throw param_error("clustering: type names do not match the population dimension");
    if (k < 1 || k > n) throw param_error("clustering: k must lie in [1, replications]");
    if (restarts < 1) throw param_error("clustering: need at least one restart");
    for (const auto& row : populations)
        if (static_cast<int>(row.size()) != dim)
            throw param_error("clustering: ragged population rows");

    // counts floored at one cell so the log transforms stay finite
    std::vector<std::vector<double>> pts(n, std::vector<double>(dim));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < dim; ++j) {
            double cells = static_cast<double>(std::max(populations[i][j], 1LL));
            pts[i][j] = space == studentize_space::log ? std::log(cells) : cells;
        }
    }

    std::vector<double> mean(dim, 0.0), sd(dim, 0.0);
    for (const auto& p : pts)
        for (int j = 0; j < dim; ++j) mean[j] += p[j];
    for (int j = 0; j < dim; ++j) mean[j] /= n;
    for (const auto& p : pts)
        for (int j = 0; j < dim; ++j) sd[j] += (p[j] - mean[j]) * (p[j] - mean[j]);
    for (int j = 0; j < dim; ++j) {
        sd[j] = std::sqrt(sd[j] / n);
        // a zero-variance dimension is left unnormalized
        if (sd[j] <= 0.0) sd[j] = 1.0;
    }
    for (auto& p : pts)
        for (int j = 0; j < dim; ++j) p[j] = (p[j] - mean[j]) / sd[j];

    // Lloyd iterations converge to a local inertia minimum that depends on
    // the k-means++ draw, so keep the best of several independent restarts
    kmeans_result best;
    for (int restart = 0; restart < restarts; ++restart) {
        std::mt19937_64 rng(splitmix64(seed ^ (0x9e3779b97f4a7c15ULL * (restart + 1))));
        kmeans_result res = lloyd_once(pts, k, rng);
        if (res.inertia < best.inertia) best = std::move(res);
    }

    scenario_set set;
    set.type_names = type_names;
    for (int c = 0; c < k; ++c) {
        if (best.count[c] == 0) continue;
        scenario sc;
        sc.prob = static_cast<double>(best.count[c]) / n;
        sc.log_pops.resize(dim);
        for (int j = 0; j < dim; ++j) {
            double back = mean[j] + sd[j] * best.centers[c][j];
            sc.log_pops[j] =
                space == studentize_space::log ? back : std::log(std::max(back, 1.0));
        }
        set.scenarios.push_back(std::move(sc));
    }
    std::stable_sort(set.scenarios.begin(), set.scenarios.end(),
                     [](const scenario& a, const scenario& b) { return a.prob > b.prob; });
    return set;
}

}  // namespace chemoplan
