#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "coldrec/cu_model.hpp"
#include "coldrec/index_set.hpp"

namespace coldrec {

enum class IntegrationMode { monte_carlo, analytic_3user };

struct ExactConfig {
    int mc_samples = 100000;
    std::uint64_t seed = 0;
    IntegrationMode mode = IntegrationMode::monte_carlo;
};

struct CandidateValue {
    double value = 0.0;
    double std_error = 0.0;
};

/// Result of evaluating every feasible first-stage subset.
struct ValueReport {
    std::map<std::vector<int>, CandidateValue> per_candidate;
    IndexSet best_subset;
    double best_value = 0.0;
};

/// Best second-stage pick: the n coordinates of `pool` with the largest
/// posterior means (ties prefer the lowest index). Returns the summed mean
/// and the chosen set. n == 0 is allowed and yields (0, {}).
std::pair<double, IndexSet> stage2_value(const GaussianBelief& posterior,
                                         const IndexSet& pool, int n);

/// Expected total reward of committing to `stage1`, then observing those
/// ratings and picking the best n of the remaining pool. Monte Carlo mode
/// returns (estimate, standard error); draws depend only on (seed, |stage1|,
/// sample index) so estimates for different subsets share randomness.
/// Analytic mode requires a 3-user instance with |stage1| = n = 1 and
/// returns the closed-form value with zero error.
std::pair<double, double> two_stage_value(const CuInstance& instance,
                                          const IndexSet& stage1, int n,
                                          const ExactConfig& cfg);

/// Evaluate every m-subset of the pool and report the best. Enumeration is
/// refused (CombinatorialBlowup) beyond 1e6 subsets.
ValueReport exact_policy(const CuInstance& instance, int m, int n,
                         const ExactConfig& cfg);

/// Closed-form values for all three single-user first stages of a 3-user
/// instance with one follow-up pick. Requires the three off-diagonal
/// covariances to be pairwise distinct (else DegenerateCovariances).
ValueReport analytic_three_user(const CuInstance& instance);

/// For each first-stage user of a 3-user instance: the observed rating at
/// which the preferred follow-up pick switches between the two remaining
/// users. Same preconditions as analytic_three_user.
std::array<double, 3> analytic_three_user_thresholds(const CuInstance& instance);

/// Gauss-Hermite evaluation of two_stage_value for a single first-stage
/// user. Deterministic; used as an independent cross-check of the Monte
/// Carlo estimate.
double quadrature_value_m1(const CuInstance& instance, int stage1_user, int n,
                           int points = 64);

}  // namespace coldrec
