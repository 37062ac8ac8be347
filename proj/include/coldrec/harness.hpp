#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "coldrec/cu_model.hpp"
#include "coldrec/mf_model.hpp"
#include "coldrec/movielens.hpp"
#include "coldrec/policies.hpp"

namespace coldrec {

/// Generative settings for the synthetic study: a small latent space, a
/// population of known users, and a batch of cold items drawn per repeat.
struct SyntheticConfig {
    int latent_dim = 5;
    int n_users = 100;
    int n_items = 50;
    int n_repeats = 30;
    double noise_std = 0.5;  // observation noise; zero makes ratings exact
    std::uint64_t seed = 0;
};

/// One generative draw. The prior is the true generating distribution and is
/// what the policies get to see; truth holds every user's realized rating of
/// every item (users x items). Item factors are kept for diagnostics.
struct SyntheticWorld {
    MfInstance prior;
    Eigen::MatrixXd truth;
    Eigen::MatrixXd item_factors;  // latent_dim x n_items
};

std::vector<SyntheticWorld> generate_synthetic(const SyntheticConfig& cfg);

/// Budget split: m users probed first, n more after the belief update.
struct AllocationPlan {
    int m = 1;
    int n = 0;
};

struct TrialResult {
    Policy policy = Policy::greedy;
    int m = 0;
    int n = 0;
    double lambda = 0.0;
    std::uint64_t seed = 0;
    double stage1_reward = 0.0;
    double stage2_reward = 0.0;
    double total_reward = 0.0;  // always stage1_reward + stage2_reward
    int hit_count = 0;          // revealed ratings >= 4 across both stages
    IndexSet stage1;
    IndexSet stage2;
};

/// How the belief is revised between the stages.
enum class UpdateRule { conditioning, user_based_cf };

/// First-stage selection dispatched by cfg.policy; baselines ignore plan.n.
StagePlan select_stage1(const CuInstance& instance, const AllocationPlan& plan,
                        const PolicyConfig& cfg);
StagePlan select_stage1(const MfInstance& instance, const AllocationPlan& plan,
                        const PolicyConfig& cfg);

/// One episode: pick stage 1, reveal those users' true ratings, update the
/// belief, pick stage 2 greedily by posterior mean from the untouched pool,
/// and score both stages against the truth. The overloads taking an explicit
/// stage-1 set skip the policy call, which lets one plan serve many items
/// drawn from the same prior.
TrialResult run_trial(const MfInstance& prior, const Eigen::VectorXd& truth,
                      const AllocationPlan& plan, const PolicyConfig& cfg);
TrialResult run_trial(const MfInstance& prior, const Eigen::VectorXd& truth,
                      const AllocationPlan& plan, const PolicyConfig& cfg, const IndexSet& stage1);
TrialResult run_trial(const CuInstance& prior, const Eigen::VectorXd& truth,
                      const AllocationPlan& plan, const PolicyConfig& cfg,
                      UpdateRule rule = UpdateRule::conditioning);
TrialResult run_trial(const CuInstance& prior, const Eigen::VectorXd& truth,
                      const AllocationPlan& plan, const PolicyConfig& cfg, const IndexSet& stage1,
                      UpdateRule rule);

/// The lambda values swept by default: zero (pure exploitation) up to a
/// strongly optimistic 4.
std::vector<double> default_lambda_grid();

/// Sweep description. Policies without a bonus weight contribute one row per
/// (N, m) cell; the others get one row per lambda as well. An empty m list
/// means every split 1..N-1 for each N.
struct ExperimentGrid {
    std::vector<int> budgets;   // total picks N per episode
    std::vector<int> m_values;  // optional explicit first-stage sizes
    std::vector<Policy> policies;
    std::vector<double> lambdas = default_lambda_grid();
    int samples_T = 2000;
    std::uint64_t seed = 0;
    int threads = 1;
};

/// One aggregated grid cell, averaged over repeats and/or items.
struct ResultRow {
    std::string scenario;
    Policy policy = Policy::greedy;
    int budget = 0;  // N
    int m = 0;
    double lambda = 0.0;
    std::uint64_t seed = 0;
    double mean_total_reward = 0.0;
    double mean_hit_count = 0.0;
    double stderr_total_reward = 0.0;
    long n_trials = 0;
};

/// Seed for the random stream owned by one grid cell and work unit (a repeat
/// index or an item id). Cells are keyed by their own coordinates, never by
/// grid order, so reordering the requested lists cannot change any result.
std::uint64_t trial_stream_seed(std::uint64_t base, Policy policy, int budget, int m, double lambda,
                                std::uint64_t unit);

/// Synthetic study: every policy cell is evaluated on the same generated
/// worlds; one stage-1 plan per (cell, repeat) is shared across that
/// repeat's items. Rows come back in canonical order (policy, N, m, lambda).
std::vector<ResultRow> run_synthetic_experiment(const SyntheticConfig& cfg,
                                                const ExperimentGrid& grid);

/// Cold-item study on a ratings log: items with at least min_ratings are
/// split out as test items, a correlated-user prior is trained per item on
/// the remaining log, and each policy spends its budget on the item's own
/// raters. Items whose pool is smaller than N sit out that budget. Belief
/// updates use the simplified user-based CF rule.
std::vector<ResultRow> run_movielens_experiment(const RatingsTable& table,
                                                const ExperimentGrid& grid, int n_test = 200,
                                                int min_ratings = 50);

/// CSV with the fixed header scenario,policy,N,m,lambda,seed,... Formatting
/// is locale-free and stable, so equal inputs give equal bytes.
void write_csv(const std::vector<ResultRow>& rows, std::ostream& out);
std::string csv_string(const std::vector<ResultRow>& rows);

/// Per (scenario, policy, N): the row with the best mean total reward over
/// all (m, lambda) cells; ties prefer smaller m, then smaller lambda.
std::vector<ResultRow> best_rows(const std::vector<ResultRow>& rows);

}  // namespace coldrec
