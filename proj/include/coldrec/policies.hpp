#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include "coldrec/cu_model.hpp"
#include "coldrec/mf_model.hpp"

namespace coldrec {

enum class Policy { greedy, al, ucb, cu_gee, cu_gee_i, mf_gee, mf_gee_i, mf_gee_ii };

/// Stable lowercase id, e.g. "cu-gee-i"; used in CSV output and CLI flags.
const char* to_string(Policy p) noexcept;
std::optional<Policy> policy_from_string(std::string_view name) noexcept;

/// True for the optimism-bonus family (the *_gee policies).
bool is_gee(Policy p) noexcept;
/// True for policies that score factor-model instances.
bool is_mf(Policy p) noexcept;

struct PolicyConfig {
    Policy policy = Policy::cu_gee;
    double lambda = 1.0;  // bonus weight; the variant with precomputed
                          // correlations absorbs the stddev scale into it
    int samples_T = 2000;
    std::uint64_t seed = 0;
};

struct StagePlan {
    IndexSet stage1;
    double score = 0.0;  // the policy's objective value for stage1
};

/// Per-candidate exploration bonus: the standard deviation of each
/// candidate's conditional mean after observing the users in `u`. Entry i
/// corresponds to v_candidates.indices()[i].
Eigen::VectorXd gee_bonus_cu(const GaussianBelief& prior, const IndexSet& u,
                             const IndexSet& v_candidates);

/// Optimistic two-stage score of the first-stage subset `u`: its summed
/// prior means plus the n best candidate values mean + lambda * bonus. The
/// policy in cfg picks how the bonus is computed.
double gee_score(const CuInstance& instance, const IndexSet& u, int n, const PolicyConfig& cfg);
double gee_score(const MfInstance& instance, const IndexSet& u, int n, const PolicyConfig& cfg);

/// Pick the first stage by scoring samples_T random m-subsets (exhaustively
/// when there are at most samples_T of them) and keeping the best score;
/// score ties fall to the larger stage-1 mean sum, then to the subset seen
/// first. Deterministic given cfg.seed, and with the tie rule the lambda=0
/// selection coincides exactly with greedy_select in the exhaustive regime.
StagePlan gee_select(const CuInstance& instance, int m, int n, const PolicyConfig& cfg);
StagePlan gee_select(const MfInstance& instance, int m, int n, const PolicyConfig& cfg);

/// Baselines: top-m by prior mean / prior variance / mean + lambda * std,
/// ties by lowest index. The plan's score is the summed criterion of the
/// chosen users. Factor-model overloads rank by the rating distribution the
/// item belief induces.
StagePlan greedy_select(const CuInstance& instance, int m, const PolicyConfig& cfg = {});
StagePlan al_select(const CuInstance& instance, int m, const PolicyConfig& cfg = {});
StagePlan ucb_select(const CuInstance& instance, int m, const PolicyConfig& cfg = {});
StagePlan greedy_select(const MfInstance& instance, int m, const PolicyConfig& cfg = {});
StagePlan al_select(const MfInstance& instance, int m, const PolicyConfig& cfg = {});
StagePlan ucb_select(const MfInstance& instance, int m, const PolicyConfig& cfg = {});

/// Second-stage pick shared by every policy: the n remaining pool users
/// with the largest posterior means, ties by lowest index. Identical subset
/// rule as the exact solver's stage-2 step.
IndexSet stage2_select(const GaussianBelief& posterior, const IndexSet& pool, int n);

}  // namespace coldrec
