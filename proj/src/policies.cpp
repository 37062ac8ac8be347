#include "coldrec/policies.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "coldrec/errors.hpp"
#include "coldrec/ranking.hpp"
#include "coldrec/rng.hpp"

namespace coldrec {

namespace {

constexpr std::uint64_t kSelectStreamTag = 0x5E1EC7ULL;

const char* kPolicyNames[] = {"greedy", "al",       "ucb",      "cu-gee",
                              "cu-gee-i", "mf-gee", "mf-gee-i", "mf-gee-ii"};

void check_config(const PolicyConfig& cfg, bool needs_sampling) {
    if (cfg.lambda < 0.0) throw Error("lambda must be nonnegative");
    if (needs_sampling && cfg.samples_T < 1) throw Error("samples_T must be at least 1");
}

void check_budgets(int m, int n, int pool) {
    if (m < 1) throw BudgetExceedsPool("first-stage budget must be at least 1");
    if (n < 0) throw DimensionMismatch("second-stage budget must be non-negative");
    if (m + n > pool) {
        std::ostringstream msg;
        msg << "budget " << m << "+" << n << " exceeds pool of " << pool;
        throw BudgetExceedsPool(msg.str());
    }
}

// True when C(p, m) <= cap. The partial counts C(p-m+k, k) are
// nondecreasing in k, so the early exit is safe.
bool binomial_at_most(int p, int m, std::uint64_t cap) {
    unsigned __int128 count = 1;
    for (int k = 1; k <= m; ++k) {
        count = count * static_cast<unsigned>(p - m + k) / static_cast<unsigned>(k);
        if (count > cap) return false;
    }
    return true;
}

// a and b are ascending and disjoint; sums base over a and adj over b in
// ascending coordinate order so equal-score subsets sum bit-identically.
double union_sum(const Eigen::VectorXd& base, const Eigen::VectorXd& adj,
                 const std::vector<int>& a, const std::vector<int>& b) {
    double total = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() || j < b.size()) {
        if (j >= b.size() || (i < a.size() && a[i] < b[j]))
            total += base(a[i++]);
        else
            total += adj(b[j++]);
    }
    return total;
}

std::vector<int> difference_sorted(const std::vector<int>& pool, const std::vector<int>& taken) {
    std::vector<int> out;
    out.reserve(pool.size());
    std::set_difference(pool.begin(), pool.end(), taken.begin(), taken.end(),
                        std::back_inserter(out));
    return out;
}

// Diagonal of the explained covariance (the covariance of the conditional
// means) for every coordinate outside `obs`, plus a coordinate -> row map.
struct ExplainedDiag {
    Eigen::VectorXd values;
    std::vector<int> row_of;  // coordinate -> row in values, -1 for observed
};

ExplainedDiag explained_diag(const GaussianBelief& prior, const IndexSet& obs) {
    const IndexSet rest = IndexSet::complement_of(obs, prior.dim());
    const Eigen::MatrixXd gain = posterior_gain(prior, obs);
    const Eigen::MatrixXd cross = sub_block(prior.cov(), rest, obs);
    ExplainedDiag out;
    out.values = (gain.array() * cross.array()).rowwise().sum();
    out.row_of.assign(static_cast<std::size_t>(prior.dim()), -1);
    const auto& rest_idx = rest.indices();
    for (std::size_t r = 0; r < rest_idx.size(); ++r)
        out.row_of[static_cast<std::size_t>(rest_idx[r])] = static_cast<int>(r);
    return out;
}

// Scores first-stage subsets of a correlated-user instance. Built once per
// selection sweep so per-policy precomputation is shared across subsets.
class CuScorer {
public:
    CuScorer(const CuInstance& inst, const PolicyConfig& cfg)
        : inst_(&inst), policy_(cfg.policy), lambda_(cfg.lambda),
          pool_(inst.pool().sorted().indices()), mean_(inst.prior().mean()) {
        if (policy_ == Policy::cu_gee_i) {
            corr_ = correlation_form(inst.prior()).corr;
            bonus2_.resize(mean_.size());
        } else if (policy_ != Policy::cu_gee) {
            throw Error(std::string("policy ") + to_string(policy_) +
                        " does not score correlated-user instances");
        }
    }

    const std::vector<int>& pool() const { return pool_; }
    const Eigen::VectorXd& mean() const { return mean_; }

    double score(const std::vector<int>& stage1, int n) {
        const std::vector<int> cand = difference_sorted(pool_, stage1);
        Eigen::VectorXd adj = mean_;
        if (policy_ == Policy::cu_gee) {
            const ExplainedDiag ed = explained_diag(inst_->prior(), IndexSet(stage1));
            for (int c : cand) {
                const double e = ed.values(ed.row_of[static_cast<std::size_t>(c)]);
                adj(c) += lambda_ * std::sqrt(std::max(0.0, e));
            }
        } else {
            bonus2_.setZero();
            for (int a : stage1) bonus2_ += corr_.col(a).cwiseAbs2();
            for (int c : cand) adj(c) += lambda_ * std::sqrt(bonus2_(c));
        }
        const std::vector<int> chosen = top_n_indices(adj, cand, n);
        return union_sum(mean_, adj, stage1, chosen);
    }

private:
    const CuInstance* inst_;
    Policy policy_;
    double lambda_;
    std::vector<int> pool_;
    Eigen::VectorXd mean_;
    Eigen::MatrixXd corr_;
    Eigen::VectorXd bonus2_;
};

// Factor-model counterpart. The exact variant tracks how observing the
// subset shrinks the item covariance (information form, latent-space work
// only); the approximate variants use precomputed factor cross products.
class MfScorer {
public:
    MfScorer(const MfInstance& inst, const PolicyConfig& cfg)
        : inst_(&inst), policy_(cfg.policy), lambda_(cfg.lambda),
          mean_(inst.user_factors() * inst.item_belief().mean()) {
        const int d = inst.n_users();
        pool_.resize(static_cast<std::size_t>(d));
        for (int i = 0; i < d; ++i) pool_[static_cast<std::size_t>(i)] = i;

        const Eigen::MatrixXd& psi = inst.item_belief().cov();
        const int k = inst.latent_dim();
        switch (policy_) {
            case Policy::mf_gee: {
                const Eigen::MatrixXd chol = cholesky_psd(psi);
                psi_inv_ = chol.transpose().triangularView<Eigen::Upper>().solve(
                    chol.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(k, k)));
                psi_inv_ = 0.5 * (psi_inv_ + psi_inv_.transpose()).eval();
                info_.resize(k, k);
                shrink_.resize(k, k);
                proj_.resize(d, k);
                break;
            }
            case Policy::mf_gee_i:
            case Policy::mf_gee_ii: {
                Eigen::VectorXd d2 = psi.diagonal();
                if (policy_ == Policy::mf_gee_ii)
                    d2 = Eigen::VectorXd::Constant(k, psi.trace() / static_cast<double>(k));
                const Eigen::MatrixXd& p = inst.user_factors();
                cross_ = p * d2.asDiagonal() * p.transpose();
                denom_ = cross_.diagonal().array() + inst.noise_var();
                bonus2_.resize(d);
                break;
            }
            default:
                throw Error(std::string("policy ") + to_string(policy_) +
                            " does not score factor-model instances");
        }
    }

    const std::vector<int>& pool() const { return pool_; }
    const Eigen::VectorXd& mean() const { return mean_; }

    double score(const std::vector<int>& stage1, int n) {
        const Eigen::MatrixXd& p = inst_->user_factors();
        const std::vector<int> cand = difference_sorted(pool_, stage1);
        Eigen::VectorXd adj = mean_;
        if (policy_ == Policy::mf_gee) {
            info_ = psi_inv_;
            for (int a : stage1) info_.noalias() += p.row(a).transpose() * p.row(a) / inst_->noise_var();
            const Eigen::MatrixXd chol = cholesky_psd(info_);
            const int k = inst_->latent_dim();
            Eigen::MatrixXd post = chol.transpose().triangularView<Eigen::Upper>().solve(
                chol.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(k, k)));
            shrink_ = inst_->item_belief().cov() - post;
            shrink_ = 0.5 * (shrink_ + shrink_.transpose()).eval();
            proj_.noalias() = p * shrink_;
            for (int c : cand) {
                const double b2 = proj_.row(c).dot(p.row(c));
                adj(c) += lambda_ * std::sqrt(std::max(0.0, b2));
            }
        } else {
            bonus2_.setZero();
            for (int a : stage1) bonus2_ += cross_.col(a).cwiseAbs2() / denom_(a);
            for (int c : cand) adj(c) += lambda_ * std::sqrt(bonus2_(c));
        }
        const std::vector<int> chosen = top_n_indices(adj, cand, n);
        return union_sum(mean_, adj, stage1, chosen);
    }

private:
    const MfInstance* inst_;
    Policy policy_;
    double lambda_;
    std::vector<int> pool_;
    Eigen::VectorXd mean_;
    Eigen::MatrixXd psi_inv_, info_, shrink_, proj_;  // exact variant
    Eigen::MatrixXd cross_;                           // approximate variants
    Eigen::VectorXd denom_, bonus2_;
};

template <typename Scorer>
StagePlan best_subset_search(Scorer& scorer, int m, int n, const PolicyConfig& cfg) {
    const std::vector<int>& pool = scorer.pool();
    const int p = static_cast<int>(pool.size());

    bool have = false;
    double best_score = 0.0, best_mean = 0.0;
    std::vector<int> best;
    auto consider = [&](const std::vector<int>& subset) {
        const double s = scorer.score(subset, n);
        const double msum = ascending_sum(scorer.mean(), subset);
        if (!have || s > best_score || (s == best_score && msum > best_mean)) {
            have = true;
            best_score = s;
            best_mean = msum;
            best = subset;
        }
    };

    if (binomial_at_most(p, m, static_cast<std::uint64_t>(cfg.samples_T))) {
        std::vector<int> pick(static_cast<std::size_t>(m));
        for (int i = 0; i < m; ++i) pick[static_cast<std::size_t>(i)] = i;
        std::vector<int> subset(static_cast<std::size_t>(m));
        while (true) {
            for (int i = 0; i < m; ++i)
                subset[static_cast<std::size_t>(i)] = pool[static_cast<std::size_t>(pick[static_cast<std::size_t>(i)])];
            consider(subset);
            int i = m - 1;
            while (i >= 0 && pick[static_cast<std::size_t>(i)] == p - m + i) --i;
            if (i < 0) break;
            ++pick[static_cast<std::size_t>(i)];
            for (int j = i + 1; j < m; ++j) pick[static_cast<std::size_t>(j)] = pick[static_cast<std::size_t>(j - 1)] + 1;
        }
    } else {
        Rng rng(derive_seed(cfg.seed, {kSelectStreamTag, static_cast<std::uint64_t>(m)}));
        for (int t = 0; t < cfg.samples_T; ++t) consider(rng.sample_subset(pool, m));
    }
    return {IndexSet(best), best_score};
}

StagePlan rank_select(const Eigen::VectorXd& criterion, const std::vector<int>& pool, int m) {
    check_budgets(m, 0, static_cast<int>(pool.size()));
    const std::vector<int> chosen = top_n_indices(criterion, pool, m);
    return {IndexSet(chosen), ascending_sum(criterion, chosen)};
}

Eigen::VectorXd baseline_criterion(const GaussianBelief& belief, Policy p, double lambda) {
    switch (p) {
        case Policy::greedy: return belief.mean();
        case Policy::al: return belief.cov().diagonal();
        default:
            return belief.mean() + lambda * belief.cov().diagonal().cwiseMax(0.0).cwiseSqrt();
    }
}

}  // namespace

const char* to_string(Policy p) noexcept { return kPolicyNames[static_cast<int>(p)]; }

std::optional<Policy> policy_from_string(std::string_view name) noexcept {
    for (int i = 0; i < 8; ++i)
        if (name == kPolicyNames[i]) return static_cast<Policy>(i);
    return std::nullopt;
}

bool is_gee(Policy p) noexcept { return p >= Policy::cu_gee; }

bool is_mf(Policy p) noexcept { return p >= Policy::mf_gee; }

Eigen::VectorXd gee_bonus_cu(const GaussianBelief& prior, const IndexSet& u,
                             const IndexSet& v_candidates) {
    if (u.empty()) throw DimensionMismatch("need at least one observed user");
    u.check_within(prior.dim());
    v_candidates.check_within(prior.dim());
    for (int v : v_candidates.indices())
        if (u.contains(v)) throw DimensionMismatch("candidates must be disjoint from the probed set");

    const ExplainedDiag ed = explained_diag(prior, u.sorted());
    Eigen::VectorXd out(static_cast<Eigen::Index>(v_candidates.size()));
    const auto& idx = v_candidates.indices();
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const double e = ed.values(ed.row_of[static_cast<std::size_t>(idx[i])]);
        out(static_cast<Eigen::Index>(i)) = std::sqrt(std::max(0.0, e));
    }
    return out;
}

double gee_score(const CuInstance& instance, const IndexSet& u, int n, const PolicyConfig& cfg) {
    check_config(cfg, false);
    u.check_subset_of(instance.pool());
    check_budgets(static_cast<int>(u.size()), n, static_cast<int>(instance.pool().size()));
    CuScorer scorer(instance, cfg);
    return scorer.score(u.sorted().indices(), n);
}

double gee_score(const MfInstance& instance, const IndexSet& u, int n, const PolicyConfig& cfg) {
    check_config(cfg, false);
    u.check_within(instance.n_users());
    check_budgets(static_cast<int>(u.size()), n, instance.n_users());
    MfScorer scorer(instance, cfg);
    return scorer.score(u.sorted().indices(), n);
}

StagePlan gee_select(const CuInstance& instance, int m, int n, const PolicyConfig& cfg) {
    check_config(cfg, true);
    check_budgets(m, n, static_cast<int>(instance.pool().size()));
    CuScorer scorer(instance, cfg);
    return best_subset_search(scorer, m, n, cfg);
}

StagePlan gee_select(const MfInstance& instance, int m, int n, const PolicyConfig& cfg) {
    check_config(cfg, true);
    check_budgets(m, n, instance.n_users());
    MfScorer scorer(instance, cfg);
    return best_subset_search(scorer, m, n, cfg);
}

StagePlan greedy_select(const CuInstance& instance, int m, const PolicyConfig&) {
    return rank_select(instance.prior().mean(), instance.pool().sorted().indices(), m);
}

StagePlan al_select(const CuInstance& instance, int m, const PolicyConfig&) {
    return rank_select(instance.prior().cov().diagonal(), instance.pool().sorted().indices(), m);
}

StagePlan ucb_select(const CuInstance& instance, int m, const PolicyConfig& cfg) {
    check_config(cfg, false);
    return rank_select(baseline_criterion(instance.prior(), Policy::ucb, cfg.lambda),
                       instance.pool().sorted().indices(), m);
}

StagePlan greedy_select(const MfInstance& instance, int m, const PolicyConfig& cfg) {
    return greedy_select(CuInstance(induced_rating_belief(instance)), m, cfg);
}

StagePlan al_select(const MfInstance& instance, int m, const PolicyConfig& cfg) {
    return al_select(CuInstance(induced_rating_belief(instance)), m, cfg);
}

StagePlan ucb_select(const MfInstance& instance, int m, const PolicyConfig& cfg) {
    return ucb_select(CuInstance(induced_rating_belief(instance)), m, cfg);
}

IndexSet stage2_select(const GaussianBelief& posterior, const IndexSet& pool, int n) {
    pool.check_within(posterior.dim());
    if (n < 0) throw DimensionMismatch("second-stage budget must be non-negative");
    if (n > static_cast<int>(pool.size())) {
        std::ostringstream msg;
        msg << "cannot pick " << n << " users from a pool of " << pool.size();
        throw BudgetExceedsPool(msg.str());
    }
    return IndexSet(top_n_indices(posterior.mean(), pool.indices(), n));
}

}  // namespace coldrec
