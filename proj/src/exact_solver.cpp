#include "coldrec/exact_solver.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "coldrec/errors.hpp"
#include "coldrec/ranking.hpp"
#include "coldrec/rng.hpp"

namespace coldrec {

namespace {

constexpr std::uint64_t kValueStreamTag = 0xE7AC7ULL;
constexpr std::uint64_t kEnumerationLimit = 1000000;

void check_budgets(const CuInstance& instance, int m, int n) {
    if (m < 1) throw BudgetExceedsPool("first-stage budget must be at least 1");
    if (n < 0) throw DimensionMismatch("second-stage budget must be non-negative");
    const int pool = static_cast<int>(instance.pool().size());
    if (m + n > pool) {
        std::ostringstream msg;
        msg << "budget " << m << "+" << n << " exceeds pool of " << pool;
        throw BudgetExceedsPool(msg.str());
    }
}

// Sum of the n largest entries of buf, accumulated in descending value
// order. The multiset of the top n values is unique, so this is
// deterministic even under ties.
double top_n_sum(std::vector<double>& buf, int n) {
    std::partial_sort(buf.begin(), buf.begin() + n, buf.end(), std::greater<double>());
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += buf[static_cast<std::size_t>(i)];
    return total;
}

struct ConditionalGeometry {
    Eigen::VectorXd rest_mean;       // prior means of the unobserved coords
    Eigen::MatrixXd shock;           // maps stage-1 noise to posterior mean shifts
    std::vector<int> candidate_pos;  // second-stage candidates, as rows of rest_mean
    double stage1_mean = 0.0;
};

ConditionalGeometry conditional_geometry(const CuInstance& instance, const IndexSet& stage1) {
    const GaussianBelief& prior = instance.prior();
    const IndexSet obs = stage1.sorted();
    const IndexSet rest = IndexSet::complement_of(obs, prior.dim());

    ConditionalGeometry geo;
    geo.rest_mean = sub_vector(prior.mean(), rest);
    const Eigen::MatrixXd gain = posterior_gain(prior, obs);
    const Eigen::MatrixXd obs_cov = sub_block(prior.cov(), obs, obs);
    const Eigen::MatrixXd chol = cholesky_psd(obs_cov);
    geo.shock = gain * chol;
    geo.stage1_mean = ascending_sum(prior.mean(), obs.indices());

    const auto& rest_idx = rest.indices();
    for (std::size_t r = 0; r < rest_idx.size(); ++r) {
        if (instance.pool().contains(rest_idx[r])) geo.candidate_pos.push_back(static_cast<int>(r));
    }
    return geo;
}

struct ClosedFormM1 {
    double value = 0.0;
    double threshold = 0.0;
};

// Expected two-stage reward of probing user u in a 3-user instance, picking
// the better of the two remaining users afterwards. The posterior means are
// affine in the standardized observation z, so the expectation of their max
// has a closed form; `threshold` is the rating where the preferred follow-up
// flips.
ClosedFormM1 closed_form_m1(const GaussianBelief& prior, int u) {
    const Eigen::VectorXd& mean = prior.mean();
    const Eigen::MatrixXd& cov = prior.cov();
    const int a = (u == 0) ? 1 : 0;
    const int b = (u == 2) ? 1 : 2;
    const double sd_u = std::sqrt(cov(u, u));
    const double slope_a = cov(a, u) / sd_u;
    const double slope_b = cov(b, u) / sd_u;
    if (slope_a == slope_b)
        throw DegenerateCovariances("follow-up means have identical sensitivity to the probe");

    const int hi = (slope_a > slope_b) ? a : b;
    const int lo = (hi == a) ? b : a;
    const double slope_gap = ((hi == a) ? slope_a : slope_b) - ((hi == a) ? slope_b : slope_a);
    const double d = (mean(lo) - mean(hi)) / slope_gap;
    const double pdf_d = std::exp(-0.5 * d * d) / std::sqrt(2.0 * M_PI);

    ClosedFormM1 out;
    out.value = mean(u) + 0.5 * (mean(a) + mean(b)) +
                0.5 * (mean(lo) - mean(hi)) * std::erf(d / std::sqrt(2.0)) + slope_gap * pdf_d;
    out.threshold = mean(u) + sd_u * d;
    return out;
}

void check_three_user(const CuInstance& instance) {
    if (instance.prior().dim() != 3 || instance.pool().size() != 3)
        throw DimensionMismatch("closed form needs exactly 3 users, all selectable");
    const Eigen::MatrixXd& cov = instance.prior().cov();
    if (cov(0, 1) == cov(0, 2) || cov(0, 1) == cov(1, 2) || cov(0, 2) == cov(1, 2))
        throw DegenerateCovariances("off-diagonal covariances must be pairwise distinct");
}

std::uint64_t subset_count_or_throw(int pool, int m) {
    unsigned __int128 count = 1;
    for (int k = 1; k <= m; ++k) {
        count = count * static_cast<unsigned>(pool - m + k) / static_cast<unsigned>(k);
        if (count > static_cast<unsigned __int128>(kEnumerationLimit) * 1000000) break;
    }
    if (count > kEnumerationLimit) {
        std::ostringstream msg;
        msg << "enumerating " << m << "-subsets of " << pool << " users needs ";
        if (count > static_cast<unsigned __int128>(kEnumerationLimit) * 1000000)
            msg << "more than " << kEnumerationLimit * 1000000;
        else
            msg << static_cast<std::uint64_t>(count);
        msg << " candidates (limit " << kEnumerationLimit << ")";
        throw CombinatorialBlowup(msg.str());
    }
    return static_cast<std::uint64_t>(count);
}

}  // namespace

std::pair<double, IndexSet> stage2_value(const GaussianBelief& posterior,
                                         const IndexSet& pool, int n) {
    pool.check_within(posterior.dim());
    if (n < 0) throw DimensionMismatch("second-stage budget must be non-negative");
    if (n > static_cast<int>(pool.size())) {
        std::ostringstream msg;
        msg << "cannot pick " << n << " users from a pool of " << pool.size();
        throw BudgetExceedsPool(msg.str());
    }
    if (n == 0) return {0.0, IndexSet{}};
    const std::vector<int> chosen = top_n_indices(posterior.mean(), pool.indices(), n);
    return {ascending_sum(posterior.mean(), chosen), IndexSet(chosen)};
}

std::pair<double, double> two_stage_value(const CuInstance& instance, const IndexSet& stage1,
                                          int n, const ExactConfig& cfg) {
    stage1.check_subset_of(instance.pool());
    check_budgets(instance, static_cast<int>(stage1.size()), n);

    if (cfg.mode == IntegrationMode::analytic_3user) {
        check_three_user(instance);
        if (stage1.size() != 1 || n != 1)
            throw DimensionMismatch("closed form covers one probe plus one follow-up pick");
        return {closed_form_m1(instance.prior(), stage1.indices()[0]).value, 0.0};
    }

    if (cfg.mc_samples < 2) throw Error("mc_samples must be at least 2");
    const ConditionalGeometry geo = conditional_geometry(instance, stage1);
    if (n == 0) return {geo.stage1_mean, 0.0};

    const int m = static_cast<int>(stage1.size());
    Rng rng(derive_seed(cfg.seed, {kValueStreamTag, static_cast<std::uint64_t>(m)}));
    Eigen::VectorXd z(m);
    Eigen::VectorXd post(geo.rest_mean.size());
    std::vector<double> buf(geo.candidate_pos.size());

    double sum = 0.0, sumsq = 0.0;
    for (int s = 0; s < cfg.mc_samples; ++s) {
        for (int j = 0; j < m; ++j) z(j) = rng.normal();
        post = geo.rest_mean;
        post.noalias() += geo.shock * z;
        for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = post(geo.candidate_pos[i]);
        const double v = top_n_sum(buf, n);
        sum += v;
        sumsq += v * v;
    }
    const double s_count = static_cast<double>(cfg.mc_samples);
    const double mean = sum / s_count;
    const double var = std::max(0.0, (sumsq - s_count * mean * mean) / (s_count - 1.0));
    return {geo.stage1_mean + mean, std::sqrt(var / s_count)};
}

ValueReport exact_policy(const CuInstance& instance, int m, int n, const ExactConfig& cfg) {
    check_budgets(instance, m, n);
    const IndexSet pool_sorted = instance.pool().sorted();
    const auto& pool = pool_sorted.indices();
    const int p = static_cast<int>(pool.size());
    subset_count_or_throw(p, m);

    ValueReport report;
    bool have_best = false;
    std::vector<int> pick(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) pick[static_cast<std::size_t>(i)] = i;
    while (true) {
        std::vector<int> subset(static_cast<std::size_t>(m));
        for (int i = 0; i < m; ++i) subset[static_cast<std::size_t>(i)] = pool[static_cast<std::size_t>(pick[static_cast<std::size_t>(i)])];
        const auto [value, err] = two_stage_value(instance, IndexSet(subset), n, cfg);
        report.per_candidate[subset] = CandidateValue{value, err};
        if (!have_best || value > report.best_value) {
            have_best = true;
            report.best_value = value;
            report.best_subset = IndexSet(subset);
        }

        // advance to the next combination in lexicographic order
        int i = m - 1;
        while (i >= 0 && pick[static_cast<std::size_t>(i)] == p - m + i) --i;
        if (i < 0) break;
        ++pick[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < m; ++j) pick[static_cast<std::size_t>(j)] = pick[static_cast<std::size_t>(j - 1)] + 1;
    }
    return report;
}

ValueReport analytic_three_user(const CuInstance& instance) {
    check_three_user(instance);
    ValueReport report;
    bool have_best = false;
    for (int u = 0; u < 3; ++u) {
        const double value = closed_form_m1(instance.prior(), u).value;
        report.per_candidate[{u}] = CandidateValue{value, 0.0};
        if (!have_best || value > report.best_value) {
            have_best = true;
            report.best_value = value;
            report.best_subset = IndexSet{u};
        }
    }
    return report;
}

std::array<double, 3> analytic_three_user_thresholds(const CuInstance& instance) {
    check_three_user(instance);
    std::array<double, 3> out{};
    for (int u = 0; u < 3; ++u) out[static_cast<std::size_t>(u)] = closed_form_m1(instance.prior(), u).threshold;
    return out;
}

double quadrature_value_m1(const CuInstance& instance, int stage1_user, int n, int points) {
    const IndexSet stage1{stage1_user};
    stage1.check_subset_of(instance.pool());
    check_budgets(instance, 1, n);
    if (points < 2) throw DimensionMismatch("quadrature needs at least 2 points");

    const ConditionalGeometry geo = conditional_geometry(instance, stage1);
    if (n == 0) return geo.stage1_mean;

    // Gauss-Hermite nodes and weights from the Jacobi matrix of the Hermite
    // recurrence; the squared first eigenvector components already include
    // the 1/sqrt(pi) normalization of the weights.
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(points, points);
    for (int k = 1; k < points; ++k) {
        const double off = std::sqrt(0.5 * k);
        jacobi(k, k - 1) = off;
        jacobi(k - 1, k) = off;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
    if (eig.info() != Eigen::Success) throw SingularBlock("quadrature eigendecomposition failed");

    Eigen::VectorXd post(geo.rest_mean.size());
    std::vector<double> buf(geo.candidate_pos.size());
    double total = 0.0;
    for (int i = 0; i < points; ++i) {
        const double z = std::sqrt(2.0) * eig.eigenvalues()(i);
        const double w = eig.eigenvectors()(0, i) * eig.eigenvectors()(0, i);
        post = geo.rest_mean + geo.shock.col(0) * z;
        for (std::size_t c = 0; c < buf.size(); ++c) buf[c] = post(geo.candidate_pos[c]);
        total += w * top_n_sum(buf, n);
    }
    return geo.stage1_mean + total;
}

}  // namespace coldrec
