#pragma once

#include <Eigen/Dense>

#include "coldrec/gaussian.hpp"
#include "coldrec/index_set.hpp"
#include "coldrec/rng.hpp"

namespace coldrec {

/// Cold-start instance in user space: a joint Gaussian belief over the
/// candidate users' ratings of one target item, plus the selectable pool.
class CuInstance {
public:
    CuInstance(GaussianBelief prior, IndexSet pool);
    explicit CuInstance(GaussianBelief prior);  // pool = all coordinates

    [[nodiscard]] const GaussianBelief& prior() const noexcept { return prior_; }
    [[nodiscard]] const IndexSet& pool() const noexcept { return pool_; }

private:
    GaussianBelief prior_;
    IndexSet pool_;
};

/// The worked three-user example (means 3.2/2.5/3.5).
CuInstance cu_toy_instance();

/// Random well-conditioned instance (cov = A A^T + ridge I, means near 3);
/// used by the demo CLI and the acceptance sweeps.
CuInstance random_cu_instance(int d, Rng& rng, double ridge = 0.5);

/// Sum of prior mean ratings over `selection`; selection must lie in the pool.
double expected_reward(const CuInstance& instance, const IndexSet& selection);

/// Posterior belief computed through the stddev/correlation decomposition
/// rather than raw covariance blocks. Agrees with gaussian::condition.
GaussianBelief update_correlation_form(const CuInstance& instance, const IndexSet& observed,
                                       const Eigen::VectorXd& ratings);

/// Simplified user-based CF mean update: posterior mean of the unobserved
/// coordinates is mean + corr[rest, obs] * (ratings - mean[obs]). Valid as an
/// approximation when the observed coordinates are mutually uncorrelated and
/// variances are equal; returns means only, ordered by ascending coordinate.
Eigen::VectorXd update_user_based_cf(const Eigen::VectorXd& mean, const Eigen::MatrixXd& corr,
                                     const IndexSet& observed, const Eigen::VectorXd& ratings);

}  // namespace coldrec
