#pragma once

#include <Eigen/Dense>
#include <vector>

#include "coldrec/errors.hpp"
#include "coldrec/index_set.hpp"

namespace coldrec {

/// Numeric guards used across the belief algebra. Overridable per call site;
/// the defaults are the module-wide constants.
struct Tolerances {
    double symmetry_rel = 1e-9;   // relative asymmetry allowed before rejecting a covariance
    double jitter_rel = 1e-8;     // first jitter = jitter_rel * trace / dim
    double jitter_growth = 10.0;  // jitter multiplier per retry
    int jitter_retries = 3;
};

/// Multivariate normal belief over a set of labeled coordinates.
/// The covariance is validated symmetric and positive definite on
/// construction; when plain Cholesky fails, diagonal jitter is added per the
/// schedule in Tolerances and the jittered matrix becomes the stored one.
class GaussianBelief {
public:
    GaussianBelief(Eigen::VectorXd mean, Eigen::MatrixXd cov, Tolerances tol = {});
    GaussianBelief(Eigen::VectorXd mean, Eigen::MatrixXd cov, std::vector<int> labels,
                   Tolerances tol = {});

    [[nodiscard]] const Eigen::VectorXd& mean() const noexcept { return mean_; }
    [[nodiscard]] const Eigen::MatrixXd& cov() const noexcept { return cov_; }
    [[nodiscard]] const std::vector<int>& labels() const noexcept { return labels_; }
    [[nodiscard]] int dim() const noexcept { return static_cast<int>(mean_.size()); }

    /// Diagonal jitter that had to be added to make the covariance factorizable; 0 if none.
    [[nodiscard]] double jitter_applied() const noexcept { return jitter_; }

private:
    Eigen::VectorXd mean_;
    Eigen::MatrixXd cov_;
    std::vector<int> labels_;
    double jitter_ = 0.0;
};

/// Per-coordinate standard deviations and the correlation matrix they induce.
struct CorrelationDecomposition {
    Eigen::VectorXd stddev;
    Eigen::MatrixXd corr;
};

/// Lower Cholesky factor of a symmetric matrix, applying the jitter schedule
/// when the plain factorization fails. Throws SingularBlock if the schedule
/// is exhausted. `jitter_out`, when non-null, receives the jitter used.
Eigen::MatrixXd cholesky_psd(const Eigen::MatrixXd& m, const Tolerances& tol = {},
                             double* jitter_out = nullptr);

/// Rows/columns of `m` restricted to the given index sets, in their order.
Eigen::MatrixXd sub_block(const Eigen::MatrixXd& m, const IndexSet& rows, const IndexSet& cols);
Eigen::VectorXd sub_vector(const Eigen::VectorXd& v, const IndexSet& idx);

/// Gain matrix cov[rest, obs] * cov[obs, obs]^-1 with `rest` the ascending
/// complement of `observed`. Solved via Cholesky, never an explicit inverse.
Eigen::MatrixXd posterior_gain(const GaussianBelief& belief, const IndexSet& observed,
                               const Tolerances& tol = {});

/// Posterior belief over the unobserved coordinates after observing `values`
/// (ordered like `observed`). Labels carry over from the prior.
GaussianBelief condition(const GaussianBelief& belief, const IndexSet& observed,
                         const Eigen::VectorXd& values, const Tolerances& tol = {});

/// Split the covariance into per-coordinate stddevs and a correlation matrix.
/// Throws ZeroVariance if any diagonal entry is not strictly positive.
CorrelationDecomposition correlation_form(const GaussianBelief& belief);

/// Covariance of the posterior-mean vector of the unselected coordinates
/// induced by observing `selected`: cov[rest, sel] cov[sel, sel]^-1 cov[sel, rest].
Eigen::MatrixXd selection_conditional_cov(const GaussianBelief& belief, const IndexSet& selected,
                                          const Tolerances& tol = {});

}  // namespace coldrec
