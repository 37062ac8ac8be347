#pragma once

#include <Eigen/Dense>

#include "coldrec/gaussian.hpp"
#include "coldrec/index_set.hpp"

namespace coldrec {

/// Matrix-factorization instance: fixed user factor rows, a Gaussian belief
/// over the cold item's latent vector, and the observation noise variance.
class MfInstance {
public:
    MfInstance(Eigen::MatrixXd user_factors, GaussianBelief item_belief, double noise_var);

    [[nodiscard]] const Eigen::MatrixXd& user_factors() const noexcept { return p_; }
    [[nodiscard]] const GaussianBelief& item_belief() const noexcept { return belief_; }
    [[nodiscard]] double noise_var() const noexcept { return noise_var_; }
    [[nodiscard]] int n_users() const noexcept { return static_cast<int>(p_.rows()); }
    [[nodiscard]] int latent_dim() const noexcept { return static_cast<int>(p_.cols()); }

private:
    Eigen::MatrixXd p_;
    GaussianBelief belief_;
    double noise_var_;
};

/// Joint Gaussian over all users' ratings implied by the item belief:
/// mean P nu, covariance P Psi P^T + noise_var I.
GaussianBelief induced_rating_belief(const MfInstance& instance);

/// Item-belief update after observing `ratings` from the users in `observed`.
/// Mean via the observation form, covariance via the information form.
MfInstance bayes_update(const MfInstance& instance, const IndexSet& observed,
                        const Eigen::VectorXd& ratings);

}  // namespace coldrec
