#include "coldrec/mf_model.hpp"

#include <utility>

namespace coldrec {

MfInstance::MfInstance(Eigen::MatrixXd user_factors, GaussianBelief item_belief, double noise_var)
    : p_(std::move(user_factors)), belief_(std::move(item_belief)), noise_var_(noise_var) {
    if (p_.cols() != belief_.dim())
        throw DimensionMismatch("user factor width does not match item belief dimension");
    if (p_.rows() < 1) throw DimensionMismatch("instance needs at least one user");
    if (!(noise_var_ > 0.0)) throw ZeroVariance("noise variance must be positive");
}

GaussianBelief induced_rating_belief(const MfInstance& instance) {
    const auto& p = instance.user_factors();
    const auto& belief = instance.item_belief();
    Eigen::VectorXd mean = p * belief.mean();
    Eigen::MatrixXd cov = p * belief.cov() * p.transpose();
    cov.diagonal().array() += instance.noise_var();
    cov = static_cast<Eigen::MatrixXd>(0.5 * (cov + cov.transpose()));
    return {std::move(mean), std::move(cov)};
}

MfInstance bayes_update(const MfInstance& instance, const IndexSet& observed,
                        const Eigen::VectorXd& ratings) {
    observed.check_within(instance.n_users());
    if (observed.empty()) throw DimensionMismatch("no observed users");
    if (ratings.size() != observed.size())
        throw DimensionMismatch("rating count does not match observed set");

    const auto& psi = instance.item_belief().cov();
    const auto& nu = instance.item_belief().mean();
    const double s2 = instance.noise_var();
    const int m = observed.size();
    const int k = instance.latent_dim();

    Eigen::MatrixXd p_u(m, k);
    for (int i = 0; i < m; ++i)
        p_u.row(i) = instance.user_factors().row(observed.indices()[static_cast<std::size_t>(i)]);

    // mean: nu + Psi P_u^T (P_u Psi P_u^T + s2 I)^-1 (r - P_u nu)
    Eigen::MatrixXd obs_cov = p_u * psi * p_u.transpose();
    obs_cov.diagonal().array() += s2;
    obs_cov = static_cast<Eigen::MatrixXd>(0.5 * (obs_cov + obs_cov.transpose()));
    const Eigen::MatrixXd l_obs = cholesky_psd(obs_cov);
    const Eigen::VectorXd innovation = ratings - p_u * nu;
    Eigen::VectorXd w = l_obs.triangularView<Eigen::Lower>().solve(innovation);
    w = l_obs.transpose().triangularView<Eigen::Upper>().solve(w);
    Eigen::VectorXd nu_post = nu + psi * p_u.transpose() * w;

    // covariance: (Psi^-1 + P_u^T P_u / s2)^-1, both inverses via Cholesky
    const Eigen::MatrixXd l_psi = cholesky_psd(psi);
    Eigen::MatrixXd psi_inv = l_psi.triangularView<Eigen::Lower>().solve(
        Eigen::MatrixXd::Identity(k, k));
    psi_inv = l_psi.transpose().triangularView<Eigen::Upper>().solve(psi_inv);
    Eigen::MatrixXd info = psi_inv + p_u.transpose() * p_u / s2;
    info = static_cast<Eigen::MatrixXd>(0.5 * (info + info.transpose()));
    const Eigen::MatrixXd l_info = cholesky_psd(info);
    Eigen::MatrixXd psi_post = l_info.triangularView<Eigen::Lower>().solve(
        Eigen::MatrixXd::Identity(k, k));
    psi_post = l_info.transpose().triangularView<Eigen::Upper>().solve(psi_post);
    psi_post = static_cast<Eigen::MatrixXd>(0.5 * (psi_post + psi_post.transpose()));

    GaussianBelief post(std::move(nu_post), std::move(psi_post),
                        instance.item_belief().labels());
    return {instance.user_factors(), std::move(post), s2};
}

}  // namespace coldrec
