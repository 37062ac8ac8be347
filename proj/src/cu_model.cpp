#include "coldrec/cu_model.hpp"

#include <utility>

namespace coldrec {

CuInstance::CuInstance(GaussianBelief prior, IndexSet pool)
    : prior_(std::move(prior)), pool_(std::move(pool)) {
    pool_.check_within(prior_.dim());
    if (pool_.empty()) throw DimensionMismatch("candidate pool is empty");
}

CuInstance::CuInstance(GaussianBelief prior)
    : prior_(std::move(prior)),
      pool_(IndexSet::complement_of(IndexSet{}, prior_.dim())) {
    if (pool_.empty()) throw DimensionMismatch("candidate pool is empty");
}

CuInstance cu_toy_instance() {
    Eigen::VectorXd mean(3);
    mean << 3.2, 2.5, 3.5;
    Eigen::MatrixXd cov(3, 3);
    cov << 1.6, 0.25, 1.6,
           0.25, 3.2, 0.20,
           1.6, 0.20, 3.5;
    return CuInstance(GaussianBelief(mean, cov));
}

CuInstance random_cu_instance(int d, Rng& rng, double ridge) {
    if (d < 1) throw DimensionMismatch("instance needs at least one user");
    Eigen::MatrixXd a(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) a(i, j) = rng.normal();
    Eigen::MatrixXd cov = a * a.transpose();
    cov.diagonal().array() += ridge;
    Eigen::VectorXd mean(d);
    for (int i = 0; i < d; ++i) mean(i) = 3.0 + rng.normal();
    return CuInstance(GaussianBelief(mean, cov));
}

double expected_reward(const CuInstance& instance, const IndexSet& selection) {
    selection.check_subset_of(instance.pool());
    if (selection.empty()) throw DimensionMismatch("empty selection");
    double total = 0.0;
    const IndexSet ordered = selection.sorted();
    for (int i : ordered.indices()) total += instance.prior().mean()(i);
    return total;
}

GaussianBelief update_correlation_form(const CuInstance& instance, const IndexSet& observed,
                                       const Eigen::VectorXd& ratings) {
    const auto& prior = instance.prior();
    observed.check_within(prior.dim());
    if (ratings.size() != observed.size())
        throw DimensionMismatch("rating count does not match observed set");
    const auto decomp = correlation_form(prior);
    const IndexSet rest = IndexSet::complement_of(observed, prior.dim());

    const Eigen::MatrixXd c_uu = sub_block(decomp.corr, observed, observed);
    const Eigen::MatrixXd c_ru = sub_block(decomp.corr, rest, observed);
    const Eigen::MatrixXd L = cholesky_psd(c_uu);
    // c_ru * c_uu^-1 via triangular solves
    Eigen::MatrixXd tmp = L.triangularView<Eigen::Lower>().solve(c_ru.transpose());
    Eigen::MatrixXd gain_corr =
        L.transpose().triangularView<Eigen::Upper>().solve(tmp).transpose();

    const Eigen::VectorXd std_rest = sub_vector(decomp.stddev, rest);
    const Eigen::VectorXd std_obs = sub_vector(decomp.stddev, observed);
    const Eigen::VectorXd scaled_innovation =
        (ratings - sub_vector(prior.mean(), observed)).cwiseQuotient(std_obs);

    Eigen::VectorXd mean_out =
        sub_vector(prior.mean(), rest) + std_rest.cwiseProduct(gain_corr * scaled_innovation);

    Eigen::MatrixXd corr_post = sub_block(decomp.corr, rest, rest) - gain_corr * c_ru.transpose();
    Eigen::MatrixXd cov_out =
        std_rest.asDiagonal() * corr_post * std_rest.asDiagonal();
    cov_out = static_cast<Eigen::MatrixXd>(0.5 * (cov_out + cov_out.transpose()));

    std::vector<int> labels_out;
    labels_out.reserve(static_cast<std::size_t>(rest.size()));
    for (int i : rest.indices()) labels_out.push_back(prior.labels()[static_cast<std::size_t>(i)]);
    return {std::move(mean_out), std::move(cov_out), std::move(labels_out)};
}

Eigen::VectorXd update_user_based_cf(const Eigen::VectorXd& mean, const Eigen::MatrixXd& corr,
                                     const IndexSet& observed, const Eigen::VectorXd& ratings) {
    const auto d = static_cast<int>(mean.size());
    if (corr.rows() != d || corr.cols() != d)
        throw DimensionMismatch("mean and correlation dimensions disagree");
    observed.check_within(d);
    if (observed.empty()) throw DimensionMismatch("no observed coordinates");
    if (ratings.size() != observed.size())
        throw DimensionMismatch("rating count does not match observed set");

    const IndexSet rest = IndexSet::complement_of(observed, d);
    const Eigen::VectorXd innovation = ratings - sub_vector(mean, observed);
    return sub_vector(mean, rest) + sub_block(corr, rest, observed) * innovation;
}

}  // namespace coldrec
