#include "coldrec/gaussian.hpp"

#include <cmath>
#include <unordered_set>
#include <utility>

namespace coldrec {

namespace {

bool finite_lower_pd(const Eigen::MatrixXd& L) {
    for (Eigen::Index j = 0; j < L.cols(); ++j) {
        if (!(L(j, j) > 0.0)) return false;
        for (Eigen::Index i = j; i < L.rows(); ++i)
            if (!std::isfinite(L(i, j))) return false;
    }
    return true;
}

}  // namespace

Eigen::MatrixXd cholesky_psd(const Eigen::MatrixXd& m, const Tolerances& tol, double* jitter_out) {
    if (m.rows() != m.cols()) throw DimensionMismatch("cholesky of non-square matrix");
    if (jitter_out) *jitter_out = 0.0;

    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() == Eigen::Success) {
        Eigen::MatrixXd L = llt.matrixL();
        if (finite_lower_pd(L)) return L;
    }

    const double d = static_cast<double>(m.rows());
    const double trace = m.trace();
    double eps = tol.jitter_rel * (trace > 0.0 ? trace / d : 1.0);
    for (int attempt = 0; attempt < tol.jitter_retries; ++attempt) {
        Eigen::MatrixXd jittered = m;
        jittered.diagonal().array() += eps;
        llt.compute(jittered);
        if (llt.info() == Eigen::Success) {
            Eigen::MatrixXd L = llt.matrixL();
            if (finite_lower_pd(L)) {
                if (jitter_out) *jitter_out = eps;
                return L;
            }
        }
        eps *= tol.jitter_growth;
    }
    throw SingularBlock("covariance block not positive definite after jitter schedule");
}

GaussianBelief::GaussianBelief(Eigen::VectorXd mean, Eigen::MatrixXd cov, Tolerances tol)
    : GaussianBelief(std::move(mean), std::move(cov), std::vector<int>{}, tol) {}

GaussianBelief::GaussianBelief(Eigen::VectorXd mean, Eigen::MatrixXd cov, std::vector<int> labels,
                               Tolerances tol)
    : mean_(std::move(mean)), cov_(std::move(cov)), labels_(std::move(labels)) {
    const auto d = mean_.size();
    if (cov_.rows() != d || cov_.cols() != d)
        throw DimensionMismatch("mean and covariance dimensions disagree");
    if (labels_.empty()) {
        labels_.resize(static_cast<std::size_t>(d));
        for (Eigen::Index i = 0; i < d; ++i) labels_[static_cast<std::size_t>(i)] = static_cast<int>(i);
    }
    if (static_cast<Eigen::Index>(labels_.size()) != d)
        throw DimensionMismatch("label count does not match dimension");
    std::unordered_set<int> seen(labels_.begin(), labels_.end());
    if (static_cast<Eigen::Index>(seen.size()) != d)
        throw DimensionMismatch("labels must be unique");

    if (d == 0) return;
    const double scale = std::max(1.0, cov_.cwiseAbs().maxCoeff());
    const double asym = (cov_ - cov_.transpose()).cwiseAbs().maxCoeff();
    if (asym > tol.symmetry_rel * scale)
        throw DimensionMismatch("covariance is not symmetric");
    cov_ = static_cast<Eigen::MatrixXd>(0.5 * (cov_ + cov_.transpose()));

    double jitter = 0.0;
    cholesky_psd(cov_, tol, &jitter);
    if (jitter > 0.0) cov_.diagonal().array() += jitter;
    jitter_ = jitter;
}

Eigen::MatrixXd sub_block(const Eigen::MatrixXd& m, const IndexSet& rows, const IndexSet& cols) {
    Eigen::MatrixXd out(rows.size(), cols.size());
    for (int i = 0; i < rows.size(); ++i)
        for (int j = 0; j < cols.size(); ++j)
            out(i, j) = m(rows.indices()[static_cast<std::size_t>(i)],
                          cols.indices()[static_cast<std::size_t>(j)]);
    return out;
}

Eigen::VectorXd sub_vector(const Eigen::VectorXd& v, const IndexSet& idx) {
    Eigen::VectorXd out(idx.size());
    for (int i = 0; i < idx.size(); ++i)
        out(i) = v(idx.indices()[static_cast<std::size_t>(i)]);
    return out;
}

Eigen::MatrixXd posterior_gain(const GaussianBelief& belief, const IndexSet& observed,
                               const Tolerances& tol) {
    observed.check_within(belief.dim());
    if (observed.empty()) throw DimensionMismatch("no observed coordinates");
    const IndexSet rest = IndexSet::complement_of(observed, belief.dim());

    const Eigen::MatrixXd obs_block = sub_block(belief.cov(), observed, observed);
    const Eigen::MatrixXd cross = sub_block(belief.cov(), rest, observed);
    const Eigen::MatrixXd L = cholesky_psd(obs_block, tol);

    // G = cross * obs_block^-1 via two triangular solves on the transpose
    Eigen::MatrixXd tmp = L.triangularView<Eigen::Lower>().solve(cross.transpose());
    Eigen::MatrixXd gt = L.transpose().triangularView<Eigen::Upper>().solve(tmp);
    return gt.transpose();
}

GaussianBelief condition(const GaussianBelief& belief, const IndexSet& observed,
                         const Eigen::VectorXd& values, const Tolerances& tol) {
    observed.check_within(belief.dim());
    if (values.size() != observed.size())
        throw DimensionMismatch("observation count does not match observed set");
    if (observed.empty()) throw DimensionMismatch("no observed coordinates");
    if (observed.size() >= belief.dim())
        throw DimensionMismatch("conditioning on every coordinate leaves an empty belief");

    const IndexSet rest = IndexSet::complement_of(observed, belief.dim());
    const Eigen::MatrixXd gain = posterior_gain(belief, observed, tol);

    const Eigen::VectorXd innovation = values - sub_vector(belief.mean(), observed);
    Eigen::VectorXd mean_out = sub_vector(belief.mean(), rest) + gain * innovation;

    const Eigen::MatrixXd cross = sub_block(belief.cov(), rest, observed);
    Eigen::MatrixXd cov_out = sub_block(belief.cov(), rest, rest) - gain * cross.transpose();
    cov_out = static_cast<Eigen::MatrixXd>(0.5 * (cov_out + cov_out.transpose()));

    std::vector<int> labels_out;
    labels_out.reserve(static_cast<std::size_t>(rest.size()));
    for (int i : rest.indices()) labels_out.push_back(belief.labels()[static_cast<std::size_t>(i)]);
    return {std::move(mean_out), std::move(cov_out), std::move(labels_out), tol};
}

CorrelationDecomposition correlation_form(const GaussianBelief& belief) {
    const auto d = belief.dim();
    CorrelationDecomposition out;
    out.stddev.resize(d);
    for (int i = 0; i < d; ++i) {
        const double v = belief.cov()(i, i);
        if (!(v > 0.0))
            throw ZeroVariance("coordinate " + std::to_string(i) + " has non-positive variance");
        out.stddev(i) = std::sqrt(v);
    }
    out.corr.resize(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            out.corr(i, j) = belief.cov()(i, j) / (out.stddev(i) * out.stddev(j));
    return out;
}

Eigen::MatrixXd selection_conditional_cov(const GaussianBelief& belief, const IndexSet& selected,
                                          const Tolerances& tol) {
    selected.check_within(belief.dim());
    if (selected.empty()) throw DimensionMismatch("empty selection");
    const IndexSet rest = IndexSet::complement_of(selected, belief.dim());
    const Eigen::MatrixXd gain = posterior_gain(belief, selected, tol);
    const Eigen::MatrixXd cross = sub_block(belief.cov(), rest, selected);
    Eigen::MatrixXd out = gain * cross.transpose();
    return static_cast<Eigen::MatrixXd>(0.5 * (out + out.transpose()));
}

}  // namespace coldrec
