#include <Eigen/Dense>

#include "coldrec/cu_model.hpp"
#include "coldrec/rng.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace coldrec;
using test_support::max_abs_diff;
using test_support::random_belief;

using test_support::equal_variance_belief;

TEST_CASE("expected reward sums prior means over the selection") {
    const auto inst = cu_toy_instance();
    CHECK(expected_reward(inst, IndexSet({2})) == doctest::Approx(3.5).epsilon(1e-14));
    CHECK(expected_reward(inst, IndexSet({0, 1})) == doctest::Approx(5.7).epsilon(1e-14));
    CHECK(expected_reward(inst, IndexSet({0, 1, 2})) == doctest::Approx(9.2).epsilon(1e-14));
    CHECK_THROWS_AS(expected_reward(inst, IndexSet({3})), IndexOutOfPool);
    CHECK_THROWS_AS(expected_reward(inst, IndexSet{}), DimensionMismatch);
}

TEST_CASE("restricted pool rejects selections outside it") {
    Rng rng(5);
    const auto belief = random_belief(rng, 4);
    const CuInstance inst(belief, IndexSet({0, 2}));
    CHECK_NOTHROW(expected_reward(inst, IndexSet({2})));
    CHECK_THROWS_AS(expected_reward(inst, IndexSet({1})), IndexOutOfPool);
    CHECK_THROWS_AS(CuInstance(belief, IndexSet({0, 7})), DimensionMismatch);
}

TEST_CASE("correlation-form update agrees with direct conditioning") {
    const auto toy = cu_toy_instance();
    Eigen::VectorXd obs(1);
    obs << 2.0;
    const auto via_corr = update_correlation_form(toy, IndexSet({0}), obs);
    const auto via_cond = condition(toy.prior(), IndexSet({0}), obs);
    CHECK((via_corr.mean() - via_cond.mean()).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(max_abs_diff(via_corr.cov(), via_cond.cov()) < 1e-8);

    Rng rng(991);
    for (int trial = 0; trial < 25; ++trial) {
        const CuInstance inst(random_belief(rng, 6));
        Eigen::VectorXd ratings(2);
        ratings << rng.normal() * 2.0, rng.normal() * 2.0;
        const IndexSet observed({1, 4});
        const auto a = update_correlation_form(inst, observed, ratings);
        const auto b = condition(inst.prior(), observed, ratings);
        CHECK((a.mean() - b.mean()).cwiseAbs().maxCoeff() < 1e-8);
        CHECK(max_abs_diff(a.cov(), b.cov()) < 1e-8);
        CHECK(a.labels() == b.labels());
    }
}

TEST_CASE("user-based CF mean update applies correlation weights directly") {
    const auto toy = cu_toy_instance();
    const auto decomp = correlation_form(toy.prior());
    for (double r : {1.0, 2.0, 4.4}) {
        Eigen::VectorXd obs(1);
        obs << r;
        const auto post =
            update_user_based_cf(toy.prior().mean(), decomp.corr, IndexSet({0}), obs);
        CHECK(post(0) == doctest::Approx(2.5 + decomp.corr(1, 0) * (r - 3.2)).epsilon(1e-12));
        CHECK(post(1) == doctest::Approx(3.5 + decomp.corr(2, 0) * (r - 3.2)).epsilon(1e-12));
    }
}

TEST_CASE("CF update equals the correlation-form mean under its assumptions") {
    // uncorrelated observed pair + equal variances: the shortcut is exact
    Rng rng(2718);
    for (int trial = 0; trial < 25; ++trial) {
        const auto belief = equal_variance_belief(rng, 6, 0, 3);
        const CuInstance inst(belief);
        const auto decomp = correlation_form(belief);
        const IndexSet observed({0, 3});
        Eigen::VectorXd ratings(2);
        ratings << rng.normal(), rng.normal();

        CHECK(std::abs(decomp.corr(0, 3)) < 1e-12);
        const auto shortcut =
            update_user_based_cf(belief.mean(), decomp.corr, observed, ratings);
        const auto full = update_correlation_form(inst, observed, ratings);
        CHECK((shortcut - full.mean()).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("single observation always satisfies the CF assumptions up to scale") {
    // with one observed coordinate the intra-selection correlation is trivially
    // identity; equal variances then make CF exact against full conditioning
    Rng rng(31415);
    for (int trial = 0; trial < 10; ++trial) {
        const auto belief = equal_variance_belief(rng, 5, 1, 2);
        const auto decomp = correlation_form(belief);
        Eigen::VectorXd r(1);
        r << rng.normal() * 1.5;
        const auto shortcut = update_user_based_cf(belief.mean(), decomp.corr, IndexSet({2}), r);
        const auto full = condition(belief, IndexSet({2}), r);
        CHECK((shortcut - full.mean()).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("CF update rejects malformed input") {
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(3);
    Eigen::MatrixXd corr = Eigen::MatrixXd::Identity(3, 3);
    Eigen::VectorXd one(1);
    one << 1.0;
    CHECK_THROWS_AS(update_user_based_cf(mean, Eigen::MatrixXd::Identity(2, 2), IndexSet({0}), one),
                    DimensionMismatch);
    CHECK_THROWS_AS(update_user_based_cf(mean, corr, IndexSet({5}), one), DimensionMismatch);
    CHECK_THROWS_AS(update_user_based_cf(mean, corr, IndexSet({0}), Eigen::VectorXd::Zero(2)),
                    DimensionMismatch);
    CHECK_THROWS_AS(update_user_based_cf(mean, corr, IndexSet{}, Eigen::VectorXd::Zero(0)),
                    DimensionMismatch);
}
