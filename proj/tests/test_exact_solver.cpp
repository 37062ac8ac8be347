#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "coldrec/exact_solver.hpp"
#include "test_support.hpp"

using namespace coldrec;
using test_support::random_belief;

namespace {

CuInstance random_instance(Rng& rng, int d) { return CuInstance(random_belief(rng, d)); }

}  // namespace

TEST_CASE("closed form reproduces the hand-checked 3-user values") {
    const CuInstance toy = cu_toy_instance();
    const ValueReport report = analytic_three_user(toy);

    REQUIRE(report.per_candidate.size() == 3);
    CHECK(report.per_candidate.at({0}).value == doctest::Approx(6.8001162653).epsilon(1e-9));
    CHECK(report.per_candidate.at({1}).value == doctest::Approx(6.0).epsilon(1e-9));
    CHECK(report.per_candidate.at({2}).value == doctest::Approx(6.7704014172).epsilon(1e-9));
    CHECK(report.per_candidate.at({0}).std_error == 0.0);
    CHECK(report.best_subset.indices() == std::vector<int>{0});
    CHECK(report.best_value == doctest::Approx(6.8001162653).epsilon(1e-9));

    const auto thresholds = analytic_three_user_thresholds(toy);
    CHECK(thresholds[0] == doctest::Approx(2.0148148148).epsilon(1e-9));
    CHECK(thresholds[1] == doctest::Approx(21.7).epsilon(1e-9));
    CHECK(thresholds[2] == doctest::Approx(1.75).epsilon(1e-9));
}

TEST_CASE("analytic integration mode returns the closed form through the generic entry") {
    const CuInstance toy = cu_toy_instance();
    ExactConfig cfg;
    cfg.mode = IntegrationMode::analytic_3user;
    const auto [value, err] = two_stage_value(toy, IndexSet{2}, 1, cfg);
    CHECK(value == doctest::Approx(6.7704014172).epsilon(1e-9));
    CHECK(err == 0.0);

    CHECK_THROWS_AS(two_stage_value(toy, IndexSet{0, 1}, 1, cfg), DimensionMismatch);
}

TEST_CASE("monte carlo estimates agree with the closed form on the 3-user instance") {
    const CuInstance toy = cu_toy_instance();
    ExactConfig cfg;
    cfg.mc_samples = 100000;
    cfg.seed = 7;

    const double expected[3] = {6.8001162653, 6.0, 6.7704014172};
    for (int u = 0; u < 3; ++u) {
        const auto [value, err] = two_stage_value(toy, IndexSet{u}, 1, cfg);
        CAPTURE(u);
        CHECK(err > 1e-5);
        CHECK(err < 0.02);
        CHECK(std::abs(value - expected[u]) <= 3.0 * err);
        CHECK(std::abs(value - expected[u]) <= 0.05);
    }
}

TEST_CASE("quadrature cross-check matches its frozen 64-point values on the 3-user instance") {
    const CuInstance toy = cu_toy_instance();
    CHECK(quadrature_value_m1(toy, 0, 1) == doctest::Approx(6.7987936168).epsilon(1e-8));
    CHECK(quadrature_value_m1(toy, 1, 1) == doctest::Approx(6.0).epsilon(1e-8));
    CHECK(quadrature_value_m1(toy, 2, 1) == doctest::Approx(6.7695216157).epsilon(1e-8));

    const ValueReport closed = analytic_three_user(toy);
    for (int u = 0; u < 3; ++u) {
        CHECK(std::abs(quadrature_value_m1(toy, u, 1) - closed.per_candidate.at({u}).value) < 2e-3);
    }
}

TEST_CASE("follow-up pick flips at the closed-form threshold rating") {
    const CuInstance toy = cu_toy_instance();

    auto best_after = [&](double rating) {
        const GaussianBelief post = condition(toy.prior(), IndexSet{0}, Eigen::VectorXd::Constant(1, rating));
        const auto [value, chosen] = stage2_value(post, IndexSet{0, 1}, 1);
        REQUIRE(chosen.size() == 1);
        return std::pair<int, double>{post.labels()[static_cast<std::size_t>(chosen.indices()[0])], value};
    };

    // below the threshold the mildly coupled user wins, above it the
    // strongly coupled one does; the threshold itself ties and falls to the
    // lower index
    CHECK(best_after(1.9).first == 1);
    CHECK(best_after(1.9).second == doctest::Approx(2.296875));
    CHECK(best_after(2.1).first == 2);
    CHECK(best_after(2.1).second == doctest::Approx(2.4));
    CHECK(best_after(2.0148148148148148).first == 1);
}

TEST_CASE("stage-2 picker handles budgets, ties and bad input") {
    Eigen::VectorXd mean(4);
    mean << 1.0, 3.0, 3.0, 2.0;
    const GaussianBelief belief(mean, Eigen::MatrixXd::Identity(4, 4));

    SUBCASE("ties prefer the lowest index") {
        const auto [value, chosen] = stage2_value(belief, IndexSet{0, 1, 2, 3}, 1);
        CHECK(chosen.indices() == std::vector<int>{1});
        CHECK(value == 3.0);
    }
    SUBCASE("pool restriction is honored") {
        const auto [value, chosen] = stage2_value(belief, IndexSet{0, 3}, 1);
        CHECK(chosen.indices() == std::vector<int>{3});
        CHECK(value == 2.0);
    }
    SUBCASE("n equal to the pool takes everything") {
        const auto [value, chosen] = stage2_value(belief, IndexSet{0, 1, 3}, 3);
        CHECK(chosen.indices() == std::vector<int>{0, 1, 3});
        CHECK(value == 6.0);
    }
    SUBCASE("n of zero is a no-op") {
        const auto [value, chosen] = stage2_value(belief, IndexSet{0, 1}, 0);
        CHECK(value == 0.0);
        CHECK(chosen.empty());
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(stage2_value(belief, IndexSet{0, 1}, 3), BudgetExceedsPool);
        CHECK_THROWS_AS(stage2_value(belief, IndexSet{0, 1}, -1), DimensionMismatch);
        CHECK_THROWS_AS(stage2_value(belief, IndexSet{0, 4}, 1), DimensionMismatch);
    }
}

TEST_CASE("estimates are reproducible and seed-sensitive") {
    Rng rng(41);
    const CuInstance inst = random_instance(rng, 5);
    ExactConfig cfg;
    cfg.mc_samples = 5000;
    cfg.seed = 9;

    const auto a = two_stage_value(inst, IndexSet{1, 3}, 2, cfg);
    const auto b = two_stage_value(inst, IndexSet{1, 3}, 2, cfg);
    CHECK(a.first == b.first);
    CHECK(a.second == b.second);

    cfg.seed = 10;
    const auto c = two_stage_value(inst, IndexSet{1, 3}, 2, cfg);
    CHECK(a.first != c.first);
}

TEST_CASE("enumeration reports every subset and its best dominates them") {
    Rng rng(17);
    const CuInstance inst = random_instance(rng, 5);
    ExactConfig cfg;
    cfg.mc_samples = 4000;
    cfg.seed = 3;

    const ValueReport report = exact_policy(inst, 2, 1, cfg);
    CHECK(report.per_candidate.size() == 10);
    for (const auto& [subset, cv] : report.per_candidate) {
        CHECK(report.best_value >= cv.value);
    }
    CHECK(report.per_candidate.at(report.best_subset.sorted().indices()).value == report.best_value);

    // shared draws make a re-evaluation of any fixed subset land exactly on
    // the tabulated value
    const auto [value, err] = two_stage_value(inst, IndexSet{0, 4}, 1, cfg);
    CHECK(value == report.per_candidate.at({0, 4}).value);
    CHECK(err == report.per_candidate.at({0, 4}).std_error);
}

TEST_CASE("enumerating the 3-user instance recovers the closed-form ranking") {
    const CuInstance toy = cu_toy_instance();
    ExactConfig cfg;
    cfg.mc_samples = 100000;
    cfg.seed = 3;

    const ValueReport mc = exact_policy(toy, 1, 1, cfg);
    const ValueReport closed = analytic_three_user(toy);
    REQUIRE(mc.per_candidate.size() == 3);
    for (const auto& [subset, cv] : mc.per_candidate) {
        CHECK(std::abs(cv.value - closed.per_candidate.at(subset).value) <= 4.0 * cv.std_error);
    }
    CHECK(mc.best_subset.indices() == std::vector<int>{0});
}

TEST_CASE("two symmetric probes are worth the same") {
    // users 0 and 1 couple to user 2 almost identically and to each other
    // weakly; probing either one must have (almost) equal value
    Eigen::VectorXd mean = Eigen::VectorXd::Constant(3, 3.0);
    Eigen::MatrixXd cov(3, 3);
    cov << 2.0, 0.3, 1.5,
           0.3, 2.0, 1.5 + 1e-9,
           1.5, 1.5 + 1e-9, 2.0;
    const CuInstance inst{GaussianBelief(mean, cov)};

    const ValueReport closed = analytic_three_user(inst);
    const double v0 = closed.per_candidate.at({0}).value;
    const double v1 = closed.per_candidate.at({1}).value;
    const double v2 = closed.per_candidate.at({2}).value;
    CHECK(std::abs(v0 - v1) < 1e-6);
    CHECK(v0 > v2 + 0.3);
    // the 1e-9 extra coupling makes probing user 1 strictly better
    CHECK(closed.best_subset.indices() == std::vector<int>{1});
    CHECK(v1 > v0);

    ExactConfig cfg;
    cfg.mc_samples = 50000;
    cfg.seed = 11;
    const auto [mc0, err0] = two_stage_value(inst, IndexSet{0}, 1, cfg);
    CHECK(std::abs(mc0 - v0) <= 3.0 * err0);
}

TEST_CASE("quadrature and monte carlo agree on random instances") {
    Rng rng(23);
    ExactConfig cfg;
    cfg.mc_samples = 30000;
    for (int rep = 0; rep < 10; ++rep) {
        const CuInstance inst = random_instance(rng, 5);
        cfg.seed = 100 + static_cast<std::uint64_t>(rep);
        const double gh = quadrature_value_m1(inst, 2, 2);
        const auto [mc, err] = two_stage_value(inst, IndexSet{2}, 2, cfg);
        CAPTURE(rep);
        CHECK(std::abs(gh - mc) <= 4.0 * err + 1e-3);
    }
}

TEST_CASE("taking everyone left removes the adaptivity advantage") {
    // with the whole remainder picked in stage 2, the value is just the sum
    // of all prior means; the quadrature hits that exactly
    Rng rng(29);
    const CuInstance inst = random_instance(rng, 5);
    const double all_means = inst.prior().mean().sum();
    CHECK(quadrature_value_m1(inst, 2, 4) == doctest::Approx(all_means).epsilon(1e-12));

    ExactConfig cfg;
    cfg.mc_samples = 20000;
    cfg.seed = 5;
    const auto [mc, err] = two_stage_value(inst, IndexSet{2}, 4, cfg);
    CHECK(std::abs(mc - all_means) <= 3.0 * err);
}

TEST_CASE("oversized enumerations and bad budgets are refused") {
    Rng rng(31);
    const CuInstance big = random_instance(rng, 30);
    ExactConfig cfg;
    cfg.mc_samples = 100;

    CHECK_THROWS_AS(exact_policy(big, 8, 1, cfg), CombinatorialBlowup);
    CHECK_THROWS_WITH_AS(exact_policy(big, 8, 1, cfg),
                         doctest::Contains("5852925"), CombinatorialBlowup);

    const CuInstance small = random_instance(rng, 8);
    const ValueReport ok = exact_policy(small, 3, 1, cfg);
    CHECK(ok.per_candidate.size() == 56);

    const CuInstance toy = cu_toy_instance();
    CHECK_THROWS_AS(exact_policy(toy, 0, 1, cfg), BudgetExceedsPool);
    CHECK_THROWS_AS(exact_policy(toy, 2, 2, cfg), BudgetExceedsPool);
    CHECK_THROWS_AS(two_stage_value(toy, IndexSet{0}, -1, cfg), DimensionMismatch);
    CHECK_THROWS_AS(two_stage_value(toy, IndexSet{3}, 1, cfg), IndexOutOfPool);
    ExactConfig bad = cfg;
    bad.mc_samples = 1;
    CHECK_THROWS_AS(two_stage_value(toy, IndexSet{0}, 1, bad), Error);

    CHECK_THROWS_AS(analytic_three_user(random_instance(rng, 4)), DimensionMismatch);
    Eigen::MatrixXd cov = toy.prior().cov();
    cov(0, 1) = cov(1, 0) = cov(0, 2);
    CHECK_THROWS_AS(analytic_three_user(CuInstance{GaussianBelief(toy.prior().mean(), cov)}),
                    DegenerateCovariances);
}
