#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "coldrec/cu_model.hpp"
#include "coldrec/errors.hpp"
#include "coldrec/exact_solver.hpp"
#include "coldrec/harness.hpp"
#include "coldrec/mf_model.hpp"
#include "coldrec/movielens.hpp"
#include "coldrec/policies.hpp"
#include "coldrec/rng.hpp"

namespace py = pybind11;
using namespace coldrec;

namespace {

Policy parse_policy(const std::string& name) {
    const auto p = policy_from_string(name);
    if (!p) throw py::value_error("unknown policy: " + name);
    return *p;
}

std::vector<Policy> parse_policies(const std::vector<std::string>& names) {
    std::vector<Policy> out;
    out.reserve(names.size());
    for (const auto& name : names) out.push_back(parse_policy(name));
    return out;
}

PolicyConfig make_policy_config(const std::string& policy, double lambda, int samples,
                                std::uint64_t seed) {
    PolicyConfig cfg;
    cfg.policy = parse_policy(policy);
    cfg.lambda = lambda;
    cfg.samples_T = samples;
    cfg.seed = seed;
    return cfg;
}

py::dict report_to_dict(const ValueReport& report) {
    py::dict values;
    for (const auto& [subset, cv] : report.per_candidate) {
        py::tuple key(subset.size());
        for (std::size_t i = 0; i < subset.size(); ++i) key[i] = subset[i];
        values[key] = py::make_tuple(cv.value, cv.std_error);
    }
    py::dict out;
    out["values"] = values;
    out["best_subset"] = report.best_subset.indices();
    out["best_value"] = report.best_value;
    return out;
}

ExperimentGrid make_grid(const std::vector<int>& budgets, const std::vector<std::string>& policies,
                         const std::vector<int>& m_values, const std::vector<double>& lambdas,
                         int samples, std::uint64_t seed, int threads) {
    ExperimentGrid grid;
    grid.budgets = budgets;
    grid.policies = parse_policies(policies);
    grid.m_values = m_values;
    grid.lambdas = lambdas.empty() ? default_lambda_grid() : lambdas;
    grid.samples_T = samples;
    grid.seed = seed;
    grid.threads = threads;
    return grid;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "two-stage cold-start user selection: models, exact values, policies, studies";
    m.attr("__version__") = COLDREC_VERSION;

    const auto base = py::register_exception<Error>(m, "Error");
    py::register_exception<ParseError>(m, "RatingsParseError", base);
    py::register_exception<DuplicatePair>(m, "DuplicatePair", base);
    py::register_exception<InsufficientItems>(m, "InsufficientItems", base);
    py::register_exception<CombinatorialBlowup>(m, "CombinatorialBlowup", base);
    py::register_exception<BudgetExceedsPool>(m, "BudgetExceedsPool", base);
    py::register_exception<DimensionMismatch>(m, "DimensionMismatch", base);

    py::class_<GaussianBelief>(m, "GaussianBelief")
        .def(py::init<Eigen::VectorXd, Eigen::MatrixXd>(), py::arg("mean"), py::arg("cov"))
        .def_property_readonly("mean", &GaussianBelief::mean)
        .def_property_readonly("cov", &GaussianBelief::cov)
        .def_property_readonly("dim", &GaussianBelief::dim)
        .def("__repr__", [](const GaussianBelief& b) {
            return "GaussianBelief(dim=" + std::to_string(b.dim()) + ")";
        });

    m.def(
        "condition",
        [](const GaussianBelief& belief, const std::vector<int>& observed,
           const Eigen::VectorXd& values) {
            return condition(belief, IndexSet(observed), values);
        },
        py::arg("belief"), py::arg("observed"), py::arg("values"),
        "Posterior over the unobserved coordinates after seeing the given values.");

    py::class_<CuInstance>(m, "CuInstance")
        .def(py::init([](const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov) {
                 return CuInstance(GaussianBelief(mean, cov));
             }),
             py::arg("mean"), py::arg("cov"))
        .def(py::init<GaussianBelief>(), py::arg("prior"))
        .def_property_readonly("prior", &CuInstance::prior)
        .def_property_readonly("pool", [](const CuInstance& c) { return c.pool().indices(); })
        .def("__repr__", [](const CuInstance& c) {
            return "CuInstance(users=" + std::to_string(c.prior().dim()) + ")";
        });

    m.def("toy_instance", &cu_toy_instance, "The worked three-user example.");
    m.def(
        "random_instance",
        [](int users, std::uint64_t seed) {
            Rng rng(seed);
            return random_cu_instance(users, rng);
        },
        py::arg("users"), py::arg("seed") = 0,
        "Random well-conditioned instance of the given size.");

    py::class_<MfInstance>(m, "MfInstance")
        .def(py::init<Eigen::MatrixXd, GaussianBelief, double>(), py::arg("user_factors"),
             py::arg("item_belief"), py::arg("noise_var"))
        .def_property_readonly("user_factors", &MfInstance::user_factors)
        .def_property_readonly("item_belief", &MfInstance::item_belief)
        .def_property_readonly("noise_var", &MfInstance::noise_var)
        .def_property_readonly("n_users", &MfInstance::n_users)
        .def_property_readonly("latent_dim", &MfInstance::latent_dim)
        .def("__repr__", [](const MfInstance& f) {
            return "MfInstance(users=" + std::to_string(f.n_users()) +
                   ", latent_dim=" + std::to_string(f.latent_dim()) + ")";
        });

    m.def("induced_rating_belief", &induced_rating_belief, py::arg("instance"),
          "Joint Gaussian over all users' ratings implied by the item belief.");
    m.def(
        "bayes_update",
        [](const MfInstance& instance, const std::vector<int>& observed,
           const Eigen::VectorXd& ratings) {
            return bayes_update(instance, IndexSet(observed), ratings);
        },
        py::arg("instance"), py::arg("observed"), py::arg("ratings"),
        "Item-belief update after observing the given users' ratings.");

    m.def(
        "two_stage_value",
        [](const CuInstance& instance, const std::vector<int>& stage1, int n, int samples,
           std::uint64_t seed) {
            ExactConfig cfg;
            cfg.mc_samples = samples;
            cfg.seed = seed;
            return two_stage_value(instance, IndexSet(stage1), n, cfg);
        },
        py::arg("instance"), py::arg("stage1"), py::arg("n"), py::arg("samples") = 100000,
        py::arg("seed") = 0,
        "Estimated expected total reward of committing to stage1 then picking the best n; "
        "returns (value, std_error).");
    m.def(
        "exact_policy",
        [](const CuInstance& instance, int m_, int n, int samples, std::uint64_t seed) {
            ExactConfig cfg;
            cfg.mc_samples = samples;
            cfg.seed = seed;
            return report_to_dict(exact_policy(instance, m_, n, cfg));
        },
        py::arg("instance"), py::arg("m"), py::arg("n"), py::arg("samples") = 100000,
        py::arg("seed") = 0, "Evaluate every first-stage subset; dict with per-subset values.");
    m.def(
        "analytic_three_user",
        [](const CuInstance& instance) { return report_to_dict(analytic_three_user(instance)); },
        py::arg("instance"), "Closed-form values for the three single-user first stages.");
    m.def(
        "three_user_thresholds",
        [](const CuInstance& instance) {
            const auto t = analytic_three_user_thresholds(instance);
            return std::vector<double>(t.begin(), t.end());
        },
        py::arg("instance"), "Observed rating at which the follow-up pick switches, per user.");

    m.def(
        "select_first_stage",
        [](const CuInstance& instance, int m_, int n, const std::string& policy, double lambda,
           int samples, std::uint64_t seed) {
            const StagePlan plan =
                select_stage1(instance, {m_, n}, make_policy_config(policy, lambda, samples, seed));
            return py::make_tuple(plan.stage1.indices(), plan.score);
        },
        py::arg("instance"), py::arg("m"), py::arg("n"), py::arg("policy"),
        py::arg("lambda_") = 1.0, py::arg("samples") = 2000, py::arg("seed") = 0,
        "First-stage pick of the named policy; returns (indices, score).");
    m.def(
        "select_first_stage",
        [](const MfInstance& instance, int m_, int n, const std::string& policy, double lambda,
           int samples, std::uint64_t seed) {
            const StagePlan plan =
                select_stage1(instance, {m_, n}, make_policy_config(policy, lambda, samples, seed));
            return py::make_tuple(plan.stage1.indices(), plan.score);
        },
        py::arg("instance"), py::arg("m"), py::arg("n"), py::arg("policy"),
        py::arg("lambda_") = 1.0, py::arg("samples") = 2000, py::arg("seed") = 0);

    m.def("policy_names", [] {
        return std::vector<std::string>{"greedy",   "al",       "ucb",      "cu-gee",
                                        "cu-gee-i", "mf-gee",   "mf-gee-i", "mf-gee-ii"};
    });
    m.def("default_lambda_grid", &default_lambda_grid);

    py::class_<ResultRow>(m, "ResultRow")
        .def_readonly("scenario", &ResultRow::scenario)
        .def_property_readonly("policy",
                               [](const ResultRow& r) { return std::string(to_string(r.policy)); })
        .def_readonly("budget", &ResultRow::budget)
        .def_readonly("m", &ResultRow::m)
        .def_readonly("lambda_", &ResultRow::lambda)
        .def_readonly("seed", &ResultRow::seed)
        .def_readonly("mean_total_reward", &ResultRow::mean_total_reward)
        .def_readonly("mean_hit_count", &ResultRow::mean_hit_count)
        .def_readonly("stderr_total_reward", &ResultRow::stderr_total_reward)
        .def_readonly("n_trials", &ResultRow::n_trials)
        .def("__repr__", [](const ResultRow& r) {
            std::ostringstream out;
            out << "ResultRow(" << r.scenario << ", " << to_string(r.policy) << ", N=" << r.budget
                << ", m=" << r.m << ", lambda=" << r.lambda
                << ", reward=" << r.mean_total_reward << ")";
            return out.str();
        });

    m.def(
        "run_synthetic",
        [](const std::vector<int>& budgets, const std::vector<std::string>& policies,
           const std::vector<int>& m_values, const std::vector<double>& lambdas, int samples,
           std::uint64_t seed, int threads, int latent_dim, int n_users, int n_items,
           int n_repeats, double noise_std) {
            SyntheticConfig cfg;
            cfg.latent_dim = latent_dim;
            cfg.n_users = n_users;
            cfg.n_items = n_items;
            cfg.n_repeats = n_repeats;
            cfg.noise_std = noise_std;
            cfg.seed = seed;
            const ExperimentGrid grid =
                make_grid(budgets, policies, m_values, lambdas, samples, seed, threads);
            const py::gil_scoped_release release;
            return run_synthetic_experiment(cfg, grid);
        },
        py::arg("budgets"), py::arg("policies"), py::arg("m_values") = std::vector<int>{},
        py::arg("lambdas") = std::vector<double>{}, py::arg("samples") = 2000,
        py::arg("seed") = 0, py::arg("threads") = 1, py::arg("latent_dim") = 5,
        py::arg("n_users") = 100, py::arg("n_items") = 50, py::arg("n_repeats") = 30,
        py::arg("noise_std") = 0.5,
        "Synthetic study over the grid; returns one row per (policy, N, m, lambda).");

    py::class_<RatingsTable>(m, "RatingsTable")
        .def("__len__", &RatingsTable::size)
        .def_property_readonly("user_ids", &RatingsTable::user_ids)
        .def_property_readonly("item_ids", &RatingsTable::item_ids)
        .def("__repr__", [](const RatingsTable& t) {
            return "RatingsTable(ratings=" + std::to_string(t.size()) + ")";
        });

    m.def("load_ratings", &load_movielens, py::arg("path"),
          "Parse a tab-separated user/item/rating/timestamp file.");
    m.def(
        "run_ratings_log",
        [](const RatingsTable& table, const std::vector<int>& budgets,
           const std::vector<std::string>& policies, const std::vector<int>& m_values,
           const std::vector<double>& lambdas, int samples, std::uint64_t seed, int threads,
           int n_test, int min_ratings) {
            const ExperimentGrid grid =
                make_grid(budgets, policies, m_values, lambdas, samples, seed, threads);
            const py::gil_scoped_release release;
            return run_movielens_experiment(table, grid, n_test, min_ratings);
        },
        py::arg("table"), py::arg("budgets"), py::arg("policies"),
        py::arg("m_values") = std::vector<int>{}, py::arg("lambdas") = std::vector<double>{},
        py::arg("samples") = 2000, py::arg("seed") = 0, py::arg("threads") = 1,
        py::arg("n_test") = 200, py::arg("min_ratings") = 50,
        "Cold-item study on a ratings log; returns one row per grid cell.");

    m.def("to_csv", &csv_string, py::arg("rows"), "Fixed-header CSV for a list of result rows.");
    m.def("best_rows", &best_rows, py::arg("rows"),
          "Best (m, lambda) cell per (scenario, policy, N).");
}
