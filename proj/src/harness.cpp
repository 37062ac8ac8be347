#include "coldrec/harness.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>
#include <tuple>
#include <utility>

#include "coldrec/gaussian.hpp"
#include "coldrec/ranking.hpp"
#include "coldrec/rng.hpp"

namespace coldrec {
namespace {

constexpr std::uint64_t kWorldStreamTag = 0xDA7AULL;  // synthetic generation
constexpr std::uint64_t kCellStreamTag = 0xCE11ULL;   // per-cell policy sampling

void check_plan(const AllocationPlan& plan, int pool_size) {
    if (plan.m < 1) throw BudgetExceedsPool("first stage must select at least one user");
    if (plan.n < 0) throw DimensionMismatch("second-stage budget must be non-negative");
    if (plan.m + plan.n > pool_size)
        throw BudgetExceedsPool("budget " + std::to_string(plan.m + plan.n) +
                                " exceeds candidate pool of " + std::to_string(pool_size));
}

TrialResult score_stages(const AllocationPlan& plan, const PolicyConfig& cfg,
                         const Eigen::VectorXd& truth, IndexSet stage1, IndexSet stage2) {
    TrialResult out;
    out.policy = cfg.policy;
    out.m = plan.m;
    out.n = plan.n;
    out.lambda = cfg.lambda;
    out.seed = cfg.seed;
    out.stage1_reward = ascending_sum(truth, stage1.indices());
    out.stage2_reward = ascending_sum(truth, stage2.indices());
    out.total_reward = out.stage1_reward + out.stage2_reward;
    int hits = 0;
    for (int i : stage1.indices()) hits += truth(i) >= 4.0 ? 1 : 0;
    for (int i : stage2.indices()) hits += truth(i) >= 4.0 ? 1 : 0;
    out.hit_count = hits;
    out.stage1 = std::move(stage1);
    out.stage2 = std::move(stage2);
    return out;
}

}  // namespace

std::vector<SyntheticWorld> generate_synthetic(const SyntheticConfig& cfg) {
    if (cfg.latent_dim < 1 || cfg.n_users < 1 || cfg.n_items < 1 || cfg.n_repeats < 1)
        throw Error("synthetic config dimensions must be positive");
    if (cfg.noise_std < 0.0) throw Error("noise std must be non-negative");

    std::vector<SyntheticWorld> worlds;
    worlds.reserve(static_cast<std::size_t>(cfg.n_repeats));
    const double prior_mean_std = std::sqrt(0.1);
    for (int r = 0; r < cfg.n_repeats; ++r) {
        Rng rng(derive_seed(cfg.seed, {kWorldStreamTag, static_cast<std::uint64_t>(r)}));

        Eigen::VectorXd nu(cfg.latent_dim);
        for (int k = 0; k < cfg.latent_dim; ++k) nu(k) = prior_mean_std * rng.normal();
        Eigen::VectorXd psi(cfg.latent_dim);
        for (int k = 0; k < cfg.latent_dim; ++k) psi(k) = std::abs(rng.normal());

        Eigen::MatrixXd items(cfg.latent_dim, cfg.n_items);
        for (int j = 0; j < cfg.n_items; ++j)
            for (int k = 0; k < cfg.latent_dim; ++k) items(k, j) = nu(k) + psi(k) * rng.normal();

        Eigen::MatrixXd users(cfg.n_users, cfg.latent_dim);
        for (int i = 0; i < cfg.n_users; ++i)
            for (int k = 0; k < cfg.latent_dim; ++k) users(i, k) = rng.normal();

        Eigen::MatrixXd truth = users * items;
        for (int i = 0; i < cfg.n_users; ++i)
            for (int j = 0; j < cfg.n_items; ++j) truth(i, j) += cfg.noise_std * rng.normal();

        Eigen::MatrixXd psi_cov = psi.array().square().matrix().asDiagonal();
        GaussianBelief item_belief(nu, std::move(psi_cov));
        // a zero noise level still needs a proper likelihood downstream
        const double noise_var = std::max(cfg.noise_std * cfg.noise_std, 1e-12);
        worlds.push_back({MfInstance(std::move(users), std::move(item_belief), noise_var),
                          std::move(truth), std::move(items)});
    }
    return worlds;
}

StagePlan select_stage1(const CuInstance& instance, const AllocationPlan& plan,
                        const PolicyConfig& cfg) {
    switch (cfg.policy) {
        case Policy::greedy: return greedy_select(instance, plan.m, cfg);
        case Policy::al: return al_select(instance, plan.m, cfg);
        case Policy::ucb: return ucb_select(instance, plan.m, cfg);
        default: return gee_select(instance, plan.m, plan.n, cfg);
    }
}

StagePlan select_stage1(const MfInstance& instance, const AllocationPlan& plan,
                        const PolicyConfig& cfg) {
    switch (cfg.policy) {
        case Policy::greedy: return greedy_select(instance, plan.m, cfg);
        case Policy::al: return al_select(instance, plan.m, cfg);
        case Policy::ucb: return ucb_select(instance, plan.m, cfg);
        default: return gee_select(instance, plan.m, plan.n, cfg);
    }
}

TrialResult run_trial(const MfInstance& prior, const Eigen::VectorXd& truth,
                      const AllocationPlan& plan, const PolicyConfig& cfg,
                      const IndexSet& stage1) {
    if (truth.size() != prior.n_users())
        throw DimensionMismatch("truth vector length does not match the user count");
    check_plan(plan, prior.n_users());
    stage1.check_within(prior.n_users());
    if (stage1.size() != plan.m)
        throw DimensionMismatch("stage-1 set size does not match the plan");

    const Eigen::VectorXd observed = sub_vector(truth, stage1);
    const MfInstance post = bayes_update(prior, stage1, observed);
    const Eigen::VectorXd post_mean = prior.user_factors() * post.item_belief().mean();
    const IndexSet rest = IndexSet::complement_of(stage1, prior.n_users());
    IndexSet stage2(top_n_indices(post_mean, rest.indices(), plan.n));
    return score_stages(plan, cfg, truth, stage1, std::move(stage2));
}

TrialResult run_trial(const MfInstance& prior, const Eigen::VectorXd& truth,
                      const AllocationPlan& plan, const PolicyConfig& cfg) {
    check_plan(plan, prior.n_users());
    const StagePlan picked = select_stage1(prior, plan, cfg);
    return run_trial(prior, truth, plan, cfg, picked.stage1);
}

TrialResult run_trial(const CuInstance& prior, const Eigen::VectorXd& truth,
                      const AllocationPlan& plan, const PolicyConfig& cfg, const IndexSet& stage1,
                      UpdateRule rule) {
    const GaussianBelief& belief = prior.prior();
    if (truth.size() != belief.dim())
        throw DimensionMismatch("truth vector length does not match the belief dimension");
    check_plan(plan, prior.pool().size());
    stage1.check_subset_of(prior.pool());
    if (stage1.size() != plan.m)
        throw DimensionMismatch("stage-1 set size does not match the plan");

    const Eigen::VectorXd observed = sub_vector(truth, stage1);
    const IndexSet rest = IndexSet::complement_of(stage1, belief.dim());
    Eigen::VectorXd rest_mean;
    if (rule == UpdateRule::conditioning) {
        const Eigen::MatrixXd gain = posterior_gain(belief, stage1);
        rest_mean = sub_vector(belief.mean(), rest) +
                    gain * (observed - sub_vector(belief.mean(), stage1));
    } else {
        const CorrelationDecomposition dec = correlation_form(belief);
        rest_mean = update_user_based_cf(belief.mean(), dec.corr, stage1, observed);
    }
    Eigen::VectorXd post_mean = belief.mean();
    const auto& rest_idx = rest.indices();
    for (std::size_t i = 0; i < rest_idx.size(); ++i)
        post_mean(rest_idx[i]) = rest_mean(static_cast<Eigen::Index>(i));

    const IndexSet remaining = prior.pool().minus(stage1);
    IndexSet stage2(top_n_indices(post_mean, remaining.indices(), plan.n));
    return score_stages(plan, cfg, truth, stage1, std::move(stage2));
}

TrialResult run_trial(const CuInstance& prior, const Eigen::VectorXd& truth,
                      const AllocationPlan& plan, const PolicyConfig& cfg, UpdateRule rule) {
    check_plan(plan, prior.pool().size());
    const StagePlan picked = select_stage1(prior, plan, cfg);
    return run_trial(prior, truth, plan, cfg, picked.stage1, rule);
}

std::vector<double> default_lambda_grid() { return {0.0, 0.1, 0.25, 0.5, 1.0, 2.0, 4.0}; }

std::uint64_t trial_stream_seed(std::uint64_t base, Policy policy, int budget, int m,
                                double lambda, std::uint64_t unit) {
    return derive_seed(base, {kCellStreamTag, static_cast<std::uint64_t>(policy),
                              static_cast<std::uint64_t>(budget), static_cast<std::uint64_t>(m),
                              std::bit_cast<std::uint64_t>(lambda), unit});
}

namespace {

struct Cell {
    Policy policy = Policy::greedy;
    int budget = 0;
    int m = 0;
    double lambda = 0.0;
};

bool uses_lambda(Policy p) { return p == Policy::ucb || is_gee(p); }

template <typename T>
void sort_unique(std::vector<T>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
}

/// Canonical cell list: sorted by (policy, N, m, lambda) and deduplicated,
/// so the output never depends on the order the grid lists were written in.
std::vector<Cell> enumerate_cells(const ExperimentGrid& grid, int pool_cap) {
    if (grid.budgets.empty()) throw Error("experiment needs at least one budget");
    if (grid.policies.empty()) throw Error("experiment needs at least one policy");
    if (grid.lambdas.empty()) throw Error("lambda grid must not be empty");
    if (grid.samples_T < 1) throw Error("sample count must be positive");

    auto budgets = grid.budgets;
    sort_unique(budgets);
    if (budgets.front() < 1) throw Error("budgets must be positive");
    if (budgets.back() > pool_cap)
        throw BudgetExceedsPool("budget " + std::to_string(budgets.back()) +
                                " exceeds candidate pool of " + std::to_string(pool_cap));
    auto lambdas = grid.lambdas;
    sort_unique(lambdas);
    if (lambdas.front() < 0.0) throw Error("bonus weight must be non-negative");
    auto m_values = grid.m_values;
    sort_unique(m_values);
    if (!m_values.empty() && m_values.front() < 1) throw Error("stage-1 sizes must be positive");
    std::vector<Policy> policies = grid.policies;
    std::sort(policies.begin(), policies.end(),
              [](Policy a, Policy b) { return static_cast<int>(a) < static_cast<int>(b); });
    policies.erase(std::unique(policies.begin(), policies.end()), policies.end());

    const std::vector<double> no_lambda{0.0};
    std::vector<Cell> cells;
    for (Policy p : policies) {
        for (int budget : budgets) {
            std::vector<int> ms;
            if (m_values.empty()) {
                for (int m = 1; m < budget; ++m) ms.push_back(m);
                if (ms.empty()) ms.push_back(budget);  // N = 1 still probes once
            } else {
                for (int m : m_values)
                    if (m <= budget) ms.push_back(m);
            }
            for (int m : ms)
                for (double lambda : uses_lambda(p) ? lambdas : no_lambda)
                    cells.push_back({p, budget, m, lambda});
        }
    }
    return cells;
}

/// Run one unit of work per cell index, optionally across threads. Results
/// must be written to preassigned slots so thread count cannot reorder them.
template <typename Work>
void run_cells(int threads, std::size_t n, const Work& work) {
    const int workers = std::max(1, std::min<int>(threads, static_cast<int>(n)));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) work(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::mutex err_mutex;
    std::exception_ptr first_error;
    auto body = [&] {
        while (!failed.load()) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                work(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!first_error) first_error = std::current_exception();
                failed.store(true);
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers - 1));
    for (int t = 1; t < workers; ++t) pool.emplace_back(body);
    body();
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

struct CellAccumulator {
    double sum = 0.0;
    double sumsq = 0.0;
    double hits = 0.0;
    long count = 0;

    void add(const TrialResult& t) {
        sum += t.total_reward;
        sumsq += t.total_reward * t.total_reward;
        hits += t.hit_count;
        ++count;
    }
};

ResultRow make_row(const char* scenario, const Cell& cell, std::uint64_t seed,
                   const CellAccumulator& acc) {
    ResultRow row;
    row.scenario = scenario;
    row.policy = cell.policy;
    row.budget = cell.budget;
    row.m = cell.m;
    row.lambda = cell.lambda;
    row.seed = seed;
    row.n_trials = acc.count;
    if (acc.count > 0) {
        row.mean_total_reward = acc.sum / static_cast<double>(acc.count);
        row.mean_hit_count = acc.hits / static_cast<double>(acc.count);
    }
    if (acc.count > 1) {
        const double mean = row.mean_total_reward;
        const double var = std::max(0.0, (acc.sumsq - static_cast<double>(acc.count) * mean * mean) /
                                             static_cast<double>(acc.count - 1));
        row.stderr_total_reward = std::sqrt(var / static_cast<double>(acc.count));
    }
    return row;
}

PolicyConfig cell_config(const Cell& cell, const ExperimentGrid& grid, std::uint64_t unit) {
    PolicyConfig cfg;
    cfg.policy = cell.policy;
    cfg.lambda = cell.lambda;
    cfg.samples_T = grid.samples_T;
    cfg.seed = trial_stream_seed(grid.seed, cell.policy, cell.budget, cell.m, cell.lambda, unit);
    return cfg;
}

}  // namespace

std::vector<ResultRow> run_synthetic_experiment(const SyntheticConfig& cfg,
                                                const ExperimentGrid& grid) {
    const std::vector<Cell> cells = enumerate_cells(grid, cfg.n_users);
    const std::vector<SyntheticWorld> worlds = generate_synthetic(cfg);

    std::vector<ResultRow> rows(cells.size());
    run_cells(grid.threads, cells.size(), [&](std::size_t ci) {
        const Cell& cell = cells[ci];
        const AllocationPlan plan{cell.m, cell.budget - cell.m};
        CellAccumulator acc;
        for (int r = 0; r < cfg.n_repeats; ++r) {
            const PolicyConfig pcfg = cell_config(cell, grid, static_cast<std::uint64_t>(r));
            // one instance per repeat, so one plan covers all its items
            const StagePlan picked = select_stage1(worlds[static_cast<std::size_t>(r)].prior,
                                                   plan, pcfg);
            const SyntheticWorld& world = worlds[static_cast<std::size_t>(r)];
            for (int j = 0; j < cfg.n_items; ++j)
                acc.add(run_trial(world.prior, world.truth.col(j), plan, pcfg, picked.stage1));
        }
        rows[ci] = make_row("synth", cell, grid.seed, acc);
    });
    return rows;
}

std::vector<ResultRow> run_movielens_experiment(const RatingsTable& table,
                                                const ExperimentGrid& grid, int n_test,
                                                int min_ratings) {
    const std::vector<Cell> cells = enumerate_cells(grid, std::numeric_limits<int>::max());
    const ColdSplit split = split_cold_items(table, n_test, min_ratings, grid.seed);

    std::map<int, std::vector<std::pair<int, int>>> by_item;  // item -> (user, rating)
    for (const Rating& r : split.held_out.rows()) by_item[r.item].push_back({r.user, r.rating});

    struct ItemCase {
        int item_id;
        CuInstance instance;
        Eigen::VectorXd truth;
    };
    std::vector<ItemCase> items;
    items.reserve(split.test_items.size());
    for (int item : split.test_items) {
        auto& pairs = by_item[item];
        std::sort(pairs.begin(), pairs.end());
        std::vector<int> raters;
        raters.reserve(pairs.size());
        Eigen::VectorXd truth(static_cast<Eigen::Index>(pairs.size()));
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            raters.push_back(pairs[i].first);
            truth(static_cast<Eigen::Index>(i)) = pairs[i].second;
        }
        const CuPrior prior = train_cu_prior(split.train, raters);
        Eigen::MatrixXd cov = prior.stddev.asDiagonal() * prior.corr * prior.stddev.asDiagonal();
        cov = ((cov + cov.transpose()) / 2.0).eval();
        items.push_back({item, CuInstance(GaussianBelief(prior.mean, std::move(cov))),
                         std::move(truth)});
    }

    std::vector<ResultRow> rows(cells.size());
    run_cells(grid.threads, cells.size(), [&](std::size_t ci) {
        const Cell& cell = cells[ci];
        const AllocationPlan plan{cell.m, cell.budget - cell.m};
        CellAccumulator acc;
        for (const ItemCase& ic : items) {
            if (ic.instance.pool().size() < cell.budget) continue;  // item can't fund N picks
            const PolicyConfig pcfg =
                cell_config(cell, grid, static_cast<std::uint64_t>(ic.item_id));
            acc.add(run_trial(ic.instance, ic.truth, plan, pcfg, UpdateRule::user_based_cf));
        }
        rows[ci] = make_row("movielens", cell, grid.seed, acc);
    });
    return rows;
}

namespace {
std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}
}  // namespace

void write_csv(const std::vector<ResultRow>& rows, std::ostream& out) {
    out << "scenario,policy,N,m,lambda,seed,mean_total_reward,mean_hit_count,"
           "stderr_total_reward,n_trials\n";
    for (const ResultRow& r : rows) {
        out << r.scenario << ',' << to_string(r.policy) << ',' << r.budget << ',' << r.m << ','
            << format_double(r.lambda) << ',' << r.seed << ','
            << format_double(r.mean_total_reward) << ',' << format_double(r.mean_hit_count) << ','
            << format_double(r.stderr_total_reward) << ',' << r.n_trials << '\n';
    }
}

std::string csv_string(const std::vector<ResultRow>& rows) {
    std::ostringstream out;
    write_csv(rows, out);
    return out.str();
}

std::vector<ResultRow> best_rows(const std::vector<ResultRow>& rows) {
    std::map<std::tuple<std::string, int, int>, const ResultRow*> best;
    for (const ResultRow& r : rows) {
        if (r.n_trials == 0) continue;  // an empty cell carries no evidence
        const auto key = std::make_tuple(r.scenario, static_cast<int>(r.policy), r.budget);
        const auto it = best.find(key);
        if (it == best.end()) {
            best.emplace(key, &r);
            continue;
        }
        const ResultRow& cur = *it->second;
        const bool better =
            r.mean_total_reward > cur.mean_total_reward ||
            (r.mean_total_reward == cur.mean_total_reward &&
             (r.m < cur.m || (r.m == cur.m && r.lambda < cur.lambda)));
        if (better) it->second = &r;
    }
    std::vector<ResultRow> out;
    out.reserve(best.size());
    for (const auto& [key, row] : best) out.push_back(*row);
    return out;
}

}  // namespace coldrec
