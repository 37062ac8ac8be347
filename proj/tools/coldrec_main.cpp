#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "CLI11.hpp"
#include "coldrec/cu_model.hpp"
#include "coldrec/errors.hpp"
#include "coldrec/exact_solver.hpp"
#include "coldrec/harness.hpp"
#include "coldrec/movielens.hpp"
#include "coldrec/policies.hpp"
#include "coldrec/rng.hpp"

namespace {

using namespace coldrec;

constexpr int kExitUsage = 1;    // bad flags, unknown policy names
constexpr int kExitBlowup = 2;   // exact enumeration over the subset limit
constexpr int kExitParse = 3;    // malformed ratings data
constexpr int kExitSplit = 4;    // not enough qualifying cold-start items
constexpr int kExitIo = 5;       // unreadable input or unwritable output
constexpr int kExitDomain = 6;   // any other domain error

constexpr std::uint64_t kInstanceStreamTag = 0x125cULL;

struct IoFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct UsageFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string fmt(double v, const char* spec = "%.4f") {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

/// Write to the given path, or to stdout when the path is empty.
void emit(const std::string& path, const std::string& content) {
    if (path.empty()) {
        std::cout << content;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoFailure("cannot open output file: " + path);
    out << content;
    if (!out) throw IoFailure("failed writing output file: " + path);
}

// ---------------------------------------------------------------------------
// toy

std::string toy_report(std::uint64_t seed, int samples) {
    const CuInstance inst = cu_toy_instance();
    const GaussianBelief& prior = inst.prior();
    const int d = prior.dim();
    const CorrelationDecomposition decomp = correlation_form(prior);

    std::ostringstream out;
    out << "Worked cold-start instance: 3 candidate users, pick 1, observe the"
           " rating, pick 1 more.\n\n";
    out << "prior mean:  ";
    for (int i = 0; i < d; ++i) out << ' ' << fmt(prior.mean()(i));
    out << "\nprior std:   ";
    for (int i = 0; i < d; ++i) out << ' ' << fmt(decomp.stddev(i));
    out << "\n\ncorrelation matrix:\n";
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) out << ' ' << fmt(decomp.corr(i, j));
        out << '\n';
    }

    const std::array<double, 3> thresholds = analytic_three_user_thresholds(inst);
    out << "\nfollow-up switching points:\n";
    for (int u = 0; u < d; ++u) {
        const IndexSet rest = IndexSet::complement_of(IndexSet{u}, d);
        const GaussianBelief above = condition(
            prior, IndexSet{u}, Eigen::VectorXd::Constant(1, thresholds[u] + 1.0));
        const bool first_wins = above.mean()(0) >= above.mean()(1);
        const int hi = rest.indices()[first_wins ? 0 : 1];
        const int lo = rest.indices()[first_wins ? 1 : 0];
        out << "  observe user " << (u + 1) << ": pick user " << (hi + 1)
            << " if the rating exceeds " << fmt(thresholds[u]) << ", else user "
            << (lo + 1) << '\n';
    }

    const ValueReport analytic = analytic_three_user(inst);
    ExactConfig mc_cfg;
    mc_cfg.mc_samples = samples;
    mc_cfg.seed = seed;
    out << "\nexpected total reward per first-stage choice (closed form | "
        << samples << "-sample estimate):\n";
    for (int u = 0; u < d; ++u) {
        const auto closed = analytic.per_candidate.at({u});
        const auto est = two_stage_value(inst, IndexSet{u}, 1, mc_cfg);
        out << "  user " << (u + 1) << ": " << fmt(closed.value) << " | "
            << fmt(est.first) << " +- " << fmt(est.second) << '\n';
    }
    out << "\nbest first-stage choice: user " << (analytic.best_subset.indices()[0] + 1)
        << " (expected total reward " << fmt(analytic.best_value) << ")\n";
    return out.str();
}

// ---------------------------------------------------------------------------
// exact

std::string value_report_csv(const ValueReport& report) {
    std::ostringstream out;
    out << "stage1,value,std_error\n";
    for (const auto& [subset, cv] : report.per_candidate) {
        for (std::size_t i = 0; i < subset.size(); ++i) {
            if (i) out << ';';
            out << subset[i];
        }
        out << ',' << fmt(cv.value, "%.10g") << ',' << fmt(cv.std_error, "%.10g") << '\n';
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// sweeps

struct SweepFlags {
    std::vector<int> budgets;
    std::vector<int> m_values;
    std::vector<double> lambdas = default_lambda_grid();
    std::vector<std::string> policies;
    int samples = 2000;
    std::uint64_t seed = 0;
    int threads = 1;
    std::string out_path;
    std::string plot_path;
    std::string config_path;
};

std::vector<Policy> parse_policies(const std::vector<std::string>& names, bool factor_model) {
    std::vector<Policy> out;
    for (const std::string& name : names) {
        const auto p = policy_from_string(name);
        if (!p) throw UsageFailure("unknown policy: " + name);
        const bool ok = !is_gee(*p) || is_mf(*p) == factor_model;
        if (!ok)
            throw UsageFailure(std::string("policy ") + name + " does not apply to the " +
                               (factor_model ? "synthetic factor-model" : "ratings-log") +
                               " study");
        out.push_back(*p);
    }
    return out;
}

ExperimentGrid make_grid(const SweepFlags& flags, bool factor_model) {
    ExperimentGrid grid;
    grid.budgets = flags.budgets;
    grid.m_values = flags.m_values;
    grid.policies = parse_policies(flags.policies, factor_model);
    grid.lambdas = flags.lambdas;
    grid.samples_T = flags.samples;
    grid.seed = flags.seed;
    grid.threads = flags.threads;
    return grid;
}

/// Plot-ready curves: reward vs m per (policy, N) at the best lambda, and
/// reward vs N per policy at the best (m, lambda). Rows with no trials are
/// skipped, mirroring the summary selection.
std::string plot_data_csv(const std::vector<ResultRow>& rows) {
    std::map<std::tuple<int, int, int>, const ResultRow*> by_m;
    for (const ResultRow& row : rows) {
        if (row.n_trials == 0) continue;
        const auto key = std::make_tuple(static_cast<int>(row.policy), row.budget, row.m);
        auto [it, inserted] = by_m.try_emplace(key, &row);
        if (!inserted && row.mean_total_reward > it->second->mean_total_reward) it->second = &row;
    }
    std::ostringstream out;
    out << "curve,scenario,policy,N,m,lambda,mean_total_reward,stderr_total_reward\n";
    const auto print = [&out](const char* curve, const ResultRow& row) {
        out << curve << ',' << row.scenario << ',' << to_string(row.policy) << ',' << row.budget
            << ',' << row.m << ',' << fmt(row.lambda, "%.10g") << ','
            << fmt(row.mean_total_reward, "%.10g") << ','
            << fmt(row.stderr_total_reward, "%.10g") << '\n';
    };
    for (const auto& [key, row] : by_m) print("reward_vs_m", *row);
    for (const ResultRow& row : best_rows(rows)) print("reward_vs_budget", row);
    return out.str();
}

void emit_sweep(const SweepFlags& flags, const std::vector<ResultRow>& rows) {
    emit(flags.out_path, csv_string(rows));
    if (!flags.plot_path.empty()) emit(flags.plot_path, plot_data_csv(rows));
}

// ---------------------------------------------------------------------------
// wiring

struct ToyFlags {
    std::uint64_t seed = 0;
    int samples = 100000;
    int threads = 1;
    std::string out_path;
    std::string config_path;
};

struct ExactFlags {
    bool toy = false;
    int users = 0;
    int m = 1;
    int n = 1;
    int samples = 100000;
    std::uint64_t seed = 0;
    int threads = 1;
    std::string out_path;
    std::string config_path;
};

struct SynthFlags : SweepFlags {
    int repeats = 30;
    int items = 50;
    int users = 100;
    int latent = 5;
    double noise = 0.5;
};

struct MovielensFlags : SweepFlags {
    std::string data_path;
    int n_test = 200;
    int min_ratings = 50;
};

void add_shared(CLI::App* sub, std::uint64_t& seed, int& threads, std::string& out_path,
                std::string& config_path) {
    sub->add_option("--seed", seed, "base seed for every random stream");
    sub->add_option("--threads", threads, "worker thread cap (grid cells run in parallel)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--out", out_path, "write the report here instead of stdout");
    sub->add_option("--config", config_path,
                    "flat key=value file (keys are the long flag names; "
                    "command-line flags take precedence)");
}

std::string strip(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r");
    std::string out = s.substr(a, b - a + 1);
    if (out.size() >= 2 && out.front() == '"' && out.back() == '"')
        out = out.substr(1, out.size() - 2);
    return out;
}

/// Fill in options the command line left untouched from a key=value file.
/// Values may hold several comma-separated entries for the list options.
void apply_config(CLI::App* sub, const std::string& path) {
    if (path.empty()) return;
    std::ifstream in(path);
    if (!in) throw IoFailure("cannot open config file: " + path);
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (strip(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw UsageFailure("config line " + std::to_string(line_no) + " is not key=value");
        const std::string key = strip(line.substr(0, eq));
        if (key == "config") continue;
        CLI::Option* op = sub->get_option_no_throw("--" + key);
        if (op == nullptr)
            throw UsageFailure("unknown config key on line " + std::to_string(line_no) + ": " +
                               key);
        if (op->count() > 0) continue;  // given on the command line
        std::stringstream values(line.substr(eq + 1));
        std::string token;
        bool any = false;
        while (std::getline(values, token, ',')) {
            token = strip(token);
            if (token.empty()) continue;
            op->add_result(token);
            any = true;
        }
        if (any) op->run_callback();
    }
}

void add_sweep(CLI::App* sub, SweepFlags& flags, const char* budget_help) {
    sub->add_option("--budgets", flags.budgets, budget_help)->delimiter(',');
    sub->add_option("--m", flags.m_values,
                    "first-stage sizes to sweep (default: every split 1..N-1)")
        ->delimiter(',');
    sub->add_option("--lambdas", flags.lambdas, "exploration weights to sweep")->delimiter(',');
    sub->add_option("--policies", flags.policies, "policies to run")->delimiter(',');
    sub->add_option("--samples", flags.samples,
                    "candidate subsets scored per first-stage selection")
        ->check(CLI::PositiveNumber);
    sub->add_option("--plot-data", flags.plot_path,
                    "also write per-curve reward-vs-m and reward-vs-N rows here");
}

void run_toy(const ToyFlags& flags) { emit(flags.out_path, toy_report(flags.seed, flags.samples)); }

void run_exact(const ExactFlags& flags) {
    if (flags.toy == (flags.users > 0))
        throw UsageFailure("pass exactly one of --toy or --users");
    CuInstance inst = cu_toy_instance();
    if (flags.users > 0) {
        Rng rng(derive_seed(flags.seed, {kInstanceStreamTag}));
        inst = random_cu_instance(flags.users, rng);
    }
    ExactConfig cfg;
    cfg.mc_samples = flags.samples;
    cfg.seed = flags.seed;
    emit(flags.out_path, value_report_csv(exact_policy(inst, flags.m, flags.n, cfg)));
}

void run_synth(const SynthFlags& flags) {
    SyntheticConfig cfg;
    cfg.latent_dim = flags.latent;
    cfg.n_users = flags.users;
    cfg.n_items = flags.items;
    cfg.n_repeats = flags.repeats;
    cfg.noise_std = flags.noise;
    cfg.seed = flags.seed;
    emit_sweep(flags, run_synthetic_experiment(cfg, make_grid(flags, true)));
}

void run_movielens(const MovielensFlags& flags) {
    std::ifstream probe(flags.data_path);
    if (!probe) throw IoFailure("cannot open ratings file: " + flags.data_path);
    probe.close();
    const RatingsTable table = load_movielens(flags.data_path);
    emit_sweep(flags,
               run_movielens_experiment(table, make_grid(flags, false), flags.n_test,
                                        flags.min_ratings));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"coldrec: two-stage cold-start user selection experiments"};
    app.require_subcommand(1);
    app.footer(
        "Exit codes:\n"
        "  0  success\n"
        "  1  bad flags or unknown policy names\n"
        "  2  exact enumeration refused (subset count over the limit)\n"
        "  3  malformed ratings data\n"
        "  4  not enough qualifying cold-start items for the split\n"
        "  5  unreadable input or unwritable output file\n"
        "  6  other domain error (e.g. budget exceeds the candidate pool)\n"
        "\nUser ids in exact-solver CSV output are 0-based.");

    ToyFlags toy_flags;
    CLI::App* toy = app.add_subcommand(
        "toy", "print the worked 3-user example: instance, switching points, values");
    toy->add_option("--samples", toy_flags.samples, "estimate sample count")
        ->check(CLI::PositiveNumber);
    add_shared(toy, toy_flags.seed, toy_flags.threads, toy_flags.out_path,
               toy_flags.config_path);

    ExactFlags exact_flags;
    CLI::App* exact = app.add_subcommand(
        "exact", "evaluate every first-stage subset of an instance; CSV per subset");
    exact->add_flag("--toy", exact_flags.toy, "use the worked 3-user instance");
    exact->add_option("--users", exact_flags.users, "evaluate a random instance of this size")
        ->check(CLI::PositiveNumber);
    exact->add_option("--m", exact_flags.m, "first-stage size")->check(CLI::PositiveNumber);
    exact->add_option("--n", exact_flags.n, "second-stage size")
        ->check(CLI::NonNegativeNumber);
    exact->add_option("--samples", exact_flags.samples, "estimate sample count per subset")
        ->check(CLI::PositiveNumber);
    add_shared(exact, exact_flags.seed, exact_flags.threads, exact_flags.out_path,
               exact_flags.config_path);

    SynthFlags synth_flags;
    synth_flags.budgets = {10, 20, 30, 40};
    synth_flags.policies = {"greedy", "al", "ucb", "mf-gee"};
    CLI::App* synth = app.add_subcommand(
        "synth", "synthetic factor-model study; CSV row per (policy, N, m, lambda)");
    add_sweep(synth, synth_flags, "total budgets N to sweep");
    synth->add_option("--repeats", synth_flags.repeats, "independent generated worlds")
        ->check(CLI::PositiveNumber);
    synth->add_option("--items", synth_flags.items, "cold items per world")
        ->check(CLI::PositiveNumber);
    synth->add_option("--users", synth_flags.users, "candidate users per world")
        ->check(CLI::PositiveNumber);
    synth->add_option("--latent", synth_flags.latent, "latent factor dimension")
        ->check(CLI::PositiveNumber);
    synth->add_option("--noise", synth_flags.noise, "rating noise standard deviation")
        ->check(CLI::NonNegativeNumber);
    add_shared(synth, synth_flags.seed, synth_flags.threads, synth_flags.out_path,
               synth_flags.config_path);

    MovielensFlags ml_flags;
    ml_flags.budgets = {10, 20, 40, 80};
    ml_flags.policies = {"greedy", "ucb", "cu-gee-i"};
    CLI::App* ml = app.add_subcommand(
        "movielens", "cold-item study on a tab-separated ratings log");
    ml->add_option("--data", ml_flags.data_path, "ratings file (user, item, rating, timestamp)")
        ->required();
    add_sweep(ml, ml_flags, "total budgets N to sweep");
    ml->add_option("--n-test", ml_flags.n_test, "cold-start test items to split out")
        ->check(CLI::PositiveNumber);
    ml->add_option("--min-ratings", ml_flags.min_ratings,
                   "minimum ratings for an item to qualify as a test item")
        ->check(CLI::PositiveNumber);
    add_shared(ml, ml_flags.seed, ml_flags.threads, ml_flags.out_path,
               ml_flags.config_path);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (toy->parsed()) apply_config(toy, toy_flags.config_path);
        if (exact->parsed()) apply_config(exact, exact_flags.config_path);
        if (synth->parsed()) apply_config(synth, synth_flags.config_path);
        if (ml->parsed()) apply_config(ml, ml_flags.config_path);
    } catch (const CLI::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const IoFailure& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const UsageFailure& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        if (toy->parsed()) run_toy(toy_flags);
        if (exact->parsed()) run_exact(exact_flags);
        if (synth->parsed()) run_synth(synth_flags);
        if (ml->parsed()) run_movielens(ml_flags);
    } catch (const CombinatorialBlowup& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitBlowup;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitParse;
    } catch (const InsufficientItems& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitSplit;
    } catch (const IoFailure& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const UsageFailure& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitDomain;
    }
    return 0;
}
