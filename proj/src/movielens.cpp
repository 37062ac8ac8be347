#include "coldrec/movielens.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "coldrec/errors.hpp"
#include "coldrec/gaussian.hpp"
#include "coldrec/rng.hpp"

namespace coldrec {

namespace {

constexpr std::uint64_t kSplitStreamTag = 0x5B117ULL;
constexpr double kStdFloor = 0.1;
constexpr double kShrinkage = 10.0;
constexpr double kEigenFloor = 1e-8;

std::uint64_t pair_key(int user, int item) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(user)) << 32) |
           static_cast<std::uint32_t>(item);
}

void check_rows(const std::vector<Rating>& rows) {
    std::unordered_set<std::uint64_t> seen;
    seen.reserve(rows.size() * 2);
    for (const Rating& r : rows) {
        if (r.rating < 1 || r.rating > 5) {
            std::ostringstream msg;
            msg << "rating " << r.rating << " for user " << r.user << ", item " << r.item
                << " is outside 1..5";
            throw Error(msg.str());
        }
        if (!seen.insert(pair_key(r.user, r.item)).second) {
            std::ostringstream msg;
            msg << "user " << r.user << " rated item " << r.item << " more than once";
            throw DuplicatePair(msg.str());
        }
    }
}

long long parse_int_field(const std::string& text, std::size_t& pos, int line, bool last) {
    const std::size_t end = last ? text.size() : text.find('\t', pos);
    if (!last && end == std::string::npos)
        throw ParseError("expected 4 tab-separated fields", line);
    long long value = 0;
    const char* first = text.data() + pos;
    const char* stop = text.data() + end;
    const auto [ptr, ec] = std::from_chars(first, stop, value);
    if (ec != std::errc() || ptr != stop || first == stop)
        throw ParseError("field is not an integer", line);
    pos = last ? end : end + 1;
    return value;
}

}  // namespace

RatingsTable::RatingsTable(std::vector<Rating> rows) : rows_(std::move(rows)) {
    check_rows(rows_);
}

std::vector<int> RatingsTable::user_ids() const {
    std::set<int> ids;
    for (const Rating& r : rows_) ids.insert(r.user);
    return {ids.begin(), ids.end()};
}

std::vector<int> RatingsTable::item_ids() const {
    std::set<int> ids;
    for (const Rating& r : rows_) ids.insert(r.item);
    return {ids.begin(), ids.end()};
}

RatingsTable load_movielens(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);

    std::vector<Rating> rows;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::size_t pos = 0;
        Rating r;
        r.user = static_cast<int>(parse_int_field(line, pos, line_no, false));
        r.item = static_cast<int>(parse_int_field(line, pos, line_no, false));
        r.rating = static_cast<int>(parse_int_field(line, pos, line_no, false));
        r.timestamp = parse_int_field(line, pos, line_no, true);
        if (r.rating < 1 || r.rating > 5) throw ParseError("rating outside 1..5", line_no);
        rows.push_back(r);
    }
    return RatingsTable(std::move(rows));
}

ColdSplit split_cold_items(const RatingsTable& table, int n_test, int min_ratings,
                           std::uint64_t seed) {
    if (n_test < 1) throw DimensionMismatch("need a positive number of test items");

    std::map<int, int> counts;
    for (const Rating& r : table.rows()) ++counts[r.item];
    std::vector<int> qualifying;
    for (const auto& [item, count] : counts)
        if (count >= min_ratings) qualifying.push_back(item);

    if (static_cast<int>(qualifying.size()) < n_test) {
        std::ostringstream msg;
        msg << "only " << qualifying.size() << " items have at least " << min_ratings
            << " ratings; need " << n_test;
        throw InsufficientItems(msg.str());
    }

    Rng rng(derive_seed(seed, {kSplitStreamTag}));
    const std::vector<int> chosen = rng.sample_subset(qualifying, n_test);
    const std::unordered_set<int> test_set(chosen.begin(), chosen.end());

    std::vector<Rating> train_rows, test_rows;
    train_rows.reserve(table.size());
    for (const Rating& r : table.rows()) {
        if (test_set.count(r.item))
            test_rows.push_back(r);
        else
            train_rows.push_back(r);
    }

    ColdSplit split;
    split.train = RatingsTable(std::move(train_rows));
    split.test_items = chosen;
    split.held_out = RatingsTable(std::move(test_rows));
    return split;
}

CuPrior train_cu_prior(const RatingsTable& train, const std::vector<int>& users) {
    const int d = static_cast<int>(users.size());
    if (d < 1) throw DimensionMismatch("need at least one user");
    std::unordered_map<int, int> pos_of;
    pos_of.reserve(users.size() * 2);
    for (int i = 0; i < d; ++i) {
        if (!pos_of.emplace(users[static_cast<std::size_t>(i)], i).second)
            throw DimensionMismatch("duplicate user id in the prior user list");
    }

    // one pass: per-user sums, plus ratings grouped by item restricted to
    // the requested users, for the pairwise accumulation below
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(d);
    Eigen::VectorXd sumsq = Eigen::VectorXd::Zero(d);
    Eigen::VectorXi count = Eigen::VectorXi::Zero(d);
    std::map<int, std::vector<std::pair<int, double>>> by_item;
    for (const Rating& r : train.rows()) {
        const auto it = pos_of.find(r.user);
        if (it == pos_of.end()) continue;
        const int i = it->second;
        const double x = r.rating;
        sum(i) += x;
        sumsq(i) += x * x;
        count(i) += 1;
        by_item[r.item].emplace_back(i, x);
    }

    CuPrior prior;
    prior.mean.resize(d);
    prior.stddev.resize(d);
    for (int i = 0; i < d; ++i) {
        if (count(i) == 0) {
            std::ostringstream msg;
            msg << "user " << users[static_cast<std::size_t>(i)] << " has no training ratings";
            throw EmptyUserHistory(msg.str());
        }
        const double n = count(i);
        prior.mean(i) = sum(i) / n;
        double var = 0.0;
        if (count(i) > 1) var = std::max(0.0, (sumsq(i) - n * prior.mean(i) * prior.mean(i)) / (n - 1.0));
        prior.stddev(i) = std::max(kStdFloor, std::sqrt(var));
    }

    // pairwise co-rating sums over the upper triangle, accumulated item by
    // item so each training row is touched once
    const std::size_t n_pairs = static_cast<std::size_t>(d) * (d - 1) / 2;
    std::vector<int> co_n(n_pairs, 0);
    std::vector<double> co_x(n_pairs, 0.0), co_y(n_pairs, 0.0), co_xy(n_pairs, 0.0),
        co_xx(n_pairs, 0.0), co_yy(n_pairs, 0.0);
    auto tri = [d](int i, int j) {  // requires i < j
        return static_cast<std::size_t>(i) * static_cast<std::size_t>(d) -
               static_cast<std::size_t>(i) * (i + 1) / 2 + static_cast<std::size_t>(j - i - 1);
    };
    for (auto& [item, raters] : by_item) {
        std::sort(raters.begin(), raters.end());
        for (std::size_t a = 0; a < raters.size(); ++a) {
            for (std::size_t b = a + 1; b < raters.size(); ++b) {
                const std::size_t k = tri(raters[a].first, raters[b].first);
                const double x = raters[a].second, y = raters[b].second;
                co_n[k] += 1;
                co_x[k] += x;
                co_y[k] += y;
                co_xy[k] += x * y;
                co_xx[k] += x * x;
                co_yy[k] += y * y;
            }
        }
    }

    prior.corr = Eigen::MatrixXd::Identity(d, d);
    for (int i = 0; i < d; ++i) {
        for (int j = i + 1; j < d; ++j) {
            const std::size_t k = tri(i, j);
            const double n = co_n[k];
            double rho = 0.0;
            if (co_n[k] >= 2) {
                const double cov = co_xy[k] - co_x[k] * co_y[k] / n;
                const double vx = co_xx[k] - co_x[k] * co_x[k] / n;
                const double vy = co_yy[k] - co_y[k] * co_y[k] / n;
                if (vx > 0.0 && vy > 0.0) {
                    rho = cov / std::sqrt(vx * vy);
                    rho = std::clamp(rho, -1.0, 1.0);
                    rho *= n / (n + kShrinkage);
                }
            }
            prior.corr(i, j) = prior.corr(j, i) = rho;
        }
    }

    // nudge to positive semidefinite: small jitter if close, otherwise clip
    // the spectrum and restore the unit diagonal
    try {
        double jitter = 0.0;
        cholesky_psd(prior.corr, Tolerances{}, &jitter);
        if (jitter > 0.0) prior.corr.diagonal().array() += jitter;
    } catch (const SingularBlock&) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(prior.corr);
        const Eigen::VectorXd clipped = eig.eigenvalues().cwiseMax(kEigenFloor);
        prior.corr = eig.eigenvectors() * clipped.asDiagonal() * eig.eigenvectors().transpose();
        const Eigen::VectorXd scale = prior.corr.diagonal().cwiseSqrt();
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) prior.corr(i, j) /= scale(i) * scale(j);
        prior.corr = 0.5 * (prior.corr + prior.corr.transpose()).eval();
    }
    return prior;
}

}  // namespace coldrec
