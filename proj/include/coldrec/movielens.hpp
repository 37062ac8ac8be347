#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace coldrec {

struct Rating {
    int user = 0;
    int item = 0;
    int rating = 0;  // integer 1..5
    std::int64_t timestamp = 0;
};

/// Flat rating log. Construction rejects duplicate (user, item) pairs and
/// ratings outside 1..5.
class RatingsTable {
public:
    RatingsTable() = default;
    explicit RatingsTable(std::vector<Rating> rows);

    [[nodiscard]] const std::vector<Rating>& rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t size() const noexcept { return rows_.size(); }
    [[nodiscard]] std::vector<int> user_ids() const;  // distinct, ascending
    [[nodiscard]] std::vector<int> item_ids() const;  // distinct, ascending

private:
    std::vector<Rating> rows_;
};

/// Parse a tab-separated ratings file: user, item, rating, timestamp per
/// line, integer fields, no header. Raises ParseError naming the offending
/// line, or DuplicatePair when a (user, item) pair repeats.
RatingsTable load_movielens(const std::string& path);

struct ColdSplit {
    RatingsTable train;
    std::vector<int> test_items;  // ascending
    RatingsTable held_out;        // the removed rows: ground truth per test item
};

/// Randomly pick n_test items having at least min_ratings ratings, remove
/// their rows from the table. Each test item's raters (found in held_out)
/// form that item's candidate pool downstream.
ColdSplit split_cold_items(const RatingsTable& table, int n_test = 200, int min_ratings = 50,
                           std::uint64_t seed = 0);

struct CuPrior {
    Eigen::VectorXd mean;    // per-user mean rating
    Eigen::VectorXd stddev;  // per-user rating stddev, floored at 0.1
    Eigen::MatrixXd corr;    // shrunken co-rating correlation, unit diagonal
};

/// Estimate the correlated-user prior for the given users (coordinate i of
/// the output belongs to users[i]) from their training ratings. Pairwise
/// correlation is Pearson over co-rated items with that subset's own means,
/// zero below 2 co-rated items, shrunk by n_co/(n_co + 10), and the matrix
/// is nudged to positive semidefinite. Users without any training rating
/// raise EmptyUserHistory.
CuPrior train_cu_prior(const RatingsTable& train, const std::vector<int>& users);

}  // namespace coldrec
