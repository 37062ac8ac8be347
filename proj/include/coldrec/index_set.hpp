#pragma once

#include <algorithm>
#include <initializer_list>
#include <utility>
#include <vector>

#include "coldrec/errors.hpp"

namespace coldrec {

/// Ordered list of distinct coordinate positions into a belief or pool.
class IndexSet {
public:
    IndexSet() = default;

    explicit IndexSet(std::vector<int> indices) : idx_(std::move(indices)) {
        for (int i : idx_) {
            if (i < 0) throw DimensionMismatch("index set contains negative index");
        }
        auto sorted = idx_;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            throw DimensionMismatch("index set contains duplicate index");
    }

    IndexSet(std::initializer_list<int> indices) : IndexSet(std::vector<int>(indices)) {}

    /// All coordinates of [0, dim) not present in `taken`, in ascending order.
    static IndexSet complement_of(const IndexSet& taken, int dim) {
        std::vector<char> used(static_cast<std::size_t>(dim), 0);
        for (int i : taken.idx_) {
            if (i >= dim) throw DimensionMismatch("index set exceeds dimension");
            used[static_cast<std::size_t>(i)] = 1;
        }
        std::vector<int> out;
        out.reserve(static_cast<std::size_t>(dim) - taken.idx_.size());
        for (int i = 0; i < dim; ++i)
            if (!used[static_cast<std::size_t>(i)]) out.push_back(i);
        return IndexSet(std::move(out));
    }

    [[nodiscard]] const std::vector<int>& indices() const noexcept { return idx_; }
    [[nodiscard]] int size() const noexcept { return static_cast<int>(idx_.size()); }
    [[nodiscard]] bool empty() const noexcept { return idx_.empty(); }

    [[nodiscard]] bool contains(int i) const noexcept {
        return std::find(idx_.begin(), idx_.end(), i) != idx_.end();
    }

    /// Throws if any index falls outside [0, dim).
    void check_within(int dim) const {
        for (int i : idx_)
            if (i >= dim) throw DimensionMismatch("index " + std::to_string(i) +
                                                  " out of range for dimension " + std::to_string(dim));
    }

    /// Throws unless this set is contained in `pool`.
    void check_subset_of(const IndexSet& pool) const {
        for (int i : idx_)
            if (!pool.contains(i))
                throw IndexOutOfPool("index " + std::to_string(i) + " not in candidate pool");
    }

    [[nodiscard]] IndexSet sorted() const {
        auto s = idx_;
        std::sort(s.begin(), s.end());
        return IndexSet(std::move(s));
    }

    [[nodiscard]] IndexSet minus(const IndexSet& other) const {
        std::vector<int> out;
        out.reserve(idx_.size());
        for (int i : idx_)
            if (!other.contains(i)) out.push_back(i);
        return IndexSet(std::move(out));
    }

    bool operator==(const IndexSet& other) const noexcept { return idx_ == other.idx_; }
    bool operator!=(const IndexSet& other) const noexcept { return idx_ != other.idx_; }

private:
    std::vector<int> idx_;
};

}  // namespace coldrec
