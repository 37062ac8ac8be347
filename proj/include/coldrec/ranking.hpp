#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <vector>

namespace coldrec {

/// Positions of the n largest values among `candidates`; ties prefer the
/// lowest index. Result is ascending. Shared by the exact stage-2 rule and
/// the policy stage-2 selection so both pick identical subsets.
///
/// Runs in O(|candidates|): an nth_element pass finds the cutoff value,
/// then one ascending sweep collects everything above it and fills the
/// remainder with the lowest-indexed candidates sitting exactly on it.
inline std::vector<int> top_n_indices(const Eigen::VectorXd& values,
                                      const std::vector<int>& candidates, int n) {
    std::vector<int> chosen;
    if (n <= 0) return chosen;
    chosen.reserve(static_cast<std::size_t>(n));
    if (static_cast<std::size_t>(n) >= candidates.size()) {
        chosen = candidates;
        std::sort(chosen.begin(), chosen.end());
        return chosen;
    }

    std::vector<double> scratch(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) scratch[i] = values(candidates[i]);
    std::nth_element(scratch.begin(), scratch.begin() + (n - 1), scratch.end(),
                     std::greater<double>());
    const double cutoff = scratch[static_cast<std::size_t>(n - 1)];

    std::vector<int> on_cutoff;
    for (int c : candidates) {
        const double v = values(c);
        if (v > cutoff)
            chosen.push_back(c);
        else if (v == cutoff)
            on_cutoff.push_back(c);
    }
    const auto need = static_cast<std::size_t>(n) - chosen.size();
    std::sort(on_cutoff.begin(), on_cutoff.end());
    chosen.insert(chosen.end(), on_cutoff.begin(), on_cutoff.begin() + static_cast<std::ptrdiff_t>(need));
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

/// Sum of `values` over `chosen` in ascending-index order. Keeping one
/// canonical order makes equal selections sum to bit-identical totals.
inline double ascending_sum(const Eigen::VectorXd& values, const std::vector<int>& chosen) {
    double total = 0.0;
    for (int i : chosen) total += values(i);
    return total;
}

}  // namespace coldrec
