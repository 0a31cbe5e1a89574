#pragma once

#include "marom/fields.hpp"

#include <cstdint>
#include <vector>

namespace marom {

struct LhsConfig {
    Index n = 1;
    std::vector<Bounds> bounds;
    std::uint64_t seed = 0;
    int optimize_iters = 1000;
    std::vector<std::string> names;  // optional labels for the returned design
};

/// Per-run record of the maximin optimisation, for diagnostics and tests.
struct LhsTrace {
    double initial_min_distance = 0.0;
    double final_min_distance = 0.0;
    int accepted_swaps = 0;
    std::vector<double> accepted_scores;  // min distance after each accepted swap
};

/// Latin hypercube with points at cell midpoints, improved by random
/// within-column swaps that never reduce the minimum pairwise distance
/// (measured in unit-cube coordinates). Deterministic in the seed.
DesignMatrix lhs_maximin(const LhsConfig& config, LhsTrace* trace = nullptr);

/// Same design on the unit cube, as an n x b matrix of bin indices.
std::vector<std::vector<Index>> lhs_bins(Index n, Index b, std::uint64_t seed, int optimize_iters,
                                         LhsTrace* trace = nullptr);

/// Smallest Euclidean distance between distinct columns.
double min_pairwise_distance(const Eigen::MatrixXd& points);

}  // namespace marom
