#pragma once

#include <Eigen/Dense>

namespace teamrl {

// Intersection area of two circles at center distance d. Disjoint pairs
// contribute 0; full containment contributes the smaller disk's area.
double circle_overlap_area(double d, double r1, double r2);

// Sum over i<j of coverage-disk intersection areas.
double pairwise_overlap(const Eigen::Matrix<double, Eigen::Dynamic, 2>& positions,
                        const Eigen::VectorXd& radii);

// True when the graph with edges d_ij <= r_i + r_j (touching counts) is a
// single connected component.
bool connectivity_check(const Eigen::Matrix<double, Eigen::Dynamic, 2>& positions,
                        const Eigen::VectorXd& radii);

double min_pairwise_distance(const Eigen::Matrix<double, Eigen::Dynamic, 2>& positions);

}  // namespace teamrl
