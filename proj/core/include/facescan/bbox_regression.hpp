#pragma once

#include <span>
#include <vector>

#include "facescan/errors.hpp"
#include "facescan/geometry.hpp"

namespace facescan {

// Offsets from a proposal box toward ground truth: center shifts in
// proposal-size units, log size ratios.
struct BoxDeltas {
    double tx = 0;
    double ty = 0;
    double tw = 0;
    double th = 0;
};

// One ridge-regression row per delta over a shared feature vector. The
// intercept is kept outside the regularizer so a constant offset can be
// fitted exactly at any lambda.
struct RegressorModel {
    int feature_dim = 0;
    double lambda = 0.0;
    std::vector<double> wx, wy, ww, wh;  // feature_dim weights each
    double bx = 0, by = 0, bw = 0, bh = 0;
};

BoxDeltas encode_targets(const Box& proposal, const Box& gt);
// Exact inverse of encode_targets: decode(p, encode_targets(p, g)) == g.
Box decode(const Box& proposal, const BoxDeltas& d);

struct RegressionSample {
    std::vector<double> feature;
    Box proposal;
    Box gt;
};

// Solves (X^T X + lambda I) w = X^T t for each delta with an unregularized
// intercept column, via Cholesky on the normal equations. A singular system
// at lambda = 0 raises IllConditioned.
RegressorModel train_regressor(std::span<const RegressionSample> samples, double lambda);

BoxDeltas predict(const RegressorModel& model, std::span<const double> feature);
Box apply_regressor(const RegressorModel& model, const Box& proposal,
                    std::span<const double> feature);

}  // namespace facescan
