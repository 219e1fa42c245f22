#include <cmath>
#include <string>

#include "facescan/bbox_regression.hpp"
#include "facescan/errors.hpp"

namespace facescan {

BoxDeltas encode_targets(const Box& proposal, const Box& gt) {
    if (!(proposal.w > 0) || !(proposal.h > 0) || !(gt.w > 0) || !(gt.h > 0))
        fail(ErrorKind::InvalidArgument, "boxes need positive width and height to encode deltas");
    return {(gt.cx() - proposal.cx()) / proposal.w, (gt.cy() - proposal.cy()) / proposal.h,
            std::log(gt.w / proposal.w), std::log(gt.h / proposal.h)};
}

Box decode(const Box& proposal, const BoxDeltas& d) {
    if (!(proposal.w > 0) || !(proposal.h > 0))
        fail(ErrorKind::InvalidArgument, "proposal needs positive width and height to decode");
    const double cx = proposal.cx() + d.tx * proposal.w;
    const double cy = proposal.cy() + d.ty * proposal.h;
    const double w = proposal.w * std::exp(d.tw);
    const double h = proposal.h * std::exp(d.th);
    return {cx - w / 2.0, cy - h / 2.0, w, h};
}

namespace {

// Cholesky solve of a symmetric positive-definite system, in place.
// Returns false when a pivot collapses (singular / indefinite).
bool cholesky_solve(std::vector<double>& a, int n, std::vector<double>& rhs) {
    for (int j = 0; j < n; ++j) {
        double d = a[static_cast<std::size_t>(j) * n + j];
        for (int k = 0; k < j; ++k) {
            const double l = a[static_cast<std::size_t>(j) * n + k];
            d -= l * l;
        }
        if (!(d > 1e-12)) return false;
        const double ljj = std::sqrt(d);
        a[static_cast<std::size_t>(j) * n + j] = ljj;
        for (int i = j + 1; i < n; ++i) {
            double v = a[static_cast<std::size_t>(i) * n + j];
            for (int k = 0; k < j; ++k)
                v -= a[static_cast<std::size_t>(i) * n + k] * a[static_cast<std::size_t>(j) * n + k];
            a[static_cast<std::size_t>(i) * n + j] = v / ljj;
        }
    }
    // forward then back substitution
    for (int i = 0; i < n; ++i) {
        double v = rhs[i];
        for (int k = 0; k < i; ++k) v -= a[static_cast<std::size_t>(i) * n + k] * rhs[k];
        rhs[i] = v / a[static_cast<std::size_t>(i) * n + i];
    }
    for (int i = n - 1; i >= 0; --i) {
        double v = rhs[i];
        for (int k = i + 1; k < n; ++k) v -= a[static_cast<std::size_t>(k) * n + i] * rhs[k];
        rhs[i] = v / a[static_cast<std::size_t>(i) * n + i];
    }
    return true;
}

}  // namespace

RegressorModel train_regressor(std::span<const RegressionSample> samples, double lambda) {
    if (samples.empty()) fail(ErrorKind::InvalidArgument, "regressor training needs >= 1 sample");
    if (lambda < 0) fail(ErrorKind::InvalidArgument, "lambda must be >= 0");
    const int dim = static_cast<int>(samples.front().feature.size());
    if (dim < 1) fail(ErrorKind::InvalidArgument, "empty feature vectors");
    for (const RegressionSample& s : samples)
        if (static_cast<int>(s.feature.size()) != dim)
            fail(ErrorKind::InvalidArgument, "feature dimensions differ across samples");

    const int n = dim + 1;  // trailing intercept column
    std::vector<double> gram(static_cast<std::size_t>(n) * n, 0.0);
    std::vector<std::vector<double>> xt(4, std::vector<double>(n, 0.0));
    std::vector<double> target(4);

    for (const RegressionSample& s : samples) {
        const BoxDeltas t = encode_targets(s.proposal, s.gt);
        target = {t.tx, t.ty, t.tw, t.th};
        for (int i = 0; i < n; ++i) {
            const double xi = i < dim ? s.feature[i] : 1.0;
            for (int j = i; j < n; ++j) {
                const double xj = j < dim ? s.feature[j] : 1.0;
                gram[static_cast<std::size_t>(i) * n + j] += xi * xj;
            }
            for (int d = 0; d < 4; ++d) xt[d][i] += xi * target[d];
        }
    }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < i; ++j)
            gram[static_cast<std::size_t>(i) * n + j] = gram[static_cast<std::size_t>(j) * n + i];
    for (int i = 0; i < dim; ++i) gram[static_cast<std::size_t>(i) * n + i] += lambda;

    RegressorModel model;
    model.feature_dim = dim;
    model.lambda = lambda;
    std::vector<double>* weights[4] = {&model.wx, &model.wy, &model.ww, &model.wh};
    double* biases[4] = {&model.bx, &model.by, &model.bw, &model.bh};
    for (int d = 0; d < 4; ++d) {
        std::vector<double> a = gram;
        std::vector<double> sol = xt[d];
        if (!cholesky_solve(a, n, sol))
            fail(ErrorKind::IllConditioned,
                 "normal equations are singular; use lambda > 0 or more samples");
        weights[d]->assign(sol.begin(), sol.begin() + dim);
        *biases[d] = sol[dim];
    }
    return model;
}

BoxDeltas predict(const RegressorModel& model, std::span<const double> feature) {
    if (static_cast<int>(feature.size()) != model.feature_dim)
        fail(ErrorKind::InvalidArgument,
             "feature dimension " + std::to_string(feature.size()) + " does not match the model (" +
                 std::to_string(model.feature_dim) + ")");
    BoxDeltas d;
    d.tx = model.bx;
    d.ty = model.by;
    d.tw = model.bw;
    d.th = model.bh;
    for (int i = 0; i < model.feature_dim; ++i) {
        d.tx += model.wx[i] * feature[i];
        d.ty += model.wy[i] * feature[i];
        d.tw += model.ww[i] * feature[i];
        d.th += model.wh[i] * feature[i];
    }
    return d;
}

Box apply_regressor(const RegressorModel& model, const Box& proposal,
                    std::span<const double> feature) {
    return decode(proposal, predict(model, feature));
}

}  // namespace facescan
