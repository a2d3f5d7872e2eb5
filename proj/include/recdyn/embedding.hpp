#pragma once

#include <Eigen/Dense>

#include "recdyn/errors.hpp"

namespace recdyn {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Per-component mean and standard deviation of a series segment. std uses
/// the population convention (1/S) so a mean predictor scores nrmse = 1 on
/// the segment that defined the stats.
struct NormalizationStats {
    Vec mean;
    Vec std;
};

NormalizationStats fit_normalization(const Mat& series);

/// Sliding-window delay-vector dataset. Row s of `inputs` is the
/// concatenation (x_{s+d-1}, x_{s+d-2}, ..., x_s) — most recent lag first —
/// and row s of `targets` is x_{s+d-1+horizon}.
struct DelayDataset {
    Mat inputs;   // S x (d*n)
    Mat targets;  // S x n
    int d = 0;
    int n = 0;
    int horizon = 1;
    NormalizationStats norm;

    Eigen::Index size() const { return inputs.rows(); }
};

enum class SplitPolicy { Chronological };

struct SplitSpec {
    double train_frac = 0.75;
    double val_frac = 0.25;
    SplitPolicy policy = SplitPolicy::Chronological;
};

struct SplitResult {
    DelayDataset train;
    DelayDataset val;
    bool no_validation = false; // train_frac == 1, val is empty
};

DelayDataset make_delay_dataset(const Mat& series, int d, int horizon);

/// Chronological split: the first ceil(train_frac*S) rows go to train, the
/// rest to validation. Both children keep the parent dataset's stats, so
/// train and validation losses share one scale.
SplitResult split(const DelayDataset& dataset, const SplitSpec& spec);

/// RMSE of (predictions - targets), each component divided by norm.std,
/// root-mean over samples and components.
double nrmse(const Mat& predictions, const Mat& targets, const NormalizationStats& norm);

/// Standardize/restore helpers used around network training. Columns of a
/// delay-input matrix repeat the n-dimensional stats d times.
Mat standardize_series(const Mat& values, const NormalizationStats& norm);
Mat destandardize_series(const Mat& values, const NormalizationStats& norm);
Mat standardize_inputs(const Mat& inputs, int n, const NormalizationStats& norm);

} // namespace recdyn
