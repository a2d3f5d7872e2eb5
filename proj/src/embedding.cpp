#include "recdyn/embedding.hpp"

#include <cmath>

namespace recdyn {

namespace {

NormalizationStats fit_normalization_impl(const Mat& series, bool clamp_constant) {
    if (series.rows() < 1) throw TooShortError("cannot fit normalization on an empty series");
    NormalizationStats norm;
    norm.mean = series.colwise().mean();
    norm.std = ((series.rowwise() - norm.mean.transpose()).array().square().colwise().mean())
                   .sqrt()
                   .matrix();
    for (Eigen::Index j = 0; j < norm.std.size(); ++j) {
        if (norm.std[j] > 0.0) continue;
        if (clamp_constant)
            norm.std[j] = 1.0; // constant component: unit scale keeps stats usable
        else
            throw DegenerateSeriesError("constant component " + std::to_string(j) +
                                        ": normalization undefined");
    }
    return norm;
}

} // namespace

NormalizationStats fit_normalization(const Mat& series) {
    return fit_normalization_impl(series, false);
}

DelayDataset make_delay_dataset(const Mat& series, int d, int horizon) {
    if (d < 1) throw ConfigError("delay count must be >= 1");
    if (horizon < 1) throw ConfigError("horizon must be >= 1");
    const Eigen::Index t = series.rows();
    const int n = static_cast<int>(series.cols());
    if (t < d + horizon)
        throw TooShortError("series length " + std::to_string(t) + " < d + horizon = " +
                            std::to_string(d + horizon));
    if (!series.allFinite()) throw DegenerateSeriesError("series contains non-finite values");

    DelayDataset ds;
    ds.d = d;
    ds.n = n;
    ds.horizon = horizon;
    const Eigen::Index s_count = t - d - horizon + 1;
    ds.inputs.resize(s_count, static_cast<Eigen::Index>(d) * n);
    ds.targets.resize(s_count, n);
    for (Eigen::Index s = 0; s < s_count; ++s) {
        for (int k = 0; k < d; ++k) // lag k slot holds x_{s+d-1-k}
            ds.inputs.block(s, static_cast<Eigen::Index>(k) * n, 1, n) =
                series.row(s + d - 1 - k);
        ds.targets.row(s) = series.row(s + d - 1 + horizon);
    }
    ds.norm = fit_normalization_impl(series, true);
    return ds;
}

SplitResult split(const DelayDataset& dataset, const SplitSpec& spec) {
    if (std::abs(spec.train_frac + spec.val_frac - 1.0) > 1e-12)
        throw ConfigError("train_frac + val_frac must equal 1");
    if (spec.train_frac <= 0.0 || spec.train_frac > 1.0)
        throw ConfigError("train_frac must lie in (0, 1]");
    const Eigen::Index s_count = dataset.size();
    if (s_count < 4) throw TooShortError("split needs at least 4 samples");

    const auto s_train = static_cast<Eigen::Index>(std::ceil(spec.train_frac * s_count));
    SplitResult out;
    out.no_validation = s_train == s_count;

    auto take = [&](Eigen::Index begin, Eigen::Index count) {
        DelayDataset part;
        part.d = dataset.d;
        part.n = dataset.n;
        part.horizon = dataset.horizon;
        part.inputs = dataset.inputs.middleRows(begin, count);
        part.targets = dataset.targets.middleRows(begin, count);
        return part;
    };
    out.train = take(0, s_train);
    out.val = take(s_train, s_count - s_train);
    // Both halves keep the parent's stats: the caller fits them on the
    // training series before splitting, and the validation loss must live on
    // the same scale as the training loss.
    out.train.norm = dataset.norm;
    out.val.norm = dataset.norm;
    return out;
}

double nrmse(const Mat& predictions, const Mat& targets, const NormalizationStats& norm) {
    if (predictions.rows() != targets.rows() || predictions.cols() != targets.cols())
        throw ShapeMismatchError("predictions and targets differ in shape");
    if (predictions.rows() < 1) throw ShapeMismatchError("nrmse needs at least one sample");
    if (norm.std.size() != predictions.cols())
        throw ShapeMismatchError("normalization dimension does not match data");
    const Mat scaled =
        (predictions - targets).array().rowwise() / norm.std.transpose().array();
    return std::sqrt(scaled.array().square().mean());
}

Mat standardize_series(const Mat& values, const NormalizationStats& norm) {
    if (values.cols() != norm.mean.size())
        throw ShapeMismatchError("series dimension does not match normalization");
    return (values.rowwise() - norm.mean.transpose()).array().rowwise() /
           norm.std.transpose().array();
}

Mat destandardize_series(const Mat& values, const NormalizationStats& norm) {
    if (values.cols() != norm.mean.size())
        throw ShapeMismatchError("series dimension does not match normalization");
    return (values.array().rowwise() * norm.std.transpose().array()).matrix().rowwise() +
           norm.mean.transpose();
}

Mat standardize_inputs(const Mat& inputs, int n, const NormalizationStats& norm) {
    if (n < 1 || inputs.cols() % n != 0)
        throw ShapeMismatchError("input width is not a multiple of the observed dimension");
    Mat out(inputs.rows(), inputs.cols());
    const auto d = inputs.cols() / n;
    for (Eigen::Index k = 0; k < d; ++k)
        out.middleCols(k * n, n) = standardize_series(inputs.middleCols(k * n, n), norm);
    return out;
}

} // namespace recdyn
