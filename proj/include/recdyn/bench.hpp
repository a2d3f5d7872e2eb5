#pragma once

#include <optional>
#include <string>
#include <vector>

#include "recdyn/dynamics.hpp"
#include "recdyn/embedding.hpp"
#include "recdyn/nets.hpp"

namespace recdyn {

struct ExperimentConfig {
    SystemSpec system;
    std::vector<int> train_sizes = {50};
    std::vector<int> delays = {1, 2, 3, 4, 5, 6, 7, 8};
    std::vector<int> hidden_sizes = {2, 5, 10};
    bool select_hidden = false; // validation-selected h over hidden_sizes
    int replicates = 20;
    std::vector<int> horizons = {1, 2, 3};
    std::uint64_t base_seed = 1;
    std::vector<Arch> architectures = {Arch::FNN, Arch::RNN};
    TrainConfig train;

    void validate() const;
};

struct ResultRow {
    std::string system;
    Arch arch = Arch::FNN;
    int train_size = 0;
    int d = 0;
    int h = 0;
    int horizon = 0;
    int replicate = 0;
    std::uint64_t seed = 0;
    double nrmse = 0.0;
    long best_epoch = 0;
    int selected_h = 0; // 0 when fixed-h (no selection)
    std::string status = "ok"; // ok | diverged
};

struct CellOutcome {
    std::vector<double> nrmse_by_horizon;
    long best_epoch = 0;
    double val_loss = 0.0;
    bool diverged = false;
};

/// Simulates one replicate's trajectory (train half + fresh test
/// continuation of equal length), trains one model, and scores iterated
/// forecasts at the requested horizons on the test half. Training data and
/// network initialization use separate derived seeds so architectures share
/// the same data within a replicate.
CellOutcome run_cell(const SystemSpec& system, Arch arch, int train_size, int d, int h,
                     std::uint64_t data_seed, std::uint64_t train_seed, const TrainConfig& config,
                     const std::vector<int>& horizons);

/// Validation-loss selection over h_range; returns the winning h and its
/// outcome (as run_cell). Selection never sees test data.
std::pair<int, CellOutcome> select_hidden(const SystemSpec& system, Arch arch, int train_size,
                                          int d, std::uint64_t data_seed, std::uint64_t train_seed,
                                          const TrainConfig& config,
                                          const std::vector<int>& h_range,
                                          const std::vector<int>& horizons);

struct BaselineScores {
    double mean_nrmse = 0.0;
    double prev_nrmse = 0.0;
};

/// Mean-predictor and previous-value-predictor scores on a test series,
/// normalized by the training stats.
BaselineScores baselines(const Mat& test_series, const NormalizationStats& norm);

/// Runs the full grid. Row order is fixed by the grid regardless of thread
/// count; each (cell, replicate) writes only its own slots.
std::vector<ResultRow> run_sweep(const ExperimentConfig& config, bool parallel = true);

struct SummaryRow {
    std::string system;
    Arch arch = Arch::FNN;
    int train_size = 0;
    int d = 0;
    int h = 0; // 0 under selection
    int horizon = 0;
    double mean_nrmse = 0.0;
    double stderr_nrmse = 0.0; // 0 flagged when replicates == 1
    double mean_selected_h = 0.0;
    int n_ok = 0;
};

std::vector<SummaryRow> aggregate(const std::vector<ResultRow>& rows);

} // namespace recdyn
