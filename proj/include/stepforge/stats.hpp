#pragma once

// Descriptive statistics: winsorization, correlations, survey-weighted means,
// local-linear smoothing and percent differences.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stepforge/model.hpp"

namespace stepforge::stats {

/// Sample quantile of `values` at probability p in [0, 1].
/// Type1: inverse empirical CDF, x_(ceil(n p)). Type7: linear interpolation.
double quantile(std::span<const double> values, double p, QuantileRule rule = QuantileRule::Type1);

/// Caps values above the p-quantile at that quantile.
std::vector<double> winsorize_upper(std::span<const double> values, double p = 0.99,
                                    QuantileRule rule = QuantileRule::Type1);

double pearson(std::span<const double> x, std::span<const double> y);
double spearman(std::span<const double> x, std::span<const double> y);
/// 1-based ranks; ties receive their average rank.
std::vector<double> midranks(std::span<const double> x);

enum class CorrelationMethod { Pearson, Spearman };

struct CorrelationMatrix {
    std::vector<std::string> variables;
    /// values[i][j]; NaN where a pair has fewer than two complete subjects or
    /// zero variance.
    std::vector<std::vector<double>> values;
    std::vector<std::vector<std::size_t>> n_pairs;
};

/// Pairwise-complete correlations between subject means.
CorrelationMatrix correlation_matrix(std::span<const SubjectSummary> subjects, const std::vector<std::string>& variables,
                                     CorrelationMethod method = CorrelationMethod::Spearman);

struct MeanSe {
    double mean;
    double se;
};

/// Weighted mean with a Taylor-linearized standard error. Without design
/// fields every observation is its own PSU in a single stratum; a stratum
/// holding one PSU contributes no variance. Weights must be >= 0 with a
/// positive sum.
MeanSe weighted_mean_se(std::span<const double> values, std::span<const double> weights,
                        std::span<const std::string> strata = {}, std::span<const std::string> psu = {});

struct CurvePoint {
    double x;
    double estimate;
    double se;
    double lo;
    double hi;
};

/// Degree-1 LOESS with tricube weights over the floor(span * n) nearest
/// points, evaluated at `at` (integer ages from min to max when empty).
/// The SE curve is smoothed the same way and CI = estimate +- 1.96 se.
std::vector<CurvePoint> local_weighted_smooth(std::span<const double> x, std::span<const double> y,
                                              std::span<const double> se, double span = 0.75,
                                              std::vector<double> at = {});

struct PercentChange {
    double x;
    double percent;
};

/// 100 (s(a) - s(a-1)) / s(a-1) for each consecutive pair of curve points.
std::vector<PercentChange> percent_change_by_age(std::span<const CurvePoint> curve);

/// 100 |a - b| / mean(a, b); both estimates must be positive.
double between_wave_percent_diff(double a, double b);

}  // namespace stepforge::stats
