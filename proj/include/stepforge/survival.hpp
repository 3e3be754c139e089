#pragma once

// Weighted Cox regression, hazard ratios and (cross-validated) concordance.

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "stepforge/model.hpp"
#include "stepforge/rng.hpp"

namespace stepforge::survival {

struct SurvivalDataset {
    std::vector<double> time;
    std::vector<bool> event;
    std::vector<double> weight;
    Eigen::MatrixXd x;  ///< one row per subject
    std::vector<std::string> names;
    /// Per standardized covariate: (mean, sd) of the original column.
    std::map<std::string, std::pair<double, double>> scaling;

    std::size_t rows() const noexcept { return time.size(); }
    std::size_t n_events() const noexcept;
    std::size_t column(const std::string& name) const;
    /// Throws InputError on misaligned fields, non-finite values, weights <= 0,
    /// negative times or no events.
    void validate() const;
    SurvivalDataset subset(std::span<const std::size_t> rows) const;
    SurvivalDataset select(const std::vector<std::string>& columns) const;
};

struct CoxOptions {
    int max_iter = 50;
    double tol = 1e-9;
    /// Give aliased columns a NaN coefficient instead of failing.
    bool drop_aliased = false;
};

struct CoxFit {
    std::vector<std::string> names;
    Eigen::VectorXd beta;
    Eigen::MatrixXd covariance;        ///< robust sandwich
    Eigen::MatrixXd naive_covariance;  ///< inverse information
    std::vector<double> loglik_seq;
    std::vector<bool> aliased;
    bool converged = false;
    int iterations = 0;
    std::size_t n_events = 0;

    double loglik() const { return loglik_seq.empty() ? 0.0 : loglik_seq.back(); }
    std::size_t index_of(const std::string& name) const;
    double se(const std::string& name) const;
    /// Two-sided Wald p-value on the robust SE.
    double p_value(const std::string& name) const;
    /// Linear predictor for each row; aliased coefficients count as 0.
    Eigen::VectorXd linear_predictor(const Eigen::MatrixXd& x) const;
};

/// Weighted Breslow partial log-likelihood.
double partial_loglik(const SurvivalDataset& data, const Eigen::VectorXd& beta);

CoxFit cox_fit(const SurvivalDataset& data, const CoxOptions& opt = {});

struct HazardRatio {
    double hr;
    double lo;
    double hi;
};

HazardRatio hazard_ratio(const CoxFit& fit, const std::string& covariate, double delta);

/// Replaces a column by (x - mean) / sd with the n-1 sd; records (mean, sd).
SurvivalDataset standardize(const SurvivalDataset& data, const std::string& covariate);

/// Weighted Harrell's C: pairs with an event at t_i < t_j, pair weight
/// w_i w_j, predictor ties count one half.
double concordance(std::span<const double> lp, std::span<const double> time, const std::vector<bool>& event,
                   std::span<const double> weight);

/// Fold index per row: events then non-events, each shuffled, dealt round-robin.
std::vector<int> make_fold_plan(const std::vector<bool>& event, int k, std::uint64_t seed, int repeat);

struct CvOptions {
    int folds = 10;
    int repeats = 100;
    std::uint64_t seed = 20240101;
    unsigned jobs = 1;
};

struct CvResult {
    double mean = 0.0;
    std::vector<double> per_repeat;
};

/// Fits on k-1 folds, scores weighted C on the held-out fold; averages over
/// folds, then over repeats.
CvResult repeated_cv_concordance(const SurvivalDataset& data, const CvOptions& opt);

}  // namespace stepforge::survival
