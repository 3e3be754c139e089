#pragma once

// Survival design matrices and the mortality model reports.

#include <optional>
#include <string>
#include <vector>

#include "stepforge/model.hpp"
#include "stepforge/survival.hpp"

namespace stepforge::design {

/// Dummy-coded traditional predictors; the first level of every factor is the
/// reference and gets no column.
const std::vector<std::string>& traditional_columns();
std::vector<double> traditional_row(const SubjectCovariates& c);

struct AnalysisSubject {
    SubjectCovariates covariates;
    MortalityRecord mortality;
    SubjectSummary summary;
};

/// Complete-case survival rows for subjects that are included, inside the age
/// range, with complete covariates and every requested activity variable.
/// Activity columns are winsorized per cfg before entering the design.
survival::SurvivalDataset build_survival_data(const std::vector<AnalysisSubject>& subjects,
                                              const std::vector<std::string>& activity_vars,
                                              const AnalysisConfig& cfg);

struct ModelRow {
    std::string model;
    std::vector<std::string> terms;
    double cv_concordance = 0.0;
    std::optional<survival::HazardRatio> steps_hr;  ///< per hr_step_increment
    std::optional<double> steps_p;
    bool converged = true;
};

struct ModelSuite {
    std::string best_steps;
    std::vector<ModelRow> rows;
};

struct Univariate {
    std::string variable;
    double cv_concordance;
};

survival::CvOptions cv_options(const AnalysisConfig& cfg, unsigned jobs);

/// cvC of single-variable models, in input order.
std::vector<Univariate> univariate_cvc(const survival::SurvivalDataset& data, const std::vector<std::string>& vars,
                                       const AnalysisConfig& cfg, unsigned jobs);

/// Traditional; + MIMS; + best univariate steps; + steps + MIMS.
ModelSuite model_suite(const survival::SurvivalDataset& data, const std::vector<std::string>& steps_vars,
                       const std::string& mims_var, const AnalysisConfig& cfg, unsigned jobs);

struct HrRow {
    std::string variable;
    survival::HazardRatio raw;     ///< per hr_step_increment
    survival::HazardRatio scaled;  ///< per SD
    double sd_thousands;
};

/// Traditional-adjusted hazard ratios per step variable, raw and standardized.
std::vector<HrRow> hazard_ratio_table(const survival::SurvivalDataset& data, const std::vector<std::string>& steps_vars,
                                      const AnalysisConfig& cfg);

}  // namespace stepforge::design
