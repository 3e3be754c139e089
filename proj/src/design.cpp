#include "stepforge/design.hpp"

#include <algorithm>
#include <cmath>

#include "stepforge/stats.hpp"

namespace stepforge::design {

const std::vector<std::string>& traditional_columns() {
    static const std::vector<std::string> cols = {
        "age",
        "sex_female",
        "race_nh_black",
        "race_mexican_american",
        "race_other_hispanic",
        "race_other",
        "education_hs",
        "education_more_than_hs",
        "bmi_underweight",
        "bmi_overweight",
        "bmi_obese",
        "diabetes",
        "chd",
        "chf",
        "heart_attack",
        "stroke",
        "cancer",
        "mobility_problem",
        "alcohol_former",
        "alcohol_moderate",
        "alcohol_heavy",
        "alcohol_missing",
        "smoking_former",
        "smoking_current",
        "health_very_good",
        "health_good",
        "health_fair",
        "health_poor",
    };
    return cols;
}

namespace {

// Indicators for every non-reference level of an enum with `levels` values.
template <class E>
void dummies(std::vector<double>& row, E v, int levels) {
    for (int l = 1; l < levels; ++l) row.push_back(static_cast<int>(v) == l ? 1.0 : 0.0);
}

}  // namespace

std::vector<double> traditional_row(const SubjectCovariates& c) {
    if (!c.complete()) throw InputError("subject '" + c.subject_id + "' has incomplete covariates");
    std::vector<double> row;
    row.reserve(traditional_columns().size());
    row.push_back(c.age_years);
    dummies(row, *c.sex, 2);
    dummies(row, *c.race, 5);
    dummies(row, *c.education, 3);
    dummies(row, *c.bmi, 4);
    for (const auto& b : {c.diabetes, c.chd, c.chf, c.heart_attack, c.stroke, c.cancer, c.mobility_problem})
        row.push_back(*b ? 1.0 : 0.0);
    dummies(row, c.alcohol, 5);
    dummies(row, *c.smoking, 3);
    dummies(row, *c.health, 5);
    return row;
}

survival::SurvivalDataset build_survival_data(const std::vector<AnalysisSubject>& subjects,
                                              const std::vector<std::string>& activity_vars,
                                              const AnalysisConfig& cfg) {
    std::vector<const AnalysisSubject*> keep;
    for (const auto& s : subjects) {
        if (!s.summary.included || !s.covariates.complete()) continue;
        if (s.covariates.age_years < cfg.age_min || s.covariates.age_years > cfg.age_max) continue;
        const bool has_all = std::all_of(activity_vars.begin(), activity_vars.end(), [&](const std::string& v) {
            auto it = s.summary.means.find(v);
            return it != s.summary.means.end() && std::isfinite(it->second);
        });
        if (has_all) keep.push_back(&s);
    }
    const auto& trad = traditional_columns();
    survival::SurvivalDataset d;
    d.names = trad;
    d.names.insert(d.names.end(), activity_vars.begin(), activity_vars.end());
    d.x.resize(static_cast<Eigen::Index>(keep.size()), static_cast<Eigen::Index>(d.names.size()));
    for (std::size_t i = 0; i < keep.size(); ++i) {
        const auto& s = *keep[i];
        d.time.push_back(s.mortality.followup_months);
        d.event.push_back(s.mortality.event);
        d.weight.push_back(s.covariates.survey_weight);
        const auto row = traditional_row(s.covariates);
        for (std::size_t c = 0; c < row.size(); ++c)
            d.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = row[c];
    }
    for (std::size_t v = 0; v < activity_vars.size(); ++v) {
        if (keep.empty()) break;
        std::vector<double> col;
        for (const auto* s : keep) col.push_back(s->summary.means.at(activity_vars[v]));
        col = stats::winsorize_upper(col, cfg.winsor_percentile, cfg.winsor_rule);
        const auto c = static_cast<Eigen::Index>(trad.size() + v);
        for (std::size_t i = 0; i < col.size(); ++i) d.x(static_cast<Eigen::Index>(i), c) = col[i];
    }
    return d;
}

survival::CvOptions cv_options(const AnalysisConfig& cfg, unsigned jobs) {
    survival::CvOptions o;
    o.folds = cfg.cv_folds;
    o.repeats = cfg.cv_repeats;
    o.seed = cfg.rng_seed;
    o.jobs = jobs;
    return o;
}

std::vector<Univariate> univariate_cvc(const survival::SurvivalDataset& data, const std::vector<std::string>& vars,
                                       const AnalysisConfig& cfg, unsigned jobs) {
    std::vector<Univariate> out;
    for (const auto& v : vars)
        out.push_back({v, survival::repeated_cv_concordance(data.select({v}), cv_options(cfg, jobs)).mean});
    return out;
}

ModelSuite model_suite(const survival::SurvivalDataset& data, const std::vector<std::string>& steps_vars,
                       const std::string& mims_var, const AnalysisConfig& cfg, unsigned jobs) {
    if (steps_vars.empty()) throw InputError("model suite needs at least one step variable");
    ModelSuite suite;
    const auto uni = univariate_cvc(data, steps_vars, cfg, jobs);
    suite.best_steps = std::max_element(uni.begin(), uni.end(), [](const Univariate& a, const Univariate& b) {
                           return a.cv_concordance < b.cv_concordance;
                       })->variable;

    const auto& trad = traditional_columns();
    auto with = [&](std::vector<std::string> extra) {
        std::vector<std::string> t = trad;
        t.insert(t.end(), extra.begin(), extra.end());
        return t;
    };
    const std::vector<std::pair<std::string, std::vector<std::string>>> specs = {
        {"traditional", with({})},
        {"traditional+mims", with({mims_var})},
        {"traditional+steps", with({suite.best_steps})},
        {"traditional+steps+mims", with({suite.best_steps, mims_var})},
    };
    for (const auto& [name, terms] : specs) {
        ModelRow row;
        row.model = name;
        row.terms = terms;
        const auto sub = data.select(terms);
        row.cv_concordance = survival::repeated_cv_concordance(sub, cv_options(cfg, jobs)).mean;
        if (std::find(terms.begin(), terms.end(), suite.best_steps) != terms.end()) {
            survival::CoxOptions co;
            co.drop_aliased = true;
            const auto fit = survival::cox_fit(sub, co);
            row.converged = fit.converged;
            row.steps_hr = survival::hazard_ratio(fit, suite.best_steps, cfg.hr_step_increment);
            row.steps_p = fit.p_value(suite.best_steps);
        }
        suite.rows.push_back(std::move(row));
    }
    return suite;
}

std::vector<HrRow> hazard_ratio_table(const survival::SurvivalDataset& data, const std::vector<std::string>& steps_vars,
                                      const AnalysisConfig& cfg) {
    std::vector<HrRow> out;
    survival::CoxOptions co;
    co.drop_aliased = true;
    for (const auto& v : steps_vars) {
        std::vector<std::string> terms = traditional_columns();
        terms.push_back(v);
        const auto sub = data.select(terms);
        const auto raw_fit = survival::cox_fit(sub, co);
        const auto scaled_data = survival::standardize(sub, v);
        const auto scaled_fit = survival::cox_fit(scaled_data, co);
        out.push_back({v, survival::hazard_ratio(raw_fit, v, cfg.hr_step_increment),
                       survival::hazard_ratio(scaled_fit, v, 1.0), scaled_data.scaling.at(v).second / 1000.0});
    }
    return out;
}

}  // namespace stepforge::design
