#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "stepforge/simulate.hpp"
#include "stepforge/survival.hpp"
#include "support.hpp"

using namespace stepforge;
using namespace stepforge::survival;
using testsupport::Gen;

namespace {

SurvivalDataset one_column(const std::vector<double>& x, const std::vector<double>& t, const std::vector<bool>& e,
                           std::vector<double> w = {}, const std::string& name = "x") {
    SurvivalDataset d;
    d.time = t;
    d.event = e;
    d.weight = w.empty() ? std::vector<double>(x.size(), 1.0) : std::move(w);
    d.x.resize(static_cast<Eigen::Index>(x.size()), 1);
    for (std::size_t i = 0; i < x.size(); ++i) d.x(static_cast<Eigen::Index>(i), 0) = x[i];
    d.names = {name};
    return d;
}

// Breslow partial log-likelihood written pair by pair.
double loglik_1d(const std::vector<double>& x, const std::vector<double>& t, const std::vector<bool>& e,
                 const std::vector<double>& w, double b) {
    double ll = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!e[i]) continue;
        double risk = 0;
        for (std::size_t j = 0; j < x.size(); ++j) {
            if (t[j] >= t[i]) risk += w[j] * std::exp(x[j] * b);
        }
        ll += w[i] * (x[i] * b - std::log(risk));
    }
    return ll;
}

double brute_concordance(const std::vector<double>& lp, const std::vector<double>& t, const std::vector<bool>& e,
                         const std::vector<double>& w) {
    double num = 0, den = 0;
    for (std::size_t i = 0; i < lp.size(); ++i) {
        if (!e[i]) continue;
        for (std::size_t j = 0; j < lp.size(); ++j) {
            if (!(t[i] < t[j])) continue;
            const double pw = w[i] * w[j];
            den += pw;
            if (lp[i] > lp[j]) num += pw;
            else if (lp[i] == lp[j]) num += 0.5 * pw;
        }
    }
    return num / den;
}

struct Raw {
    std::vector<double> x, t, w;
    std::vector<bool> e;
};

Raw draw_data(Gen& g, int n, double beta, bool ties) {
    Raw r;
    for (int i = 0; i < n; ++i) {
        const double x = g.normal();
        double t = -std::log(g.uniform(1e-9, 1.0)) / (0.05 * std::exp(beta * x));
        if (ties) t = std::ceil(t);
        r.x.push_back(x);
        r.t.push_back(t);
        r.e.push_back(g.coin(0.7));
        r.w.push_back(std::ldexp(1.0, g.integer(-2, 2)));
    }
    r.e[0] = true;
    return r;
}

}  // namespace

TEST_CASE("dataset validation") {
    auto d = one_column({1, 2, 3}, {1, 2, 3}, {true, false, true});
    CHECK_NOTHROW(d.validate());
    CHECK(d.n_events() == 2);
    auto bad = d;
    bad.weight[1] = 0;
    CHECK_THROWS_AS(bad.validate(), InputError);
    bad = d;
    bad.event = {false, false, false};
    CHECK_THROWS_AS(bad.validate(), InputError);
    CHECK_THROWS_AS((void)cox_fit(bad), InputError);
    bad = d;
    bad.x(1, 0) = NAN;
    CHECK_THROWS_AS(bad.validate(), InputError);
    bad = d;
    bad.time[2] = -1;
    CHECK_THROWS_AS(bad.validate(), InputError);
    CHECK_THROWS_AS((void)d.column("nope"), InputError);
}

TEST_CASE("cox: symmetric groups give zero") {
    std::vector<double> x, t;
    std::vector<bool> e;
    for (int i = 0; i < 20; ++i) {
        for (double g : {0.0, 1.0}) {
            x.push_back(g);
            t.push_back(1 + i);
            e.push_back(i % 3 != 0);
        }
    }
    const auto fit = cox_fit(one_column(x, t, e));
    CHECK(fit.converged);
    CHECK(std::abs(fit.beta(0)) < 1e-12);
    const auto hr = hazard_ratio(fit, "x", 1.0);
    CHECK(hr.hr == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("cox: one covariate matches a grid search") {
    Gen g(2024);
    for (int rep = 0; rep < 5; ++rep) {
        const auto r = draw_data(g, 30, 0.8, rep % 2 == 1);
        const auto fit = cox_fit(one_column(r.x, r.t, r.e, r.w));
        REQUIRE(fit.converged);
        // Coarse pass, then step 1e-5 around the best coarse point.
        double best = -5, best_ll = -INFINITY;
        for (double b = -5; b <= 5; b += 1e-2) {
            const double ll = loglik_1d(r.x, r.t, r.e, r.w, b);
            if (ll > best_ll) best_ll = ll, best = b;
        }
        const double centre = best;
        for (double b = centre - 0.02; b <= centre + 0.02; b += 1e-5) {
            const double ll = loglik_1d(r.x, r.t, r.e, r.w, b);
            if (ll > best_ll) best_ll = ll, best = b;
        }
        CHECK(std::abs(fit.beta(0) - best) < 1e-4);
        CHECK(fit.loglik() == doctest::Approx(loglik_1d(r.x, r.t, r.e, r.w, fit.beta(0))).epsilon(1e-10));
        Eigen::VectorXd b(1);
        b << 0.3;
        CHECK(partial_loglik(one_column(r.x, r.t, r.e, r.w), b) ==
              doctest::Approx(loglik_1d(r.x, r.t, r.e, r.w, 0.3)).epsilon(1e-12));
    }
}

TEST_CASE("cox: log-likelihood never decreases; covariance is symmetric PSD (property)") {
    Gen g(5);
    for (int rep = 0; rep < 30; ++rep) {
        const int n = g.integer(40, 200);
        SurvivalDataset d;
        d.x.resize(n, 3);
        for (int i = 0; i < n; ++i) {
            const double a = g.normal(), b = g.normal(), c = g.coin() ? 1.0 : 0.0;
            d.x(i, 0) = a * 1000 + 8000;
            d.x(i, 1) = b + 0.5 * a;
            d.x(i, 2) = c;
            const double h = 0.02 * std::exp(-0.5 * a + 0.3 * b + 0.4 * c);
            d.time.push_back(std::ceil(-std::log(g.uniform(1e-9, 1)) / h));
            d.event.push_back(g.coin(0.6));
            d.weight.push_back(g.uniform(0.2, 5));
        }
        d.event[0] = true;
        d.names = {"steps", "mims", "male"};
        const auto fit = cox_fit(d);
        CHECK(fit.converged);
        for (std::size_t k = 1; k < fit.loglik_seq.size(); ++k) CHECK(fit.loglik_seq[k] >= fit.loglik_seq[k - 1]);
        CHECK((fit.covariance - fit.covariance.transpose()).cwiseAbs().maxCoeff() == 0.0);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(fit.covariance);
        CHECK(es.eigenvalues().minCoeff() >= -1e-12 * es.eigenvalues().cwiseAbs().maxCoeff());

        // Uniform weight rescaling.
        auto scaled = d;
        for (auto& w : scaled.weight) w *= 10;
        const auto fit10 = cox_fit(scaled);
        for (int j = 0; j < 3; ++j) CHECK(std::abs(fit10.beta(j) - fit.beta(j)) <= 1e-10 * std::abs(fit.beta(j)));
    }
}

TEST_CASE("cox: weight-scale invariance, one covariate") {
    Gen g(8);
    const auto r = draw_data(g, 80, -0.6, true);
    std::vector<double> w10 = r.w;
    for (auto& w : w10) w *= 10;
    const double b1 = cox_fit(one_column(r.x, r.t, r.e, r.w)).beta(0);
    const double b10 = cox_fit(one_column(r.x, r.t, r.e, w10)).beta(0);
    CHECK(std::abs(b1 - b10) < 1e-10);
}

TEST_CASE("cox: aliased columns") {
    Gen g(3);
    const auto r = draw_data(g, 50, 0.5, false);
    SurvivalDataset d = one_column(r.x, r.t, r.e);
    d.x.conservativeResize(Eigen::NoChange, 2);
    d.x.col(1) = 2.0 * d.x.col(0);
    d.names.push_back("twice");
    CHECK_THROWS_AS((void)cox_fit(d), InputError);
    CoxOptions opt;
    opt.drop_aliased = true;
    const auto fit = cox_fit(d, opt);
    CHECK((fit.aliased[0] != fit.aliased[1]));
}

TEST_CASE("hazard ratios") {
    CoxFit fit;
    fit.names = {"steps"};
    fit.beta = Eigen::VectorXd::Constant(1, std::log(0.95) / 500);
    fit.covariance = Eigen::MatrixXd::Constant(1, 1, 1e-8);
    const auto hr = hazard_ratio(fit, "steps", 500);
    CHECK(hr.hr == doctest::Approx(0.95).epsilon(1e-14));
    CHECK(hr.lo == doctest::Approx(std::exp(500 * (fit.beta(0) - 1.96 * 1e-4))).epsilon(1e-14));
    CHECK(hr.hi == doctest::Approx(std::exp(500 * (fit.beta(0) + 1.96 * 1e-4))).epsilon(1e-14));
    CHECK(hr.lo < hr.hr);
    CHECK(hr.hr < hr.hi);
    CHECK_THROWS_AS((void)hazard_ratio(fit, "mims", 500), InputError);

    fit.beta(0) = 0;
    CHECK(hazard_ratio(fit, "steps", 500).hr == 1.0);

    Gen g(1);
    for (int i = 0; i < 500; ++i) {
        fit.beta(0) = g.normal(0, 1e-3);
        const double d = g.uniform(-2000, 2000);
        CHECK(std::abs(hazard_ratio(fit, "steps", d).hr * hazard_ratio(fit, "steps", -d).hr - 1.0) < 1e-12);
    }
}

TEST_CASE("standardize and refit") {
    Gen g(11);
    auto sim = simulate::gen_survival({.n = 400, .beta_per_step = -1e-4, .random_weights = true}, 4);
    const auto st = standardize(sim.data, "steps");
    const auto col = st.x.col(0);
    const double mean = col.mean();
    const double sd = std::sqrt((col.array() - mean).square().sum() / (col.size() - 1));
    CHECK(std::abs(mean) < 1e-12);
    CHECK(std::abs(sd - 1.0) < 1e-12);
    const auto [m0, s0] = st.scaling.at("steps");
    CHECK(m0 > 5000);
    CHECK(s0 > 1000);
    const double raw = cox_fit(sim.data).beta(0), scaled = cox_fit(st).beta(0);
    CHECK(std::abs(scaled - raw * s0) < 1e-8);

    auto flat = sim.data;
    flat.x.setConstant(3.0);
    CHECK_THROWS_AS((void)standardize(flat, "steps"), InputError);
}

TEST_CASE("concordance: examples") {
    const std::vector<double> t = {1, 2, 3, 4, 5, 6};
    const std::vector<bool> all(6, true);
    const std::vector<double> w(6, 1.0);
    std::vector<double> lp(6);
    for (int i = 0; i < 6; ++i) lp[i] = -t[i];
    CHECK(concordance(lp, t, all, w) == 1.0);
    CHECK(concordance(std::vector<double>(6, 0.3), t, all, w) == 0.5);
    CHECK(concordance(t, t, all, w) == 0.0);
    CHECK_THROWS_AS((void)concordance(lp, t, std::vector<bool>(6, false), w), InputError);
    CHECK_THROWS_AS((void)concordance(lp, std::vector<double>(6, 1.0), all, w), InputError);
}

TEST_CASE("concordance equals the pairwise count (property)") {
    Gen g(13);
    int with_ties = 0;
    for (int rep = 0; rep < 200; ++rep) {
        const int n = g.integer(2, 200);
        Raw r = draw_data(g, n, g.uniform(-1, 1), g.coin());
        std::vector<double> lp(n);
        for (int i = 0; i < n; ++i) lp[i] = g.coin(0.3) ? std::round(r.x[i]) : r.x[i];
        bool comparable = false;
        for (int i = 0; i < n && !comparable; ++i)
            for (int j = 0; j < n; ++j) comparable = comparable || (r.e[i] && r.t[i] < r.t[j]);
        if (!comparable) continue;
        const double got = concordance(lp, r.t, r.e, r.w);
        CHECK(got == brute_concordance(lp, r.t, r.e, r.w));
        std::set<double> distinct(r.t.begin(), r.t.end());
        with_ties += distinct.size() < r.t.size();

        // Strictly increasing transform of the predictor.
        std::vector<double> f(n);
        for (int i = 0; i < n; ++i) f[i] = std::exp(lp[i]) * 3 + 1;
        CHECK(concordance(f, r.t, r.e, r.w) == got);
    }
    CHECK(with_ties > 30);
}

TEST_CASE("fold plans") {
    std::vector<bool> ev(103);
    for (std::size_t i = 0; i < ev.size(); ++i) ev[i] = i % 4 == 0;
    const auto a = make_fold_plan(ev, 10, 42, 3), b = make_fold_plan(ev, 10, 42, 3), c = make_fold_plan(ev, 10, 42, 4);
    CHECK(a == b);
    CHECK(a != c);
    std::vector<int> size(10), events(10);
    for (std::size_t i = 0; i < ev.size(); ++i) {
        size[a[i]]++;
        events[a[i]] += ev[i];
    }
    CHECK(*std::max_element(size.begin(), size.end()) - *std::min_element(size.begin(), size.end()) <= 1);
    CHECK(*std::max_element(events.begin(), events.end()) - *std::min_element(events.begin(), events.end()) <= 1);
    CHECK_THROWS_AS((void)make_fold_plan(ev, 1, 1, 0), InputError);
    CHECK_THROWS_AS((void)make_fold_plan(std::vector<bool>(5, true), 10, 1, 0), InputError);
}

TEST_CASE("cross-validated concordance: signal and noise") {
    Gen g(77);
    const int n = 500;
    std::vector<double> x(n), t(n), noise(n);
    std::vector<bool> e(n, true);
    for (int i = 0; i < n; ++i) {
        x[i] = g.normal();
        t[i] = 100.0 * std::exp(-x[i]);  // higher x, earlier death, no noise
        noise[i] = g.normal();
    }
    CvOptions opt;
    opt.repeats = 100;
    const auto strong = repeated_cv_concordance(one_column(x, t, e), opt);
    CHECK(strong.per_repeat.size() == 100);
    CHECK(strong.mean >= 0.95);

    const auto flat = repeated_cv_concordance(one_column(noise, t, e), opt);
    CHECK(flat.mean >= 0.45);
    CHECK(flat.mean <= 0.55);

    CHECK(repeated_cv_concordance(one_column(noise, t, e), opt).per_repeat == flat.per_repeat);
    opt.jobs = 4;
    CHECK(repeated_cv_concordance(one_column(noise, t, e), opt).per_repeat == flat.per_repeat);
}

TEST_CASE("fully mediated steps lose significance") {
    Gen g(31);
    const int reps = 50, n = 600;
    int not_significant = 0;
    for (int r = 0; r < reps; ++r) {
        SurvivalDataset d;
        d.x.resize(n, 2);
        for (int i = 0; i < n; ++i) {
            const double mims = g.normal();
            const double steps = 8000 + 2500 * (0.7 * mims + 0.7 * g.normal());
            const double h = 0.01 * std::exp(-0.6 * mims);
            const double ti = -std::log(g.uniform(1e-12, 1)) / h, ci = -std::log(g.uniform(1e-12, 1)) / 0.01;
            d.x(i, 0) = steps;
            d.x(i, 1) = mims;
            d.time.push_back(std::ceil(std::min(ti, ci)));
            d.event.push_back(ti <= ci);
            d.weight.push_back(g.uniform(0.5, 3));
        }
        d.names = {"steps", "mims"};
        const auto fit = cox_fit(d);
        not_significant += fit.p_value("steps") > 0.05;
    }
    CHECK(not_significant >= 40);
}
