#include "stepforge/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "stepforge/dsp.hpp"

namespace stepforge::stats {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double mean_of(std::span<const double> v) { return dsp::compensated_sum(v) / static_cast<double>(v.size()); }

}  // namespace

double quantile(std::span<const double> values, double p, QuantileRule rule) {
    if (values.empty()) throw InputError("quantile of an empty sample");
    if (!(p >= 0.0 && p <= 1.0)) throw InputError("quantile probability outside [0, 1]");
    std::vector<double> s(values.begin(), values.end());
    std::sort(s.begin(), s.end());
    const auto n = static_cast<double>(s.size());
    if (rule == QuantileRule::Type1) {
        // Guard against n*p landing a hair above an integer.
        const double np = n * p;
        auto k = static_cast<std::size_t>(std::ceil(np - 1e-9 * std::max(1.0, np)));
        k = std::clamp<std::size_t>(k, 1, s.size());
        return s[k - 1];
    }
    const double h = (n - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, s.size() - 1);
    return s[lo] + (h - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

std::vector<double> winsorize_upper(std::span<const double> values, double p, QuantileRule rule) {
    if (values.empty()) throw InputError("winsorize: empty input");
    if (!(p > 0.0 && p < 1.0)) throw InputError("winsorize: percentile must lie in (0, 1)");
    const double cap = quantile(values, p, rule);
    std::vector<double> out(values.begin(), values.end());
    for (double& v : out) v = std::min(v, cap);
    return out;
}

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw InputError("correlation: lengths differ");
    if (x.size() < 2) throw InputError("correlation: need at least two observations");
    const double mx = mean_of(x), my = mean_of(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (!(sxx > 0.0) || !(syy > 0.0)) throw InputError("correlation: zero variance");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> midranks(std::span<const double> x) {
    std::vector<std::size_t> idx(x.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> r(x.size());
    std::size_t i = 0;
    while (i < idx.size()) {
        std::size_t j = i;
        while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
        const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
        i = j + 1;
    }
    return r;
}

double spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw InputError("correlation: lengths differ");
    const auto rx = midranks(x), ry = midranks(y);
    return pearson(rx, ry);
}

CorrelationMatrix correlation_matrix(std::span<const SubjectSummary> subjects, const std::vector<std::string>& variables,
                                     CorrelationMethod method) {
    const std::size_t k = variables.size();
    CorrelationMatrix m;
    m.variables = variables;
    m.values.assign(k, std::vector<double>(k, kNaN));
    m.n_pairs.assign(k, std::vector<std::size_t>(k, 0));
    auto value = [&](const SubjectSummary& s, std::size_t v) -> std::optional<double> {
        auto it = s.means.find(variables[v]);
        if (it == s.means.end() || std::isnan(it->second)) return std::nullopt;
        return it->second;
    };
    for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = a; b < k; ++b) {
            std::vector<double> xa, xb;
            for (const auto& s : subjects) {
                auto va = value(s, a), vb = value(s, b);
                if (va && vb) {
                    xa.push_back(*va);
                    xb.push_back(*vb);
                }
            }
            double r = kNaN;
            if (xa.size() >= 2) {
                try {
                    r = a == b ? 1.0 : (method == CorrelationMethod::Spearman ? spearman(xa, xb) : pearson(xa, xb));
                    if (a == b) (void)pearson(xa, xb);  // NaN diagonal for constant variables
                } catch (const InputError&) {
                    r = kNaN;
                }
            }
            m.values[a][b] = m.values[b][a] = r;
            m.n_pairs[a][b] = m.n_pairs[b][a] = xa.size();
        }
    }
    return m;
}

MeanSe weighted_mean_se(std::span<const double> values, std::span<const double> weights,
                        std::span<const std::string> strata, std::span<const std::string> psu) {
    const std::size_t n = values.size();
    if (n == 0) throw InputError("weighted mean of an empty sample");
    if (weights.size() != n) throw InputError("weighted mean: weight count differs from value count");
    if ((!strata.empty() && strata.size() != n) || (!psu.empty() && psu.size() != n))
        throw InputError("weighted mean: design fields misaligned");
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw InputError("weighted mean: weights must be finite and >= 0");
    }
    const double wsum = dsp::compensated_sum(weights);
    if (!(wsum > 0.0)) throw InputError("weighted mean: weights sum to zero");
    // Normalized first, so a single positive weight reproduces its value exactly.
    std::vector<double> u(n), ux(n);
    for (std::size_t i = 0; i < n; ++i) {
        u[i] = weights[i] / wsum;
        ux[i] = u[i] * values[i];
    }
    const double mean = dsp::compensated_sum(ux);

    // PSU totals of the linearized values within each stratum.
    std::map<std::string, std::map<std::string, double>> totals;
    for (std::size_t i = 0; i < n; ++i) {
        const std::string h = strata.empty() ? std::string() : strata[i];
        const std::string j = psu.empty() ? std::to_string(i) : psu[i];
        totals[h][j] += u[i] * (values[i] - mean);
    }
    double var = 0.0;
    for (const auto& [h, psus] : totals) {
        const std::size_t nh = psus.size();
        if (nh < 2) continue;
        double zbar = 0.0;
        for (const auto& [j, z] : psus) zbar += z;
        zbar /= static_cast<double>(nh);
        double ss = 0.0;
        for (const auto& [j, z] : psus) ss += (z - zbar) * (z - zbar);
        var += static_cast<double>(nh) / static_cast<double>(nh - 1) * ss;
    }
    return {mean, std::sqrt(var)};
}

namespace {

// Weighted local-linear estimate at x0; nullopt when the weighted points do
// not span two distinct x values.
std::optional<double> local_linear(const std::vector<double>& x, const std::vector<double>& y,
                                   const std::vector<double>& w, double x0) {
    double sw = 0.0, sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sw += w[i];
        sx += w[i] * x[i];
        sy += w[i] * y[i];
    }
    if (!(sw > 0.0)) return std::nullopt;
    const double xb = sx / sw, yb = sy / sw;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += w[i] * (x[i] - xb) * (x[i] - xb);
        sxy += w[i] * (x[i] - xb) * (y[i] - yb);
    }
    if (!(sxx > 1e-12 * sw)) return yb;
    return yb + sxy / sxx * (x0 - xb);
}

}  // namespace

std::vector<CurvePoint> local_weighted_smooth(std::span<const double> x, std::span<const double> y,
                                              std::span<const double> se, double span, std::vector<double> at) {
    const std::size_t n = x.size();
    if (y.size() != n || (!se.empty() && se.size() != n)) throw InputError("smoother: input lengths differ");
    if (!(span > 0.0)) throw InputError("smoother: span must be positive");
    std::vector<double> distinct(x.begin(), x.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < 5) throw InputError("smoother: need at least 5 distinct x values");
    if (at.empty()) {
        for (double a = std::ceil(distinct.front()); a <= std::floor(distinct.back()); a += 1.0) at.push_back(a);
    }
    const auto q = std::clamp<std::size_t>(static_cast<std::size_t>(std::floor(span * static_cast<double>(n))), 1, n);

    std::vector<double> xs(x.begin(), x.end()), ys(y.begin(), y.end());
    std::vector<double> ses(n, kNaN);
    if (!se.empty()) ses.assign(se.begin(), se.end());

    std::vector<CurvePoint> out;
    std::vector<double> d(n), w(n), w_se(n), sorted(n);
    for (double x0 : at) {
        for (std::size_t i = 0; i < n; ++i) d[i] = std::abs(xs[i] - x0);
        sorted = d;
        std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(q - 1), sorted.end());
        double dmax = sorted[q - 1];
        if (span > 1.0) dmax *= span;
        std::size_t positive = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double u = dmax > 0.0 ? d[i] / dmax : (d[i] == 0.0 ? 0.0 : 1.0);
            w[i] = u < 1.0 ? std::pow(1.0 - u * u * u, 3) : 0.0;
            positive += w[i] > 0.0;
            w_se[i] = std::isnan(ses[i]) ? 0.0 : w[i];
        }
        if (positive < 3) throw InputError("smoother: span too small for a local fit");
        auto est = local_linear(xs, ys, w, x0);
        if (!est) throw InputError("smoother: degenerate neighbourhood");
        std::vector<double> ses0(n);
        for (std::size_t i = 0; i < n; ++i) ses0[i] = std::isnan(ses[i]) ? 0.0 : ses[i];
        const double s = local_linear(xs, ses0, w_se, x0).value_or(kNaN);
        out.push_back({x0, *est, s, *est - 1.96 * s, *est + 1.96 * s});
    }
    return out;
}

std::vector<PercentChange> percent_change_by_age(std::span<const CurvePoint> curve) {
    std::vector<PercentChange> out;
    for (std::size_t i = 1; i < curve.size(); ++i) {
        if (curve[i].x != curve[i - 1].x + 1.0) throw InputError("percent change: ages are not consecutive");
        if (curve[i - 1].estimate == 0.0) throw InputError("percent change: zero baseline");
        out.push_back({curve[i].x, 100.0 * (curve[i].estimate - curve[i - 1].estimate) / curve[i - 1].estimate});
    }
    return out;
}

double between_wave_percent_diff(double a, double b) {
    if (!(a > 0.0) || !(b > 0.0)) throw InputError("percent difference needs positive estimates");
    return 100.0 * std::abs(a - b) / ((a + b) / 2.0);
}

}  // namespace stepforge::stats
