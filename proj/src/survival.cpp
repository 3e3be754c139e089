#include "stepforge/survival.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "stepforge/parallel.hpp"

namespace stepforge::survival {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

// ---------------------------------------------------------------------------
// Dataset

std::size_t SurvivalDataset::n_events() const noexcept {
    return static_cast<std::size_t>(std::count(event.begin(), event.end(), true));
}

std::size_t SurvivalDataset::column(const std::string& name) const {
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw InputError("unknown covariate '" + name + "'");
    return static_cast<std::size_t>(it - names.begin());
}

void SurvivalDataset::validate() const {
    const std::size_t n = time.size();
    if (event.size() != n || weight.size() != n || static_cast<std::size_t>(x.rows()) != n)
        throw InputError("survival data: fields have different lengths");
    if (static_cast<std::size_t>(x.cols()) != names.size()) throw InputError("survival data: column names misaligned");
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(time[i]) || time[i] < 0.0) throw InputError("survival data: invalid follow-up time");
        if (!(weight[i] > 0.0) || !std::isfinite(weight[i])) throw InputError("survival data: weights must be > 0");
    }
    if (!x.allFinite()) throw InputError("survival data: missing or non-finite covariate");
    if (n_events() == 0) throw InputError("survival data: no events");
}

SurvivalDataset SurvivalDataset::subset(std::span<const std::size_t> rows) const {
    SurvivalDataset out;
    out.names = names;
    out.scaling = scaling;
    out.x.resize(static_cast<Eigen::Index>(rows.size()), x.cols());
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const std::size_t i = rows[k];
        out.time.push_back(time[i]);
        out.event.push_back(event[i]);
        out.weight.push_back(weight[i]);
        out.x.row(static_cast<Eigen::Index>(k)) = x.row(static_cast<Eigen::Index>(i));
    }
    return out;
}

SurvivalDataset SurvivalDataset::select(const std::vector<std::string>& columns) const {
    SurvivalDataset out;
    out.time = time;
    out.event = event;
    out.weight = weight;
    out.x.resize(x.rows(), static_cast<Eigen::Index>(columns.size()));
    for (std::size_t c = 0; c < columns.size(); ++c) {
        out.x.col(static_cast<Eigen::Index>(c)) = x.col(static_cast<Eigen::Index>(column(columns[c])));
        out.names.push_back(columns[c]);
        if (auto it = scaling.find(columns[c]); it != scaling.end()) out.scaling.insert(*it);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Partial likelihood

namespace {

// Rows in descending time with the extent of each tied-time group.
struct RiskOrder {
    std::vector<std::size_t> order;
    std::vector<std::pair<std::size_t, std::size_t>> groups;  // [begin, end) into order
};

RiskOrder risk_order(const std::vector<double>& time) {
    RiskOrder ro;
    ro.order.resize(time.size());
    std::iota(ro.order.begin(), ro.order.end(), 0);
    std::stable_sort(ro.order.begin(), ro.order.end(), [&](std::size_t a, std::size_t b) { return time[a] > time[b]; });
    std::size_t b = 0;
    for (std::size_t i = 1; i <= ro.order.size(); ++i) {
        if (i == ro.order.size() || time[ro.order[i]] != time[ro.order[b]]) {
            ro.groups.emplace_back(b, i);
            b = i;
        }
    }
    return ro;
}

struct Eval {
    double loglik = 0.0;
    Eigen::VectorXd score;
    Eigen::MatrixXd info;
};

Eval evaluate(const Eigen::MatrixXd& z, const std::vector<double>& w, const std::vector<bool>& ev,
              const RiskOrder& ro, const Eigen::VectorXd& gamma, bool derivatives) {
    const Eigen::Index p = z.cols();
    const Eigen::VectorXd eta = z * gamma;
    const double shift = eta.size() ? eta.maxCoeff() : 0.0;
    Eval out;
    out.score = Eigen::VectorXd::Zero(p);
    out.info = Eigen::MatrixXd::Zero(p, p);
    double s0 = 0.0;
    Eigen::VectorXd s1 = Eigen::VectorXd::Zero(p);
    Eigen::MatrixXd s2 = Eigen::MatrixXd::Zero(p, p);
    for (const auto& [b, e] : ro.groups) {
        for (std::size_t k = b; k < e; ++k) {
            const auto i = static_cast<Eigen::Index>(ro.order[k]);
            const double r = w[ro.order[k]] * std::exp(eta(i) - shift);
            s0 += r;
            if (derivatives) {
                s1.noalias() += r * z.row(i).transpose();
                s2.noalias() += r * z.row(i).transpose() * z.row(i);
            }
        }
        const double log_s0 = std::log(s0) + shift;
        for (std::size_t k = b; k < e; ++k) {
            const std::size_t i = ro.order[k];
            if (!ev[i]) continue;
            out.loglik += w[i] * (eta(static_cast<Eigen::Index>(i)) - log_s0);
            if (derivatives) {
                const Eigen::VectorXd zbar = s1 / s0;
                out.score.noalias() += w[i] * (z.row(static_cast<Eigen::Index>(i)).transpose() - zbar);
                out.info.noalias() += w[i] * (s2 / s0 - zbar * zbar.transpose());
            }
        }
    }
    return out;
}

// Per-row score residuals at gamma (rows of the returned matrix).
Eigen::MatrixXd score_residuals(const Eigen::MatrixXd& z, const std::vector<double>& w, const std::vector<bool>& ev,
                                const std::vector<double>& time, const RiskOrder& ro, const Eigen::VectorXd& gamma) {
    const Eigen::Index p = z.cols();
    const auto n = static_cast<Eigen::Index>(time.size());
    const Eigen::VectorXd eta = z * gamma;
    const double shift = n ? eta.maxCoeff() : 0.0;

    // Risk-set sums at each tie group (descending time).
    std::vector<double> s0g(ro.groups.size());
    std::vector<Eigen::VectorXd> zbar_g(ro.groups.size());
    double s0 = 0.0;
    Eigen::VectorXd s1 = Eigen::VectorXd::Zero(p);
    for (std::size_t g = 0; g < ro.groups.size(); ++g) {
        for (std::size_t k = ro.groups[g].first; k < ro.groups[g].second; ++k) {
            const auto i = static_cast<Eigen::Index>(ro.order[k]);
            const double r = w[ro.order[k]] * std::exp(eta(i) - shift);
            s0 += r;
            s1.noalias() += r * z.row(i).transpose();
        }
        s0g[g] = s0;
        zbar_g[g] = s1 / s0;
    }
    // Cumulative hazard increments in ascending time: A = sum w_k / S0, B = sum w_k zbar / S0.
    Eigen::MatrixXd resid = Eigen::MatrixXd::Zero(n, p);
    double a = 0.0;
    Eigen::VectorXd bsum = Eigen::VectorXd::Zero(p);
    for (std::size_t gg = ro.groups.size(); gg-- > 0;) {
        const auto [b, e] = ro.groups[gg];
        double dw = 0.0;
        for (std::size_t k = b; k < e; ++k) {
            if (ev[ro.order[k]]) dw += w[ro.order[k]];
        }
        a += dw / s0g[gg];
        bsum.noalias() += dw / s0g[gg] * zbar_g[gg];
        for (std::size_t k = b; k < e; ++k) {
            const std::size_t i = ro.order[k];
            const auto ii = static_cast<Eigen::Index>(i);
            const double r = std::exp(eta(ii) - shift);
            Eigen::VectorXd u = -r * (a * z.row(ii).transpose() - bsum);
            if (ev[i]) u += z.row(ii).transpose() - zbar_g[gg];
            resid.row(ii) = u.transpose();
        }
    }
    return resid;
}

}  // namespace

double partial_loglik(const SurvivalDataset& data, const Eigen::VectorXd& beta) {
    if (beta.size() != data.x.cols()) throw InputError("partial likelihood: coefficient count mismatch");
    return evaluate(data.x, data.weight, data.event, risk_order(data.time), beta, false).loglik;
}

// ---------------------------------------------------------------------------
// Fit

std::size_t CoxFit::index_of(const std::string& name) const {
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw InputError("covariate '" + name + "' is not in the fit");
    return static_cast<std::size_t>(it - names.begin());
}

double CoxFit::se(const std::string& name) const {
    const auto j = static_cast<Eigen::Index>(index_of(name));
    return std::sqrt(covariance(j, j));
}

double CoxFit::p_value(const std::string& name) const {
    const double b = beta(static_cast<Eigen::Index>(index_of(name)));
    return std::erfc(std::abs(b / se(name)) / std::sqrt(2.0));
}

Eigen::VectorXd CoxFit::linear_predictor(const Eigen::MatrixXd& x) const {
    if (x.cols() != beta.size()) throw InputError("linear predictor: column count mismatch");
    Eigen::VectorXd b = beta;
    for (Eigen::Index j = 0; j < b.size(); ++j) {
        if (std::isnan(b(j))) b(j) = 0.0;
    }
    return x * b;
}

CoxFit cox_fit(const SurvivalDataset& data, const CoxOptions& opt) {
    data.validate();
    const auto n = static_cast<Eigen::Index>(data.rows());
    const Eigen::Index p = data.x.cols();
    CoxFit fit;
    fit.names = data.names;
    fit.n_events = data.n_events();
    fit.aliased.assign(static_cast<std::size_t>(p), false);

    // Centre and scale internally; constant columns are aliased with the baseline.
    Eigen::VectorXd centre(p), scale(p);
    for (Eigen::Index j = 0; j < p; ++j) {
        centre(j) = data.x.col(j).mean();
        const double ss = (data.x.col(j).array() - centre(j)).square().sum();
        scale(j) = std::sqrt(ss / static_cast<double>(std::max<Eigen::Index>(n - 1, 1)));
        if (!(scale(j) > 1e-12 * std::max(1.0, std::abs(centre(j))))) fit.aliased[static_cast<std::size_t>(j)] = true;
    }
    std::vector<Eigen::Index> live;
    for (Eigen::Index j = 0; j < p; ++j) {
        if (!fit.aliased[static_cast<std::size_t>(j)]) live.push_back(j);
    }
    Eigen::MatrixXd z(n, static_cast<Eigen::Index>(live.size()));
    for (std::size_t c = 0; c < live.size(); ++c)
        z.col(static_cast<Eigen::Index>(c)) = (data.x.col(live[c]).array() - centre(live[c])) / scale(live[c]);

    if (!live.empty()) {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(z);
        qr.setThreshold(1e-10);
        const Eigen::Index rank = qr.rank();
        if (rank < z.cols()) {
            std::vector<bool> drop(live.size(), false);
            for (Eigen::Index k = rank; k < z.cols(); ++k) drop[static_cast<std::size_t>(qr.colsPermutation().indices()(k))] = true;
            std::vector<Eigen::Index> kept;
            Eigen::MatrixXd zk(n, rank);
            for (std::size_t c = 0; c < live.size(); ++c) {
                if (drop[c]) {
                    fit.aliased[static_cast<std::size_t>(live[c])] = true;
                } else {
                    zk.col(static_cast<Eigen::Index>(kept.size())) = z.col(static_cast<Eigen::Index>(c));
                    kept.push_back(live[c]);
                }
            }
            live = std::move(kept);
            z = std::move(zk);
        }
    }
    if (!opt.drop_aliased) {
        for (Eigen::Index j = 0; j < p; ++j) {
            if (fit.aliased[static_cast<std::size_t>(j)])
                throw InputError("design matrix is rank deficient (aliased column '" + data.names[static_cast<std::size_t>(j)] + "')");
        }
    }

    const RiskOrder ro = risk_order(data.time);
    const Eigen::Index q = z.cols();
    // Iterate on mean-one weights so a uniform rescaling of the weights takes
    // the same path; log-likelihoods are mapped back afterwards.
    const double wscale = std::accumulate(data.weight.begin(), data.weight.end(), 0.0) / static_cast<double>(n);
    std::vector<double> unit_w(data.weight.size());
    double event_w = 0.0;
    for (std::size_t i = 0; i < unit_w.size(); ++i) {
        unit_w[i] = data.weight[i] / wscale;
        if (data.event[i]) event_w += unit_w[i];
    }
    Eigen::VectorXd gamma = Eigen::VectorXd::Zero(q);
    Eval cur = evaluate(z, unit_w, data.event, ro, gamma, true);
    fit.loglik_seq.push_back(cur.loglik);
    if (q == 0) fit.converged = true;
    for (int it = 0; it < opt.max_iter && q > 0; ++it) {
        Eigen::LDLT<Eigen::MatrixXd> ldlt(cur.info);
        Eigen::VectorXd step = ldlt.solve(cur.score);
        if (ldlt.info() != Eigen::Success || !step.allFinite()) break;
        Eval next;
        Eigen::VectorXd cand;
        bool accepted = false;
        for (int half = 0; half < 40; ++half) {
            cand = gamma + step;
            next = evaluate(z, unit_w, data.event, ro, cand, true);
            if (std::isfinite(next.loglik) && next.loglik >= cur.loglik) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        fit.iterations = it + 1;
        if (!accepted) {
            // No ascent direction left at working precision.
            fit.converged = cur.score.norm() < 1e-6 * std::max(1.0, std::abs(cur.loglik));
            break;
        }
        const double change = std::abs(next.loglik - cur.loglik);
        gamma = cand;
        cur = std::move(next);
        fit.loglik_seq.push_back(cur.loglik);
        if (change <= opt.tol * (std::abs(cur.loglik) + opt.tol)) {
            fit.converged = true;
            break;
        }
    }
    // Newton steps past the stopping rule while the score keeps shrinking, so
    // the estimate does not depend on where the rule fired. The likelihood is
    // flat to rounding here; these steps are not logged.
    for (int polish = 0; polish < 5 && fit.converged && q > 0; ++polish) {
        Eigen::LDLT<Eigen::MatrixXd> ldlt(cur.info);
        const Eigen::VectorXd step = ldlt.solve(cur.score);
        if (ldlt.info() != Eigen::Success || !step.allFinite()) break;
        Eval next = evaluate(z, unit_w, data.event, ro, gamma + step, true);
        if (!(next.score.norm() < cur.score.norm())) break;
        gamma += step;
        cur = std::move(next);
    }
    for (double& ll : fit.loglik_seq) ll = wscale * ll - wscale * std::log(wscale) * event_w;

    // Covariances on the internal scale, then back to original units.
    Eigen::MatrixXd naive_g = Eigen::MatrixXd::Zero(q, q), robust_g = Eigen::MatrixXd::Zero(q, q);
    if (q > 0) {
        const Eval at = evaluate(z, data.weight, data.event, ro, gamma, true);
        Eigen::LDLT<Eigen::MatrixXd> ldlt(at.info);
        naive_g = ldlt.solve(Eigen::MatrixXd::Identity(q, q));
        const Eigen::MatrixXd u = score_residuals(z, data.weight, data.event, data.time, ro, gamma);
        Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(q, q);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double wi = data.weight[static_cast<std::size_t>(i)];
            meat.noalias() += wi * wi * u.row(i).transpose() * u.row(i);
        }
        robust_g = naive_g * meat * naive_g;
        robust_g = 0.5 * (robust_g + robust_g.transpose()).eval();
    }
    fit.beta = Eigen::VectorXd::Constant(p, kNaN);
    fit.covariance = Eigen::MatrixXd::Constant(p, p, kNaN);
    fit.naive_covariance = Eigen::MatrixXd::Constant(p, p, kNaN);
    for (std::size_t a = 0; a < live.size(); ++a) {
        const auto ia = static_cast<Eigen::Index>(a);
        fit.beta(live[a]) = gamma(ia) / scale(live[a]);
        for (std::size_t b = 0; b < live.size(); ++b) {
            const auto ib = static_cast<Eigen::Index>(b);
            const double d = scale(live[a]) * scale(live[b]);
            fit.covariance(live[a], live[b]) = robust_g(ia, ib) / d;
            fit.naive_covariance(live[a], live[b]) = naive_g(ia, ib) / d;
        }
    }
    return fit;
}

HazardRatio hazard_ratio(const CoxFit& fit, const std::string& covariate, double delta) {
    const auto j = static_cast<Eigen::Index>(fit.index_of(covariate));
    const double b = fit.beta(j);
    const double se = std::sqrt(fit.covariance(j, j));
    const double a = std::exp(delta * (b - 1.96 * se)), c = std::exp(delta * (b + 1.96 * se));
    return {std::exp(delta * b), std::min(a, c), std::max(a, c)};
}

SurvivalDataset standardize(const SurvivalDataset& data, const std::string& covariate) {
    const auto j = static_cast<Eigen::Index>(data.column(covariate));
    const auto n = data.x.rows();
    if (n < 2) throw InputError("standardize: need at least two rows");
    const double mean = data.x.col(j).mean();
    const double sd = std::sqrt((data.x.col(j).array() - mean).square().sum() / static_cast<double>(n - 1));
    if (!(sd > 0.0)) throw InputError("standardize: '" + covariate + "' has zero variance");
    SurvivalDataset out = data;
    out.x.col(j) = (data.x.col(j).array() - mean) / sd;
    out.scaling[covariate] = {mean, sd};
    return out;
}

// ---------------------------------------------------------------------------
// Concordance

double concordance(std::span<const double> lp, std::span<const double> time, const std::vector<bool>& event,
                   std::span<const double> weight) {
    const std::size_t n = lp.size();
    if (time.size() != n || event.size() != n || weight.size() != n)
        throw InputError("concordance: inputs have different lengths");

    std::vector<double> levels(lp.begin(), lp.end());
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    const std::size_t m = levels.size();
    std::vector<double> tree(m + 1, 0.0);
    auto add = [&](std::size_t pos, double v) {
        for (++pos; pos <= m; pos += pos & (~pos + 1)) tree[pos] += v;
    };
    auto prefix = [&](std::size_t count) {  // sum over the first `count` levels
        double s = 0.0;
        for (std::size_t pos = count; pos > 0; pos -= pos & (~pos + 1)) s += tree[pos];
        return s;
    };
    auto rank_of = [&](double v) {
        return static_cast<std::size_t>(std::lower_bound(levels.begin(), levels.end(), v) - levels.begin());
    };

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return time[a] > time[b]; });

    double total = 0.0, concordant = 0.0, in_tree = 0.0;
    std::size_t b = 0;
    while (b < n) {
        std::size_t e = b;
        while (e < n && time[order[e]] == time[order[b]]) ++e;
        for (std::size_t k = b; k < e; ++k) {
            const std::size_t i = order[k];
            if (!event[i] || in_tree == 0.0) continue;
            const std::size_t r = rank_of(lp[i]);
            const double below = prefix(r);
            const double equal = prefix(r + 1) - below;
            total += weight[i] * in_tree;
            concordant += weight[i] * (below + 0.5 * equal);
        }
        for (std::size_t k = b; k < e; ++k) {
            add(rank_of(lp[order[k]]), weight[order[k]]);
            in_tree += weight[order[k]];
        }
        b = e;
    }
    if (!(total > 0.0)) throw InputError("concordance: no comparable pairs");
    return concordant / total;
}

// ---------------------------------------------------------------------------
// Cross-validation

namespace {

std::vector<int> deal_folds(const std::vector<bool>& event, int k, Rng& rng) {
    std::vector<std::size_t> ev, nev;
    for (std::size_t i = 0; i < event.size(); ++i) (event[i] ? ev : nev).push_back(i);
    rng.shuffle(ev);
    rng.shuffle(nev);
    std::vector<int> fold(event.size(), 0);
    std::size_t pos = 0;
    for (const auto* list : {&ev, &nev}) {
        for (std::size_t i : *list) fold[i] = static_cast<int>(pos++ % static_cast<std::size_t>(k));
    }
    return fold;
}

}  // namespace

std::vector<int> make_fold_plan(const std::vector<bool>& event, int k, std::uint64_t seed, int repeat) {
    if (k < 2) throw InputError("cross-validation needs at least 2 folds");
    if (event.size() < static_cast<std::size_t>(k)) throw InputError("fewer rows than folds");
    Rng rng(seed + static_cast<std::uint64_t>(repeat));
    return deal_folds(event, k, rng);
}

CvResult repeated_cv_concordance(const SurvivalDataset& data, const CvOptions& opt) {
    data.validate();
    if (opt.folds < 2) throw InputError("cross-validation needs at least 2 folds");
    if (opt.repeats < 1) throw InputError("cross-validation needs at least 1 repeat");
    if (data.rows() < static_cast<std::size_t>(opt.folds)) throw InputError("fewer rows than folds");
    const auto k = static_cast<std::size_t>(opt.folds);

    CvResult res;
    for (int r = 0; r < opt.repeats; ++r) {
        Rng rng(opt.seed + static_cast<std::uint64_t>(r));
        std::vector<double> fold_c(k, kNaN);
        bool ok = false;
        std::string why;
        for (int attempt = 0; attempt < 2 && !ok; ++attempt) {
            const auto plan = deal_folds(data.event, opt.folds, rng);
            try {
                parallel_for(k, opt.jobs, [&](std::size_t f) {
                    std::vector<std::size_t> train, test;
                    for (std::size_t i = 0; i < plan.size(); ++i)
                        (static_cast<std::size_t>(plan[i]) == f ? test : train).push_back(i);
                    const auto tr = data.subset(train);
                    const auto te = data.subset(test);
                    if (te.n_events() == 0) throw InputError("a test fold holds no events");
                    CoxOptions co;
                    co.drop_aliased = true;
                    const auto fit = cox_fit(tr, co);
                    const Eigen::VectorXd lp = fit.linear_predictor(te.x);
                    fold_c[f] = concordance(std::span<const double>(lp.data(), static_cast<std::size_t>(lp.size())),
                                            te.time, te.event, te.weight);
                });
                ok = true;
            } catch (const InputError& e) {
                why = e.what();
            }
        }
        if (!ok) throw InputError("cross-validation repeat " + std::to_string(r) + " failed after replanning: " + why);
        double s = 0.0;
        for (double c : fold_c) s += c;
        res.per_repeat.push_back(s / static_cast<double>(k));
    }
    double s = 0.0;
    for (double c : res.per_repeat) s += c;
    res.mean = s / static_cast<double>(res.per_repeat.size());
    return res;
}

}  // namespace stepforge::survival
