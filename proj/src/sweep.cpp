#include "tdlab/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "tdlab/error.hpp"
#include "tdlab/rng.hpp"

namespace tdlab::sweep {

namespace {

std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

double mean(const Vector& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
}

double sample_variance(const Vector& v, double m) {
    double acc = 0.0;
    for (double x : v) acc += (x - m) * (x - m);
    return acc / double(v.size() - 1);
}

void check_range(const Range& r, const char* what) {
    if (!(std::isfinite(r.lo) && std::isfinite(r.hi)) || !(r.lo < r.hi)) {
        throw InvalidArg(std::string("sweep spec: degenerate ") + what + " range");
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// Spec, sampling, records
// ---------------------------------------------------------------------------

Range resolved_lr_range(const SweepSpec& spec, optim::OptimizerKind kind) {
    switch (kind) {
        case optim::OptimizerKind::Tdprop:
            if (spec.lr_tdprop) return *spec.lr_tdprop;
            return spec.literal_notation ? Range{1e-7, 1e-2} : Range{1e-8, 1e-3};
        case optim::OptimizerKind::Adam:
            if (spec.lr_adam) return *spec.lr_adam;
            return spec.literal_notation ? Range{1e-7, 1e-2} : Range{1e-8, 1e-3};
        case optim::OptimizerKind::Sgd:
            if (spec.lr_sgd) return *spec.lr_sgd;
            return spec.literal_notation ? Range{1e-3, 10.0} : Range{1e-4, 1.0};
    }
    throw InvalidArg("sweep spec: unknown optimizer kind");
}

Range resolved_beta2_range(const SweepSpec& spec) {
    return spec.beta2_range ? *spec.beta2_range : Range{0.0, 1.0};
}

Range resolved_epsilon_range(const SweepSpec& spec) {
    if (spec.epsilon_range) return *spec.epsilon_range;
    return spec.literal_notation ? Range{1e-7, 1.0} : Range{1e-8, 1e-1};
}

void validate(const SweepSpec& spec) {
    if (spec.kinds.empty()) throw InvalidArg("sweep spec: no optimizer kinds");
    if (spec.samples_per_kind < 1) throw InvalidArg("sweep spec: samples_per_kind must be >= 1");
    for (auto kind : spec.kinds) check_range(resolved_lr_range(spec, kind), "learning-rate");
    check_range(resolved_beta2_range(spec), "beta2");
    check_range(resolved_epsilon_range(spec), "epsilon");
    if (spec.qfunction != "tabular" && spec.qfunction != "linear" && spec.qfunction != "mlp") {
        throw InvalidArg("sweep spec: unknown qfunction '" + spec.qfunction + "'");
    }
    if (spec.qfunction == "mlp" && spec.mlp_hidden == 0) {
        throw InvalidArg("sweep spec: mlp_hidden must be positive");
    }
    agent::env_from_name(spec.env, 0);  // rejects unknown environments
    if (spec.base.total_steps < 1) throw InvalidArg("sweep spec: base.total_steps must be set");
}

std::vector<SampledConfig> sample_configs(const SweepSpec& spec, std::uint64_t seed) {
    validate(spec);
    Rng rng(seed);
    std::vector<SampledConfig> out;
    out.reserve(spec.kinds.size() * spec.samples_per_kind);
    for (auto kind : spec.kinds) {
        Range lr = resolved_lr_range(spec, kind);
        Range b2 = resolved_beta2_range(spec);
        Range eps = resolved_epsilon_range(spec);
        for (std::size_t i = 0; i < spec.samples_per_kind; ++i) {
            SampledConfig cfg;
            cfg.kind = kind;
            cfg.lr = rng.uniform(lr.lo, lr.hi);
            cfg.beta2 = rng.uniform(b2.lo, b2.hi);
            cfg.epsilon = rng.uniform(eps.lo, eps.hi);
            cfg.seed = rng.next_u64();
            out.push_back(cfg);
        }
    }
    return out;
}

std::string records_csv(const std::vector<SweepRecord>& records) {
    std::string out = "kind,lr,beta2,epsilon,seed,avg_return,asymptotic_return,diverged\n";
    for (const SweepRecord& r : records) {
        out += optim::kind_name(r.kind) + "," + fmt17(r.lr) + "," + fmt17(r.beta2) + "," +
               fmt17(r.epsilon) + "," + std::to_string(r.seed) + "," + fmt17(r.avg_return) +
               "," + fmt17(r.asymptotic_return) + "," + (r.diverged ? "1" : "0") + "\n";
    }
    return out;
}

std::vector<SweepRecord> records_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw InvalidArg("records csv: empty input");
    if (line == "kind,lr,beta2,epsilon,seed,avg_return,asymptotic_return,diverged\r") {
        line.pop_back();
    }
    if (line != "kind,lr,beta2,epsilon,seed,avg_return,asymptotic_return,diverged") {
        throw InvalidArg("records csv: unexpected header '" + line + "'");
    }
    std::vector<SweepRecord> out;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::size_t pos = 0;
        while (true) {
            std::size_t comma = line.find(',', pos);
            cells.push_back(line.substr(pos, comma - pos));
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        if (cells.size() != 8) {
            throw InvalidArg("records csv: expected 8 columns, got line '" + line + "'");
        }
        try {
            SweepRecord r;
            r.kind = optim::kind_from_name(cells[0]);
            r.lr = std::stod(cells[1]);
            r.beta2 = std::stod(cells[2]);
            r.epsilon = std::stod(cells[3]);
            r.seed = std::stoull(cells[4]);
            r.avg_return = std::stod(cells[5]);
            r.asymptotic_return = std::stod(cells[6]);
            r.diverged = cells[7] == "1";
            out.push_back(r);
        } catch (const std::logic_error&) {
            throw InvalidArg("records csv: unparseable line '" + line + "'");
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Normalization, percentile filtering
// ---------------------------------------------------------------------------

NormalizeResult normalize_returns(const std::vector<SweepRecord>& records) {
    if (records.empty()) throw InvalidArg("normalize_returns: no records");
    NormalizeResult out;
    out.records = records;
    for (const SweepRecord& r : records) {
        out.max_avg_return = std::max(out.max_avg_return, r.avg_return);
        out.max_asymptotic_return = std::max(out.max_asymptotic_return, r.asymptotic_return);
    }
    if (out.max_avg_return <= 0.0 || out.max_asymptotic_return <= 0.0) {
        out.applied = false;  // nothing positive to scale by; hand back raw values
        return out;
    }
    for (SweepRecord& r : out.records) {
        r.avg_return /= out.max_avg_return;
        r.asymptotic_return /= out.max_asymptotic_return;
    }
    out.applied = true;
    return out;
}

double quantile(Vector sample, double prob) {
    if (sample.empty()) throw InvalidArg("quantile: empty sample");
    if (!(prob >= 0.0 && prob <= 1.0)) throw InvalidArg("quantile: prob must lie in [0,1]");
    std::sort(sample.begin(), sample.end());
    double h = prob * double(sample.size() - 1);
    std::size_t lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= sample.size()) return sample.back();
    double frac = h - double(lo);
    return sample[lo] + frac * (sample[lo + 1] - sample[lo]);
}

std::vector<SweepRecord> top_percentile(const std::vector<SweepRecord>& records, double q) {
    if (records.empty()) throw InvalidArg("top_percentile: no records");
    if (!(q > 0.0 && q <= 1.0)) throw InvalidArg("top_percentile: q must lie in (0,1]");
    Vector values;
    values.reserve(records.size());
    for (const SweepRecord& r : records) values.push_back(r.avg_return);
    double threshold = quantile(values, 1.0 - q);
    std::vector<SweepRecord> out;
    for (const SweepRecord& r : records) {
        if (r.avg_return >= threshold) out.push_back(r);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Welch's t-test
// ---------------------------------------------------------------------------

namespace {

// Continued fraction for the incomplete beta (modified Lentz iteration).
double beta_continued_fraction(double a, double b, double x) {
    const double eps = 1e-14;
    const double fpmin = 1e-300;
    double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < fpmin) d = fpmin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 300; ++m) {
        double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::abs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::abs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < eps) return h;
    }
    throw NoConvergence("incomplete beta: continued fraction stalled");
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0 && b > 0.0)) throw InvalidArg("incomplete beta: parameters must be positive");
    if (!(x >= 0.0 && x <= 1.0)) throw InvalidArg("incomplete beta: x must lie in [0,1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    double front = std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log1p(-x));
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * beta_continued_fraction(a, b, x) / a;
    }
    return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

WelchResult welch_t_test(const Vector& sample_a, const Vector& sample_b) {
    if (sample_a.size() < 2 || sample_b.size() < 2) {
        throw DegenerateSample("welch: both samples need at least 2 points");
    }
    double na = double(sample_a.size()), nb = double(sample_b.size());
    double ma = mean(sample_a), mb = mean(sample_b);
    double va = sample_variance(sample_a, ma), vb = sample_variance(sample_b, mb);
    if (!std::isfinite(va) || !std::isfinite(vb)) {
        throw DegenerateSample("welch: non-finite variance");
    }
    WelchResult out;
    if (va == 0.0 && vb == 0.0) {
        if (ma == mb) {  // indistinguishable constants: p = 1 by convention
            out.t = 0.0;
            out.dof = na + nb - 2.0;
            out.p = 1.0;
            return out;
        }
        throw DegenerateSample("welch: zero variance with unequal means");
    }
    double sa = va / na, sb = vb / nb;
    out.t = (ma - mb) / std::sqrt(sa + sb);
    out.dof = (sa + sb) * (sa + sb) / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    out.p = regularized_incomplete_beta(out.dof / 2.0, 0.5,
                                        out.dof / (out.dof + out.t * out.t));
    return out;
}

std::string p_annotation(double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidArg("p_annotation: p must lie in [0,1]");
    if (p <= 0.0001) return "****";
    if (p <= 0.001) return "***";
    if (p <= 0.01) return "**";
    if (p <= 0.05) return "*";
    return "ns";
}

// ---------------------------------------------------------------------------
// Bootstrap
// ---------------------------------------------------------------------------

BootstrapCi bootstrap_ci(const Vector& sample, std::size_t b, double level, std::uint64_t seed) {
    if (sample.size() < 2) throw DegenerateSample("bootstrap: sample needs at least 2 points");
    if (b < 1) throw InvalidArg("bootstrap: need at least one resample");
    if (!(level > 0.0 && level < 1.0)) throw InvalidArg("bootstrap: level must lie in (0,1)");
    Rng rng(seed);
    Vector means(b);
    for (std::size_t i = 0; i < b; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < sample.size(); ++j) {
            acc += sample[rng.uniform_int(sample.size())];
        }
        means[i] = acc / double(sample.size());
    }
    BootstrapCi out;
    out.point = mean(sample);
    out.lo = quantile(means, (1.0 - level) / 2.0);
    out.hi = quantile(std::move(means), (1.0 + level) / 2.0);
    return out;
}

// ---------------------------------------------------------------------------
// Ordinary least squares
// ---------------------------------------------------------------------------

OlsResult ols_regression(const Matrix& covariates, const std::vector<std::string>& names,
                         const Vector& response, bool standardize, bool interactions) {
    std::size_t n = response.size();
    std::size_t k = covariates.cols();
    if (covariates.rows() != n) throw DimMismatch("ols: covariate rows vs response length");
    if (names.size() != k) throw DimMismatch("ols: covariate names vs columns");

    // assemble columns: scaled covariates, then pairwise products of those
    std::vector<Vector> cols;
    std::vector<std::string> terms{"(intercept)"};
    for (std::size_t j = 0; j < k; ++j) {
        Vector col(n);
        for (std::size_t i = 0; i < n; ++i) col[i] = covariates(i, j);
        if (standardize) {
            double m = mean(col);
            double sd = std::sqrt(sample_variance(col, m));
            if (sd <= 0.0 || !std::isfinite(sd)) {
                throw SingularDesign("ols: constant covariate '" + names[j] + "'");
            }
            for (double& x : col) x = (x - m) / sd;
            terms.push_back("scale(" + names[j] + ")");
        } else {
            terms.push_back(names[j]);
        }
        cols.push_back(std::move(col));
    }
    if (interactions) {
        for (std::size_t a = 0; a < k; ++a) {
            for (std::size_t b2 = a + 1; b2 < k; ++b2) {
                Vector prod(n);
                for (std::size_t i = 0; i < n; ++i) prod[i] = cols[a][i] * cols[b2][i];
                terms.push_back(terms[1 + a] + ":" + terms[1 + b2]);
                cols.push_back(std::move(prod));
            }
        }
    }

    std::size_t p = cols.size() + 1;  // + intercept
    if (n <= p) throw InsufficientData("ols: need more records than parameters");

    Matrix x(n, p, 1.0);  // first column stays all-ones
    for (std::size_t j = 0; j + 1 < p; ++j) {
        for (std::size_t i = 0; i < n; ++i) x(i, j + 1) = cols[j][i];
    }

    Matrix xtx(p, p);
    Vector xty(p, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < p; ++j) {
            xty[j] += x(i, j) * response[i];
            for (std::size_t l = j; l < p; ++l) xtx(j, l) += x(i, j) * x(i, l);
        }
    }
    for (std::size_t j = 0; j < p; ++j) {
        for (std::size_t l = 0; l < j; ++l) xtx(j, l) = xtx(l, j);
    }

    OlsResult out;
    out.terms = std::move(terms);
    Matrix xtx_inv;
    try {
        linalg::LuFactorization lu(xtx);
        out.coefficients = lu.solve(xty);
        xtx_inv = lu.inverse();
    } catch (const SingularMatrix&) {
        throw SingularDesign("ols: collinear covariates");
    }

    double rss = 0.0, tss = 0.0;
    double ybar = mean(response);
    for (std::size_t i = 0; i < n; ++i) {
        double fit = 0.0;
        for (std::size_t j = 0; j < p; ++j) fit += x(i, j) * out.coefficients[j];
        rss += (response[i] - fit) * (response[i] - fit);
        tss += (response[i] - ybar) * (response[i] - ybar);
    }
    double sigma2 = rss / double(n - p);
    out.std_errors.resize(p);
    for (std::size_t j = 0; j < p; ++j) out.std_errors[j] = std::sqrt(sigma2 * xtx_inv(j, j));
    out.r_squared = tss > 0.0 ? 1.0 - rss / tss : 1.0;
    std::size_t k_terms = p - 1;
    out.adj_r_squared =
        k_terms > 0 ? 1.0 - (1.0 - out.r_squared) * double(n - 1) / double(n - p) : out.r_squared;
    // perfect fit -> +inf, which is the honest limit of the F ratio
    out.f_statistic = k_terms > 0 ? (out.r_squared / double(k_terms)) /
                                        ((1.0 - out.r_squared) / double(n - p))
                                  : 0.0;
    return out;
}

OlsResult regression_for_kind(const std::vector<SweepRecord>& records,
                              optim::OptimizerKind kind, bool standardize, bool interactions) {
    std::vector<const SweepRecord*> subset;
    for (const SweepRecord& r : records) {
        if (r.kind == kind) subset.push_back(&r);
    }
    if (subset.empty()) throw InvalidArg("regression_for_kind: no records of that kind");
    Matrix cov(subset.size(), 3);
    Vector y(subset.size());
    for (std::size_t i = 0; i < subset.size(); ++i) {
        cov(i, 0) = subset[i]->lr;
        cov(i, 1) = subset[i]->beta2;
        cov(i, 2) = subset[i]->epsilon;
        y[i] = subset[i]->avg_return;
    }
    return ols_regression(cov, {"lr", "beta2", "epsilon"}, y, standardize, interactions);
}

// ---------------------------------------------------------------------------
// Summary + full sweep
// ---------------------------------------------------------------------------

namespace {

nlohmann::json ci_entry(const Vector& values, std::uint64_t seed) {
    nlohmann::json j;
    j["count"] = values.size();
    j["mean"] = mean(values);
    if (values.size() >= 2) {
        BootstrapCi ci = bootstrap_ci(values, 10000, 0.95, seed);
        j["ci_lo"] = ci.lo;
        j["ci_hi"] = ci.hi;
    } else {
        j["ci_lo"] = values[0];
        j["ci_hi"] = values[0];
    }
    return j;
}

Vector avg_returns_of(const std::vector<SweepRecord>& records) {
    Vector out;
    out.reserve(records.size());
    for (const SweepRecord& r : records) out.push_back(r.avg_return);
    return out;
}

}  // namespace

std::string summary_json(const std::vector<SweepRecord>& records, double top_q,
                         std::uint64_t seed) {
    if (records.empty()) throw InvalidArg("summary: no records");
    NormalizeResult norm = normalize_returns(records);

    // stable kind order: alphabetical by name over the kinds present
    std::map<std::string, std::vector<SweepRecord>> by_kind;
    for (const SweepRecord& r : norm.records) by_kind[optim::kind_name(r.kind)].push_back(r);

    nlohmann::json j;
    j["normalization"]["applied"] = norm.applied;
    j["normalization"]["max_avg_return"] = norm.max_avg_return;
    j["normalization"]["max_asymptotic_return"] = norm.max_asymptotic_return;

    std::map<std::string, std::vector<SweepRecord>> top_by_kind;
    std::uint64_t ci_seed = seed;
    for (const auto& [name, recs] : by_kind) {
        j["all_samples"][name] = ci_entry(avg_returns_of(recs), ci_seed++);
        top_by_kind[name] = top_percentile(recs, top_q);
        j["top_percentile"][name] = ci_entry(avg_returns_of(top_by_kind[name]), ci_seed++);
    }
    j["top_percentile_q"] = top_q;

    j["welch_tests"] = nlohmann::json::array();
    for (auto scope : {std::make_pair("all_samples", &by_kind),
                       std::make_pair("top_percentile", &top_by_kind)}) {
        for (auto ita = scope.second->begin(); ita != scope.second->end(); ++ita) {
            for (auto itb = std::next(ita); itb != scope.second->end(); ++itb) {
                nlohmann::json entry;
                entry["scope"] = scope.first;
                entry["kind_a"] = ita->first;
                entry["kind_b"] = itb->first;
                try {
                    WelchResult w = welch_t_test(avg_returns_of(ita->second),
                                                 avg_returns_of(itb->second));
                    entry["t"] = w.t;
                    entry["dof"] = w.dof;
                    entry["p"] = w.p;
                    entry["annotation"] = p_annotation(w.p);
                } catch (const DegenerateSample& e) {
                    entry["skipped"] = e.what();
                }
                j["welch_tests"].push_back(entry);
            }
        }
    }

    for (const auto& [name, recs] : by_kind) {
        nlohmann::json entry;
        try {
            OlsResult ols = regression_for_kind(recs, recs.front().kind, true, true);
            entry["terms"] = ols.terms;
            entry["coefficients"] = ols.coefficients;
            entry["std_errors"] = ols.std_errors;
            entry["r_squared"] = ols.r_squared;
            entry["adj_r_squared"] = ols.adj_r_squared;
            entry["f_statistic"] = ols.f_statistic;
        } catch (const Error& e) {
            entry["skipped"] = e.what();
        }
        j["regressions"][name] = entry;
    }
    return j.dump(2);
}

SweepOutcome run_sweep(const SweepSpec& spec, const RunObserver& on_run) {
    validate(spec);
    std::vector<SampledConfig> configs = sample_configs(spec, spec.seed);

    agent::ToyEnv probe = agent::env_from_name(spec.env, 0);

    SweepOutcome out;
    out.records.reserve(configs.size());
    for (const SampledConfig& cfg : configs) {
        agent::SarsaConfig run_cfg = spec.base;
        run_cfg.optimizer = cfg.kind;
        run_cfg.hp.alpha = cfg.lr;
        run_cfg.hp.beta2 = cfg.beta2;
        run_cfg.hp.epsilon = cfg.epsilon;
        run_cfg.seed = cfg.seed;

        agent::QFunction q0;
        if (spec.qfunction == "tabular") {
            q0 = agent::make_tabular(probe.n_states(), probe.n_actions());
        } else if (spec.qfunction == "linear") {
            q0 = agent::make_linear(agent::coordinate_features(probe), probe.n_actions());
        } else {
            q0 = agent::make_mlp(agent::coordinate_features(probe), probe.n_actions(),
                                 spec.mlp_hidden, cfg.seed);
        }

        std::string env_name = spec.env;
        agent::EnvFactory factory = [env_name](std::uint64_t s) {
            return agent::env_from_name(env_name, s);
        };

        SweepRecord rec;
        rec.kind = cfg.kind;
        rec.lr = cfg.lr;
        rec.beta2 = cfg.beta2;
        rec.epsilon = cfg.epsilon;
        rec.seed = cfg.seed;
        try {
            agent::TrainResult result = agent::train(factory, q0, run_cfg);
            rec.diverged = result.diverged;
            if (!result.episode_returns.empty()) {
                rec.avg_return = mean(result.episode_returns);
                std::size_t window = std::min<std::size_t>(100, result.episode_returns.size());
                rec.asymptotic_return =
                    std::accumulate(result.episode_returns.end() - window,
                                    result.episode_returns.end(), 0.0) /
                    double(window);
            }
            if (on_run) on_run(cfg, result);
        } catch (const Error&) {
            rec.diverged = true;  // per-run failures are recorded, never fatal
        }
        out.records.push_back(rec);
    }

    std::sort(out.records.begin(), out.records.end(),
              [](const SweepRecord& a, const SweepRecord& b) {
                  auto key = [](const SweepRecord& r) {
                      return std::make_tuple(optim::kind_name(r.kind), r.seed, r.lr, r.beta2,
                                             r.epsilon);
                  };
                  return key(a) < key(b);
              });
    out.summary = summary_json(out.records, 0.25, spec.seed);
    return out;
}

// ---------------------------------------------------------------------------
// Spec file round-trip
// ---------------------------------------------------------------------------

namespace {

Range range_from_json(const nlohmann::json& j, const std::string& field) {
    if (!j.is_array() || j.size() != 2) {
        throw InvalidArg("sweep spec: field '" + field + "' must be a [lo, hi] pair");
    }
    return Range{j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

SweepSpec spec_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArg(std::string("sweep spec: bad JSON: ") + e.what());
    }
    SweepSpec spec;
    try {
        if (j.contains("kinds")) {
            spec.kinds.clear();
            for (const auto& name : j.at("kinds")) {
                spec.kinds.push_back(optim::kind_from_name(name.get<std::string>()));
            }
        }
        if (j.contains("samples_per_kind")) {
            spec.samples_per_kind = j.at("samples_per_kind").get<std::size_t>();
        }
        if (j.contains("seed")) spec.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("env")) spec.env = j.at("env").get<std::string>();
        if (j.contains("qfunction")) spec.qfunction = j.at("qfunction").get<std::string>();
        if (j.contains("mlp_hidden")) spec.mlp_hidden = j.at("mlp_hidden").get<std::size_t>();
        if (j.contains("literal_notation")) {
            spec.literal_notation = j.at("literal_notation").get<bool>();
        }
        if (j.contains("lr_tdprop")) spec.lr_tdprop = range_from_json(j["lr_tdprop"], "lr_tdprop");
        if (j.contains("lr_adam")) spec.lr_adam = range_from_json(j["lr_adam"], "lr_adam");
        if (j.contains("lr_sgd")) spec.lr_sgd = range_from_json(j["lr_sgd"], "lr_sgd");
        if (j.contains("beta2_range")) {
            spec.beta2_range = range_from_json(j["beta2_range"], "beta2_range");
        }
        if (j.contains("epsilon_range")) {
            spec.epsilon_range = range_from_json(j["epsilon_range"], "epsilon_range");
        }
        if (j.contains("base")) {
            const auto& b = j.at("base");
            if (b.contains("n")) spec.base.n = b.at("n").get<std::size_t>();
            if (b.contains("gamma")) spec.base.gamma = b.at("gamma").get<double>();
            if (b.contains("epsilon_greedy")) {
                spec.base.epsilon_greedy = b.at("epsilon_greedy").get<double>();
            }
            if (b.contains("actors")) spec.base.actors = b.at("actors").get<std::size_t>();
            if (b.contains("total_steps")) {
                spec.base.total_steps = b.at("total_steps").get<std::size_t>();
            }
            if (b.contains("record_every")) {
                spec.base.record_every = b.at("record_every").get<std::size_t>();
            }
            if (b.contains("beta1")) spec.base.hp.beta1 = b.at("beta1").get<double>();
            if (b.contains("grad_clip_norm")) {
                if (b.at("grad_clip_norm").is_null()) {
                    spec.base.hp.grad_clip_norm.reset();
                } else {
                    spec.base.hp.grad_clip_norm = b.at("grad_clip_norm").get<double>();
                }
            }
            if (b.contains("clip_rewards")) {
                spec.base.clip_rewards = b.at("clip_rewards").get<bool>();
            }
            if (b.contains("offset_zero_only")) {
                spec.base.offset_zero_only = b.at("offset_zero_only").get<bool>();
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArg(std::string("sweep spec: mistyped field: ") + e.what());
    }
    validate(spec);
    return spec;
}

std::string spec_to_json(const SweepSpec& spec) {
    nlohmann::json j;
    j["kinds"] = nlohmann::json::array();
    for (auto kind : spec.kinds) j["kinds"].push_back(optim::kind_name(kind));
    j["samples_per_kind"] = spec.samples_per_kind;
    j["seed"] = spec.seed;
    j["env"] = spec.env;
    j["qfunction"] = spec.qfunction;
    j["mlp_hidden"] = spec.mlp_hidden;
    j["literal_notation"] = spec.literal_notation;
    // ranges are emitted resolved, under the same keys the loader reads, so the
    // manifest both documents the effective sweep and round-trips through
    // spec_from_json unchanged
    auto put_range = [&](const char* key, Range r) { j[key] = {r.lo, r.hi}; };
    put_range("lr_tdprop", resolved_lr_range(spec, optim::OptimizerKind::Tdprop));
    put_range("lr_adam", resolved_lr_range(spec, optim::OptimizerKind::Adam));
    put_range("lr_sgd", resolved_lr_range(spec, optim::OptimizerKind::Sgd));
    put_range("beta2_range", resolved_beta2_range(spec));
    put_range("epsilon_range", resolved_epsilon_range(spec));
    j["base"]["n"] = spec.base.n;
    j["base"]["gamma"] = spec.base.gamma;
    j["base"]["epsilon_greedy"] = spec.base.epsilon_greedy;
    j["base"]["actors"] = spec.base.actors;
    j["base"]["total_steps"] = spec.base.total_steps;
    j["base"]["record_every"] = spec.base.record_every;
    j["base"]["beta1"] = spec.base.hp.beta1;
    if (spec.base.hp.grad_clip_norm) {
        j["base"]["grad_clip_norm"] = *spec.base.hp.grad_clip_norm;
    } else {
        j["base"]["grad_clip_norm"] = nullptr;
    }
    j["base"]["clip_rewards"] = spec.base.clip_rewards;
    j["base"]["offset_zero_only"] = spec.base.offset_zero_only;
    return j.dump(2);
}

}  // namespace tdlab::sweep
