#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dml/corpus.hpp"
#include "dml/io.hpp"
#include "dml/mathutil.hpp"
#include "dml/parallel.hpp"

namespace dml {

enum class Family {
    Mean,
    Median,
    StandardDeviation,
    Variance,
    Skewness,
    Kurtosis,
    Minimum,
    Maximum,
    SumValues,
    AbsEnergy,
    RootMeanSquare,
    MeanChange,
    MeanAbsChange,
    MeanSecondDerivativeCentral,
    CountAboveMean,
    CountBelowMean,
    LongestStrikeAboveMean,
    LongestStrikeBelowMean,
    LinearTrend,
    Autocorrelation,
    PartialAutocorrelation,
    AggAutocorrelation,
    Quantile,
    ChangeQuantiles,
    NumberCrossingsMean,
    FirstLocationOfMaximum,
    LastLocationOfMaximum,
    FirstLocationOfMinimum,
    LastLocationOfMinimum,
    RatioBeyondRSigma,
    BinnedEntropy,
    C3,
    CidCe,
    NumberPeaks,
};

enum class Agg { Mean, Median, Variance };
enum class TrendAttr { Slope, Intercept, RValue, PValue, StdErr };

inline const char* agg_name(Agg a) {
    switch (a) {
        case Agg::Mean: return "mean";
        case Agg::Median: return "median";
        case Agg::Variance: return "variance";
    }
    return "?";
}

inline const char* trend_attr_name(TrendAttr a) {
    switch (a) {
        case TrendAttr::Slope: return "slope";
        case TrendAttr::Intercept: return "intercept";
        case TrendAttr::RValue: return "rvalue";
        case TrendAttr::PValue: return "pvalue";
        case TrendAttr::StdErr: return "stderr";
    }
    return "?";
}

struct AttributeDescriptor {
    Family family = Family::Mean;
    int lag = 1;              // autocorrelation, partial_autocorrelation, c3
    int maxlag = 40;          // agg_autocorrelation
    Agg agg = Agg::Mean;      // agg_autocorrelation, change_quantiles
    TrendAttr trend_attr = TrendAttr::Slope;
    double q = 0.5;           // quantile
    double ql = 0.0, qh = 1.0;  // change_quantiles corridor
    bool isabs = false;       // change_quantiles
    double r = 1.0;           // ratio_beyond_r_sigma
    int bins = 10;            // binned_entropy
    bool normalize = true;    // cid_ce
    int support = 1;          // number_peaks

    bool operator==(const AttributeDescriptor&) const = default;
};

namespace detail {

inline std::string fmt_param(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

}  // namespace detail

inline std::string descriptor_name(const AttributeDescriptor& d) {
    using detail::fmt_param;
    switch (d.family) {
        case Family::Mean: return "mean";
        case Family::Median: return "median";
        case Family::StandardDeviation: return "standard_deviation";
        case Family::Variance: return "variance";
        case Family::Skewness: return "skewness";
        case Family::Kurtosis: return "kurtosis";
        case Family::Minimum: return "minimum";
        case Family::Maximum: return "maximum";
        case Family::SumValues: return "sum_values";
        case Family::AbsEnergy: return "abs_energy";
        case Family::RootMeanSquare: return "root_mean_square";
        case Family::MeanChange: return "mean_change";
        case Family::MeanAbsChange: return "mean_abs_change";
        case Family::MeanSecondDerivativeCentral: return "mean_second_derivative_central";
        case Family::CountAboveMean: return "count_above_mean";
        case Family::CountBelowMean: return "count_below_mean";
        case Family::LongestStrikeAboveMean: return "longest_strike_above_mean";
        case Family::LongestStrikeBelowMean: return "longest_strike_below_mean";
        case Family::LinearTrend:
            return std::string("linear_trend(attr=") + trend_attr_name(d.trend_attr) + ")";
        case Family::Autocorrelation:
            return "autocorrelation(lag=" + std::to_string(d.lag) + ")";
        case Family::PartialAutocorrelation:
            return "partial_autocorrelation(lag=" + std::to_string(d.lag) + ")";
        case Family::AggAutocorrelation:
            return "agg_autocorrelation(maxlag=" + std::to_string(d.maxlag) +
                   ",agg=" + agg_name(d.agg) + ")";
        case Family::Quantile: return "quantile(q=" + fmt_param(d.q) + ")";
        case Family::ChangeQuantiles:
            return "change_quantiles(ql=" + fmt_param(d.ql) + ",qh=" + fmt_param(d.qh) +
                   ",isabs=" + (d.isabs ? "true" : "false") + ",agg=" + agg_name(d.agg) + ")";
        case Family::NumberCrossingsMean: return "number_crossings_mean";
        case Family::FirstLocationOfMaximum: return "first_location_of_maximum";
        case Family::LastLocationOfMaximum: return "last_location_of_maximum";
        case Family::FirstLocationOfMinimum: return "first_location_of_minimum";
        case Family::LastLocationOfMinimum: return "last_location_of_minimum";
        case Family::RatioBeyondRSigma:
            return "ratio_beyond_r_sigma(r=" + fmt_param(d.r) + ")";
        case Family::BinnedEntropy: return "binned_entropy(bins=" + std::to_string(d.bins) + ")";
        case Family::C3: return "c3(lag=" + std::to_string(d.lag) + ")";
        case Family::CidCe:
            return std::string("cid_ce(normalize=") + (d.normalize ? "true" : "false") + ")";
        case Family::NumberPeaks: return "number_peaks(support=" + std::to_string(d.support) + ")";
    }
    return "?";
}

inline void check_descriptor(const AttributeDescriptor& d) {
    switch (d.family) {
        case Family::Autocorrelation:
        case Family::PartialAutocorrelation:
        case Family::C3:
            if (d.lag < 1) throw std::invalid_argument("lag must be >= 1");
            break;
        case Family::AggAutocorrelation:
            if (d.maxlag < 1) throw std::invalid_argument("maxlag must be >= 1");
            break;
        case Family::Quantile:
            if (d.q < 0.0 || d.q > 1.0) throw std::invalid_argument("q must be in [0,1]");
            break;
        case Family::ChangeQuantiles:
            if (!(0.0 <= d.ql && d.ql < d.qh && d.qh <= 1.0))
                throw std::invalid_argument("need 0 <= ql < qh <= 1");
            break;
        case Family::RatioBeyondRSigma:
            if (d.r <= 0.0) throw std::invalid_argument("r must be positive");
            break;
        case Family::BinnedEntropy:
            if (d.bins < 1) throw std::invalid_argument("bins must be >= 1");
            break;
        case Family::NumberPeaks:
            if (d.support < 1) throw std::invalid_argument("support must be >= 1");
            break;
        default: break;
    }
}

// ---- attribute computation ----

namespace detail {

inline double autocorr(std::span<const double> x, int lag, double mu, double var) {
    std::size_t n = x.size();
    double s = 0.0;
    for (std::size_t t = 0; t + lag < n; ++t) s += (x[t] - mu) * (x[t + lag] - mu);
    return s / (static_cast<double>(n - lag) * var);
}

// Partial autocorrelation at the given order via Durbin-Levinson on
// autocorrelations with divisor n.
inline double pacf(std::span<const double> x, int order, double mu, double var) {
    std::size_t n = x.size();
    std::vector<double> rho(order + 1, 1.0);
    for (int l = 1; l <= order; ++l) {
        double s = 0.0;
        for (std::size_t t = 0; t + l < n; ++t) s += (x[t] - mu) * (x[t + l] - mu);
        rho[l] = s / (static_cast<double>(n) * var);
    }
    std::vector<double> phi(order + 1, 0.0), prev(order + 1, 0.0);
    phi[1] = rho[1];
    double err = 1.0 - rho[1] * rho[1];
    for (int k = 2; k <= order; ++k) {
        if (std::fabs(err) < 1e-14) return kMissing;
        prev = phi;
        double num = rho[k];
        for (int j = 1; j < k; ++j) num -= prev[j] * rho[k - j];
        phi[k] = num / err;
        for (int j = 1; j < k; ++j) phi[j] = prev[j] - phi[k] * prev[k - j];
        err *= 1.0 - phi[k] * phi[k];
    }
    return phi[order];
}

inline double linear_trend(std::span<const double> x, TrendAttr attr) {
    std::size_t n = x.size();
    if (n < 2) return kMissing;
    double tbar = (n - 1) / 2.0;
    double xbar = mean_of(x);
    double stt = 0.0, stx = 0.0, sxx = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        double dt = static_cast<double>(t) - tbar;
        double dx = x[t] - xbar;
        stt += dt * dt;
        stx += dt * dx;
        sxx += dx * dx;
    }
    double slope = stx / stt;
    switch (attr) {
        case TrendAttr::Slope: return slope;
        case TrendAttr::Intercept: return xbar - slope * tbar;
        default: break;
    }
    if (sxx == 0.0) return kMissing;  // constant series: correlation undefined
    double r = stx / std::sqrt(stt * sxx);
    if (attr == TrendAttr::RValue) return r;
    if (n < 3) return kMissing;  // zero residual degrees of freedom
    double df = static_cast<double>(n - 2);
    double resid = std::max(0.0, 1.0 - r * r);
    if (attr == TrendAttr::StdErr) return std::sqrt(sxx / stt * resid / df);
    double t_stat = r * std::sqrt(df / std::max(resid, 1e-300));
    return t_two_tailed_p(t_stat, df);
}

inline double change_quantiles(std::span<const double> x, const AttributeDescriptor& d) {
    if (x.size() < 2) return kMissing;
    double lo = quantile_of(x, d.ql);
    double hi = quantile_of(x, d.qh);
    std::size_t inside = 0;
    for (double v : x)
        if (v >= lo && v <= hi) ++inside;
    if (inside < 2) return kMissing;
    std::vector<double> diffs;
    for (std::size_t t = 0; t + 1 < x.size(); ++t) {
        if (x[t] >= lo && x[t] <= hi && x[t + 1] >= lo && x[t + 1] <= hi) {
            double dv = x[t + 1] - x[t];
            diffs.push_back(d.isabs ? std::fabs(dv) : dv);
        }
    }
    if (diffs.empty()) return kMissing;
    if (d.agg == Agg::Mean) return mean_of(diffs);
    if (d.agg == Agg::Median) return median_of(diffs);
    return pop_variance(diffs);
}

}  // namespace detail

// Returns the attribute value or MISSING (NaN) where the formula is undefined.
inline double compute_attribute(std::span<const double> x, const AttributeDescriptor& d) {
    check_descriptor(d);
    const std::size_t n = x.size();
    if (n == 0) throw std::invalid_argument("empty series");
    const double nf = static_cast<double>(n);
    switch (d.family) {
        case Family::Mean: return mean_of(x);
        case Family::Median: return median_of(x);
        case Family::StandardDeviation: return pop_std(x);
        case Family::Variance: return pop_variance(x);
        case Family::Skewness: {
            double mu = mean_of(x), m2 = 0.0, m3 = 0.0;
            for (double v : x) {
                double dv = v - mu;
                m2 += dv * dv;
                m3 += dv * dv * dv;
            }
            m2 /= nf;
            m3 /= nf;
            if (m2 == 0.0) return kMissing;
            return m3 / std::pow(m2, 1.5);
        }
        case Family::Kurtosis: {
            double mu = mean_of(x), m2 = 0.0, m4 = 0.0;
            for (double v : x) {
                double dv = (v - mu) * (v - mu);
                m2 += dv;
                m4 += dv * dv;
            }
            m2 /= nf;
            m4 /= nf;
            if (m2 == 0.0) return kMissing;
            return m4 / (m2 * m2) - 3.0;  // excess kurtosis
        }
        case Family::Minimum: return *std::min_element(x.begin(), x.end());
        case Family::Maximum: return *std::max_element(x.begin(), x.end());
        case Family::SumValues: return std::accumulate(x.begin(), x.end(), 0.0);
        case Family::AbsEnergy: {
            double s = 0.0;
            for (double v : x) s += v * v;
            return s;
        }
        case Family::RootMeanSquare: {
            double s = 0.0;
            for (double v : x) s += v * v;
            return std::sqrt(s / nf);
        }
        case Family::MeanChange:
            if (n < 2) return kMissing;
            return (x[n - 1] - x[0]) / (nf - 1.0);
        case Family::MeanAbsChange: {
            if (n < 2) return kMissing;
            double s = 0.0;
            for (std::size_t t = 0; t + 1 < n; ++t) s += std::fabs(x[t + 1] - x[t]);
            return s / (nf - 1.0);
        }
        case Family::MeanSecondDerivativeCentral: {
            if (n < 3) return kMissing;
            double s = 0.0;
            for (std::size_t t = 0; t + 2 < n; ++t) s += (x[t + 2] - 2.0 * x[t + 1] + x[t]) / 2.0;
            return s / (nf - 2.0);
        }
        case Family::CountAboveMean: {
            double mu = mean_of(x);
            return static_cast<double>(std::count_if(x.begin(), x.end(),
                                                     [&](double v) { return v > mu; }));
        }
        case Family::CountBelowMean: {
            double mu = mean_of(x);
            return static_cast<double>(std::count_if(x.begin(), x.end(),
                                                     [&](double v) { return v < mu; }));
        }
        case Family::LongestStrikeAboveMean:
        case Family::LongestStrikeBelowMean: {
            double mu = mean_of(x);
            bool above = d.family == Family::LongestStrikeAboveMean;
            std::size_t best = 0, run = 0;
            for (double v : x) {
                bool in = above ? v > mu : v < mu;
                run = in ? run + 1 : 0;
                best = std::max(best, run);
            }
            return static_cast<double>(best);
        }
        case Family::LinearTrend: return detail::linear_trend(x, d.trend_attr);
        case Family::Autocorrelation: {
            if (n <= static_cast<std::size_t>(d.lag)) return kMissing;
            double var = pop_variance(x);
            if (var == 0.0) return kMissing;
            return detail::autocorr(x, d.lag, mean_of(x), var);
        }
        case Family::PartialAutocorrelation: {
            if (n < static_cast<std::size_t>(d.lag) + 2) return kMissing;
            double var = pop_variance(x);
            if (var == 0.0) return kMissing;
            return detail::pacf(x, d.lag, mean_of(x), var);
        }
        case Family::AggAutocorrelation: {
            int maxlag = std::min<int>(d.maxlag, static_cast<int>(n) - 1);
            if (maxlag < 1) return kMissing;
            double var = pop_variance(x);
            if (var == 0.0) return kMissing;
            double mu = mean_of(x);
            std::vector<double> rs(maxlag);
            for (int l = 1; l <= maxlag; ++l) rs[l - 1] = detail::autocorr(x, l, mu, var);
            if (d.agg == Agg::Mean) return mean_of(rs);
            if (d.agg == Agg::Median) return median_of(rs);
            return pop_variance(rs);
        }
        case Family::Quantile: return quantile_of(x, d.q);
        case Family::ChangeQuantiles: return detail::change_quantiles(x, d);
        case Family::NumberCrossingsMean: {
            if (n < 2) return kMissing;
            double mu = mean_of(x);
            int crossings = 0;
            for (std::size_t t = 0; t + 1 < n; ++t)
                if ((x[t] > mu) != (x[t + 1] > mu)) ++crossings;
            return crossings;
        }
        case Family::FirstLocationOfMaximum:
        case Family::LastLocationOfMaximum:
        case Family::FirstLocationOfMinimum:
        case Family::LastLocationOfMinimum: {
            bool is_max = d.family == Family::FirstLocationOfMaximum ||
                          d.family == Family::LastLocationOfMaximum;
            bool is_first = d.family == Family::FirstLocationOfMaximum ||
                            d.family == Family::FirstLocationOfMinimum;
            double target = is_max ? *std::max_element(x.begin(), x.end())
                                   : *std::min_element(x.begin(), x.end());
            std::size_t first = n, last = 0;
            for (std::size_t t = 0; t < n; ++t) {
                if (x[t] == target) {
                    if (first == n) first = t;
                    last = t;
                }
            }
            return is_first ? static_cast<double>(first) / nf
                            : static_cast<double>(last + 1) / nf;
        }
        case Family::RatioBeyondRSigma: {
            double mu = mean_of(x), sd = pop_std(x);
            std::size_t c = 0;
            for (double v : x)
                if (std::fabs(v - mu) > d.r * sd) ++c;
            return static_cast<double>(c) / nf;
        }
        case Family::BinnedEntropy: {
            double lo = *std::min_element(x.begin(), x.end());
            double hi = *std::max_element(x.begin(), x.end());
            if (lo == hi) return 0.0;
            std::vector<std::size_t> counts(d.bins, 0);
            for (double v : x) {
                int b = static_cast<int>((v - lo) / (hi - lo) * d.bins);
                counts[std::min(b, d.bins - 1)]++;
            }
            double h = 0.0;
            for (std::size_t c : counts) {
                if (c == 0) continue;
                double p = static_cast<double>(c) / nf;
                h -= p * std::log(p);
            }
            return h;
        }
        case Family::C3: {
            std::size_t span2 = 2 * static_cast<std::size_t>(d.lag);
            if (n <= span2) return kMissing;
            double s = 0.0;
            for (std::size_t t = 0; t + span2 < n; ++t)
                s += x[t + span2] * x[t + d.lag] * x[t];
            return s / static_cast<double>(n - span2);
        }
        case Family::CidCe: {
            if (n < 2) return kMissing;
            double mu = 0.0, sd = 1.0;
            if (d.normalize) {
                mu = mean_of(x);
                sd = pop_std(x);
                if (sd == 0.0) return kMissing;
            }
            double s = 0.0;
            for (std::size_t t = 0; t + 1 < n; ++t) {
                double dv = (x[t + 1] - mu) / sd - (x[t] - mu) / sd;
                s += dv * dv;
            }
            return std::sqrt(s);
        }
        case Family::NumberPeaks: {
            int count = 0;
            std::size_t sup = static_cast<std::size_t>(d.support);
            if (n < 2 * sup + 1) return 0.0;
            for (std::size_t i = sup; i + sup < n; ++i) {
                bool peak = true;
                for (std::size_t k = 1; k <= sup && peak; ++k)
                    peak = x[i] > x[i - k] && x[i] > x[i + k];
                if (peak) ++count;
            }
            return count;
        }
    }
    throw std::logic_error("unhandled attribute family");
}

// ---- catalog ----

struct AttributeCatalog {
    std::vector<AttributeDescriptor> descriptors;

    std::size_t size() const { return descriptors.size(); }
};

// The fixed 130-descriptor catalog.
inline AttributeCatalog default_catalog() {
    AttributeCatalog cat;
    auto add = [&](AttributeDescriptor d) { cat.descriptors.push_back(d); };
    for (Family f : {Family::Mean, Family::Median, Family::StandardDeviation, Family::Variance,
                     Family::Skewness, Family::Kurtosis, Family::Minimum, Family::Maximum,
                     Family::SumValues, Family::AbsEnergy, Family::RootMeanSquare,
                     Family::MeanChange, Family::MeanAbsChange,
                     Family::MeanSecondDerivativeCentral, Family::CountAboveMean,
                     Family::CountBelowMean, Family::LongestStrikeAboveMean,
                     Family::LongestStrikeBelowMean})
        add({.family = f});
    for (TrendAttr a : {TrendAttr::Slope, TrendAttr::Intercept, TrendAttr::RValue,
                        TrendAttr::PValue, TrendAttr::StdErr})
        add({.family = Family::LinearTrend, .trend_attr = a});
    for (int lag = 1; lag <= 10; ++lag) add({.family = Family::Autocorrelation, .lag = lag});
    for (int lag = 1; lag <= 10; ++lag)
        add({.family = Family::PartialAutocorrelation, .lag = lag});
    for (Agg a : {Agg::Mean, Agg::Median, Agg::Variance})
        add({.family = Family::AggAutocorrelation, .maxlag = 40, .agg = a});
    for (double q : {0.1, 0.2, 0.3, 0.4, 0.6, 0.7, 0.8, 0.9})
        add({.family = Family::Quantile, .q = q});
    for (double ql : {0.0, 0.2, 0.4, 0.6, 0.8})
        for (double qh : {0.2, 0.4, 0.6, 0.8, 1.0}) {
            if (ql >= qh - 1e-12) continue;
            for (bool isabs : {false, true})
                for (Agg a : {Agg::Mean, Agg::Variance})
                    add({.family = Family::ChangeQuantiles, .agg = a, .ql = ql, .qh = qh,
                         .isabs = isabs});
        }
    add({.family = Family::NumberCrossingsMean});
    for (Family f : {Family::FirstLocationOfMaximum, Family::LastLocationOfMaximum,
                     Family::FirstLocationOfMinimum, Family::LastLocationOfMinimum})
        add({.family = f});
    for (double r : {1.0, 2.0}) add({.family = Family::RatioBeyondRSigma, .r = r});
    add({.family = Family::BinnedEntropy, .bins = 10});
    for (int lag : {1, 2, 3}) add({.family = Family::C3, .lag = lag});
    for (bool norm : {false, true}) add({.family = Family::CidCe, .normalize = norm});
    for (int sup : {1, 3, 5}) add({.family = Family::NumberPeaks, .support = sup});
    return cat;
}

// ---- catalog serialization (JSON list of descriptors) ----

inline nlohmann::json catalog_to_json(const AttributeCatalog& cat) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& d : cat.descriptors) {
        nlohmann::json j;
        j["name"] = descriptor_name(d);
        switch (d.family) {
            case Family::LinearTrend: j["attr"] = trend_attr_name(d.trend_attr); break;
            case Family::Autocorrelation:
            case Family::PartialAutocorrelation:
            case Family::C3: j["lag"] = d.lag; break;
            case Family::AggAutocorrelation:
                j["maxlag"] = d.maxlag;
                j["agg"] = agg_name(d.agg);
                break;
            case Family::Quantile: j["q"] = d.q; break;
            case Family::ChangeQuantiles:
                j["ql"] = d.ql;
                j["qh"] = d.qh;
                j["isabs"] = d.isabs;
                j["agg"] = agg_name(d.agg);
                break;
            case Family::RatioBeyondRSigma: j["r"] = d.r; break;
            case Family::BinnedEntropy: j["bins"] = d.bins; break;
            case Family::CidCe: j["normalize"] = d.normalize; break;
            case Family::NumberPeaks: j["support"] = d.support; break;
            default: break;
        }
        // family keyword is the leading token of the canonical name
        std::string name = j["name"].get<std::string>();
        j["family"] = name.substr(0, name.find('('));
        arr.push_back(j);
    }
    return arr;
}

inline Agg parse_agg(const std::string& s) {
    if (s == "mean") return Agg::Mean;
    if (s == "median") return Agg::Median;
    if (s == "variance") return Agg::Variance;
    throw std::runtime_error("unknown agg: " + s);
}

inline TrendAttr parse_trend_attr(const std::string& s) {
    if (s == "slope") return TrendAttr::Slope;
    if (s == "intercept") return TrendAttr::Intercept;
    if (s == "rvalue") return TrendAttr::RValue;
    if (s == "pvalue") return TrendAttr::PValue;
    if (s == "stderr") return TrendAttr::StdErr;
    throw std::runtime_error("unknown trend attr: " + s);
}

inline AttributeCatalog catalog_from_json(const nlohmann::json& arr) {
    static const std::map<std::string, Family> families = {
        {"mean", Family::Mean},
        {"median", Family::Median},
        {"standard_deviation", Family::StandardDeviation},
        {"variance", Family::Variance},
        {"skewness", Family::Skewness},
        {"kurtosis", Family::Kurtosis},
        {"minimum", Family::Minimum},
        {"maximum", Family::Maximum},
        {"sum_values", Family::SumValues},
        {"abs_energy", Family::AbsEnergy},
        {"root_mean_square", Family::RootMeanSquare},
        {"mean_change", Family::MeanChange},
        {"mean_abs_change", Family::MeanAbsChange},
        {"mean_second_derivative_central", Family::MeanSecondDerivativeCentral},
        {"count_above_mean", Family::CountAboveMean},
        {"count_below_mean", Family::CountBelowMean},
        {"longest_strike_above_mean", Family::LongestStrikeAboveMean},
        {"longest_strike_below_mean", Family::LongestStrikeBelowMean},
        {"linear_trend", Family::LinearTrend},
        {"autocorrelation", Family::Autocorrelation},
        {"partial_autocorrelation", Family::PartialAutocorrelation},
        {"agg_autocorrelation", Family::AggAutocorrelation},
        {"quantile", Family::Quantile},
        {"change_quantiles", Family::ChangeQuantiles},
        {"number_crossings_mean", Family::NumberCrossingsMean},
        {"first_location_of_maximum", Family::FirstLocationOfMaximum},
        {"last_location_of_maximum", Family::LastLocationOfMaximum},
        {"first_location_of_minimum", Family::FirstLocationOfMinimum},
        {"last_location_of_minimum", Family::LastLocationOfMinimum},
        {"ratio_beyond_r_sigma", Family::RatioBeyondRSigma},
        {"binned_entropy", Family::BinnedEntropy},
        {"c3", Family::C3},
        {"cid_ce", Family::CidCe},
        {"number_peaks", Family::NumberPeaks},
    };
    AttributeCatalog cat;
    for (const auto& j : arr) {
        auto it = families.find(j.at("family").get<std::string>());
        if (it == families.end())
            throw std::runtime_error("unknown family: " + j.at("family").get<std::string>());
        AttributeDescriptor d;
        d.family = it->second;
        if (j.contains("lag")) d.lag = j["lag"].get<int>();
        if (j.contains("maxlag")) d.maxlag = j["maxlag"].get<int>();
        if (j.contains("agg")) d.agg = parse_agg(j["agg"].get<std::string>());
        if (j.contains("attr")) d.trend_attr = parse_trend_attr(j["attr"].get<std::string>());
        if (j.contains("q")) d.q = j["q"].get<double>();
        if (j.contains("ql")) d.ql = j["ql"].get<double>();
        if (j.contains("qh")) d.qh = j["qh"].get<double>();
        if (j.contains("isabs")) d.isabs = j["isabs"].get<bool>();
        if (j.contains("r")) d.r = j["r"].get<double>();
        if (j.contains("bins")) d.bins = j["bins"].get<int>();
        if (j.contains("normalize")) d.normalize = j["normalize"].get<bool>();
        if (j.contains("support")) d.support = j["support"].get<int>();
        check_descriptor(d);
        cat.descriptors.push_back(d);
    }
    return cat;
}

// ---- feature matrix ----

struct FeatureName {
    Modality modality = Modality::Affect;
    std::string channel_id;
    std::string attribute;  // empty for verbal columns

    std::string canonical() const {
        std::string s = std::string(modality_name(modality)) + ":" + channel_id;
        if (!attribute.empty()) s += ":" + attribute;
        return s;
    }

    bool operator==(const FeatureName&) const = default;
};

struct FeatureMatrix {
    std::vector<FeatureName> columns;
    std::vector<std::string> video_ids;
    std::vector<Label> labels;
    std::vector<std::string> groups;  // speaker ids
    std::vector<double> cells;        // row-major

    std::size_t rows() const { return video_ids.size(); }
    std::size_t cols() const { return columns.size(); }
    double at(std::size_t r, std::size_t c) const { return cells[r * cols() + c]; }
    double& at(std::size_t r, std::size_t c) { return cells[r * cols() + c]; }
    std::span<const double> row(std::size_t r) const {
        return {cells.data() + r * cols(), cols()};
    }
};

inline std::vector<FeatureName> feature_schema(const AttributeCatalog& catalog) {
    std::vector<FeatureName> cols;
    auto add_block = [&](Modality m, const char* prefix, int count) {
        for (int c = 0; c < count; ++c) {
            char cid[32];
            if (m == Modality::Affect)
                std::snprintf(cid, sizeof(cid), "%s", c == 0 ? "valence" : "arousal");
            else
                std::snprintf(cid, sizeof(cid), "%s_%02d", prefix, c + 1);
            for (const auto& d : catalog.descriptors)
                cols.push_back({m, cid, descriptor_name(d)});
        }
    };
    add_block(Modality::Affect, "affect", kAffectChannels);
    add_block(Modality::Visual, "visual", kVisualChannels);
    add_block(Modality::Vocal, "vocal", kVocalChannels);
    for (int c = 0; c < kVerbalDims; ++c) {
        char cid[32];
        std::snprintf(cid, sizeof(cid), "verbal_%02d", c + 1);
        cols.push_back({Modality::Verbal, cid, ""});
    }
    return cols;
}

inline std::vector<double> featurize_video(const VideoRecord& record,
                                           const AttributeCatalog& catalog) {
    std::vector<double> row;
    row.reserve((kAffectChannels + kVisualChannels + kVocalChannels) * catalog.size() +
                kVerbalDims);
    for (Modality m : {Modality::Affect, Modality::Visual, Modality::Vocal})
        for (const auto& stream : record.streams(m))
            for (const auto& d : catalog.descriptors)
                row.push_back(compute_attribute(stream.values, d));
    row.insert(row.end(), record.verbal.begin(), record.verbal.end());
    return row;
}

inline FeatureMatrix featurize_corpus(const CorpusManifest& manifest,
                                      const AttributeCatalog& catalog, int workers = 0) {
    FeatureMatrix m;
    m.columns = feature_schema(catalog);
    m.video_ids.reserve(manifest.records.size());
    for (const auto& r : manifest.records) {
        m.video_ids.push_back(r.video_id);
        m.labels.push_back(r.label);
        m.groups.push_back(r.speaker_id);
    }
    m.cells.assign(manifest.records.size() * m.columns.size(), 0.0);
    parallel_for(
        manifest.records.size(),
        [&](std::size_t i) {
            auto row = featurize_video(manifest.records[i], catalog);
            std::copy(row.begin(), row.end(), m.cells.begin() + i * m.columns.size());
        },
        workers);
    return m;
}

// CSV export: literal token MISSING for undefined cells.
inline std::string feature_matrix_csv(const FeatureMatrix& m) {
    std::ostringstream out;
    out << "video_id,speaker_id,label";
    for (const auto& c : m.columns) out << "," << c.canonical();
    out << "\n";
    for (std::size_t r = 0; r < m.rows(); ++r) {
        out << m.video_ids[r] << "," << m.groups[r] << "," << label_name(m.labels[r]);
        for (std::size_t c = 0; c < m.cols(); ++c) {
            double v = m.at(r, c);
            out << "," << (is_missing(v) ? std::string("MISSING") : fmt_double(v));
        }
        out << "\n";
    }
    return out.str();
}

}  // namespace dml
