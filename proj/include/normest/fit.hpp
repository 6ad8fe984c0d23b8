#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "normest/errors.hpp"
#include "normest/rng.hpp"

namespace normest {

struct line_fit {
    double slope = 0.0;
    double intercept = 0.0;
    std::vector<double> residuals;
};

inline line_fit fit_line(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    if (n < 2 || y.size() != n) throw config_error("fit_line: need >= 2 matching points");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (!(sxx > 0.0)) throw config_error("fit_line: x values are all equal");
    line_fit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.residuals.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        fit.residuals[i] = y[i] - (fit.intercept + fit.slope * x[i]);
    return fit;
}

struct slope_estimate {
    double slope = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
};

// OLS on (log x, log y) with a residual-bootstrap 95% interval. Points with
// a nonpositive y carry no log-scale information and are dropped.
inline slope_estimate fit_loglog_slope(std::span<const double> xs, std::span<const double> ys,
                                       int resamples = 500, std::uint64_t seed = 0x10516ULL) {
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!(xs[i] > 0.0)) throw config_error("fit_loglog_slope: x must be positive");
        if (!(ys[i] > 0.0)) continue;
        lx.push_back(std::log(xs[i]));
        ly.push_back(std::log(ys[i]));
    }
    const line_fit base = fit_line(lx, ly);

    slope_estimate out;
    out.slope = base.slope;
    const std::size_t n = lx.size();
    std::vector<double> boot;
    boot.reserve(static_cast<std::size_t>(resamples));
    rng256 rng(seed);
    std::vector<double> yb(n);
    for (int b = 0; b < resamples; ++b) {
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t pick = static_cast<std::size_t>(rng.next_u64() % n);
            yb[i] = base.intercept + base.slope * lx[i] + base.residuals[pick];
        }
        boot.push_back(fit_line(lx, yb).slope);
    }
    std::sort(boot.begin(), boot.end());
    const auto pick_at = [&](double q) {
        const double pos = q * (boot.size() - 1);
        return boot[static_cast<std::size_t>(std::llround(pos))];
    };
    out.ci_lo = pick_at(0.025);
    out.ci_hi = pick_at(0.975);
    return out;
}

// Mann-Kendall S = sum_{i<j} sgn(v_j - v_i).
inline int mann_kendall_s(std::span<const double> v) {
    int s = 0;
    for (std::size_t i = 0; i < v.size(); ++i)
        for (std::size_t j = i + 1; j < v.size(); ++j) {
            if (v[j] > v[i]) ++s;
            else if (v[j] < v[i]) --s;
        }
    return s;
}

// One-sided p-value against an upward trend. Exact permutation null for
// m <= 8 points, normal approximation above.
inline double mann_kendall_pvalue_upward(std::span<const double> v) {
    const std::size_t m = v.size();
    if (m < 3) return 1.0;
    const int s_obs = mann_kendall_s(v);
    if (m <= 8) {
        std::vector<double> perm(v.begin(), v.end());
        std::sort(perm.begin(), perm.end());
        std::size_t total = 0, at_least = 0;
        do {
            ++total;
            if (mann_kendall_s(perm) >= s_obs) ++at_least;
        } while (std::next_permutation(perm.begin(), perm.end()));
        return static_cast<double>(at_least) / static_cast<double>(total);
    }
    const double var = m * (m - 1.0) * (2.0 * m + 5.0) / 18.0;
    const double z = (s_obs > 0 ? s_obs - 1.0 : s_obs + 1.0) / std::sqrt(var);
    return 0.5 * std::erfc(z / std::sqrt(2.0));
}

} // namespace normest
