#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "normest/density.hpp"
#include "normest/errors.hpp"
#include "normest/estimator.hpp"
#include "normest/kernel.hpp"
#include "normest/quadrature.hpp"
#include "normest/summation.hpp"

namespace normest {

struct quad_opts {
    double abs_tol = 1e-9;   // target absolute error of reported integrals
    double inner_tol = 1e-12; // tolerance of nested smoothing integrals
    int max_depth = 14;
};

namespace detail {

// breakpoints of x -> S_h(x): density breakpoints shifted by scaled kernel
// breakpoints (the convolution is smooth elsewhere)
inline std::vector<double> smoothed_cuts(const density_1d& f, const aggregated_kernel& k,
                                         double h) {
    std::vector<double> cuts;
    for (double bf : f.breakpoints()) {
        cuts.push_back(bf);
        for (double bk : k.poly.breakpoints()) cuts.push_back(bf + h * bk);
    }
    return cuts;
}

} // namespace detail

// S_h at a point, one axis: integral of K_h(x - y) f(y) dy.
inline double smoothed_1d(const density_1d& f, const aggregated_kernel& k, double h,
                          double x, const quad_opts& opts = {}) {
    const double ell = k.support();
    const double lo = std::max(f.support_lo(), x - ell * h);
    const double hi = std::min(f.support_hi(), x + ell * h);
    if (!(hi > lo)) return 0.0;
    std::vector<double> cuts = f.breakpoints();
    for (double bk : k.poly.breakpoints()) cuts.push_back(x - h * bk);
    return quad::integrate_adaptive(
        [&](double y) { return k.eval((x - y) / h) / h * f.pdf(y); }, lo, hi, cuts,
        opts.inner_tol, opts.max_depth);
}

// S_h(x) for the tensor density/kernel pair: product of per-axis smoothers.
inline double smoothed(const test_density& f, const aggregated_kernel& k,
                       std::span<const double> h, std::span<const double> x,
                       const quad_opts& opts = {}) {
    double v = 1.0;
    for (int j = 0; j < f.dim(); ++j) v *= smoothed_1d(f.axis(j), k, h[j], x[j], opts);
    return v;
}

// B_h(x) = S_h(x) - f(x)
inline double bias_field(const test_density& f, const aggregated_kernel& k,
                         std::span<const double> h, std::span<const double> x,
                         const quad_opts& opts = {}) {
    return smoothed(f, k, h, x, opts) - f.pdf(x);
}

namespace detail {

// per-axis integral of S^a f^b over the inflated support
inline double axis_mixed_integral(const density_1d& f, const aggregated_kernel& k, double h,
                                  int a, int b, const quad_opts& opts) {
    const double ell = k.support();
    const double lo = f.support_lo() - ell * h;
    const double hi = f.support_hi() + ell * h;
    std::vector<double> cuts = smoothed_cuts(f, k, h);
    return quad::integrate_adaptive(
        [&](double x) {
            double v = 1.0;
            if (a > 0) v *= std::pow(smoothed_1d(f, k, h, x, opts), a);
            if (b > 0) v *= std::pow(f.pdf(x), b);
            return v;
        },
        lo, hi, cuts, opts.abs_tol, opts.max_depth);
}

} // namespace detail

// T_p^(1) = integral of S_h^p; factorizes over axes for tensor densities.
inline double functional_t1(const test_density& f, const aggregated_kernel& k,
                            std::span<const double> h, int p, const quad_opts& opts = {}) {
    double v = 1.0;
    for (int j = 0; j < f.dim(); ++j)
        v *= detail::axis_mixed_integral(f.axis(j), k, h[j], p, 0, opts);
    return v;
}

// T_p^(2) = integral of S_h^{p-1} f.
inline double functional_t2(const test_density& f, const aggregated_kernel& k,
                            std::span<const double> h, int p, const quad_opts& opts = {}) {
    double v = 1.0;
    for (int j = 0; j < f.dim(); ++j)
        v *= detail::axis_mixed_integral(f.axis(j), k, h[j], p - 1, 1, opts);
    return v;
}

// integral of f^s by quadrature (per-axis factorization)
inline double power_integral(const test_density& f, double s, const quad_opts& opts = {}) {
    double v = 1.0;
    for (int j = 0; j < f.dim(); ++j) {
        const auto& ax = f.axis(j);
        v *= quad::integrate_adaptive([&](double x) { return std::pow(ax.pdf(x), s); },
                                      ax.support_lo(), ax.support_hi(), ax.breakpoints(),
                                      opts.abs_tol, opts.max_depth);
    }
    return v;
}

// ||f||_s: closed form when the catalog provides one, else quadrature.
inline double exact_norm(const test_density& f, double s, const quad_opts& opts = {}) {
    if (!(s >= 1.0) || std::isinf(s))
        throw config_error("exact_norm: s must be a finite value >= 1");
    if (const auto known = f.known_norm(s)) return *known;
    return std::pow(power_integral(f, s, opts), 1.0 / s);
}

// Remainder integrals R_j = integral of S^{p-j} B^j, j = 2..p, computed on a
// fixed tensor panel grid with one doubling refinement as the error check.
// Per-axis S and f values are cached at the grid nodes.
inline std::vector<double> representation_remainders(const test_density& f,
                                                     const aggregated_kernel& k,
                                                     std::span<const double> h, int p,
                                                     const quad_opts& opts = {}) {
    const int d = f.dim();
    const double ell = k.support();

    auto evaluate = [&](int subdiv) {
        std::vector<quad::panel_rule> rules(d);
        std::vector<std::vector<double>> s_vals(d), f_vals(d);
        for (int j = 0; j < d; ++j) {
            const auto& ax = f.axis(j);
            const auto cuts = detail::smoothed_cuts(ax, k, h[j]);
            // cap panel length so wide smooth panels (truncated gaussian)
            // stay within GL16 accuracy
            const double width = ax.support_hi() - ax.support_lo();
            rules[j] = quad::make_panel_rule(ax.support_lo() - ell * h[j],
                                             ax.support_hi() + ell * h[j], cuts, subdiv,
                                             quad::default_order, width / 8.0);
            s_vals[j].resize(rules[j].x.size());
            f_vals[j].resize(rules[j].x.size());
            for (std::size_t i = 0; i < rules[j].x.size(); ++i) {
                s_vals[j][i] = smoothed_1d(ax, k, h[j], rules[j].x[i], opts);
                f_vals[j][i] = ax.pdf(rules[j].x[i]);
            }
        }

        std::vector<kahan_sum> acc(static_cast<std::size_t>(p + 1));
        std::vector<std::size_t> odo(d, 0);
        for (;;) {
            double w = 1.0, sv = 1.0, fv = 1.0;
            for (int j = 0; j < d; ++j) {
                w *= rules[j].w[odo[j]];
                sv *= s_vals[j][odo[j]];
                fv *= f_vals[j][odo[j]];
            }
            const double bv = sv - fv;
            double bpow = bv * bv;
            for (int j = 2; j <= p; ++j) {
                acc[static_cast<std::size_t>(j)].add(w * std::pow(sv, p - j) * bpow);
                bpow *= bv;
            }
            int axis = d - 1;
            while (axis >= 0) {
                if (++odo[axis] < rules[axis].x.size()) break;
                odo[axis] = 0;
                --axis;
            }
            if (axis < 0) break;
        }
        std::vector<double> out(static_cast<std::size_t>(p + 1), 0.0);
        for (int j = 2; j <= p; ++j)
            out[static_cast<std::size_t>(j)] = acc[static_cast<std::size_t>(j)].value();
        return out;
    };

    const auto coarse = evaluate(1);
    const auto fine = evaluate(2);
    for (int j = 2; j <= p; ++j) {
        if (std::abs(fine[static_cast<std::size_t>(j)] - coarse[static_cast<std::size_t>(j)]) >
            opts.abs_tol * 10.0)
            throw tolerance_error("representation_remainders: tensor refinement did not converge");
    }
    return fine;
}

// Signed remainder sum_{j=2..p} C(p,j) (-1)^j R_j. The expected value of
// T-hat minus ||f||_p^p is the negative of this quantity.
inline double representation_remainder_sum(const test_density& f, const aggregated_kernel& k,
                                           std::span<const double> h, int p,
                                           const quad_opts& opts = {}) {
    const auto R = representation_remainders(f, k, h, p, opts);
    double total = 0.0;
    for (int j = 2; j <= p; ++j) {
        const double sign = (j % 2 == 0) ? 1.0 : -1.0;
        total += binom(p, j) * sign * R[static_cast<std::size_t>(j)];
    }
    return total;
}

struct norm_representation_result {
    double lhs = 0.0;      // ||f||_p^p by quadrature
    double rhs = 0.0;      // (1-p) T1 + p T2 + signed remainder terms
    double residual = 0.0; // |lhs - rhs|
    double t1 = 0.0;
    double t2 = 0.0;
};

// Checks the norm representation: every term evaluated by its own
// quadrature, nothing cancelled symbolically.
inline norm_representation_result norm_representation_check(const test_density& f,
                                                             const aggregated_kernel& k,
                                                             std::span<const double> h, int p,
                                                             const quad_opts& opts = {}) {
    if (p < 2) throw config_error("norm_representation_check: p must be an integer >= 2");
    norm_representation_result res;
    res.lhs = power_integral(f, static_cast<double>(p), opts);
    res.t1 = functional_t1(f, k, h, p, opts);
    res.t2 = functional_t2(f, k, h, p, opts);
    res.rhs = (1.0 - p) * res.t1 + p * res.t2 + representation_remainder_sum(f, k, h, p, opts);
    res.residual = std::abs(res.lhs - res.rhs);
    return res;
}

struct naive_ustat_result {
    double t1 = 0.0;
    double t2 = 0.0;
    double subsets = 0.0;
};

// Brute-force U-statistics over all C(n,p) index subsets, lexicographic
// order, compensated accumulation. The oracle the pruned engine is checked
// against; O(n^p), intended for n up to a few hundred.
inline naive_ustat_result naive_ustat(const sample& s, const aggregated_kernel& k,
                                      std::span<const double> h, int p) {
    if (s.n < static_cast<std::size_t>(p))
        throw insufficient_sample_error("naive_ustat: need n >= p observations");
    std::vector<std::size_t> idx(static_cast<std::size_t>(p));
    for (int i = 0; i < p; ++i) idx[static_cast<std::size_t>(i)] = static_cast<std::size_t>(i);

    kahan_sum s1, s2;
    double count = 0.0;
    for (;;) {
        s1.add(u1(s, idx, k, h));
        s2.add(u2(s, idx, k, h));
        count += 1.0;

        int level = p - 1;
        while (level >= 0 &&
               idx[static_cast<std::size_t>(level)] ==
                   s.n - static_cast<std::size_t>(p - level))
            --level;
        if (level < 0) break;
        ++idx[static_cast<std::size_t>(level)];
        for (int i = level + 1; i < p; ++i)
            idx[static_cast<std::size_t>(i)] = idx[static_cast<std::size_t>(i - 1)] + 1;
    }

    naive_ustat_result res;
    res.t1 = s1.value() / count;
    res.t2 = s2.value() / count;
    res.subsets = count;
    return res;
}

} // namespace normest
