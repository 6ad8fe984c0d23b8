#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "normest/class_spec.hpp"
#include "normest/errors.hpp"
#include "normest/piecewise_poly.hpp"
#include "normest/quadrature.hpp"

namespace normest {

// n-choose-k in double; n stays small here (<= 64)
inline double binom(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    double v = 1.0;
    for (int i = 1; i <= k; ++i) v = v * (n - k + i) / i;
    return v;
}

enum class base_kind { box, epanechnikov };

inline std::string to_string(base_kind k) {
    return k == base_kind::box ? "box" : "epanechnikov";
}

inline base_kind base_kind_from_string(const std::string& s) {
    if (s == "box") return base_kind::box;
    if (s == "epanechnikov") return base_kind::epanechnikov;
    throw config_error("unknown kernel base '" + s + "' (expected box|epanechnikov)");
}

// Symmetric unit-mass base kernel on [-1, 1].
struct base_kernel {
    std::string name;
    piecewise_poly poly;

    double eval(double y) const { return poly.eval(y); }
    double sup_norm() const { return poly.sup_norm(); }
};

inline base_kernel make_base(base_kind kind) {
    if (kind == base_kind::box)
        return {"box", piecewise_poly({-1.0, 1.0}, {poly{{0.5}}})};
    // 3/4 (1 - y^2) on [-1, 1]
    return {"epanechnikov", piecewise_poly({-1.0, 1.0}, {poly{{0.75, 0.0, -0.75}}})};
}

// Aggregated kernel sum_{i=1..ell} C(ell,i) (-1)^{i+1} i^{-1} base(y/i),
// supported on [-ell, ell]. Unit mass; moments 1..ell-1 vanish.
struct aggregated_kernel {
    int ell = 1;
    piecewise_poly poly;

    double eval(double y) const { return poly.eval(y); }
    double support() const { return static_cast<double>(ell); }
    double sup_norm() const { return poly.sup_norm(); }
};

inline aggregated_kernel build_aggregated(const base_kernel& base, int ell) {
    if (ell < 1) throw config_error("build_aggregated: ell must be >= 1");
    piecewise_poly acc({-1.0, 1.0}, {poly{}});
    for (int i = 1; i <= ell; ++i) {
        const double ci = binom(ell, i) * ((i % 2 == 0) ? -1.0 : 1.0) / i;
        acc = piecewise_poly::add_scaled(base.poly.scale_x(static_cast<double>(i)), ci, acc);
    }
    return {ell, std::move(acc)};
}

// exact integral of y^k K_ell(y)
inline double moment(const aggregated_kernel& k, int order) {
    return k.poly.moment(order);
}

// d-fold product kernel K(x) = prod_j K_ell(x_j); one shared 1-D factor.
struct product_kernel {
    int d = 1;
    aggregated_kernel factor;

    // K_h(x) = K(x/h) / V_h, zero outside prod_j [-ell h_j, ell h_j]
    double eval_scaled(std::span<const double> h, std::span<const double> x) const {
        double v = 1.0;
        for (int j = 0; j < d; ++j) v *= factor.eval(x[j] / h[j]) / h[j];
        return v;
    }
};

// Exact 1-D integral of prod_i K_ell((y - x_i)/h)/h over y. The integrand is
// piecewise polynomial; each piece is integrated by a Gauss rule of exact
// degree. Returns 0 when the translated supports do not meet.
inline double factor_product_integral(const aggregated_kernel& k, double h,
                                      std::span<const double> points) {
    const std::size_t p = points.size();
    if (p == 0) return 0.0;
    const double ell = k.support();

    double tmin = points[0], tmax = points[0];
    for (double x : points) {
        tmin = std::min(tmin, x);
        tmax = std::max(tmax, x);
    }
    // common support in u = y/h coordinates
    const double lo = tmax / h - ell;
    const double hi = tmin / h + ell;
    if (!(hi > lo)) return 0.0;

    // breakpoints of every translated factor inside [lo, hi]
    const auto& kb = k.poly.breakpoints();
    constexpr std::size_t stack_cap = 128;
    double stack[stack_cap];
    std::vector<double> heap;
    double* cuts = stack;
    if (p * kb.size() + 2 > stack_cap) {
        heap.resize(p * kb.size() + 2);
        cuts = heap.data();
    }
    std::size_t ncuts = 0;
    cuts[ncuts++] = lo;
    for (double x : points) {
        const double t = x / h;
        for (double b : kb) {
            const double u = t + b;
            if (u > lo && u < hi) cuts[ncuts++] = u;
        }
    }
    cuts[ncuts++] = hi;
    std::sort(cuts, cuts + ncuts);
    ncuts = static_cast<std::size_t>(std::unique(cuts, cuts + ncuts) - cuts);

    const int seg_degree = k.poly.segments().empty() ? 0 : k.poly.segments()[0].degree();
    const int order = quad::exact_order(seg_degree * static_cast<int>(p));
    const auto& tables = quad::gl_tables::instance();
    const auto xs = tables.nodes(order);
    const auto ws = tables.weights(order);

    double total = 0.0;
    for (std::size_t i = 0; i + 1 < ncuts; ++i) {
        const double a = cuts[i], b = cuts[i + 1];
        if (!(b > a)) continue;
        const double mid = 0.5 * (a + b);
        const double half = 0.5 * (b - a);
        double piece = 0.0;
        for (int m = 0; m < order; ++m) {
            const double u = mid + half * xs[m];
            double prod = 1.0;
            for (double x : points) prod *= k.eval(u - x / h);
            piece += ws[m] * prod;
        }
        total += piece * half;
    }
    // substitution y = h u plus the p per-factor 1/h normalizations
    return total * std::pow(h, 1.0 - static_cast<double>(p));
}

// Kernel selection: base shape plus aggregation order; ell == 0 means
// "auto" = floor(max_j beta_j) + 1, the smallest integer above max beta_j.
struct kernel_config {
    base_kind base = base_kind::epanechnikov;
    int ell = 0;

    int resolve_ell(const class_spec& spec) const {
        if (ell > 0) return ell;
        double bmax = 0.0;
        for (double b : spec.beta) bmax = std::max(bmax, b);
        return static_cast<int>(std::floor(bmax)) + 1;
    }

    aggregated_kernel build(const class_spec& spec) const {
        return build_aggregated(make_base(base), resolve_ell(spec));
    }
};

} // namespace normest
