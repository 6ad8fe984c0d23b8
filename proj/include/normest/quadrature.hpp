#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "normest/errors.hpp"

namespace normest {
namespace quad {

// Gauss-Legendre nodes/weights on [-1,1], Newton iteration on the Legendre
// recurrence. Orders 1..max_order are computed once at first use.
class gl_tables {
public:
    static constexpr int max_order = 32;

    static const gl_tables& instance() {
        static const gl_tables t;
        return t;
    }

    std::span<const double> nodes(int m) const {
        return {nodes_[m].data(), nodes_[m].size()};
    }
    std::span<const double> weights(int m) const {
        return {weights_[m].data(), weights_[m].size()};
    }

private:
    gl_tables() : nodes_(max_order + 1), weights_(max_order + 1) {
        for (int m = 1; m <= max_order; ++m) build(m);
    }

    void build(int m) {
        auto& xs = nodes_[m];
        auto& ws = weights_[m];
        xs.resize(m);
        ws.resize(m);
        for (int i = 0; i < (m + 1) / 2; ++i) {
            // Chebyshev initial guess, then Newton on P_m
            double x = std::cos(M_PI * (i + 0.75) / (m + 0.5));
            double pp = 0.0;
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0, p1 = x;
                if (m == 1) p1 = x;
                for (int k = 2; k <= m; ++k) {
                    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                const double pm = (m == 1) ? x : p1;
                const double pm1 = (m == 1) ? 1.0 : p0;
                pp = m * (x * pm - pm1) / (x * x - 1.0);
                const double dx = pm / pp;
                x -= dx;
                if (std::abs(dx) < 1e-16) break;
            }
            xs[i] = -x;
            xs[m - 1 - i] = x;
            const double w = 2.0 / ((1.0 - x * x) * pp * pp);
            ws[i] = w;
            ws[m - 1 - i] = w;
        }
        if (m % 2 == 1) xs[m / 2] = 0.0;
    }

    std::vector<std::vector<double>> nodes_;
    std::vector<std::vector<double>> weights_;
};

// GL of order m over [a, b]
template <typename Fn>
double gauss(const Fn& fn, double a, double b, int m) {
    const auto& t = gl_tables::instance();
    const auto xs = t.nodes(m);
    const auto ws = t.weights(m);
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double acc = 0.0;
    for (int i = 0; i < m; ++i) acc += ws[i] * fn(mid + half * xs[i]);
    return acc * half;
}

// Smallest GL order that integrates polynomials of `degree` exactly.
inline int exact_order(int degree) {
    const int m = degree / 2 + 1;
    return std::min(m, gl_tables::max_order);
}

// Merge panel edges: [a,b] endpoints plus any interior breakpoints.
inline std::vector<double> panel_edges(double a, double b, std::span<const double> breakpoints) {
    std::vector<double> edges;
    edges.push_back(a);
    for (double x : breakpoints)
        if (x > a && x < b) edges.push_back(x);
    edges.push_back(b);
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    return edges;
}

inline constexpr int default_order = 16;

// Panel-adaptive integration: each initial panel (split at the supplied
// breakpoints) is bisected until GL16 on the panel agrees with GL16 on its
// halves within the panel's share of abs_tol. Throws tolerance_error when
// the depth budget is exhausted before convergence.
template <typename Fn>
double integrate_adaptive(const Fn& fn, double a, double b,
                          std::span<const double> breakpoints,
                          double abs_tol = 1e-9, int max_depth = 14) {
    if (!(b > a)) return 0.0;
    const auto edges = panel_edges(a, b, breakpoints);
    const double total_len = b - a;

    struct frame {
        double lo, hi, tol;
        int depth;
    };

    double total = 0.0;
    std::vector<frame> stack;
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
        const double len = edges[i + 1] - edges[i];
        stack.push_back({edges[i], edges[i + 1],
                         std::max(abs_tol * len / total_len, 1e-300), 0});
    }

    while (!stack.empty()) {
        const frame f = stack.back();
        stack.pop_back();
        const double coarse = gauss(fn, f.lo, f.hi, default_order);
        const double mid = 0.5 * (f.lo + f.hi);
        const double fine = gauss(fn, f.lo, mid, default_order) +
                            gauss(fn, mid, f.hi, default_order);
        if (std::abs(fine - coarse) <= f.tol) {
            total += fine;
            continue;
        }
        if (f.depth >= max_depth)
            throw tolerance_error("integrate_adaptive: panel refinement exhausted");
        stack.push_back({f.lo, mid, 0.5 * f.tol, f.depth + 1});
        stack.push_back({mid, f.hi, 0.5 * f.tol, f.depth + 1});
    }
    return total;
}

// Fixed tensor-style panel rule: GL nodes/weights on every panel, panels
// given by breakpoints and an equal subdivision count. Deterministic node
// placement for a given argument set.
struct panel_rule {
    std::vector<double> x;
    std::vector<double> w;
};

inline panel_rule make_panel_rule(double a, double b, std::span<const double> breakpoints,
                                  int subdivisions, int order = default_order,
                                  double max_panel_len = 0.0) {
    panel_rule rule;
    if (!(b > a)) return rule;
    const auto edges = panel_edges(a, b, breakpoints);
    const auto& t = gl_tables::instance();
    const auto xs = t.nodes(order);
    const auto ws = t.weights(order);
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
        const double len = edges[i + 1] - edges[i];
        int parts = subdivisions;
        if (max_panel_len > 0.0)
            parts *= std::max(1, static_cast<int>(std::ceil(len / max_panel_len)));
        for (int s = 0; s < parts; ++s) {
            const double lo = edges[i] + len * s / parts;
            const double hi = edges[i] + len * (s + 1) / parts;
            const double mid = 0.5 * (lo + hi);
            const double half = 0.5 * (hi - lo);
            for (int k = 0; k < order; ++k) {
                rule.x.push_back(mid + half * xs[k]);
                rule.w.push_back(half * ws[k]);
            }
        }
    }
    return rule;
}

} // namespace quad
} // namespace normest
