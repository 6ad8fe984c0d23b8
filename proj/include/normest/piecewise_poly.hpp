#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "normest/errors.hpp"

namespace normest {

// Dense monomial-basis polynomial, absolute coordinates.
struct poly {
    std::vector<double> c; // value = sum_k c[k] x^k

    double eval(double x) const {
        double v = 0.0;
        for (std::size_t k = c.size(); k-- > 0;) v = v * x + c[k];
        return v;
    }

    int degree() const { return static_cast<int>(c.size()) - 1; }

    // exact antiderivative integral over [a, b]
    double integral(double a, double b) const {
        double va = 0.0, vb = 0.0;
        for (std::size_t k = c.size(); k-- > 0;) {
            va = va * a + c[k] / (static_cast<double>(k) + 1.0);
            vb = vb * b + c[k] / (static_cast<double>(k) + 1.0);
        }
        return vb * b - va * a;
    }

    poly derivative() const {
        poly d;
        if (c.size() <= 1) return d;
        d.c.resize(c.size() - 1);
        for (std::size_t k = 1; k < c.size(); ++k)
            d.c[k - 1] = c[k] * static_cast<double>(k);
        return d;
    }
};

// Compactly supported piecewise polynomial on [breakpoints.front(),
// breakpoints.back()], zero outside. Evaluation at a breakpoint takes the
// segment to its right (right-continuous); at the right support endpoint the
// value is 0.
class piecewise_poly {
public:
    piecewise_poly() = default;

    piecewise_poly(std::vector<double> breakpoints, std::vector<poly> segments)
        : bp_(std::move(breakpoints)), seg_(std::move(segments)) {
        if (bp_.size() < 2 || seg_.size() + 1 != bp_.size())
            throw error("piecewise_poly: need k+1 breakpoints for k segments");
        for (std::size_t i = 1; i < bp_.size(); ++i)
            if (!(bp_[i] > bp_[i - 1]))
                throw error("piecewise_poly: breakpoints must be strictly increasing");
    }

    const std::vector<double>& breakpoints() const { return bp_; }
    const std::vector<poly>& segments() const { return seg_; }
    double support_lo() const { return bp_.front(); }
    double support_hi() const { return bp_.back(); }

    double eval(double x) const {
        if (bp_.empty() || x < bp_.front() || x >= bp_.back()) return 0.0;
        const auto it = std::upper_bound(bp_.begin(), bp_.end(), x);
        const std::size_t idx = static_cast<std::size_t>(it - bp_.begin()) - 1;
        return seg_[idx].eval(x);
    }

    // exact integral of x^k * f(x) over the support
    double moment(int k) const {
        double total = 0.0;
        for (std::size_t i = 0; i < seg_.size(); ++i) {
            poly m = seg_[i];
            m.c.insert(m.c.begin(), static_cast<std::size_t>(k), 0.0);
            total += m.integral(bp_[i], bp_[i + 1]);
        }
        return total;
    }

    double integral() const { return moment(0); }

    // x -> f(x/s) for s > 0: breakpoints scale by s, coefficients by s^-k.
    piecewise_poly scale_x(double s) const {
        std::vector<double> nb(bp_.size());
        std::vector<poly> ns(seg_.size());
        for (std::size_t i = 0; i < bp_.size(); ++i) nb[i] = bp_[i] * s;
        for (std::size_t i = 0; i < seg_.size(); ++i) {
            ns[i].c.resize(seg_[i].c.size());
            double sk = 1.0;
            for (std::size_t k = 0; k < seg_[i].c.size(); ++k) {
                ns[i].c[k] = seg_[i].c[k] / sk;
                sk *= s;
            }
        }
        return piecewise_poly(std::move(nb), std::move(ns));
    }

    // sup over the support of |f|; exact for segment degree <= 3, else
    // refined sampling per segment
    double sup_norm() const {
        double best = 0.0;
        for (std::size_t i = 0; i < seg_.size(); ++i) {
            const double a = bp_[i], b = bp_[i + 1];
            best = std::max(best, std::abs(seg_[i].eval(a)));
            best = std::max(best, std::abs(seg_[i].eval(b)));
            const poly d = seg_[i].derivative();
            if (d.degree() <= 0) continue;
            if (d.degree() == 1) {
                const double root = -d.c[0] / d.c[1];
                if (root > a && root < b)
                    best = std::max(best, std::abs(seg_[i].eval(root)));
            } else if (d.degree() == 2) {
                const double disc = d.c[1] * d.c[1] - 4.0 * d.c[2] * d.c[0];
                if (disc >= 0.0) {
                    const double sq = std::sqrt(disc);
                    for (double root : {(-d.c[1] + sq) / (2.0 * d.c[2]),
                                        (-d.c[1] - sq) / (2.0 * d.c[2])})
                        if (root > a && root < b)
                            best = std::max(best, std::abs(seg_[i].eval(root)));
                }
            } else {
                for (int s = 1; s < 64; ++s) {
                    const double x = a + (b - a) * s / 64.0;
                    best = std::max(best, std::abs(seg_[i].eval(x)));
                }
            }
        }
        return best;
    }

    // coeff * f + g with breakpoint-union refinement; absent segments count
    // as zero
    static piecewise_poly add_scaled(const piecewise_poly& f, double coeff,
                                     const piecewise_poly& g) {
        std::vector<double> nb;
        nb.reserve(f.bp_.size() + g.bp_.size());
        nb.insert(nb.end(), f.bp_.begin(), f.bp_.end());
        nb.insert(nb.end(), g.bp_.begin(), g.bp_.end());
        std::sort(nb.begin(), nb.end());
        nb.erase(std::unique(nb.begin(), nb.end()), nb.end());

        std::vector<poly> ns(nb.size() - 1);
        for (std::size_t i = 0; i + 1 < nb.size(); ++i) {
            const double mid = 0.5 * (nb[i] + nb[i + 1]);
            poly sum;
            auto accumulate = [&sum](const piecewise_poly& src, double w, double x) {
                if (x < src.support_lo() || x >= src.support_hi()) return;
                const auto it = std::upper_bound(src.bp_.begin(), src.bp_.end(), x);
                const poly& s = src.seg_[static_cast<std::size_t>(it - src.bp_.begin()) - 1];
                if (sum.c.size() < s.c.size()) sum.c.resize(s.c.size(), 0.0);
                for (std::size_t k = 0; k < s.c.size(); ++k) sum.c[k] += w * s.c[k];
            };
            accumulate(f, coeff, mid);
            accumulate(g, 1.0, mid);
            ns[i] = std::move(sum);
        }
        return piecewise_poly(std::move(nb), std::move(ns));
    }

private:
    std::vector<double> bp_;
    std::vector<poly> seg_;
};

} // namespace normest
