#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "normest/class_spec.hpp"
#include "normest/errors.hpp"

namespace normest {

// tau(s) = 1 - 1/omega + 1/(beta*s) on s in [1, inf]; 1/(beta*inf) == 0.
inline double tau(const class_spec& spec, double s) {
    if (!(s >= 1.0)) throw config_error("tau: s must satisfy s >= 1 (or s = inf)");
    return 1.0 - spec.inv_omega() + spec.inv_beta() / s;
}

enum class regime_kind { tau_p_geq_1, tau_q_neg, tau_q_nonneg };

inline std::string to_string(regime_kind k) {
    switch (k) {
        case regime_kind::tau_p_geq_1: return "TauPGeq1";
        case regime_kind::tau_q_neg: return "TauQNeg";
        case regime_kind::tau_q_nonneg: return "TauQNonneg";
    }
    return "?";
}

// Rate calculus for a class instance: decay exponent theta (three-branch
// table on the signs of tau(p)-1 and tau(q)), its parametric cap
// theta* = min(1/2, theta), and the risk scale phi_n.
struct rate_plan {
    double inv_beta = 0.0;
    double inv_omega = 0.0;
    double L_beta = 1.0;
    regime_kind regime = regime_kind::tau_p_geq_1;
    double theta = 0.0;
    double theta_star = 0.0;
    double phi_coeff = 1.0; // L_beta^{(1-1/p)/tau(1)}

    double phi(double n) const { return phi_coeff * std::pow(n, -theta_star); }
};

inline rate_plan classify_regime(const class_spec& spec) {
    spec.validate();
    rate_plan plan;
    plan.inv_beta = spec.inv_beta();
    plan.inv_omega = spec.inv_omega();
    plan.L_beta = std::exp(spec.log_L_beta());

    const double p = static_cast<double>(spec.p);
    const double tau_1 = tau(spec, 1.0);
    const double tau_p = tau(spec, p);
    const double tau_q = tau(spec, spec.q);

    if (tau_p >= 1.0) {
        plan.regime = regime_kind::tau_p_geq_1;
        plan.theta = 1.0 / tau_1;
    } else if (tau_q < 0.0) {
        plan.regime = regime_kind::tau_q_neg;
        plan.theta = (1.0 / p - 1.0 / spec.q) /
                     (1.0 - 1.0 / spec.q - (1.0 - 1.0 / p) * tau_q);
    } else {
        plan.regime = regime_kind::tau_q_nonneg;
        plan.theta = tau_p / tau_1;
    }
    plan.theta_star = std::min(0.5, plan.theta);
    plan.phi_coeff = std::exp(spec.log_L_beta() * (1.0 - 1.0 / p) / tau_1);
    return plan;
}

// Interpolation exponent gamma_j(s): beta_j * tau(s)/tau(r_j) below the
// integrability index, beta_j above. Only defined where tau(s*) > 0 with
// s* = max(s, max_j r_j).
inline double gamma_j(const class_spec& spec, double s, int j) {
    if (!(s > 1.0)) throw config_error("gamma_j: s must satisfy s > 1");
    if (j < 0 || j >= spec.d) throw config_error("gamma_j: axis index out of range");
    double s_star = s;
    for (int k = 0; k < spec.d; ++k) s_star = std::max(s_star, spec.r[k]);
    if (!(tau(spec, s_star) > 0.0))
        throw infeasible_error("gamma_j: tau(s*) <= 0, exponent undefined");
    if (spec.r[j] < s) return spec.beta[j] * tau(spec, s) / tau(spec, spec.r[j]);
    return spec.beta[j];
}

struct exponent_set {
    std::vector<double> kappa;
    std::vector<double> pj;
    double inv_upsilon = 0.0; // sum_j 1/(p_j kappa_j)
};

inline exponent_set exponents(const class_spec& spec) {
    spec.validate();
    const double p = static_cast<double>(spec.p);
    const double tau_p = tau(spec, p);
    const double tau_q = tau(spec, spec.q);

    exponent_set out;
    out.kappa.resize(spec.d);
    out.pj.resize(spec.d);
    for (int j = 0; j < spec.d; ++j) {
        const double rj = spec.r[j];
        if (rj <= p && tau_q > 0.0) {
            const double tau_rj = tau(spec, rj);
            if (!(tau_rj > 0.0))
                throw infeasible_error("exponents: tau(r_j) <= 0 on kappa branch");
            out.kappa[j] = spec.beta[j] * tau_p / tau_rj;
        } else {
            out.kappa[j] = spec.beta[j];
        }
        if (rj >= p) {
            out.pj[j] = 2.0 * (1.0 - 1.0 / p) / (1.0 - 1.0 / rj);
        } else if (tau_q > 0.0) {
            out.pj[j] = 2.0;
        } else {
            out.pj[j] = 2.0 * (1.0 / p - 1.0 / spec.q) / (1.0 / rj - 1.0 / spec.q);
        }
        out.inv_upsilon += 1.0 / (out.pj[j] * out.kappa[j]);
    }
    return out;
}

// Variance constant: max_{k=1..p} (L_{gamma(2p-k)})^{(1-k/p) tau(2p-k)/tau(p)}
// when tau(q) > 0, else 1. L_{gamma(s)} = prod_j L_j^{1/gamma_j(s)}.
inline double variance_constant(const class_spec& spec) {
    spec.validate();
    if (!(tau(spec, spec.q) > 0.0)) return 1.0;
    const double p = static_cast<double>(spec.p);
    const double tau_p = tau(spec, p);
    double best = -inf;
    for (int k = 1; k <= spec.p; ++k) {
        const double s = 2.0 * p - k;
        double log_L_gamma = 0.0;
        for (int j = 0; j < spec.d; ++j)
            log_L_gamma += std::log(spec.L[j]) / gamma_j(spec, s, j);
        const double term = std::exp(log_L_gamma * (1.0 - k / p) * tau(spec, s) / tau_p);
        best = std::max(best, term);
    }
    return best;
}

// Bandwidth selection for sample size n. All power products are evaluated
// in the log domain; h_j = L_j^{-1/kappa_j} N^{2/(kappa_j p_j)} with
// N = (frak_L / n)^{1/(1 + 2(1-1/p)/upsilon)}.
struct bandwidth_plan {
    std::vector<double> kappa;
    std::vector<double> pj;
    double inv_upsilon = 0.0;
    double L_kappa = 1.0;    // prod_j L_j^{1/kappa_j}
    double var_const = 1.0;  // variance constant entering frak_L
    double frak_L = 1.0;     // var_const^{1/p} L_kappa^{1-1/p}
    double N = 0.0;          // (frak_L/n)^{1/(1+2(1-1/p)/upsilon)}
    std::vector<double> h;
    std::size_t n = 0;
};

inline bandwidth_plan bandwidth(const class_spec& spec, std::size_t n) {
    spec.validate();
    if (n < static_cast<std::size_t>(spec.p))
        throw insufficient_sample_error("bandwidth: need n >= p observations");

    const double p = static_cast<double>(spec.p);
    exponent_set exps = exponents(spec);

    bandwidth_plan plan;
    plan.kappa = std::move(exps.kappa);
    plan.pj = std::move(exps.pj);
    plan.inv_upsilon = exps.inv_upsilon;
    plan.n = n;

    double log_L_kappa = 0.0;
    for (int j = 0; j < spec.d; ++j) log_L_kappa += std::log(spec.L[j]) / plan.kappa[j];
    plan.L_kappa = std::exp(log_L_kappa);
    plan.var_const = variance_constant(spec);

    const double log_frak_L = std::log(plan.var_const) / p + (1.0 - 1.0 / p) * log_L_kappa;
    plan.frak_L = std::exp(log_frak_L);

    const double denom = 1.0 + 2.0 * (1.0 - 1.0 / p) * plan.inv_upsilon;
    const double log_N = (log_frak_L - std::log(static_cast<double>(n))) / denom;
    plan.N = std::exp(log_N);

    plan.h.resize(spec.d);
    for (int j = 0; j < spec.d; ++j)
        plan.h[j] = std::exp(-std::log(spec.L[j]) / plan.kappa[j] +
                             2.0 / (plan.kappa[j] * plan.pj[j]) * log_N);
    return plan;
}

} // namespace normest
