#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "normest/density.hpp"
#include "normest/errors.hpp"
#include "normest/estimator.hpp"
#include "normest/fit.hpp"
#include "normest/oracle.hpp"
#include "normest/parallel.hpp"
#include "normest/rates.hpp"
#include "normest/rng.hpp"
#include "normest/summation.hpp"

namespace normest {

// Inverse-CDF sampling, one stream per (density, n, seed) triple; identical
// arguments give identical bit patterns.
inline sample draw_sample(const test_density& f, std::size_t n, std::uint64_t seed) {
    sample s;
    s.n = n;
    s.d = f.dim();
    s.data.resize(n * static_cast<std::size_t>(s.d));
    rng256 rng(seed);
    for (std::size_t i = 0; i < n; ++i)
        for (int j = 0; j < s.d; ++j)
            s.data[i * static_cast<std::size_t>(s.d) + j] = f.axis(j).quantile(rng.next_double());
    return s;
}

enum class bandwidth_mode { plan, fixed };

struct experiment_config {
    test_density density;
    class_spec spec;
    std::vector<std::size_t> n_grid;
    std::size_t replicates = 2;
    std::uint64_t seed = 1;
    bandwidth_mode mode = bandwidth_mode::plan;
    std::vector<double> h_fixed; // used when mode == fixed
    kernel_config kernel;
    unsigned workers = 1;

    explicit experiment_config(test_density f) : density(std::move(f)) {}

    void validate() const {
        spec.validate();
        if (density.dim() != spec.d)
            throw config_error("experiment: density dimension != spec dimension");
        if (n_grid.empty()) throw config_error("experiment: empty n grid");
        for (std::size_t i = 0; i < n_grid.size(); ++i) {
            if (n_grid[i] < static_cast<std::size_t>(spec.p))
                throw config_error("experiment: every n must satisfy n >= p");
            if (i > 0 && n_grid[i] <= n_grid[i - 1])
                throw config_error("experiment: n grid must be strictly increasing");
        }
        if (replicates < 2) throw config_error("experiment: need at least 2 replicates");
        if (mode == bandwidth_mode::fixed &&
            static_cast<int>(h_fixed.size()) != spec.d)
            throw config_error("experiment: fixed bandwidth needs d entries");
    }
};

struct replicate_value {
    double t_hat = 0.0;
    double n_hat = 0.0;
};

struct risk_row {
    std::size_t n = 0;
    double risk = 0.0;       // sqrt(mean (N-hat - ||f||_p)^2)
    double mc_se = 0.0;      // delta-method standard error of the risk
    double mean_bias = 0.0;  // mean(N-hat) - ||f||_p
    double variance = 0.0;   // sample variance of N-hat
    double phi_n = 0.0;      // theoretical risk scale
    std::vector<double> h;
};

struct risk_table {
    std::vector<risk_row> rows; // successful rows only
    slope_estimate slope;   // log risk vs log n
    double theta_star = 0.0;
    double norm_p = 0.0;    // oracle ||f||_p
    std::vector<std::vector<replicate_value>> replicates; // [n_index][r], full grid
    std::vector<std::string> row_errors; // aligned with n_grid; empty = ok
};

namespace detail {

// Runs body(ni, r, estimate(...)) over the whole (n, replicate) grid. An
// estimator error aborts only its row: the returned vector carries one
// diagnostic per grid entry (empty when the row succeeded).
template <typename PerReplicate>
std::vector<std::string> run_grid(const experiment_config& cfg, PerReplicate&& body) {
    const std::size_t R = cfg.replicates;
    std::vector<std::string> row_error(cfg.n_grid.size());
    std::mutex err_mutex;
    parallel_for(cfg.n_grid.size() * R, cfg.workers, [&](std::size_t task) {
        const std::size_t ni = task / R;
        const std::size_t r = task % R;
        const std::size_t n = cfg.n_grid[ni];
        const std::uint64_t seed = derive_seed(cfg.seed, n, r);
        try {
            const sample s = draw_sample(cfg.density, n, seed);
            estimate_options opts;
            opts.kernel = cfg.kernel;
            opts.workers = 1; // replicate-level parallelism only
            if (cfg.mode == bandwidth_mode::fixed) opts.bandwidth_override = cfg.h_fixed;
            body(ni, r, estimate(s, cfg.spec, opts));
        } catch (const error& e) {
            std::lock_guard<std::mutex> lock(err_mutex);
            if (row_error[ni].empty()) row_error[ni] = e.what();
        }
    });
    return row_error;
}

} // namespace detail

inline risk_table run_risk_experiment(const experiment_config& cfg) {
    cfg.validate();
    risk_table table;
    table.norm_p = exact_norm(cfg.density, static_cast<double>(cfg.spec.p));
    const rate_plan rates = classify_regime(cfg.spec);
    table.theta_star = rates.theta_star;

    const std::size_t R = cfg.replicates;
    table.replicates.assign(cfg.n_grid.size(), std::vector<replicate_value>(R));
    table.row_errors = detail::run_grid(
        cfg, [&](std::size_t ni, std::size_t r, const estimate_result& res) {
            table.replicates[ni][r] = {res.t_hat, res.n_hat};
        });

    std::vector<double> ns, risks;
    std::vector<double> scratch(R);
    for (std::size_t ni = 0; ni < cfg.n_grid.size(); ++ni) {
        if (!table.row_errors[ni].empty()) continue;
        risk_row row;
        row.n = cfg.n_grid[ni];

        for (std::size_t r = 0; r < R; ++r) {
            const double dev = table.replicates[ni][r].n_hat - table.norm_p;
            scratch[r] = dev * dev;
        }
        const double m2 = pairwise_sum(scratch) / R;
        row.risk = std::sqrt(m2);

        double var_sq = 0.0;
        for (std::size_t r = 0; r < R; ++r) {
            const double c = scratch[r] - m2;
            var_sq += c * c;
        }
        const double se_m2 = std::sqrt(var_sq / (R - 1.0) / R);
        row.mc_se = row.risk > 0.0 ? se_m2 / (2.0 * row.risk) : 0.0;

        for (std::size_t r = 0; r < R; ++r) scratch[r] = table.replicates[ni][r].n_hat;
        const double mean = pairwise_sum(scratch) / R;
        row.mean_bias = mean - table.norm_p;
        for (std::size_t r = 0; r < R; ++r) {
            const double c = table.replicates[ni][r].n_hat - mean;
            scratch[r] = c * c;
        }
        row.variance = pairwise_sum(scratch) / (R - 1.0);

        row.phi_n = rates.phi(static_cast<double>(row.n));
        row.h = (cfg.mode == bandwidth_mode::fixed) ? cfg.h_fixed
                                                    : bandwidth(cfg.spec, row.n).h;
        table.rows.push_back(std::move(row));
        ns.push_back(static_cast<double>(cfg.n_grid[ni]));
        risks.push_back(table.rows.back().risk);
    }

    if (table.rows.size() >= 2)
        table.slope = fit_loglog_slope(ns, risks, 500, derive_seed(cfg.seed, 0xb007, 0));
    return table;
}

struct bias_row {
    double h = 0.0;
    double bias = 0.0; // E T-hat - ||f||_p^p, exact via the oracle remainder
};

struct bias_table {
    std::vector<bias_row> rows;
    slope_estimate slope;    // log |bias| vs log h
    double min_pk = 0.0;     // min_j p_j kappa_j, the predicted bias exponent
};

// Bias needs no sampling: T1-hat and T2-hat are unbiased, so the expected
// estimator bias is minus the signed remainder of the norm representation.
inline bias_table run_bias_experiment(const test_density& f, const class_spec& spec,
                                      std::span<const double> h_grid,
                                      const kernel_config& kcfg = {},
                                      const quad_opts& opts = {}) {
    spec.validate();
    if (f.dim() != spec.d) throw config_error("bias experiment: dimension mismatch");
    const aggregated_kernel k = kcfg.build(spec);

    bias_table table;
    std::vector<double> hs, abs_bias;
    for (double h : h_grid) {
        if (!(h > 0.0)) throw config_error("bias experiment: h must be positive");
        const std::vector<double> hv(static_cast<std::size_t>(spec.d), h);
        const double bias = -representation_remainder_sum(f, k, hv, spec.p, opts);
        table.rows.push_back({h, bias});
        hs.push_back(h);
        abs_bias.push_back(std::abs(bias));
    }
    const exponent_set exps = exponents(spec);
    table.min_pk = inf;
    for (int j = 0; j < spec.d; ++j)
        table.min_pk = std::min(table.min_pk, exps.pj[j] * exps.kappa[j]);
    if (table.rows.size() >= 2) table.slope = fit_loglog_slope(hs, abs_bias);
    return table;
}

struct variance_row {
    std::size_t n = 0;
    double var_t = 0.0; // empirical variance of T-hat
    double ratio = 0.0; // var * n / ||f||_{2p-1}^{2p-1}
};

struct variance_table {
    std::vector<variance_row> rows; // successful rows only
    slope_estimate slope; // log var vs log n
    double norm_pow = 0.0; // ||f||_{2p-1}^{2p-1}
    std::vector<std::string> row_errors; // aligned with n_grid; empty = ok
};

inline variance_table run_variance_experiment(const experiment_config& cfg) {
    cfg.validate();
    if (cfg.mode != bandwidth_mode::fixed)
        throw config_error("variance experiment: requires a fixed bandwidth");

    const double s = 2.0 * cfg.spec.p - 1.0;
    variance_table table;
    table.norm_pow = std::pow(exact_norm(cfg.density, s), s);

    const std::size_t R = cfg.replicates;
    std::vector<std::vector<double>> t_hats(cfg.n_grid.size(), std::vector<double>(R));
    table.row_errors = detail::run_grid(
        cfg, [&](std::size_t ni, std::size_t r, const estimate_result& res) {
            t_hats[ni][r] = res.t_hat;
        });

    std::vector<double> ns, vars;
    std::vector<double> scratch(R);
    for (std::size_t ni = 0; ni < cfg.n_grid.size(); ++ni) {
        if (!table.row_errors[ni].empty()) continue;
        const double mean = pairwise_sum(t_hats[ni]) / R;
        for (std::size_t r = 0; r < R; ++r) {
            const double c = t_hats[ni][r] - mean;
            scratch[r] = c * c;
        }
        variance_row row;
        row.n = cfg.n_grid[ni];
        row.var_t = pairwise_sum(scratch) / (R - 1.0);
        row.ratio = row.var_t * row.n / table.norm_pow;
        table.rows.push_back(row);
        ns.push_back(static_cast<double>(row.n));
        vars.push_back(row.var_t);
    }
    if (table.rows.size() >= 2)
        table.slope = fit_loglog_slope(ns, vars, 500, derive_seed(cfg.seed, 0x7a7, 1));
    return table;
}

} // namespace normest
