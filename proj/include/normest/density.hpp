#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "normest/errors.hpp"

namespace normest {

// 1-D marginal of a tensor-product test density. Quantile (inverse CDF)
// sampling keeps draws exactly reproducible for a fixed generator stream.
class density_1d {
public:
    virtual ~density_1d() = default;
    virtual double pdf(double x) const = 0;
    virtual double support_lo() const = 0;
    virtual double support_hi() const = 0;
    // non-smooth points, including the support endpoints
    virtual std::vector<double> breakpoints() const {
        return {support_lo(), support_hi()};
    }
    virtual double quantile(double u) const = 0;
    // exact integral of f^s where a closed form exists
    virtual std::optional<double> power_integral(double s) const {
        (void)s;
        return std::nullopt;
    }
};

class uniform_density final : public density_1d {
public:
    double pdf(double x) const override { return (x >= 0.0 && x <= 1.0) ? 1.0 : 0.0; }
    double support_lo() const override { return 0.0; }
    double support_hi() const override { return 1.0; }
    double quantile(double u) const override { return u; }
    std::optional<double> power_integral(double) const override { return 1.0; }
};

// 1 - |x| on [-1, 1]
class triangular_density final : public density_1d {
public:
    double pdf(double x) const override {
        const double v = 1.0 - std::abs(x);
        return v > 0.0 ? v : 0.0;
    }
    double support_lo() const override { return -1.0; }
    double support_hi() const override { return 1.0; }
    std::vector<double> breakpoints() const override { return {-1.0, 0.0, 1.0}; }
    double quantile(double u) const override {
        if (u < 0.5) return std::sqrt(2.0 * u) - 1.0;
        return 1.0 - std::sqrt(2.0 * (1.0 - u));
    }
    std::optional<double> power_integral(double s) const override {
        return 2.0 / (s + 1.0);
    }
};

// 1 - cos(2 pi x) on [0, 1]
class raised_cosine_density final : public density_1d {
public:
    double pdf(double x) const override {
        if (x < 0.0 || x > 1.0) return 0.0;
        return 1.0 - std::cos(2.0 * M_PI * x);
    }
    double support_lo() const override { return 0.0; }
    double support_hi() const override { return 1.0; }
    double quantile(double u) const override {
        // F(x) = x - sin(2 pi x)/(2 pi) is monotone; bisection is exact
        // enough and free of derivative blowup at the flat endpoints
        double lo = 0.0, hi = 1.0;
        for (int it = 0; it < 64; ++it) {
            const double mid = 0.5 * (lo + hi);
            const double F = mid - std::sin(2.0 * M_PI * mid) / (2.0 * M_PI);
            if (F < u) lo = mid;
            else hi = mid;
        }
        return 0.5 * (lo + hi);
    }
    std::optional<double> power_integral(double s) const override {
        const double si = std::round(s);
        if (std::abs(s - si) > 1e-12 || si < 0.0 || si > 40.0) return std::nullopt;
        // integral of (1 - cos)^s: binomial expansion against cos moments
        const int k = static_cast<int>(si);
        double total = 0.0;
        for (int i = 0; i <= k; ++i) {
            if (i % 2 == 1) continue; // odd cosine moments vanish
            double c = 1.0;
            for (int m = 1; m <= i; ++m) c = c * (k - i + m) / m; // C(k, i)
            double mom = 1.0;
            for (int m = 1; m <= i / 2; ++m) mom = mom * (i / 2 + m) / m; // C(i, i/2)
            mom /= std::pow(2.0, i);
            total += c * mom; // (-1)^i with even i
        }
        return total;
    }
};

// Normal(0, sigma^2) truncated to [-radius sigma, radius sigma] and
// renormalized; the clipped mass is reported for diagnostics.
class truncated_gaussian_density final : public density_1d {
public:
    explicit truncated_gaussian_density(double sigma = 1.0, double radius = 5.0)
        : sigma_(sigma), radius_(radius) {
        if (!(sigma > 0.0) || !(radius > 0.0))
            throw config_error("truncated gaussian: sigma and radius must be positive");
        mass_ = std::erf(radius_ / std::sqrt(2.0));
    }

    double pdf(double x) const override {
        if (std::abs(x) > radius_ * sigma_) return 0.0;
        const double z = x / sigma_;
        return std::exp(-0.5 * z * z) / (sigma_ * std::sqrt(2.0 * M_PI) * mass_);
    }
    double support_lo() const override { return -radius_ * sigma_; }
    double support_hi() const override { return radius_ * sigma_; }
    double quantile(double u) const override {
        double lo = support_lo(), hi = support_hi();
        for (int it = 0; it < 64; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (cdf(mid) < u) lo = mid;
            else hi = mid;
        }
        return 0.5 * (lo + hi);
    }
    std::optional<double> power_integral(double s) const override {
        // integral of phi_sigma^s over the truncation box, renormalized
        const double amp = std::pow(sigma_ * std::sqrt(2.0 * M_PI) * mass_, -s);
        return amp * sigma_ * std::sqrt(2.0 * M_PI / s) * std::erf(radius_ * std::sqrt(s / 2.0));
    }
    double truncation_mass() const { return 1.0 - mass_; }

private:
    double cdf(double x) const {
        return (std::erf(x / (sigma_ * std::sqrt(2.0))) + std::erf(radius_ / std::sqrt(2.0))) /
               (2.0 * mass_);
    }
    double sigma_;
    double radius_;
    double mass_;
};

// Tensor product of identical (or mixed) 1-D marginals.
class test_density {
public:
    test_density(std::string name, std::vector<std::shared_ptr<const density_1d>> axes)
        : name_(std::move(name)), axes_(std::move(axes)) {
        if (axes_.empty()) throw config_error("test_density: need at least one axis");
    }

    const std::string& name() const { return name_; }
    int dim() const { return static_cast<int>(axes_.size()); }
    const density_1d& axis(int j) const { return *axes_[static_cast<std::size_t>(j)]; }

    double pdf(std::span<const double> x) const {
        double v = 1.0;
        for (int j = 0; j < dim(); ++j) v *= axes_[j]->pdf(x[j]);
        return v;
    }

    // ||f||_s from per-axis closed forms, when every axis has one
    std::optional<double> known_norm(double s) const {
        double prod = 1.0;
        for (const auto& ax : axes_) {
            const auto pi = ax->power_integral(s);
            if (!pi) return std::nullopt;
            prod *= *pi;
        }
        return std::pow(prod, 1.0 / s);
    }

private:
    std::string name_;
    std::vector<std::shared_ptr<const density_1d>> axes_;
};

// Catalog lookup: uniform | triangular | cosine | gauss, tensored to dim d.
// sigma and the truncation radius only apply to the gaussian.
inline test_density make_density(const std::string& name, int d, double sigma = 1.0,
                                 double radius = 5.0) {
    if (d < 1) throw config_error("density dimension must be >= 1");
    std::shared_ptr<const density_1d> ax;
    if (name == "uniform") ax = std::make_shared<uniform_density>();
    else if (name == "triangular") ax = std::make_shared<triangular_density>();
    else if (name == "cosine") ax = std::make_shared<raised_cosine_density>();
    else if (name == "gauss") ax = std::make_shared<truncated_gaussian_density>(sigma, radius);
    else throw config_error("unknown density '" + name +
                            "' (expected uniform|triangular|cosine|gauss)");
    return test_density(name, std::vector<std::shared_ptr<const density_1d>>(
                                  static_cast<std::size_t>(d), ax));
}

} // namespace normest
