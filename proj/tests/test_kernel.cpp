#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "normest/kernel.hpp"
#include "normest/quadrature.hpp"
#include "normest/rng.hpp"

using namespace normest;

TEST_CASE("quadrature basics") {
    // GL16 is exact for low-degree polynomials and spectral for cos
    const double i1 = quad::gauss([](double x) { return x * x * x * x; }, -1.0, 2.0, 16);
    CHECK(i1 == Catch::Approx((std::pow(2.0, 5.0) + 1.0) / 5.0).epsilon(1e-14));
    const double i2 = quad::integrate_adaptive(
        [](double x) { return std::cos(x); }, 0.0, 10.0, std::vector<double>{}, 1e-12);
    CHECK(i2 == Catch::Approx(std::sin(10.0)).margin(1e-11));
    // integrable singularity exhausts panel refinement
    CHECK_THROWS_AS(quad::integrate_adaptive(
                        [](double x) { return std::pow(x, -0.9); }, 0.0, 1.0,
                        std::vector<double>{}, 1e-12, 8),
                    tolerance_error);
}

TEST_CASE("base kernels") {
    for (auto kind : {base_kind::box, base_kind::epanechnikov}) {
        const auto base = make_base(kind);
        CHECK(base.poly.integral() == Catch::Approx(1.0).epsilon(1e-15));
        CHECK(base.poly.support_lo() == -1.0);
        CHECK(base.poly.support_hi() == 1.0);
        for (double y : {0.123, 0.5, 0.972})
            CHECK(base.eval(-y) == Catch::Approx(base.eval(y)).margin(1e-15));
    }
    CHECK(make_base(base_kind::box).eval(0.0) == 0.5);
    CHECK(make_base(base_kind::epanechnikov).eval(0.0) == 0.75);
    CHECK(make_base(base_kind::epanechnikov).sup_norm() == Catch::Approx(0.75));
}

TEST_CASE("aggregation") {
    const auto epan = make_base(base_kind::epanechnikov);

    SECTION("ell = 1 reproduces the base") {
        const auto k1 = build_aggregated(epan, 1);
        for (double y = -0.95; y < 1.0; y += 0.1)
            CHECK(k1.eval(y) == Catch::Approx(epan.eval(y)).margin(1e-15));
        CHECK(k1.poly.support_lo() == -1.0);
        CHECK(k1.poly.support_hi() == 1.0);
    }

    SECTION("ell = 2 value at zero") {
        const auto k2 = build_aggregated(epan, 2);
        CHECK(k2.eval(0.0) == Catch::Approx(9.0 / 8.0).epsilon(1e-15));
        CHECK(k2.poly.support_lo() == -2.0);
        CHECK(k2.poly.support_hi() == 2.0);
    }

    SECTION("unit mass and vanishing moments, both bases, ell = 1..6") {
        for (auto kind : {base_kind::box, base_kind::epanechnikov}) {
            const auto base = make_base(kind);
            for (int ell = 1; ell <= 6; ++ell) {
                const auto k = build_aggregated(base, ell);
                CHECK(moment(k, 0) == Catch::Approx(1.0).margin(1e-12));
                for (int ord = 1; ord < ell; ++ord)
                    CHECK(moment(k, ord) == Catch::Approx(0.0).margin(1e-10));
            }
        }
    }

    SECTION("odd moments vanish by symmetry") {
        const auto k3 = build_aggregated(epan, 3);
        CHECK(moment(k3, 3) == Catch::Approx(0.0).margin(1e-12));
        CHECK(moment(k3, 5) == Catch::Approx(0.0).margin(1e-12));
        CHECK(moment(k3, 2) == Catch::Approx(0.0).margin(1e-12));
    }

    SECTION("aggregation preserves symmetry") {
        rng256 rng(0xa66ULL);
        for (int ell = 1; ell <= 5; ++ell) {
            const auto k = build_aggregated(epan, ell);
            for (int i = 0; i < 50; ++i) {
                const double y = ell * (2.0 * rng.next_double() - 1.0) * 0.999;
                CHECK(k.eval(-y) == Catch::Approx(k.eval(y)).margin(1e-13));
            }
        }
    }

    SECTION("sup norm triangle bound") {
        for (auto kind : {base_kind::box, base_kind::epanechnikov}) {
            const auto base = make_base(kind);
            for (int ell = 1; ell <= 5; ++ell) {
                const auto k = build_aggregated(base, ell);
                double bound = 0.0;
                for (int i = 1; i <= ell; ++i) bound += binom(ell, i) / i * base.sup_norm();
                CHECK(k.sup_norm() <= bound * (1.0 + 1e-12));
            }
        }
    }
}

TEST_CASE("scaled product kernel evaluation") {
    const auto k2 = build_aggregated(make_base(base_kind::epanechnikov), 2);

    SECTION("outside the support box") {
        const product_kernel K{2, k2};
        const std::vector<double> h{0.5, 0.5};
        const std::vector<double> x{1.01, 0.0}; // first axis beyond ell*h = 1
        CHECK(K.eval_scaled(h, x) == 0.0);
    }

    SECTION("center value with h = (1/2, 1/2)") {
        const product_kernel K{2, k2};
        const std::vector<double> h{0.5, 0.5};
        const std::vector<double> x{0.0, 0.0};
        CHECK(K.eval_scaled(h, x) ==
              Catch::Approx(4.0 * k2.eval(0.0) * k2.eval(0.0)).epsilon(1e-14));
    }

    SECTION("box kernel is flat 1/(2h) inside") {
        const auto k1 = build_aggregated(make_base(base_kind::box), 1);
        const product_kernel K{1, k1};
        const double h = 0.37;
        for (double u : {-0.99 * h, -0.31 * h, 0.0, 0.64 * h, 0.99 * h})
            CHECK(K.eval_scaled(std::vector<double>{h}, std::vector<double>{u}) ==
                  Catch::Approx(1.0 / (2.0 * h)).epsilon(1e-14));
    }
}

TEST_CASE("factor product integral") {
    const auto box1 = build_aggregated(make_base(base_kind::box), 1);

    SECTION("p = 1 is the kernel mass") {
        CHECK(factor_product_integral(box1, 0.3, std::vector<double>{0.7}) ==
              Catch::Approx(1.0).epsilon(1e-13));
    }

    SECTION("box pair at offset h/2") {
        const double h = 0.2;
        CHECK(factor_product_integral(box1, h, std::vector<double>{0.0, h / 2}) ==
              Catch::Approx(3.0 / (8.0 * h)).epsilon(1e-13));
    }

    SECTION("disjoint supports") {
        CHECK(factor_product_integral(box1, 0.1, std::vector<double>{0.0, 0.21}) == 0.0);
    }

    SECTION("translation invariance at coincident points") {
        const auto epan2 = build_aggregated(make_base(base_kind::epanechnikov), 2);
        const double h = 0.45;
        const double at0 = factor_product_integral(epan2, h, std::vector<double>{0, 0, 0});
        const double at7 = factor_product_integral(epan2, h, std::vector<double>{7, 7, 7});
        CHECK(at7 == Catch::Approx(at0).epsilon(1e-12));
    }

    SECTION("matches adaptive quadrature on randomized inputs") {
        rng256 rng(0xfeedULL);
        for (int trial = 0; trial < 60; ++trial) {
            const auto kind = (rng.next_u64() & 1) ? base_kind::box : base_kind::epanechnikov;
            const int ell = 1 + static_cast<int>(rng.next_u64() % 4);
            const auto k = build_aggregated(make_base(kind), ell);
            const double h = 0.05 + 1.5 * rng.next_double();
            const std::size_t p = 1 + rng.next_u64() % 4;
            std::vector<double> xs(p);
            for (auto& x : xs) x = (rng.next_double() - 0.5) * 3.0 * ell * h;

            double lo = xs[0], hi = xs[0];
            for (double x : xs) {
                lo = std::min(lo, x);
                hi = std::max(hi, x);
            }
            std::vector<double> cuts;
            for (double x : xs)
                for (double b : k.poly.breakpoints()) cuts.push_back(x + b * h);
            const double reference = quad::integrate_adaptive(
                [&](double y) {
                    double prod = 1.0;
                    for (double x : xs) prod *= k.eval((y - x) / h) / h;
                    return prod;
                },
                lo - ell * h, hi + ell * h, cuts, 1e-12);
            const double exact = factor_product_integral(k, h, xs);
            CHECK(exact == Catch::Approx(reference).margin(1e-10));
        }
    }
}

TEST_CASE("kernel config auto order") {
    class_spec spec;
    spec.d = 2;
    spec.beta = {1.0, 2.5};
    spec.r = {inf, inf};
    spec.L = {1.0, 1.0};
    spec.p = 2;
    spec.q = inf;
    kernel_config cfg;
    CHECK(cfg.resolve_ell(spec) == 3); // floor(2.5) + 1
    spec.beta = {1.0, 1.0};
    CHECK(cfg.resolve_ell(spec) == 2); // strictly above beta = 1
    cfg.ell = 4;
    CHECK(cfg.resolve_ell(spec) == 4);
}
