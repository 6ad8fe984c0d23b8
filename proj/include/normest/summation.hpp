#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace normest {

// Kahan compensated accumulator. Used wherever huge numbers of
// similarly-sized terms are folded in a fixed order.
class kahan_sum {
public:
    void add(double x) {
        const double y = x - comp_;
        const double t = sum_ + y;
        comp_ = (t - sum_) - y;
        sum_ = t;
    }
    double value() const { return sum_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

// Pairwise (tree) reduction over a span, in index order. Deterministic for a
// fixed input order regardless of how the values were produced.
inline double pairwise_sum(std::span<const double> xs) {
    const std::size_t n = xs.size();
    if (n == 0) return 0.0;
    if (n <= 8) {
        kahan_sum acc;
        for (double x : xs) acc.add(x);
        return acc.value();
    }
    const std::size_t half = n / 2;
    return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

inline double pairwise_sum(const std::vector<double>& xs) {
    return pairwise_sum(std::span<const double>(xs));
}

} // namespace normest
