#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "normest/class_spec.hpp"
#include "normest/errors.hpp"
#include "normest/kernel.hpp"
#include "normest/parallel.hpp"
#include "normest/rates.hpp"
#include "normest/summation.hpp"

namespace normest {

// n x d observation matrix, row-major.
struct sample {
    std::vector<double> data;
    std::size_t n = 0;
    int d = 1;

    double at(std::size_t i, int j) const { return data[i * static_cast<std::size_t>(d) + j]; }
    std::span<const double> row(std::size_t i) const {
        return {data.data() + i * static_cast<std::size_t>(d), static_cast<std::size_t>(d)};
    }

    void validate() const {
        if (data.size() != n * static_cast<std::size_t>(d))
            throw config_error("sample: data size does not match n x d");
        for (double v : data)
            if (!std::isfinite(v)) throw config_error("sample: entries must be finite");
    }
};

namespace detail {
inline constexpr std::size_t stack_p = 16; // tuples longer than this go via heap
}

// U1 on one index tuple: the d-dimensional integral of the product of p
// shifted kernels factorizes into per-axis 1-D product integrals.
inline double u1(const sample& s, std::span<const std::size_t> idx,
                 const aggregated_kernel& k, std::span<const double> h) {
    const std::size_t p = idx.size();
    double stack[detail::stack_p];
    std::vector<double> heap;
    double* coords = stack;
    if (p > detail::stack_p) {
        heap.resize(p);
        coords = heap.data();
    }
    double value = 1.0;
    for (int j = 0; j < s.d; ++j) {
        for (std::size_t i = 0; i < p; ++i) coords[i] = s.at(idx[i], j);
        value *= factor_product_integral(k, h[j], {coords, p});
        if (value == 0.0) return 0.0;
    }
    return value;
}

// U2 on one index tuple: (1/p) sum_i prod_{j != i} K_h(x_j - x_i).
inline double u2(const sample& s, std::span<const std::size_t> idx,
                 const aggregated_kernel& k, std::span<const double> h) {
    const std::size_t p = idx.size();
    auto kh = [&](std::size_t a, std::size_t b) {
        double v = 1.0;
        for (int j = 0; j < s.d; ++j)
            v *= k.eval((s.at(idx[a], j) - s.at(idx[b], j)) / h[j]) / h[j];
        return v;
    };
    if (p == 2) return kh(0, 1); // both terms coincide by kernel symmetry

    // pairwise table; the kernel is symmetric so K_h(x_a-x_b) = K_h(x_b-x_a)
    double stack[detail::stack_p * detail::stack_p];
    std::vector<double> heap;
    double* pair_val = stack;
    if (p > detail::stack_p) {
        heap.resize(p * p);
        pair_val = heap.data();
    }
    for (std::size_t a = 0; a < p; ++a)
        for (std::size_t b = a + 1; b < p; ++b) {
            const double v = kh(a, b);
            pair_val[a * p + b] = v;
            pair_val[b * p + a] = v;
        }
    double total = 0.0;
    for (std::size_t i = 0; i < p; ++i) {
        double prod = 1.0;
        for (std::size_t j = 0; j < p; ++j)
            if (j != i) prod *= pair_val[j * p + i];
        total += prod;
    }
    return total / static_cast<double>(p);
}

namespace detail {

struct scan_scratch {
    std::vector<std::size_t> block;
    std::vector<std::size_t> idx;
    std::vector<double> lo;
    std::vector<double> hi;
};

// Uniform binning with cell edge 2*ell*h_j per axis. A tuple with nonzero
// U1 or U2 has per-axis coordinate spread <= 2*ell*h_j, hence fits in a
// 2^d block of adjacent cells; every such tuple is generated exactly once,
// anchored at the componentwise-minimum cell over its members.
class tuple_grid {
public:
    tuple_grid(const sample& s, std::span<const double> h, int ell) : s_(s), d_(s.d) {
        if (d_ >= 20)
            throw config_error("tuple grid: dimension too large (2^d block fan-out)");
        edge_.resize(d_);
        for (int j = 0; j < d_; ++j) {
            edge_[j] = 2.0 * ell * h[j];
            for (std::size_t i = 0; i < s.n; ++i)
                if (std::abs(s.at(i, j)) / edge_[j] > 1e15)
                    throw config_error("bandwidth too small for the data range "
                                       "(cell index would overflow)");
        }

        std::map<std::vector<std::int64_t>, std::vector<std::size_t>> cells;
        std::vector<std::int64_t> key(d_);
        for (std::size_t i = 0; i < s.n; ++i) {
            for (int j = 0; j < d_; ++j) key[j] = cell_coord(s.at(i, j), j);
            cells[key].push_back(i);
        }
        cell_keys_.reserve(cells.size());
        cell_points_.reserve(cells.size());
        for (auto& [k, pts] : cells) {
            cell_keys_.push_back(k);
            cell_points_.push_back(std::move(pts));
        }

        // candidate anchors: every occupied cell minus a 0/1 offset per axis
        std::map<std::vector<std::int64_t>, char> anchor_set;
        std::vector<std::int64_t> cand(d_);
        for (const auto& c : cell_keys_) {
            for (unsigned mask = 0; mask < (1u << d_); ++mask) {
                for (int j = 0; j < d_; ++j)
                    cand[j] = c[j] - static_cast<std::int64_t>((mask >> j) & 1u);
                anchor_set.emplace(cand, 0);
            }
        }
        anchors_.reserve(anchor_set.size());
        for (auto& [k, unused] : anchor_set) anchors_.push_back(k);
    }

    std::size_t anchor_count() const { return anchors_.size(); }

    // Enumerate the p-subsets anchored at anchors_[a]; fn receives each
    // surviving index tuple, in coordinate-lexicographic member order.
    template <typename Fn>
    void for_each_subset(std::size_t a, int p, scan_scratch& sc, Fn& fn) const {
        const auto& anchor = anchors_[a];
        sc.block.clear();
        std::vector<std::int64_t> key(d_);
        for (unsigned mask = 0; mask < (1u << d_); ++mask) {
            for (int j = 0; j < d_; ++j)
                key[j] = anchor[j] + static_cast<std::int64_t>((mask >> j) & 1u);
            const auto it = std::lower_bound(cell_keys_.begin(), cell_keys_.end(), key);
            if (it != cell_keys_.end() && *it == key) {
                const auto& pts = cell_points_[static_cast<std::size_t>(it - cell_keys_.begin())];
                sc.block.insert(sc.block.end(), pts.begin(), pts.end());
            }
        }
        if (sc.block.size() < static_cast<std::size_t>(p)) return;
        // order by coordinates, not by row label: the accumulation stream
        // (and hence the floating-point result) is then invariant under
        // sample row permutations; equal points produce equal summands
        std::sort(sc.block.begin(), sc.block.end(), [&](std::size_t ia, std::size_t ib) {
            for (int j = 0; j < d_; ++j) {
                const double xa = s_.at(ia, j), xb = s_.at(ib, j);
                if (xa < xb) return true;
                if (xb < xa) return false;
            }
            return ia < ib;
        });

        sc.idx.assign(static_cast<std::size_t>(p), 0);
        sc.lo.assign(static_cast<std::size_t>(p * d_), 0.0);
        sc.hi.assign(static_cast<std::size_t>(p * d_), 0.0);
        recurse(anchor, 0, 0, p, sc, fn);
    }

private:
    std::int64_t cell_coord(double x, int j) const {
        return static_cast<std::int64_t>(std::floor(x / edge_[j]));
    }

    template <typename Fn>
    void recurse(const std::vector<std::int64_t>& anchor, int level, std::size_t start,
                 int p, scan_scratch& sc, Fn& fn) const {
        const std::size_t remaining = static_cast<std::size_t>(p - level);
        for (std::size_t b = start; b + remaining <= sc.block.size(); ++b) {
            const std::size_t pt = sc.block[b];
            bool ok = true;
            for (int j = 0; j < d_; ++j) {
                const double x = s_.at(pt, j);
                double lo = x, hi = x;
                if (level > 0) {
                    lo = std::min(lo, sc.lo[static_cast<std::size_t>(level - 1) * d_ + j]);
                    hi = std::max(hi, sc.hi[static_cast<std::size_t>(level - 1) * d_ + j]);
                }
                // spread only grows with further members; prune the branch
                if (hi - lo > edge_[j]) {
                    ok = false;
                    break;
                }
                sc.lo[static_cast<std::size_t>(level) * d_ + j] = lo;
                sc.hi[static_cast<std::size_t>(level) * d_ + j] = hi;
            }
            if (!ok) continue;
            sc.idx[static_cast<std::size_t>(level)] = pt;
            if (level + 1 == p) {
                if (min_cell_is(anchor, p, sc)) fn(std::span<const std::size_t>(sc.idx));
            } else {
                recurse(anchor, level + 1, b + 1, p, sc, fn);
            }
        }
    }

    // componentwise-minimum cell over the selected members equals the anchor
    bool min_cell_is(const std::vector<std::int64_t>& anchor, int count,
                     const scan_scratch& sc) const {
        for (int j = 0; j < d_; ++j) {
            std::int64_t mn = std::numeric_limits<std::int64_t>::max();
            for (int i = 0; i < count; ++i)
                mn = std::min(mn, cell_coord(s_.at(sc.idx[static_cast<std::size_t>(i)], j), j));
            if (mn != anchor[j]) return false;
        }
        return true;
    }

    const sample& s_;
    int d_;
    std::vector<double> edge_;
    std::vector<std::vector<std::int64_t>> cell_keys_;
    std::vector<std::vector<std::size_t>> cell_points_;
    std::vector<std::vector<std::int64_t>> anchors_;
};

} // namespace detail

// Sequential scan over all tuples that pass the per-axis spread test (the
// candidates for a nonzero U1 or U2). Visits each qualifying tuple exactly
// once, in a deterministic order.
template <typename Fn>
void pruned_tuple_scan(const sample& s, std::span<const double> h, int ell, int p, Fn fn) {
    detail::tuple_grid grid(s, h, ell);
    detail::scan_scratch sc;
    for (std::size_t a = 0; a < grid.anchor_count(); ++a)
        grid.for_each_subset(a, p, sc, fn);
}

struct scan_sums {
    double sum_u1 = 0.0;
    double sum_u2 = 0.0;
    double visited = 0.0;
};

// Parallel pruned accumulation of (sum U1, sum U2). Work is split into
// fixed-size anchor chunks whose partial sums are reduced in chunk order, so
// the result is bit-identical for any worker count.
inline scan_sums scan_and_accumulate(const sample& s, const aggregated_kernel& k,
                                     std::span<const double> h, int p, unsigned workers) {
    const detail::tuple_grid grid(s, h, k.ell);
    constexpr std::size_t chunk_size = 32;
    const std::size_t chunks = (grid.anchor_count() + chunk_size - 1) / chunk_size;

    std::vector<scan_sums> partial(chunks);
    parallel_for(chunks, workers, [&](std::size_t c) {
        detail::scan_scratch sc;
        kahan_sum s1, s2;
        double count = 0.0;
        auto visit = [&](std::span<const std::size_t> idx) {
            s1.add(u1(s, idx, k, h));
            s2.add(u2(s, idx, k, h));
            count += 1.0;
        };
        const std::size_t lo = c * chunk_size;
        const std::size_t hi = std::min(lo + chunk_size, grid.anchor_count());
        for (std::size_t a = lo; a < hi; ++a) grid.for_each_subset(a, p, sc, visit);
        partial[c] = {s1.value(), s2.value(), count};
    });

    std::vector<double> v1(chunks), v2(chunks), vc(chunks);
    for (std::size_t c = 0; c < chunks; ++c) {
        v1[c] = partial[c].sum_u1;
        v2[c] = partial[c].sum_u2;
        vc[c] = partial[c].visited;
    }
    return {pairwise_sum(v1), pairwise_sum(v2), pairwise_sum(vc)};
}

struct estimate_options {
    kernel_config kernel;
    std::optional<std::vector<double>> bandwidth_override;
    unsigned workers = 1;
    bool allow_large_p = false; // p > 5 costs O(n^p); opt-in
};

struct estimate_result {
    double t1_hat = 0.0;
    double t2_hat = 0.0;
    double t_hat = 0.0;
    double n_hat = 0.0;
    double tuples_evaluated = 0.0;
    double tuples_pruned = 0.0;
    bool empty_scan = false; // no tuple survived pruning; T-hat = 0 is exact
    bandwidth_plan plan;
};

inline double subset_count(std::size_t n, int p) {
    double v = 1.0;
    for (int i = 0; i < p; ++i)
        v = v * static_cast<double>(n - static_cast<std::size_t>(i)) / (i + 1);
    return v;
}

inline estimate_result estimate(const sample& s, const class_spec& spec,
                                const estimate_options& opts = {}) {
    spec.validate();
    s.validate();
    if (s.d != spec.d) throw config_error("estimate: sample dimension != spec dimension");
    if (s.n < static_cast<std::size_t>(spec.p))
        throw insufficient_sample_error("estimate: need n >= p observations");
    if (spec.p > 5 && !opts.allow_large_p)
        throw config_error("estimate: p > 5 requires allow_large_p (O(n^p) cost)");

    estimate_result res;
    res.plan = bandwidth(spec, s.n);
    std::vector<double> h = res.plan.h;
    if (opts.bandwidth_override) {
        h = *opts.bandwidth_override;
        if (static_cast<int>(h.size()) != spec.d)
            throw config_error("estimate: bandwidth override needs d entries");
        for (double v : h)
            if (!(v > 0.0)) throw config_error("estimate: bandwidth entries must be positive");
        res.plan.h = h;
    }

    const aggregated_kernel k = opts.kernel.build(spec);
    const scan_sums sums = scan_and_accumulate(s, k, h, spec.p, opts.workers);
    const double combos = subset_count(s.n, spec.p);

    res.t1_hat = sums.sum_u1 / combos;
    res.t2_hat = sums.sum_u2 / combos;
    res.t_hat = (1.0 - spec.p) * res.t1_hat + spec.p * res.t2_hat;
    res.n_hat = std::pow(std::abs(res.t_hat), 1.0 / spec.p);
    res.tuples_evaluated = sums.visited;
    res.tuples_pruned = combos - sums.visited;
    res.empty_scan = (sums.visited == 0.0);
    return res;
}

} // namespace normest
