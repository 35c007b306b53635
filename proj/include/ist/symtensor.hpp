#ifndef IST_SYMTENSOR_HPP
#define IST_SYMTENSOR_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ist/errors.hpp"
#include "ist/kernels.hpp"

namespace ist {

using cdouble = std::complex<double>;

namespace detail {

inline std::int64_t choose3(std::int64_t x) { return x < 3 ? 0 : x * (x - 1) * (x - 2) / 6; }

inline double abssq(double x) { return x * x; }
inline double abssq(const cdouble& x) { return std::norm(x); }

inline void check_label(int d, int i) {
    if (i < 0 || i >= d)
        throw std::out_of_range("tensor label " + std::to_string(i) +
                                " out of range for dimension " + std::to_string(d));
}

} // namespace detail

// Sorts a label triple into non-decreasing order; all reads and writes go
// through this canonical form.
inline std::array<int, 3> canonical_triple(int d, int i1, int i2, int i3) {
    detail::check_label(d, i1);
    detail::check_label(d, i2);
    detail::check_label(d, i3);
    std::array<int, 3> t{i1, i2, i3};
    std::sort(t.begin(), t.end());
    return t;
}

// Dense order-3 symmetric tensor of dimension d. One value is stored per
// unordered multiset {i,j,k}, C(d+2,3) in total, in lexicographic order of
// the sorted triple; for fixed (i,j) the k-run is contiguous.
template <class T>
class SymTensor3 {
public:
    explicit SymTensor3(int d) : d_(d) {
        if (d < 1) throw InputError("tensor dimension must be at least 1");
        values_.assign(static_cast<std::size_t>(detail::choose3(d + 2)), T{});
    }

    int dim() const noexcept { return d_; }
    std::size_t stored_count() const noexcept { return values_.size(); }

    // packed offset of the sorted triple (i,j,k), i <= j <= k
    std::size_t offset(int i, int j, int k) const noexcept {
        const std::int64_t d = d_;
        const std::int64_t base = detail::choose3(d + 2) - detail::choose3(d - i + 2);
        const std::int64_t pjk = static_cast<std::int64_t>(j) * d - static_cast<std::int64_t>(j) * (j - 1) / 2 + (k - j);
        const std::int64_t pii = static_cast<std::int64_t>(i) * d - static_cast<std::int64_t>(i) * (i - 1) / 2;
        return static_cast<std::size_t>(base + pjk - pii);
    }

    // offset of entry (i,j,j) — the start of the contiguous run over k = j..d-1
    std::size_t run_offset(int i, int j) const noexcept { return offset(i, j, j); }

    T operator()(int i1, int i2, int i3) const {
        const auto t = canonical_triple(d_, i1, i2, i3);
        return values_[offset(t[0], t[1], t[2])];
    }

    T& at(int i1, int i2, int i3) {
        const auto t = canonical_triple(d_, i1, i2, i3);
        return values_[offset(t[0], t[1], t[2])];
    }

    std::span<const T> packed() const noexcept { return values_; }
    std::span<T> packed() noexcept { return values_; }

private:
    int d_;
    std::vector<T> values_;
};

// The distinct-index subtensor: one value per triple i < j < k, C(d,3) in
// total, lexicographic; for fixed (i,j) the k-run is contiguous.
template <class T>
class OmegaTensor {
public:
    explicit OmegaTensor(int d) : d_(d) {
        if (d < 3) throw InputError("distinct-index subtensor is empty for dimension " +
                                    std::to_string(d) + " (need d >= 3)");
        values_.assign(static_cast<std::size_t>(detail::choose3(d)), T{});
    }

    int dim() const noexcept { return d_; }
    std::size_t stored_count() const noexcept { return values_.size(); }

    std::size_t offset(int i, int j, int k) const noexcept {
        const std::int64_t d = d_;
        const std::int64_t base = detail::choose3(d) - detail::choose3(d - i);
        const std::int64_t pjk = static_cast<std::int64_t>(j) * (d - 1) - static_cast<std::int64_t>(j) * (j - 1) / 2 + (k - j - 1);
        const std::int64_t pfirst = static_cast<std::int64_t>(i + 1) * (d - 1) - static_cast<std::int64_t>(i + 1) * i / 2;
        return static_cast<std::size_t>(base + pjk - pfirst);
    }

    // offset of entry (i,j,j+1) — start of the contiguous run over k = j+1..d-1
    std::size_t run_offset(int i, int j) const noexcept { return offset(i, j, j + 1); }

    T operator()(int i1, int i2, int i3) const {
        const auto t = canonical_triple(d_, i1, i2, i3);
        if (t[0] == t[1] || t[1] == t[2])
            throw std::out_of_range("triple (" + std::to_string(i1) + "," + std::to_string(i2) +
                                    "," + std::to_string(i3) + ") has repeated labels");
        return values_[offset(t[0], t[1], t[2])];
    }

    T& at(int i1, int i2, int i3) {
        const auto t = canonical_triple(d_, i1, i2, i3);
        if (t[0] == t[1] || t[1] == t[2])
            throw std::out_of_range("triple (" + std::to_string(i1) + "," + std::to_string(i2) +
                                    "," + std::to_string(i3) + ") has repeated labels");
        return values_[offset(t[0], t[1], t[2])];
    }

    std::span<const T> packed() const noexcept { return values_; }
    std::span<T> packed() noexcept { return values_; }

private:
    int d_;
    std::vector<T> values_;
};

// Submatrix of the mode-0 flattening with all entries inside the known
// region: entry (a,b) = F_{0, rows[a], cols[b]}.
template <class T>
struct FlatView {
    std::vector<int> row_labels;
    std::vector<int> col_labels;
    Eigen::MatrixX<T> matrix;
};

// Hilbert-Schmidt norm: every ordered triple counts, so a distinct triple
// contributes 6 times, a pair-repeated one 3 times, a fully repeated one once.
template <class T>
double hs_norm(const SymTensor3<T>& t) {
    const int d = t.dim();
    double acc = 0.0;
    auto vals = t.packed();
    std::size_t idx = 0;
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j)
            for (int k = j; k < d; ++k, ++idx) {
                const double m = (i == j && j == k) ? 1.0 : ((i == j || j == k) ? 3.0 : 6.0);
                acc += m * detail::abssq(vals[idx]);
            }
    return std::sqrt(acc);
}

// Ordered-count norm of the distinct-index subtensor (multiplicity 6).
template <class T>
double omega_norm(const OmegaTensor<T>& t) {
    auto vals = t.packed();
    if constexpr (std::is_same_v<T, double>) {
        return std::sqrt(6.0 * kernels::sumsq(vals.size(), vals.data()));
    } else {
        double acc = 0.0;
        for (const auto& v : vals) acc += detail::abssq(v);
        return std::sqrt(6.0 * acc);
    }
}

template <class T>
OmegaTensor<T> omega_extract(const SymTensor3<T>& t) {
    const int d = t.dim();
    if (d < 3) throw InputError("cannot extract distinct-index entries for d < 3");
    OmegaTensor<T> out(d);
    auto dst = out.packed();
    std::size_t idx = 0;
    for (int i = 0; i + 2 < d; ++i)
        for (int j = i + 1; j + 1 < d; ++j) {
            auto src = t.packed().subspan(t.offset(i, j, j + 1), static_cast<std::size_t>(d - 1 - j));
            std::copy(src.begin(), src.end(), dst.begin() + idx);
            idx += src.size();
        }
    return out;
}

// t_{ijk} += weight * v_i v_j v_k over all stored multisets
template <class T>
void add_rank_one(SymTensor3<T>& t, T weight, const Eigen::VectorX<T>& v) {
    const int d = t.dim();
    if (v.size() != d) throw InputError("rank-one vector length does not match tensor dimension");
    auto vals = t.packed();
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) {
            const T c = weight * v[i] * v[j];
            const std::size_t off = t.run_offset(i, j);
            if constexpr (std::is_same_v<T, double>) {
                kernels::axpy(static_cast<std::size_t>(d - j), c, v.data() + j, vals.data() + off);
            } else {
                for (int k = j; k < d; ++k) vals[off + (k - j)] += c * v[k];
            }
        }
}

// same accumulation restricted to pairwise-distinct triples
template <class T>
void add_rank_one(OmegaTensor<T>& t, T weight, const Eigen::VectorX<T>& v) {
    const int d = t.dim();
    if (v.size() != d) throw InputError("rank-one vector length does not match tensor dimension");
    auto vals = t.packed();
    for (int i = 0; i + 2 < d; ++i)
        for (int j = i + 1; j + 1 < d; ++j) {
            const T c = weight * v[i] * v[j];
            const std::size_t off = t.run_offset(i, j);
            if constexpr (std::is_same_v<T, double>) {
                kernels::axpy(static_cast<std::size_t>(d - 1 - j), c, v.data() + j + 1, vals.data() + off);
            } else {
                for (int k = j + 1; k < d; ++k) vals[off + (k - j - 1)] += c * v[k];
            }
        }
}

template <class T>
SymTensor3<T> from_rank_one_sum(std::span<const T> weights, const std::vector<Eigen::VectorX<T>>& vectors) {
    if (weights.size() != vectors.size())
        throw InputError("weight count " + std::to_string(weights.size()) +
                         " does not match vector count " + std::to_string(vectors.size()));
    if (vectors.empty()) throw InputError("rank-one sum needs at least one term");
    SymTensor3<T> out(static_cast<int>(vectors.front().size()));
    for (std::size_t k = 0; k < weights.size(); ++k) add_rank_one(out, weights[k], vectors[k]);
    return out;
}

template <class T>
OmegaTensor<T> omega_from_rank_one_sum(std::span<const T> weights, const std::vector<Eigen::VectorX<T>>& vectors) {
    if (weights.size() != vectors.size())
        throw InputError("weight count does not match vector count");
    if (vectors.empty()) throw InputError("rank-one sum needs at least one term");
    OmegaTensor<T> out(static_cast<int>(vectors.front().size()));
    for (std::size_t k = 0; k < weights.size(); ++k) add_rank_one(out, weights[k], vectors[k]);
    return out;
}

template <class T>
FlatView<T> flat_submatrix(const OmegaTensor<T>& t, std::vector<int> rows, std::vector<int> cols) {
    const int d = t.dim();
    for (int a : rows) detail::check_label(d, a);
    for (int b : cols) detail::check_label(d, b);
    auto contains = [](const std::vector<int>& s, int x) {
        return std::find(s.begin(), s.end(), x) != s.end();
    };
    if (contains(rows, 0) || contains(cols, 0))
        throw InputError("flat view labels must exclude 0");
    for (int a : rows)
        if (contains(cols, a))
            throw InputError("flat view row and column labels overlap at " + std::to_string(a));
    FlatView<T> view;
    view.matrix.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t a = 0; a < rows.size(); ++a)
        for (std::size_t b = 0; b < cols.size(); ++b)
            view.matrix(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = t(0, rows[a], cols[b]);
    view.row_labels = std::move(rows);
    view.col_labels = std::move(cols);
    return view;
}

} // namespace ist

#endif
