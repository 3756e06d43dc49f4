#include "fracvar/kernels.hpp"

#include <omp.h>

#include <algorithm>

#include "fracvar/error.hpp"

namespace fracvar::kernels {
namespace {

void check(const BandedView& a, std::span<const double> x, std::span<double> y) {
    const auto m = static_cast<std::size_t>(a.size);
    if (x.size() != m || y.size() != m) {
        throw DimensionError("matvec: vector length does not match the operator size");
    }
}

// Below this size thread start-up costs more than the loop.
constexpr int kParallelThreshold = 96;

double row_dot(const BandedView& a, int k, std::span<const double> x) {
    const double* row = a.data.data() + static_cast<std::size_t>(k) * static_cast<std::size_t>(a.size);
    double s = 0.0;
    for (int j = a.begin[k]; j < a.end[k]; ++j) {
        s += row[j] * x[static_cast<std::size_t>(j)];
    }
    return s;
}

// y[j0..j1) = sum over rows k (ascending) of a[k][j] x[k].
void transpose_block(const BandedView& a, std::span<const double> x, std::span<double> y, int j0, int j1) {
    std::fill(y.begin() + j0, y.begin() + j1, 0.0);
    for (int k = 0; k < a.size; ++k) {
        const double xk = x[static_cast<std::size_t>(k)];
        const int lo = std::max(j0, a.begin[k]);
        const int hi = std::min(j1, a.end[k]);
        if (lo >= hi || xk == 0.0) {
            continue;
        }
        const double* row = a.data.data() + static_cast<std::size_t>(k) * static_cast<std::size_t>(a.size);
        for (int j = lo; j < hi; ++j) {
            y[static_cast<std::size_t>(j)] += row[j] * xk;
        }
    }
}

}  // namespace

int max_threads() { return omp_get_max_threads(); }

namespace serial {

void matvec(const BandedView& a, std::span<const double> x, std::span<double> y) {
    check(a, x, y);
    for (int k = 0; k < a.size; ++k) {
        y[static_cast<std::size_t>(k)] = row_dot(a, k, x);
    }
}

void matvec_transpose(const BandedView& a, std::span<const double> x, std::span<double> y) {
    check(a, x, y);
    transpose_block(a, x, y, 0, a.size);
}

void fill_rows(int rows, int cols, std::span<double> out,
               const std::function<void(int, std::span<double>)>& row_fn) {
    for (int k = 0; k < rows; ++k) {
        row_fn(k, out.subspan(static_cast<std::size_t>(k) * static_cast<std::size_t>(cols),
                              static_cast<std::size_t>(cols)));
    }
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += a[i] * b[i];
    }
    return s;
}

}  // namespace serial

namespace parallel {

void matvec(const BandedView& a, std::span<const double> x, std::span<double> y) {
    check(a, x, y);
    if (a.size < kParallelThreshold) {
        serial::matvec(a, x, y);
        return;
    }
#pragma omp parallel for schedule(dynamic, 32)
    for (int k = 0; k < a.size; ++k) {
        y[static_cast<std::size_t>(k)] = row_dot(a, k, x);
    }
}

void matvec_transpose(const BandedView& a, std::span<const double> x, std::span<double> y) {
    check(a, x, y);
    if (a.size < kParallelThreshold) {
        serial::matvec_transpose(a, x, y);
        return;
    }
    constexpr int kBlock = 256;
    const int blocks = (a.size + kBlock - 1) / kBlock;
#pragma omp parallel for schedule(dynamic, 1)
    for (int blk = 0; blk < blocks; ++blk) {
        const int j0 = blk * kBlock;
        transpose_block(a, x, y, j0, std::min(a.size, j0 + kBlock));
    }
}

void fill_rows(int rows, int cols, std::span<double> out,
               const std::function<void(int, std::span<double>)>& row_fn) {
#pragma omp parallel for schedule(dynamic, 16) if (rows >= kParallelThreshold)
    for (int k = 0; k < rows; ++k) {
        row_fn(k, out.subspan(static_cast<std::size_t>(k) * static_cast<std::size_t>(cols),
                              static_cast<std::size_t>(cols)));
    }
}

}  // namespace parallel
}  // namespace fracvar::kernels
