#pragma once

#include <functional>
#include <span>

namespace fracvar::kernels {

/// Row-major square matrix whose row k is nonzero only on columns [begin[k], end[k]).
struct BandedView {
    std::span<const double> data;
    int size = 0;
    std::span<const int> begin;
    std::span<const int> end;
};

/// Straightforward single-threaded loops. Kept as the reference the parallel
/// versions are tested against; both use the same per-entry summation order, so
/// results agree bit for bit.
namespace serial {
void matvec(const BandedView& a, std::span<const double> x, std::span<double> y);
void matvec_transpose(const BandedView& a, std::span<const double> x, std::span<double> y);
void fill_rows(int rows, int cols, std::span<double> out,
               const std::function<void(int, std::span<double>)>& row_fn);
double dot(std::span<const double> a, std::span<const double> b);
}  // namespace serial

/// OpenMP versions. Rows (or column blocks for the transpose) are distributed over
/// threads; each output entry is accumulated by exactly one thread in index order.
namespace parallel {
void matvec(const BandedView& a, std::span<const double> x, std::span<double> y);
void matvec_transpose(const BandedView& a, std::span<const double> x, std::span<double> y);
void fill_rows(int rows, int cols, std::span<double> out,
               const std::function<void(int, std::span<double>)>& row_fn);
}  // namespace parallel

/// Threads available to the parallel kernels.
int max_threads();

}  // namespace fracvar::kernels
