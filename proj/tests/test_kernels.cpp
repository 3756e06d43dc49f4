#include <doctest.h>

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "fracvar/fracops.hpp"
#include "fracvar/kernels.hpp"

using namespace fracvar;

namespace {

struct Banded {
    std::vector<double> data;
    std::vector<int> begin, end;
    int n = 0;

    kernels::BandedView view() const { return {data, n, begin, end}; }
};

Banded random_banded(int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1, 1);
    std::uniform_int_distribution<int> col(0, n);
    Banded b;
    b.n = n;
    b.data.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0);
    for (int k = 0; k < n; ++k) {
        int lo = col(rng) % n;
        int hi = col(rng) % (n + 1);
        if (lo > hi) {
            std::swap(lo, hi);
        }
        b.begin.push_back(lo);
        b.end.push_back(hi);
        for (int j = lo; j < hi; ++j) {
            b.data[static_cast<std::size_t>(k) * static_cast<std::size_t>(n) + static_cast<std::size_t>(j)] = u(rng);
        }
    }
    return b;
}

std::vector<double> random_vector(int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1, 1);
    std::vector<double> v(static_cast<std::size_t>(n));
    for (auto& x : v) {
        x = u(rng);
    }
    return v;
}

}  // namespace

TEST_SUITE("kernels") {
TEST_CASE("parallel matvec matches the serial reference bit for bit") {
    for (int threads : {1, 2, 4}) {
        omp_set_num_threads(threads);
        for (int n : {1, 7, 130, 513}) {
            const auto b = random_banded(n, static_cast<std::uint64_t>(n));
            const auto x = random_vector(n, 42);
            std::vector<double> ys(x.size()), yp(x.size()), ts(x.size()), tp(x.size());
            kernels::serial::matvec(b.view(), x, ys);
            kernels::parallel::matvec(b.view(), x, yp);
            kernels::serial::matvec_transpose(b.view(), x, ts);
            kernels::parallel::matvec_transpose(b.view(), x, tp);
            CHECK(ys == yp);
            CHECK(ts == tp);
        }
    }
}

TEST_CASE("transpose agrees with the dense definition") {
    const auto b = random_banded(64, 9);
    const auto x = random_vector(64, 10);
    std::vector<double> t(64);
    kernels::serial::matvec_transpose(b.view(), x, t);
    for (int j = 0; j < 64; ++j) {
        double s = 0.0;
        for (int k = 0; k < 64; ++k) {
            s += b.data[static_cast<std::size_t>(k * 64 + j)] * x[static_cast<std::size_t>(k)];
        }
        CHECK(t[static_cast<std::size_t>(j)] == doctest::Approx(s).epsilon(1e-13));
    }
}

TEST_CASE("parallel row fill matches serial") {
    auto row = [](int k, std::span<double> out) {
        for (std::size_t j = 0; j < out.size(); ++j) {
            out[j] = std::sin(0.1 * k + 0.01 * static_cast<double>(j));
        }
    };
    std::vector<double> s(200 * 30), p(200 * 30);
    kernels::serial::fill_rows(200, 30, s, row);
    kernels::parallel::fill_rows(200, 30, p, row);
    CHECK(s == p);
}

TEST_CASE("operator assembly and application are independent of the thread count") {
    const Grid g = make_grid(0.0, 1.0, 300);
    const auto f = random_vector(301, 5);
    omp_set_num_threads(1);
    const auto m1 = combined_caputo(g, 0.3, 0.6, 0.4);
    const auto y1 = fracvar::apply(m1, f);
    omp_set_num_threads(4);
    const auto m4 = combined_caputo(g, 0.3, 0.6, 0.4);
    const auto y4 = fracvar::apply(m4, f);
    CHECK(std::equal(m1.weights().begin(), m1.weights().end(), m4.weights().begin()));
    CHECK(y1 == y4);
}

TEST_CASE("dot product") {
    const std::vector<double> a{1, 2, 3}, b{4, -5, 6};
    CHECK(kernels::serial::dot(a, b) == 12.0);
    CHECK(kernels::max_threads() >= 1);
}
}
