#include "fracvar/specfun.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "fracvar/error.hpp"

namespace fracvar {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

// W. J. Cody's rational approximation of Gamma(1 + t), t in [0, 1].
constexpr double kCodyP[] = {
    -1.71618513886549492533811E+0, 2.47656508055759199108314E+1,
    -3.79804256470945635097577E+2, 6.29331155312818442661052E+2,
    8.66966202790413211295064E+2,  -3.14512729688483675254357E+4,
    -3.61444134186911729807069E+4, 6.64561438202405440627855E+4};
constexpr double kCodyQ[] = {
    -3.08402300119738975254353E+1, 3.15350626979604161529144E+2,
    -1.01515636749021914166146E+3, -3.10777167157231109440444E+3,
    2.25381184209801510330112E+4,  4.75584627752788110767815E+3,
    -1.34659959864969306392456E+5, -1.15132259675553483497211E+5};

double gamma_one_plus(double t) {
    double num = 0.0;
    double den = 1.0;
    for (int i = 0; i < 8; ++i) {
        num = (num + kCodyP[i]) * t;
        den = den * t + kCodyQ[i];
    }
    return num / den + 1.0;
}

void require_positive(double z, const char* fn) {
    if (!(z > 0.0)) {
        throw DomainError(std::string(fn) + ": argument must be > 0, got " + std::to_string(z));
    }
}

// Neumaier-compensated accumulator.
struct CompensatedSum {
    double sum = 0.0;
    double carry = 0.0;

    void add(double v) {
        const double t = sum + v;
        if (std::abs(sum) >= std::abs(v)) {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    double value() const { return sum + carry; }
};

// |z|^p / Gamma(g), evaluated in log space once the plain form could overflow.
double power_over_gamma(double abs_z, double p, double g, const char* fn, double z, double alpha) {
    if (p == 0.0) {
        return 1.0 / gamma_fn(g);
    }
    if (abs_z == 0.0) {
        return 0.0;
    }
    const double log_mag = p * std::log(abs_z) - log_gamma(g);
    if (log_mag > 700.0) {
        throw DomainError(std::string(fn) + ": series overflows for alpha=" +
                          std::to_string(alpha) + ", z=" + std::to_string(z));
    }
    if (g < 150.0 && p < 300.0) {
        return std::pow(abs_z, p) / gamma_fn(g);
    }
    return std::exp(log_mag);
}

// Sums sum_{k>=first} c_k z^(k-shift) / Gamma(alpha k + 1), with c_k = k for the
// derivative series (shift == 1) and c_k = 1 otherwise.
double ml_series(double alpha, double z, int first, int shift, const char* fn) {
    if (!(alpha > 0.0)) {
        throw DomainError(std::string(fn) + ": alpha must be > 0, got " + std::to_string(alpha));
    }
    if (!std::isfinite(z)) {
        throw DomainError(std::string(fn) + ": argument must be finite");
    }
    const double abs_z = std::abs(z);
    CompensatedSum acc;
    double max_term = 0.0;
    double prev = std::numeric_limits<double>::infinity();
    constexpr int kMaxTerms = 100000;
    for (int k = first;; ++k) {
        if (k == kMaxTerms) {
            throw DomainError(std::string(fn) + ": series did not converge");
        }
        const int power = k - shift;
        double mag = power_over_gamma(abs_z, power, alpha * k + 1.0, fn, z, alpha);
        if (shift == 1) {
            mag *= static_cast<double>(k);
        }
        const bool negative = z < 0.0 && (power % 2 != 0);
        acc.add(negative ? -mag : mag);
        max_term = std::max(max_term, mag);

        const bool decreasing = mag <= prev;
        prev = mag;
        if (k > first && decreasing && mag <= 1e-18 * std::abs(acc.value())) {
            break;
        }
        if (abs_z == 0.0) {
            break;
        }
    }
    const double result = acc.value();
    if (max_term * kEps > 1e-10 * std::abs(result)) {
        throw DomainError(std::string(fn) + ": cancellation makes the series inaccurate at z=" +
                          std::to_string(z));
    }
    return result;
}

}  // namespace

double gamma_fn(double z) {
    require_positive(z, "gamma");
    if (z > 171.61447887182298) {
        return std::numeric_limits<double>::infinity();
    }
    if (z < 1.0) {
        return gamma_one_plus(z) / z;
    }
    // Reduce to [1, 2) and climb with Gamma(z+1) = z Gamma(z).
    const double whole = std::floor(z);
    double y = z - whole;  // in [0, 1)
    double result = gamma_one_plus(y);
    for (double m = 1.0; m < whole; m += 1.0) {
        result *= (y + m);
    }
    return result;
}

double log_gamma(double z) {
    require_positive(z, "log_gamma");
    if (z < 12.0) {
        return std::log(gamma_fn(z));
    }
    // Stirling series.
    static constexpr double c[8] = {1.0 / 12.0,   -1.0 / 360.0,    1.0 / 1260.0, -1.0 / 1680.0,
                                    1.0 / 1188.0, -691.0 / 360360.0, 1.0 / 156.0, -3617.0 / 122400.0};
    const double w = 1.0 / (z * z);
    double sum = c[7];
    for (int i = 6; i >= 0; --i) {
        sum = sum * w + c[i];
    }
    constexpr double kHalfLog2Pi = 0.91893853320467274178032973640562;
    return (z - 0.5) * std::log(z) - z + kHalfLog2Pi + sum / z;
}

double digamma(double z) {
    require_positive(z, "digamma");
    double shift = 0.0;
    while (z < 8.0) {
        shift -= 1.0 / z;
        z += 1.0;
    }
    const double w = 1.0 / (z * z);
    const double tail =
        w * (1.0 / 12.0 - w * (1.0 / 120.0 - w * (1.0 / 252.0 - w * (1.0 / 240.0 - w / 132.0))));
    return shift + std::log(z) - 0.5 / z - tail;
}

double mittag_leffler(double alpha, double z) {
    return ml_series(alpha, z, 0, 0, "mittag_leffler");
}

double mittag_leffler_derivative(double alpha, double z) {
    return ml_series(alpha, z, 1, 1, "mittag_leffler_derivative");
}

}  // namespace fracvar
