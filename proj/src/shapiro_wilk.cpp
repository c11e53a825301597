// Shapiro-Wilk W with Royston's polynomial approximations for the
// coefficients and the p-value (algorithm AS R94).
#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "lineamorph/cohortstats.hpp"

namespace lineamorph {

namespace {

double poly(std::initializer_list<double> c, double x) {
    double r = 0.0;
    double p = 1.0;
    for (double v : c) {
        r += v * p;
        p *= x;
    }
    return r;
}

}  // namespace

TestResult shapiro_wilk(std::span<const double> sample) {
    const std::size_t n = sample.size();
    if (n < 3 || n > 5000) {
        throw Error(ErrorCode::SampleTooSmall, "Shapiro-Wilk needs 3 to 5000 values, got " + std::to_string(n),
                    "shapiro_wilk");
    }
    std::vector<double> x(sample.begin(), sample.end());
    std::sort(x.begin(), x.end());
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    if (!(ss > 0.0) || x.front() == x.back()) {
        throw Error(ErrorCode::ZeroVariance, "sample has zero variance", "shapiro_wilk");
    }

    const boost::math::normal_distribution<double> norm01;
    const double nd = static_cast<double>(n);
    std::vector<double> a(n, 0.0);
    if (n == 3) {
        a[0] = -std::sqrt(0.5);
        a[2] = std::sqrt(0.5);
    } else {
        std::vector<double> m(n);
        double summ2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            m[i] = boost::math::quantile(norm01, (static_cast<double>(i + 1) - 0.375) / (nd + 0.25));
            summ2 += m[i] * m[i];
        }
        const double ssumm2 = std::sqrt(summ2);
        const double u = 1.0 / std::sqrt(nd);
        const double an = m[n - 1] / ssumm2 + poly({0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056}, u);
        double fac;
        std::size_t tail;
        if (n > 5) {
            const double an1 =
                m[n - 2] / ssumm2 + poly({0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633}, u);
            fac = std::sqrt((summ2 - 2.0 * m[n - 1] * m[n - 1] - 2.0 * m[n - 2] * m[n - 2]) /
                            (1.0 - 2.0 * an * an - 2.0 * an1 * an1));
            a[n - 2] = an1;
            a[1] = -an1;
            tail = 2;
        } else {
            fac = std::sqrt((summ2 - 2.0 * m[n - 1] * m[n - 1]) / (1.0 - 2.0 * an * an));
            tail = 1;
        }
        a[n - 1] = an;
        a[0] = -an;
        for (std::size_t i = tail; i < n - tail; ++i) a[i] = m[i] / fac;
    }

    double num = 0.0;
    for (std::size_t i = 0; i < n; ++i) num += a[i] * (x[i] - mean);
    const double w = std::min(1.0, num * num / ss);

    double p;
    if (n == 3) {
        p = 6.0 / std::numbers::pi * (std::asin(std::sqrt(w)) - std::numbers::pi / 3.0);
        p = std::clamp(p, 0.0, 1.0);
    } else {
        const double w1 = std::log1p(-w);
        double y, mu, sigma;
        if (n <= 11) {
            const double gamma = poly({-2.273, 0.459}, nd);
            if (w1 >= gamma) {
                y = std::numeric_limits<double>::infinity();
            } else {
                y = -std::log(gamma - w1);
            }
            mu = poly({0.544, -0.39978, 0.025054, -6.714e-4}, nd);
            sigma = std::exp(poly({1.3822, -0.77857, 0.062767, -0.0020322}, nd));
        } else {
            const double ln = std::log(nd);
            y = w1;
            mu = poly({-1.5861, -0.31082, -0.083751, 0.0038915}, ln);
            sigma = std::exp(poly({-0.4803, -0.082676, 0.0030302}, ln));
        }
        if (std::isinf(y) && y < 0) {
            p = 1.0;  // W == 1
        } else if (std::isinf(y)) {
            p = 0.0;
        } else {
            p = boost::math::cdf(boost::math::complement(norm01, (y - mu) / sigma));
        }
    }

    TestResult r;
    r.method = TestMethod::ShapiroWilk;
    r.statistic_name = "W";
    r.statistic = w;
    r.p_value = p;
    r.significant = p < kSignificanceLevel;
    return r;
}

}  // namespace lineamorph
