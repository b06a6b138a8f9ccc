#include "pnsim/directional.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <boost/math/special_functions/bessel.hpp>

namespace pnsim {

namespace {

// Above this the Hankel expansion is accurate to double precision in a
// handful of terms and Boost's unscaled I0 is close to overflowing.
constexpr double asymptotic_from = 600.0;
constexpr double inv_br_upper = 1e6;

void check_nonnegative(double x, const char* what) {
    if (!(x >= 0.0)) throw std::domain_error(std::string(what) + ": argument must be >= 0");
}

// sum_k (-1)^k a_k(nu) / x^k for I_nu(x) ~ e^x / sqrt(2 pi x) * sum.
double hankel_sum(int nu, double x) {
    const double mu = 4.0 * nu * nu;
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k < 40; ++k) {
        const double odd = 2.0 * k - 1.0;
        term *= (odd * odd - mu) / (8.0 * k * x);
        sum += term;
        if (std::abs(term) < 1e-17 * std::abs(sum)) break;
    }
    return sum;
}

// I0(x) - 1 by its power series; accurate where I0 is close to one.
double i0_minus_one(double x) {
    const double q = 0.25 * x * x;
    double term = 1.0;
    double sum = 0.0;
    for (int k = 1; k < 60; ++k) {
        term *= q / (double(k) * k);
        sum += term;
        if (term < 1e-17 * sum) break;
    }
    return sum;
}

}  // namespace

const char* to_string(BrMode m) {
    switch (m) {
        case BrMode::Exact: return "Exact";
        case BrMode::ExpApprox: return "ExpApprox";
        case BrMode::Identity: return "Identity";
        case BrMode::PiecewiseInverse: return "PiecewiseInverse";
    }
    return "?";
}

BrMode br_mode_from_string(std::string_view s) {
    if (s == "Exact") return BrMode::Exact;
    if (s == "ExpApprox") return BrMode::ExpApprox;
    if (s == "Identity") return BrMode::Identity;
    if (s == "PiecewiseInverse") return BrMode::PiecewiseInverse;
    throw std::invalid_argument("unknown Bessel-ratio mode '" + std::string(s) + "'");
}

double log_bessel_i0(double x) {
    check_nonnegative(x, "log_bessel_i0");
    if (x == 0.0) return 0.0;
    if (x < 2.0) return std::log1p(i0_minus_one(x));
    if (x <= asymptotic_from) return std::log(boost::math::cyl_bessel_i(0, x));
    return x - 0.5 * std::log(two_pi * x) + std::log(hankel_sum(0, x));
}

double bessel_ratio(double x) {
    check_nonnegative(x, "bessel_ratio");
    if (x == 0.0) return 0.0;
    if (x < 1e-4) return 0.5 * x * (1.0 - x * x / 8.0);
    if (x <= asymptotic_from)
        return boost::math::cyl_bessel_i(1, x) / boost::math::cyl_bessel_i(0, x);
    return hankel_sum(1, x) / hankel_sum(0, x);
}

double bessel_ratio_order(int p, double x) {
    check_nonnegative(x, "bessel_ratio_order");
    if (p < 0) throw std::domain_error("bessel_ratio_order: order must be >= 0");
    if (p == 0) return 1.0;
    if (x == 0.0) return 0.0;
    if (p == 1) return bessel_ratio(x);
    if (x <= asymptotic_from)
        return boost::math::cyl_bessel_i(p, x) / boost::math::cyl_bessel_i(0, x);
    return hankel_sum(p, x) / hankel_sum(0, x);
}

double inv_bessel_ratio(double br) {
    if (!(br >= 0.0 && br < 1.0))
        throw std::domain_error("inv_bessel_ratio: argument must lie in [0, 1)");
    if (br == 0.0) return 0.0;
    if (br >= bessel_ratio(inv_br_upper)) return inv_br_upper;

    // Best & Fisher starting point, then Newton kept inside a shrinking
    // bisection bracket.
    double x;
    if (br < 0.53)
        x = 2.0 * br + br * br * br + 5.0 * std::pow(br, 5) / 6.0;
    else if (br < 0.85)
        x = -0.4 + 1.39 * br + 0.43 / (1.0 - br);
    else
        x = 1.0 / (br * br * br - 4.0 * br * br + 3.0 * br);
    double lo = 0.0;
    double hi = inv_br_upper;
    x = std::clamp(x, 1e-300, inv_br_upper);

    for (int it = 0; it < 200; ++it) {
        const double r = bessel_ratio(x);
        const double f = r - br;
        if (f == 0.0) return x;
        if (f > 0.0)
            hi = x;
        else
            lo = x;
        const double slope = 1.0 - r / x - r * r;
        double next = slope > 0.0 ? x - f / slope : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        const double step = std::abs(next - x);
        x = next;
        if (step <= 1e-13 * x || hi - lo <= 1e-15 * hi) break;
    }
    return x;
}

double br_exp_approx(double x) {
    check_nonnegative(x, "br_exp_approx");
    if (x == 0.0) return 0.0;
    return std::exp(-0.5 / x);
}

double inv_br_exp_approx(double y) {
    if (!(y >= 0.0 && y < 1.0))
        throw std::domain_error("inv_br_exp_approx: argument must lie in [0, 1)");
    if (y == 0.0) return 0.0;
    return -0.5 / std::log(y);
}

double inv_br_piecewise(double br) {
    if (!(br >= 0.0 && br < 1.0))
        throw std::domain_error("inv_br_piecewise: argument must lie in [0, 1)");
    if (br <= 0.59) return std::max(0.0, 2.55 - 3.02 * std::sqrt(0.71 - br));
    return -0.5 / std::log(br) + 0.55;
}

double TikhonovParam::circular_variance() const { return 1.0 - bessel_ratio(std::abs(z)); }

void TikhonovMixture::normalize() {
    if (components.empty()) return;
    double top = -std::numeric_limits<double>::infinity();
    for (const auto& c : components) top = std::max(top, c.log_weight);
    double acc = 0.0;
    for (const auto& c : components) acc += std::exp(c.log_weight - top);
    const double lse = top + std::log(acc);
    for (auto& c : components) c.log_weight -= lse;
}

std::vector<double> TikhonovMixture::weights() const {
    std::vector<double> w;
    w.reserve(components.size());
    if (components.empty()) return w;
    double top = -std::numeric_limits<double>::infinity();
    for (const auto& c : components) top = std::max(top, c.log_weight);
    double acc = 0.0;
    for (const auto& c : components) {
        w.push_back(std::exp(c.log_weight - top));
        acc += w.back();
    }
    for (double& v : w) v /= acc;
    return w;
}

double tikhonov_log_pdf(double theta, TikhonovParam z) {
    const double re = z.z.real() * std::cos(theta) + z.z.imag() * std::sin(theta);
    return re - std::log(two_pi) - log_bessel_i0(std::abs(z.z));
}

cplx circular_moment(TikhonovParam z, int p) {
    if (p < 1) throw std::domain_error("circular_moment: order must be >= 1");
    const double mag = std::abs(z.z);
    if (mag == 0.0) return {0.0, 0.0};
    return std::polar(bessel_ratio_order(p, mag), p * std::arg(z.z));
}

MomentMatch moment_match(const TikhonovMixture& mix, BrMode mode) { return moment_match(mix.components, mode); }

MomentMatch moment_match(std::span<const TikhonovComponent> comps, BrMode mode) {
    if (comps.empty()) throw std::invalid_argument("moment_match: empty mixture");

    // A single member of the family projects onto itself whenever the
    // forward and inverse ratio maps are exact inverses of each other.
    if (comps.size() == 1 && mode != BrMode::PiecewiseInverse) return {comps[0].param, false};

    double top = -std::numeric_limits<double>::infinity();
    for (const auto& c : comps) top = std::max(top, c.log_weight);

    cplx moment{0.0, 0.0};
    double total = 0.0;
    for (const auto& c : comps) {
        const double w = std::exp(c.log_weight - top);
        total += w;
        const double mag = std::abs(c.param.z);
        if (mag == 0.0) continue;
        double g = 0.0;
        switch (mode) {
            case BrMode::Exact:
            case BrMode::PiecewiseInverse: g = bessel_ratio(mag); break;
            case BrMode::ExpApprox: g = br_exp_approx(mag); break;
            case BrMode::Identity: g = mag; break;
        }
        moment += (w * g / mag) * c.param.z;
    }
    moment /= total;

    MomentMatch out;
    double mag = std::abs(moment);
    if (mag == 0.0) return out;
    if (mode != BrMode::Identity && mag >= 1.0) {
        mag = 1.0 - 1e-12;
        out.clamped = true;
    }
    double precision = 0.0;
    switch (mode) {
        case BrMode::Exact: precision = inv_bessel_ratio(mag); break;
        case BrMode::ExpApprox: precision = inv_br_exp_approx(mag); break;
        case BrMode::PiecewiseInverse: precision = inv_br_piecewise(mag); break;
        case BrMode::Identity: precision = mag; break;
    }
    out.param.z = std::polar(precision, std::arg(moment));
    return out;
}

TikhonovParam convolve_with_gaussian(TikhonovParam z, double var_delta) {
    if (!(var_delta >= 0.0)) throw std::invalid_argument("convolve_with_gaussian: variance must be >= 0");
    if (var_delta == 0.0) return z;
    return {z.z / (1.0 + var_delta * std::abs(z.z))};
}

}  // namespace pnsim
