#pragma once

// Tikhonov (von Mises) distributions on the circle, parametrised by one
// complex number z: angle(z) is the circular mean, |z| the precision.
//
//   t(theta; z) = exp(Re[z e^{-j theta}]) / (2 pi I0(|z|))

#include <span>
#include <string_view>
#include <vector>

#include "pnsim/types.hpp"

namespace pnsim {

struct TikhonovParam {
    cplx z{0.0, 0.0};

    double precision() const { return std::abs(z); }
    double mean_angle() const { return std::arg(z); }
    /// 1 - I1(|z|)/I0(|z|), in [0, 1].
    double circular_variance() const;

    friend bool operator==(const TikhonovParam&, const TikhonovParam&) = default;
};

struct TikhonovComponent {
    double log_weight = 0.0;
    TikhonovParam param;
};

/// Weighted Tikhonov mixture. Weights are kept as logs; they need not sum
/// to one until normalize() is called.
struct TikhonovMixture {
    std::vector<TikhonovComponent> components;

    std::size_t size() const { return components.size(); }
    bool empty() const { return components.empty(); }
    /// Shifts log-weights so that sum(exp(log_weight)) == 1.
    void normalize();
    /// Normalised linear weights.
    std::vector<double> weights() const;
};

/// How the Bessel ratio I1/I0 and its inverse enter moment matching.
enum class BrMode {
    Exact,             ///< true ratio both ways, numeric inverse
    ExpApprox,         ///< exp(-0.5/x) both ways
    Identity,          ///< ratio replaced by its argument (linear combination)
    PiecewiseInverse,  ///< true ratio forward, parabola/exponential inverse
};

const char* to_string(BrMode m);
BrMode br_mode_from_string(std::string_view s);

// ---------------------------------------------------------------------------
// Bessel plumbing

/// ln I0(x), x >= 0. Throws std::domain_error on negative or NaN input.
double log_bessel_i0(double x);

/// I1(x)/I0(x), x >= 0; in [0, 1) and strictly increasing.
double bessel_ratio(double x);

/// I_p(x)/I0(x) for integer p >= 0.
double bessel_ratio_order(int p, double x);

/// Numeric inverse of bessel_ratio on [0, 1e6]. Input must be in [0, 1).
double inv_bessel_ratio(double br);

/// exp(-0.5/x); 0 at x = 0.
double br_exp_approx(double x);

/// Exact inverse of br_exp_approx: -0.5/ln(y); 0 at y = 0.
double inv_br_exp_approx(double y);

/// Parabola below 0.59, shifted exponential-approximation inverse above.
/// The two branches do not meet exactly: at 0.59 the left branch gives
/// 1.5038 and the right 1.4977. The breakpoint belongs to the left branch.
double inv_br_piecewise(double br);

// ---------------------------------------------------------------------------
// Densities and moments

double tikhonov_log_pdf(double theta, TikhonovParam z);

/// E[e^{j p theta}] under t(.; z).
cplx circular_moment(TikhonovParam z, int p);

struct MomentMatch {
    TikhonovParam param;
    /// |first moment| reached 1 and was clamped to 1 - 1e-12 before inversion.
    bool clamped = false;
};

/// KL-optimal Tikhonov fit of a mixture (first trigonometric moment
/// matching), with the Bessel ratio treated according to mode. The mixture
/// need not be normalised. Throws std::invalid_argument when empty.
MomentMatch moment_match(const TikhonovMixture& mix, BrMode mode);
MomentMatch moment_match(std::span<const TikhonovComponent> comps, BrMode mode);

/// Tikhonov approximation of t(.; z) convolved with a zero-mean Gaussian of
/// variance var_delta: the mean is kept and the precision shrinks to
/// |z| / (1 + var_delta |z|).
TikhonovParam convolve_with_gaussian(TikhonovParam z, double var_delta);

}  // namespace pnsim
