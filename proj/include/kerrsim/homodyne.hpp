#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "kerrsim/errors.hpp"
#include "kerrsim/hybrid_state.hpp"
#include "kerrsim/rng.hpp"

namespace kerrsim {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

// (2pi)^{-1/4}, the normalization of the X = a + a^dag position kernel.
inline const double kKernelNorm = std::pow(kTwoPi, -0.25);

// <x|alpha> for the unit-variance X quadrature: a Gaussian envelope centered
// at 2 Re(alpha) carrying the phase Im(alpha) (x - Re alpha). For real alpha
// the phase vanishes and this is exactly the real Gaussian kernel f(x, alpha).
inline cplx position_kernel(double x, cplx alpha) {
    const double re = std::real(alpha);
    const double im = std::imag(alpha);
    const double dev = x - 2.0 * re;
    const double mag = kKernelNorm * std::exp(-0.25 * dev * dev);
    if (im == 0.0) return {mag, 0.0};
    return std::polar(mag, im * (x - re));
}

// Phase of position_kernel(x, alpha); drives measurement feed-forward.
inline double kernel_phase(double x, cplx alpha) {
    return std::imag(alpha) * (x - std::real(alpha));
}

inline double mod_2pi(double phi) {
    double r = std::fmod(phi, kTwoPi);
    if (r < 0.0) r += kTwoPi;
    return r;
}

enum class Parity { even, odd };

// One recorded homodyne readout: consumed probe, apparatus reading x (noise
// included), and the feed-forward phase phi in [0, 2pi) that the requesting
// protocol computed from it.
struct HomodyneRecord {
    ProbeId probe = 0;
    double x = 0.0;
    double phi = 0.0;
    double noiseSigma = 0.0;
};

struct GridSpec {
    double lo = 0.0;
    double hi = 0.0;
    double step = 0.01;

    std::size_t points() const {
        if (!(hi > lo) || !(step > 0.0)) throw invalid_input("grid must satisfy lo < hi, step > 0");
        return static_cast<std::size_t>(std::floor((hi - lo) / step)) + 1;
    }
};

struct MeasurementDensity {
    GridSpec grid;
    std::vector<double> p;

    double x_at(std::size_t i) const { return grid.lo + static_cast<double>(i) * grid.step; }
    double integral() const {
        double s = 0.0;
        for (double v : p) s += v;
        return s * grid.step;
    }
};

namespace detail {

// Grid spanning every branch mean +- 10 standard deviations.
inline GridSpec default_grid(const HybridState& state, std::size_t probeIdx, double step) {
    double lo = 0.0, hi = 0.0;
    bool first = true;
    for (const auto& b : state.branches()) {
        const double mean = 2.0 * std::real(b.probeAmps[probeIdx]);
        lo = first ? mean : std::min(lo, mean);
        hi = first ? mean : std::max(hi, mean);
        first = false;
    }
    return GridSpec{lo - 10.0, hi + 10.0, step};
}

} // namespace detail

// Exact Born density of an X homodyne readout of one probe: branches with
// equal labels interfere; unequal labels add incoherently; the other live
// probes enter through pairwise coherent overlaps.
inline MeasurementDensity density(const HybridState& state, ProbeId probe,
                                  std::optional<GridSpec> gridOverride = std::nullopt) {
    const std::size_t kp = state.probe_index(probe);
    const auto& brs = state.branches();
    const std::size_t n = brs.size();

    std::vector<cplx> pairCoef; // same-label pair coefficients, i < j
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (brs[i].label != brs[j].label) continue;
            cplx c = std::conj(brs[i].weight) * brs[j].weight;
            for (std::size_t k = 0; k < state.live_probes().size(); ++k)
                if (k != kp) c *= coherent_overlap(brs[i].probeAmps[k], brs[j].probeAmps[k]);
            pairCoef.push_back(c);
            pairs.emplace_back(i, j);
        }
    }

    MeasurementDensity out;
    out.grid = gridOverride ? *gridOverride : detail::default_grid(state, kp, 0.01);
    const std::size_t m = out.grid.points();
    out.p.resize(m);
    std::vector<cplx> kern(n);
    for (std::size_t g = 0; g < m; ++g) {
        const double x = out.x_at(g);
        for (std::size_t i = 0; i < n; ++i) kern[i] = position_kernel(x, brs[i].probeAmps[kp]);
        double v = 0.0;
        for (std::size_t i = 0; i < n; ++i) v += std::norm(brs[i].weight) * std::norm(kern[i]);
        for (std::size_t q = 0; q < pairs.size(); ++q)
            v += 2.0 * std::real(pairCoef[q] * std::conj(kern[pairs[q].first]) * kern[pairs[q].second]);
        out.p[g] = v > 0.0 ? v : 0.0;
    }
    return out;
}

struct HomodyneSample {
    double xTrue;     // value the state actually collapsed at
    double xReported; // apparatus reading: xTrue plus Gaussian readout noise
};

// Draw a homodyne outcome. When all branch labels are distinct there is no
// interference and sampling is exact: pick a branch with probability |w|^2,
// then draw N(2 Re alpha, 1). Otherwise invert the gridded density (accuracy
// bounded by the grid step).
inline HomodyneSample sample_readout(const HybridState& state, ProbeId probe, RngStream& rng,
                                     double noiseSigma = 0.0,
                                     std::optional<GridSpec> gridOverride = std::nullopt) {
    if (noiseSigma < 0.0) throw invalid_input("noiseSigma must be nonnegative");
    const std::size_t kp = state.probe_index(probe);
    const auto& brs = state.branches();

    bool distinct = true;
    for (std::size_t i = 0; i < brs.size() && distinct; ++i)
        for (std::size_t j = i + 1; j < brs.size(); ++j)
            if (brs[i].label == brs[j].label) {
                distinct = false;
                break;
            }

    double xTrue = 0.0;
    if (distinct) {
        double total = 0.0;
        for (const auto& b : brs) total += std::norm(b.weight);
        double u = rng.uniform() * total;
        std::size_t pick = brs.size() - 1;
        double cum = 0.0;
        for (std::size_t i = 0; i < brs.size(); ++i) {
            cum += std::norm(brs[i].weight);
            if (u < cum) {
                pick = i;
                break;
            }
        }
        xTrue = rng.gauss(2.0 * std::real(brs[pick].probeAmps[kp]), 1.0);
    } else {
        const MeasurementDensity d = density(state, probe, gridOverride);
        double total = 0.0;
        for (double v : d.p) total += v;
        if (!(total > 0.0)) throw impossible_outcome("homodyne density is numerically zero");
        const double u = rng.uniform() * total;
        double cum = 0.0;
        std::size_t cell = d.p.size() - 1;
        for (std::size_t i = 0; i < d.p.size(); ++i) {
            cum += d.p[i];
            if (u < cum) {
                cell = i;
                break;
            }
        }
        const double frac = d.p[cell] > 0.0 ? (cum - u) / d.p[cell] : 0.0;
        xTrue = d.x_at(cell) + d.grid.step * (1.0 - frac);
    }

    HomodyneSample s;
    s.xTrue = xTrue;
    s.xReported = noiseSigma > 0.0 ? xTrue + noiseSigma * rng.gauss() : xTrue;
    return s;
}

inline double sample(const HybridState& state, ProbeId probe, RngStream& rng,
                     double noiseSigma = 0.0) {
    return sample_readout(state, probe, rng, noiseSigma).xReported;
}

// Project the probe onto the X eigenstate at x: each weight picks up the
// complex kernel (phase retained; it is what generates the e^{+-i phi(x)}
// feed-forward phases), the probe leaves the live set, and the state is
// renormalized. Outcomes of numerically zero posterior norm throw.
inline HybridState project(const HybridState& state, ProbeId probe, double x) {
    const std::size_t kp = state.probe_index(probe);
    HybridState s = state;
    for (auto& b : s.branches_) {
        b.weight *= position_kernel(x, b.probeAmps[kp]);
        b.probeAmps.erase(b.probeAmps.begin() + static_cast<std::ptrdiff_t>(kp));
    }
    s.liveProbes_.erase(s.liveProbes_.begin() + static_cast<std::ptrdiff_t>(kp));
    return s.renormalized();
}

// Midpoint threshold between the unkicked peak 2 alpha and the kicked peak
// 2 alpha cos(theta): even means x on the unkicked side. Ties classify even.
inline Parity threshold_classify(double x, double alpha, double theta) {
    if (!(alpha > 0.0)) throw invalid_input("threshold_classify: alpha must be positive");
    if (!(theta > 0.0) || theta > 1.5707963267948966192313216916398)
        throw invalid_input("threshold_classify: theta must lie in (0, pi/2]");
    const double x0 = alpha * (1.0 + std::cos(theta));
    return x >= x0 ? Parity::even : Parity::odd;
}

} // namespace kerrsim
