#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "kerrsim/errors.hpp"
#include "kerrsim/homodyne.hpp"
#include "kerrsim/hybrid_state.hpp"

namespace kerrsim {

// Truncation keeping coherent-state leakage 1 - sum |c_n|^2 below 1e-10
// (Poisson tail bound). Overridable wherever a truncation is accepted.
inline std::size_t fock_truncation(double absAlpha) {
    return static_cast<std::size_t>(std::ceil(absAlpha * absAlpha + 12.0 * absAlpha + 20.0));
}

struct FockVector {
    std::vector<cplx> amps;

    std::size_t dim() const { return amps.size(); }
    double norm_squared() const {
        double s = 0.0;
        for (const auto& a : amps) s += std::norm(a);
        return s;
    }
};

inline FockVector fock_basis(std::size_t n, std::size_t truncation) {
    if (n >= truncation) throw invalid_input("fock_basis: n must be below the truncation");
    FockVector v;
    v.amps.assign(truncation, cplx{});
    v.amps[n] = 1.0;
    return v;
}

// c_n = e^{-|alpha|^2/2} alpha^n / sqrt(n!) by the stable ratio recurrence.
inline FockVector coherent_fock(cplx alpha, std::size_t truncation = 0) {
    const std::size_t n = truncation ? truncation : fock_truncation(std::abs(alpha));
    FockVector v;
    v.amps.resize(n);
    cplx c = std::exp(cplx{-0.5 * std::norm(alpha), 0.0});
    for (std::size_t k = 0; k < n; ++k) {
        v.amps[k] = c;
        c *= alpha / std::sqrt(static_cast<double>(k + 1));
    }
    return v;
}

// Normalized Hermite functions psi_n for the unit-variance X = a + a^dag
// quadrature: psi_0(x) = (2pi)^{-1/4} e^{-x^2/4} and
// psi_{n+1} = (x psi_n - sqrt(n) psi_{n-1}) / sqrt(n+1). Working on the
// normalized functions keeps every value bounded (no factorial overflow).
inline std::vector<double> hermite_psi_column(std::size_t count, double x) {
    std::vector<double> psi(count);
    if (count == 0) return psi;
    psi[0] = kKernelNorm * std::exp(-0.25 * x * x);
    if (count > 1) psi[1] = x * psi[0];
    for (std::size_t n = 1; n + 1 < count; ++n)
        psi[n + 1] = (x * psi[n] - std::sqrt(static_cast<double>(n)) * psi[n - 1]) /
                     std::sqrt(static_cast<double>(n + 1));
    return psi;
}

inline double hermite_psi(std::size_t n, double x) {
    return hermite_psi_column(n + 1, x).back();
}

// Joint Fock state of one or more signal modes and one probe mode, flattened
// row-major with the probe index fastest.
struct FockJoint {
    std::vector<std::size_t> signalDims;
    std::size_t probeDim = 0;
    std::vector<cplx> amps;

    std::size_t signal_size() const {
        std::size_t s = 1;
        for (std::size_t d : signalDims) s *= d;
        return s;
    }
    double norm_squared() const {
        double s = 0.0;
        for (const auto& a : amps) s += std::norm(a);
        return s;
    }
};

inline FockJoint oracle_join(const std::vector<FockVector>& signals, const FockVector& probe) {
    if (probe.dim() == 0) throw invalid_input("oracle_join: empty probe");
    FockJoint j;
    j.probeDim = probe.dim();
    j.signalDims.reserve(signals.size());
    for (const auto& s : signals) {
        if (s.dim() == 0) throw invalid_input("oracle_join: empty signal mode");
        j.signalDims.push_back(s.dim());
    }
    j.amps.assign(j.signal_size() * j.probeDim, cplx{});
    const std::size_t total = j.amps.size();
    for (std::size_t idx = 0; idx < total; ++idx) {
        std::size_t rest = idx;
        const std::size_t nc = rest % j.probeDim;
        rest /= j.probeDim;
        cplx a = probe.amps[nc];
        for (std::size_t m = signals.size(); m-- > 0;) {
            const std::size_t nm = rest % j.signalDims[m];
            rest /= j.signalDims[m];
            a *= signals[m].amps[nm];
        }
        j.amps[idx] = a;
    }
    return j;
}

// Exact diagonal Kerr unitary: amp(.., n_m, .., n_c) *= e^{i theta n_m n_c}.
inline FockJoint oracle_kerr(FockJoint joint, std::size_t signalMode, double theta) {
    if (signalMode >= joint.signalDims.size())
        throw invalid_input("oracle_kerr: signal mode out of range");
    std::size_t stride = joint.probeDim;
    for (std::size_t m = joint.signalDims.size(); m-- > signalMode + 1;) stride *= joint.signalDims[m];
    for (std::size_t idx = 0; idx < joint.amps.size(); ++idx) {
        const std::size_t nc = idx % joint.probeDim;
        const std::size_t nm = (idx / stride) % joint.signalDims[signalMode];
        if (nm != 0 && nc != 0)
            joint.amps[idx] *= std::polar(1.0, theta * static_cast<double>(nm) * static_cast<double>(nc));
    }
    return joint;
}

inline FockJoint oracle_kerr(const FockVector& signal, const FockVector& probe, double theta) {
    return oracle_kerr(oracle_join({signal}, probe), 0, theta);
}

// p(x) = sum over signal configurations |sum_{n_c} amp psi_{n_c}(x)|^2.
inline std::vector<double> oracle_density(const FockJoint& joint, const GridSpec& grid) {
    const std::size_t m = grid.points();
    const std::size_t sig = joint.signal_size();
    std::vector<double> p(m, 0.0);
    for (std::size_t g = 0; g < m; ++g) {
        const double x = grid.lo + static_cast<double>(g) * grid.step;
        const std::vector<double> psi = hermite_psi_column(joint.probeDim, x);
        double v = 0.0;
        for (std::size_t s = 0; s < sig; ++s) {
            cplx a{};
            const std::size_t base = s * joint.probeDim;
            for (std::size_t nc = 0; nc < joint.probeDim; ++nc) a += joint.amps[base + nc] * psi[nc];
            v += std::norm(a);
        }
        p[g] = v;
    }
    return p;
}

struct FockPosterior {
    std::vector<std::size_t> signalDims;
    std::vector<cplx> amps; // flattened over the signal modes, normalized
};

// Project the probe onto <x|: posterior(s) = sum_{n_c} amp(s, n_c) psi_{n_c}(x).
inline FockPosterior oracle_project(const FockJoint& joint, double x) {
    const std::vector<double> psi = hermite_psi_column(joint.probeDim, x);
    FockPosterior post;
    post.signalDims = joint.signalDims;
    const std::size_t sig = joint.signal_size();
    post.amps.assign(sig, cplx{});
    double n2 = 0.0;
    for (std::size_t s = 0; s < sig; ++s) {
        cplx a{};
        const std::size_t base = s * joint.probeDim;
        for (std::size_t nc = 0; nc < joint.probeDim; ++nc) a += joint.amps[base + nc] * psi[nc];
        post.amps[s] = a;
        n2 += std::norm(a);
    }
    if (!(n2 >= kImpossibleNorm)) throw impossible_outcome("oracle posterior norm is numerically zero");
    const double inv = 1.0 / std::sqrt(n2);
    for (auto& a : post.amps) a *= inv;
    return post;
}

// |<a|b>|^2 for equal-length normalized amplitude vectors.
inline double fock_fidelity(const std::vector<cplx>& a, const std::vector<cplx>& b) {
    if (a.size() != b.size()) throw invalid_input("fock_fidelity: dimension mismatch");
    cplx ov{};
    for (std::size_t i = 0; i < a.size(); ++i) ov += std::conj(a[i]) * b[i];
    return std::norm(ov);
}

} // namespace kerrsim
