#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "kerrsim/errors.hpp"

namespace kerrsim {

using cplx = std::complex<double>;
using QubitId = std::size_t;
using ProbeId = std::size_t;

// Occupation of one dual-rail photonic mode. VAC = no photon.
enum class PolLabel : std::uint8_t { VAC = 0, H = 1, V = 2 };

inline constexpr double kMergeAmpTol = 1e-12;   // probe amplitudes equal within this merge
inline constexpr double kWeightDropTol = 1e-15; // merged branches below this are dropped
inline constexpr double kImpossibleNorm = 1e-150;
inline constexpr double kMaxProbeAmp = 1e6; // phase accuracy documented only up to here

// <alpha|beta> evaluated as exp(-|alpha-beta|^2/2 + i Im(conj(alpha) beta)).
// This form has no catastrophic cancellation for nearby large amplitudes; the
// phase Im(conj(alpha) beta) is reduced mod 2pi in double precision, keeping
// the absolute phase error below 1e-3 rad for |alpha| <= 1e6.
inline cplx coherent_overlap(cplx alpha, cplx beta) {
    const cplx d = beta - alpha;
    const double mag = std::exp(-0.5 * std::norm(d));
    const double phase = std::imag(std::conj(alpha) * beta);
    return std::polar(mag, phase);
}

// 2x2 unitary on the {H, V} subspace; VAC branches are untouched.
struct Unitary2 {
    cplx u00{1.0, 0.0}, u01{0.0, 0.0};
    cplx u10{0.0, 0.0}, u11{1.0, 0.0};

    void require_unitary(double tol = 1e-12) const {
        const double c0 = std::abs(std::norm(u00) + std::norm(u10) - 1.0);
        const double c1 = std::abs(std::norm(u01) + std::norm(u11) - 1.0);
        const double x = std::abs(std::conj(u00) * u01 + std::conj(u10) * u11);
        if (c0 > tol || c1 > tol || x > tol)
            throw invalid_input("apply_1q: matrix is not unitary");
    }

    static Unitary2 identity() { return {}; }
    static Unitary2 pauli_x() { return {{0.0, 0.0}, {1.0, 0.0}, {1.0, 0.0}, {0.0, 0.0}}; }
    static Unitary2 pauli_z() { return {{1.0, 0.0}, {0.0, 0.0}, {0.0, 0.0}, {-1.0, 0.0}}; }
    static Unitary2 hadamard() {
        const double r = 0.70710678118654752440;
        return {{r, 0.0}, {r, 0.0}, {r, 0.0}, {-r, 0.0}};
    }
    // diag(1, e^{i phi})
    static Unitary2 phase(double phi) {
        return {{1.0, 0.0}, {0.0, 0.0}, {0.0, 0.0}, std::polar(1.0, phi)};
    }
};

// One term w |label> (x)_k |alpha_k>. probeAmps is positionally aligned with
// HybridState::live_probes().
struct Branch {
    std::vector<PolLabel> label;
    std::vector<cplx> probeAmps;
    cplx weight{};
};

// Per-qubit initializer: vacuum, or normalized (H, V) amplitudes.
struct QubitInit {
    bool isVac = false;
    cplx h{}, v{};

    static QubitInit vac() {
        QubitInit q;
        q.isVac = true;
        return q;
    }
    static QubitInit hv(cplx h, cplx v) {
        const double n2 = std::norm(h) + std::norm(v);
        if (std::abs(n2 - 1.0) > 1e-10)
            throw invalid_input("qubit amplitudes must be normalized");
        return QubitInit{false, h, v};
    }
    static QubitInit basis_h() { return hv({1.0, 0.0}, {0.0, 0.0}); }
    static QubitInit basis_v() { return hv({0.0, 0.0}, {1.0, 0.0}); }
    static QubitInit plus() { return hv({0.70710678118654752440, 0.0}, {0.70710678118654752440, 0.0}); }
    static QubitInit minus() { return hv({0.70710678118654752440, 0.0}, {-0.70710678118654752440, 0.0}); }
};

namespace detail {

inline std::vector<Branch> merge_branches(std::vector<Branch> in) {
    std::vector<Branch> out;
    out.reserve(in.size());
    for (auto& b : in) {
        bool absorbed = false;
        for (auto& o : out) {
            if (o.label != b.label) continue;
            double d = 0.0;
            for (std::size_t k = 0; k < o.probeAmps.size(); ++k)
                d = std::max(d, std::abs(o.probeAmps[k] - b.probeAmps[k]));
            if (d <= kMergeAmpTol) {
                o.weight += b.weight;
                absorbed = true;
                break;
            }
        }
        if (!absorbed) out.push_back(std::move(b));
    }
    std::erase_if(out, [](const Branch& b) { return std::abs(b.weight) <= kWeightDropTol; });
    return out;
}

} // namespace detail

// Normalized superposition of Branches over a fixed qubit register and a
// dynamic set of live probe modes. Immutable value: operations return copies.
class HybridState {
public:
    HybridState() = default;

    static HybridState from_branches(std::size_t registerSize, std::vector<Branch> branches,
                                     std::vector<ProbeId> liveProbes, bool renormalize = true) {
        for (const auto& b : branches) {
            if (b.label.size() != registerSize)
                throw invalid_input("branch label length does not match register size");
            if (b.probeAmps.size() != liveProbes.size())
                throw invalid_input("branch probe amplitudes do not match live probe set");
            for (const auto& a : b.probeAmps)
                if (std::abs(a) > kMaxProbeAmp)
                    throw invalid_input("probe amplitude exceeds supported range 1e6");
        }
        HybridState s;
        s.registerSize_ = registerSize;
        s.liveProbes_ = std::move(liveProbes);
        s.branches_ = detail::merge_branches(std::move(branches));
        s.nextProbe_ = 0;
        for (ProbeId p : s.liveProbes_) s.nextProbe_ = std::max(s.nextProbe_, p + 1);
        if (renormalize) s = s.renormalized();
        return s;
    }

    std::size_t register_size() const noexcept { return registerSize_; }
    const std::vector<Branch>& branches() const noexcept { return branches_; }
    const std::vector<ProbeId>& live_probes() const noexcept { return liveProbes_; }

    std::size_t probe_index(ProbeId p) const {
        auto it = std::find(liveProbes_.begin(), liveProbes_.end(), p);
        if (it == liveProbes_.end())
            throw invalid_input("probe is not live (unknown or already measured)");
        return static_cast<std::size_t>(it - liveProbes_.begin());
    }

    void require_qubit(QubitId q) const {
        if (q >= registerSize_) throw invalid_input("qubit id out of range");
    }

    // <Psi|Psi> via the coherent overlap formula; 1 for every normalized state.
    double norm_squared() const {
        double total = 0.0;
        const std::size_t n = branches_.size();
        for (std::size_t i = 0; i < n; ++i) {
            total += std::norm(branches_[i].weight);
            for (std::size_t j = i + 1; j < n; ++j) {
                if (branches_[i].label != branches_[j].label) continue;
                cplx f = std::conj(branches_[i].weight) * branches_[j].weight;
                for (std::size_t k = 0; k < liveProbes_.size(); ++k)
                    f *= coherent_overlap(branches_[i].probeAmps[k], branches_[j].probeAmps[k]);
                total += 2.0 * std::real(f);
            }
        }
        return total;
    }

    HybridState renormalized() const {
        const double n2 = norm_squared();
        if (!(n2 >= kImpossibleNorm))
            throw impossible_outcome("state norm is numerically zero");
        HybridState s = *this;
        const double inv = 1.0 / std::sqrt(n2);
        std::vector<Branch> brs = s.branches_;
        for (auto& b : brs) b.weight *= inv;
        s.branches_ = detail::merge_branches(std::move(brs));
        return s;
    }

private:
    std::vector<Branch> branches_;
    std::vector<ProbeId> liveProbes_;
    std::size_t registerSize_ = 0;
    ProbeId nextProbe_ = 0;

    friend std::pair<HybridState, ProbeId> allocate_probe(const HybridState&, cplx);
    friend HybridState project(const HybridState&, ProbeId, double);
};

// <a|b> for states over the same register and the same live probe set.
inline cplx state_overlap(const HybridState& a, const HybridState& b) {
    if (a.register_size() != b.register_size())
        throw invalid_input("state overlap: register sizes differ");
    if (a.live_probes() != b.live_probes())
        throw invalid_input("state overlap: live probe sets differ");
    cplx total = 0.0;
    for (const auto& ba : a.branches()) {
        for (const auto& bb : b.branches()) {
            if (ba.label != bb.label) continue;
            cplx f = std::conj(ba.weight) * bb.weight;
            for (std::size_t k = 0; k < ba.probeAmps.size(); ++k)
                f *= coherent_overlap(ba.probeAmps[k], bb.probeAmps[k]);
            total += f;
        }
    }
    return total;
}

inline double norm(const HybridState& state) { return state.norm_squared(); }

// Product state over the register; no probes. Branch count is the product of
// per-qubit nonzero component counts.
inline HybridState new_product_state(const std::vector<QubitInit>& qubits) {
    std::vector<Branch> brs{Branch{{}, {}, cplx{1.0, 0.0}}};
    for (const auto& q : qubits) {
        if (!q.isVac && std::norm(q.h) + std::norm(q.v) < 1e-20)
            throw invalid_input("qubit amplitudes are zero");
        std::vector<Branch> next;
        next.reserve(brs.size() * 2);
        for (const auto& b : brs) {
            if (q.isVac) {
                Branch nb = b;
                nb.label.push_back(PolLabel::VAC);
                next.push_back(std::move(nb));
                continue;
            }
            if (std::abs(q.h) > 0.0) {
                Branch nb = b;
                nb.label.push_back(PolLabel::H);
                nb.weight *= q.h;
                next.push_back(std::move(nb));
            }
            if (std::abs(q.v) > 0.0) {
                Branch nb = b;
                nb.label.push_back(PolLabel::V);
                nb.weight *= q.v;
                next.push_back(std::move(nb));
            }
        }
        brs = std::move(next);
    }
    return HybridState::from_branches(qubits.size(), std::move(brs), {});
}

// Every branch gains the same fresh coherent amplitude; norm is unchanged.
inline std::pair<HybridState, ProbeId> allocate_probe(const HybridState& state, cplx alpha) {
    if (std::abs(alpha) > kMaxProbeAmp)
        throw invalid_input("probe amplitude exceeds supported range 1e6");
    HybridState s = state;
    const ProbeId id = s.nextProbe_++;
    s.liveProbes_.push_back(id);
    for (auto& b : s.branches_) b.probeAmps.push_back(alpha);
    return {std::move(s), id};
}

// In every branch whose qubit label equals trigger, rotate the probe amplitude
// by e^{i theta}. Exactly norm-preserving.
inline HybridState conditional_kerr(const HybridState& state, QubitId qubit, PolLabel trigger,
                                    ProbeId probe, double theta) {
    state.require_qubit(qubit);
    if (trigger == PolLabel::VAC)
        throw invalid_input("conditional_kerr: vacuum never triggers");
    const std::size_t k = state.probe_index(probe);
    const cplx rot = std::polar(1.0, theta);
    std::vector<Branch> brs = state.branches();
    for (auto& b : brs)
        if (b.label[qubit] == trigger) b.probeAmps[k] *= rot;
    return HybridState::from_branches(state.register_size(), std::move(brs),
                                      state.live_probes(), /*renormalize=*/false);
}

// Apply u on the {H, V} subspace of one qubit; identity on VAC branches.
inline HybridState apply_1q(const HybridState& state, QubitId qubit, const Unitary2& u) {
    state.require_qubit(qubit);
    u.require_unitary();
    std::vector<Branch> brs;
    brs.reserve(state.branches().size() * 2);
    for (const auto& b : state.branches()) {
        if (b.label[qubit] == PolLabel::VAC) {
            brs.push_back(b);
            continue;
        }
        const bool fromH = b.label[qubit] == PolLabel::H;
        const cplx toH = fromH ? u.u00 : u.u01;
        const cplx toV = fromH ? u.u10 : u.u11;
        if (std::abs(toH) > 0.0) {
            Branch nb = b;
            nb.label[qubit] = PolLabel::H;
            nb.weight *= toH;
            brs.push_back(std::move(nb));
        }
        if (std::abs(toV) > 0.0) {
            Branch nb = b;
            nb.label[qubit] = PolLabel::V;
            nb.weight *= toV;
            brs.push_back(std::move(nb));
        }
    }
    return HybridState::from_branches(state.register_size(), std::move(brs),
                                      state.live_probes(), /*renormalize=*/false);
}

// Extend the register by one qubit in the given initial state.
inline HybridState append_qubit(const HybridState& state, const QubitInit& init) {
    std::vector<Branch> brs;
    brs.reserve(state.branches().size() * 2);
    for (const auto& b : state.branches()) {
        if (init.isVac) {
            Branch nb = b;
            nb.label.push_back(PolLabel::VAC);
            brs.push_back(std::move(nb));
            continue;
        }
        if (std::abs(init.h) > 0.0) {
            Branch nb = b;
            nb.label.push_back(PolLabel::H);
            nb.weight *= init.h;
            brs.push_back(std::move(nb));
        }
        if (std::abs(init.v) > 0.0) {
            Branch nb = b;
            nb.label.push_back(PolLabel::V);
            nb.weight *= init.v;
            brs.push_back(std::move(nb));
        }
    }
    return HybridState::from_branches(state.register_size() + 1, std::move(brs),
                                      state.live_probes(), /*renormalize=*/false);
}

// Remove a qubit whose label is identical in every branch (separable factor).
inline HybridState drop_qubit(const HybridState& state, QubitId qubit) {
    state.require_qubit(qubit);
    if (state.branches().empty()) throw invalid_input("drop_qubit: empty state");
    const PolLabel common = state.branches().front().label[qubit];
    std::vector<Branch> brs;
    brs.reserve(state.branches().size());
    for (const auto& b : state.branches()) {
        if (b.label[qubit] != common)
            throw invalid_input("drop_qubit: qubit is not in a definite basis state");
        Branch nb = b;
        nb.label.erase(nb.label.begin() + static_cast<std::ptrdiff_t>(qubit));
        brs.push_back(std::move(nb));
    }
    return HybridState::from_branches(state.register_size() - 1, std::move(brs),
                                      state.live_probes(), /*renormalize=*/false);
}

// Keep only branches with the given label on one qubit, then renormalize.
// Throws impossible_outcome when that component has zero weight.
inline HybridState collapse_qubit(const HybridState& state, QubitId qubit, PolLabel keep) {
    state.require_qubit(qubit);
    std::vector<Branch> brs;
    for (const auto& b : state.branches())
        if (b.label[qubit] == keep) brs.push_back(b);
    if (brs.empty()) throw impossible_outcome("collapse onto empty component");
    return HybridState::from_branches(state.register_size(), std::move(brs), state.live_probes(),
                                      /*renormalize=*/true);
}

} // namespace kerrsim
