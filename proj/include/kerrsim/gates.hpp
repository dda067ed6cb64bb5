#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kerrsim/errors.hpp"
#include "kerrsim/homodyne.hpp"
#include "kerrsim/hybrid_state.hpp"
#include "kerrsim/rng.hpp"

namespace kerrsim {

inline constexpr double kHalfPi = 1.5707963267948966192313216916398;

struct GateConfig {
    double alpha = 100.0;
    double theta = 0.3;
    double noiseSigma = 0.0;
    std::uint64_t seed = 1;

    double snr() const { return 2.0 * alpha * std::sin(theta); }
    double x0() const { return alpha * (1.0 + std::cos(theta)); }
    double xd() const { return 2.0 * alpha * (1.0 - std::cos(theta)); }
    // Peak separation below 8 puts the herald error above ~3e-5.
    bool weak_separation() const { return xd() < 8.0; }

    void validate() const {
        if (!(alpha > 0.0)) throw invalid_input("GateConfig: alpha must be positive");
        if (alpha > kMaxProbeAmp) throw invalid_input("GateConfig: alpha exceeds supported range 1e6");
        if (!(theta > 0.0) || theta > kHalfPi)
            throw invalid_input("GateConfig: theta must lie in (0, pi/2]");
        if (noiseSigma < 0.0) throw invalid_input("GateConfig: noiseSigma must be nonnegative");
    }
};

// Deterministic regression mode: measurements consume these x values in order
// instead of sampling. A forced x is used verbatim for projection,
// classification and feed-forward (no readout noise is added).
struct ForcedOutcomes {
    std::vector<double> xs;
    std::size_t next = 0;

    ForcedOutcomes() = default;
    explicit ForcedOutcomes(std::vector<double> values) : xs(std::move(values)) {}

    bool exhausted() const { return next >= xs.size(); }
    double pop() {
        if (exhausted()) throw invalid_input("forced outcome list exhausted");
        return xs[next++];
    }
};

struct AppliedCorrection {
    QubitId qubit;
    std::string descriptor;
    Unitary2 u;
};

struct ParityOutcome {
    Parity parity = Parity::even;
    HomodyneRecord record;
    std::vector<AppliedCorrection> corrections; // nonempty exactly for odd heralds
};

enum class ParityBasis { rectilinear, diagonal };

enum class BellLabel { PhiPlus, PhiMinus, PsiPlus, PsiMinus };

inline BellLabel bell_label_from_parities(Parity first, Parity second) {
    if (first == Parity::even)
        return second == Parity::even ? BellLabel::PhiPlus : BellLabel::PhiMinus;
    return second == Parity::even ? BellLabel::PsiPlus : BellLabel::PsiMinus;
}

inline const char* to_string(BellLabel l) {
    switch (l) {
        case BellLabel::PhiPlus: return "phi+";
        case BellLabel::PhiMinus: return "phi-";
        case BellLabel::PsiPlus: return "psi+";
        default: return "psi-";
    }
}

struct BellOutcome {
    BellLabel label = BellLabel::PhiPlus;
    ParityOutcome first;  // rectilinear stage
    ParityOutcome second; // diagonal stage
};

struct DetectionOutcome {
    bool photonPresent = false;
    std::optional<PolLabel> polarization;
    std::vector<HomodyneRecord> records;
};

struct CnotOutcome {
    ParityOutcome first;  // control-ancilla, rectilinear
    ParityOutcome second; // ancilla-target, diagonal
    DetectionOutcome ancilla;
    std::vector<AppliedCorrection> corrections; // classical feed-forward flips
};

inline HybridState make_bell(BellLabel label) {
    const double r = 0.70710678118654752440;
    const PolLabel H = PolLabel::H, V = PolLabel::V;
    std::vector<Branch> brs;
    switch (label) {
        case BellLabel::PhiPlus:
            brs = {{{H, H}, {}, {r, 0.0}}, {{V, V}, {}, {r, 0.0}}};
            break;
        case BellLabel::PhiMinus:
            brs = {{{H, H}, {}, {r, 0.0}}, {{V, V}, {}, {-r, 0.0}}};
            break;
        case BellLabel::PsiPlus:
            brs = {{{H, V}, {}, {r, 0.0}}, {{V, H}, {}, {r, 0.0}}};
            break;
        default:
            brs = {{{H, V}, {}, {r, 0.0}}, {{V, H}, {}, {-r, 0.0}}};
            break;
    }
    return HybridState::from_branches(2, std::move(brs), {});
}

namespace detail {

inline void require_photonic(const HybridState& state, QubitId q, const char* op) {
    state.require_qubit(q);
    for (const auto& b : state.branches())
        if (b.label[q] == PolLabel::VAC)
            throw invalid_input(std::string(op) + ": qubit must carry a photon in every branch");
}

inline HomodyneSample measure_probe(const HybridState& state, ProbeId probe, const GateConfig& cfg,
                                    RngStream& rng, ForcedOutcomes* forced) {
    if (forced != nullptr) {
        const double x = forced->pop();
        return HomodyneSample{x, x};
    }
    return sample_readout(state, probe, rng, cfg.noiseSigma);
}

} // namespace detail

// Polarization-preserving photon presence detector: both rails kick the probe
// by the same +theta, so a present photon shifts the peak to 2 alpha cos(theta)
// regardless of polarization, and the qubit state is untouched up to the
// heralded misclassification error.
inline std::pair<DetectionOutcome, HybridState> qnd_presence_detect(const HybridState& state,
                                                                    QubitId qubit,
                                                                    const GateConfig& cfg,
                                                                    RngStream& rng,
                                                                    ForcedOutcomes* forced = nullptr) {
    cfg.validate();
    state.require_qubit(qubit);
    auto [s, probe] = allocate_probe(state, {cfg.alpha, 0.0});
    s = conditional_kerr(s, qubit, PolLabel::H, probe, cfg.theta);
    s = conditional_kerr(s, qubit, PolLabel::V, probe, cfg.theta);
    const HomodyneSample m = detail::measure_probe(s, probe, cfg, rng, forced);
    s = project(s, probe, m.xTrue);

    DetectionOutcome out;
    out.photonPresent = m.xReported < cfg.x0();
    out.records.push_back(HomodyneRecord{probe, m.xReported, 0.0, cfg.noiseSigma});
    return {std::move(out), std::move(s)};
}

// Polarization-resolving QND readout: only the H rail kicks the probe, so
// x near 2 alpha cos(theta) reports H and x near 2 alpha reports V. The state
// is collapsed onto the reported polarization.
inline std::pair<DetectionOutcome, HybridState> qnd_polarization_measure(
    const HybridState& state, QubitId qubit, const GateConfig& cfg, RngStream& rng,
    ForcedOutcomes* forced = nullptr) {
    cfg.validate();
    detail::require_photonic(state, qubit, "qnd_polarization_measure");
    auto [s, probe] = allocate_probe(state, {cfg.alpha, 0.0});
    s = conditional_kerr(s, qubit, PolLabel::H, probe, cfg.theta);
    const HomodyneSample m = detail::measure_probe(s, probe, cfg, rng, forced);
    s = project(s, probe, m.xTrue);
    const PolLabel pol = m.xReported < cfg.x0() ? PolLabel::H : PolLabel::V;
    s = collapse_qubit(s, qubit, pol);

    DetectionOutcome out;
    out.photonPresent = true;
    out.polarization = pol;
    out.records.push_back(HomodyneRecord{probe, m.xReported, 0.0, cfg.noiseSigma});
    return {std::move(out), std::move(s)};
}

// Two-qubit parity herald. The probe picks up +theta from q1's H rail and
// -theta from q2's H rail, so {HH, VV} leave it unkicked (even peak at
// 2 alpha) while {HV, VH} move it to 2 alpha cos(theta) with opposite kernel
// phases +-phi(x); an odd herald strips those by feed-forward. The diagonal
// basis is the same gate conjugated by Hadamards on both qubits.
inline std::pair<ParityOutcome, HybridState> parity_gate(const HybridState& state, QubitId q1,
                                                         QubitId q2, ParityBasis basis,
                                                         const GateConfig& cfg, RngStream& rng,
                                                         ForcedOutcomes* forced = nullptr) {
    cfg.validate();
    if (q1 == q2) throw invalid_input("parity_gate: qubits must differ");
    detail::require_photonic(state, q1, "parity_gate");
    detail::require_photonic(state, q2, "parity_gate");

    HybridState s = state;
    if (basis == ParityBasis::diagonal) {
        s = apply_1q(s, q1, Unitary2::hadamard());
        s = apply_1q(s, q2, Unitary2::hadamard());
    }

    auto [sp, probe] = allocate_probe(s, {cfg.alpha, 0.0});
    s = conditional_kerr(sp, q1, PolLabel::H, probe, cfg.theta);
    s = conditional_kerr(s, q2, PolLabel::H, probe, -cfg.theta);
    const HomodyneSample m = detail::measure_probe(s, probe, cfg, rng, forced);
    s = project(s, probe, m.xTrue);

    ParityOutcome out;
    out.parity = threshold_classify(m.xReported, cfg.alpha, cfg.theta);
    out.record = HomodyneRecord{probe, m.xReported, 0.0, cfg.noiseSigma};
    if (out.parity == Parity::odd) {
        const cplx oddAmp = cfg.alpha * std::polar(1.0, cfg.theta);
        const double phi = kernel_phase(m.xReported, oddAmp);
        out.record.phi = mod_2pi(phi);
        const Unitary2 plus = Unitary2::phase(phi);
        const Unitary2 minus = Unitary2::phase(-phi);
        s = apply_1q(s, q1, plus);
        s = apply_1q(s, q2, minus);
        out.corrections.push_back({q1, "phase(+phi)", plus});
        out.corrections.push_back({q2, "phase(-phi)", minus});
    }

    if (basis == ParityBasis::diagonal) {
        s = apply_1q(s, q1, Unitary2::hadamard());
        s = apply_1q(s, q2, Unitary2::hadamard());
    }
    return {std::move(out), std::move(s)};
}

// Non-destructive Bell identification: a rectilinear parity stage followed by
// a diagonal one. The pair of heralds is in bijection with the Bell basis.
inline std::pair<BellOutcome, HybridState> bell_measure(const HybridState& state, QubitId q1,
                                                        QubitId q2, const GateConfig& cfg,
                                                        RngStream& rng,
                                                        ForcedOutcomes* forced = nullptr) {
    BellOutcome out;
    auto [first, s1] = parity_gate(state, q1, q2, ParityBasis::rectilinear, cfg, rng, forced);
    auto [second, s2] = parity_gate(s1, q1, q2, ParityBasis::diagonal, cfg, rng, forced);
    out.first = std::move(first);
    out.second = std::move(second);
    out.label = bell_label_from_parities(out.first.parity, out.second.parity);
    return {std::move(out), std::move(s2)};
}

// CNOT from two parity gates and one ancilla prepared as (|H>+|V>)/sqrt(2).
// Gate 1 (rectilinear, control-ancilla) copies the control label onto the
// ancilla; its odd herald needs an ancilla bit flip on top of the phase
// feed-forward. Gate 2 (diagonal, ancilla-target) entangles the target; its
// odd herald takes the working-basis ancilla bit flip (lab-frame Z) and the
// control sign flip. Reading the ancilla out in {H, V} then either completes
// the gate (H) or leaves one target bit flip to apply (V). The ancilla ends
// in a product state and is removed, leaving the register size unchanged.
inline std::pair<CnotOutcome, HybridState> cnot(const HybridState& state, QubitId control,
                                                QubitId target, const GateConfig& cfg,
                                                RngStream& rng, ForcedOutcomes* forced = nullptr) {
    cfg.validate();
    if (control == target) throw invalid_input("cnot: control and target must differ");
    detail::require_photonic(state, control, "cnot");
    detail::require_photonic(state, target, "cnot");

    CnotOutcome out;
    HybridState s = append_qubit(state, QubitInit::plus());
    const QubitId ancilla = state.register_size();

    auto [p1, s1] = parity_gate(s, control, ancilla, ParityBasis::rectilinear, cfg, rng, forced);
    out.first = std::move(p1);
    s = std::move(s1);
    if (out.first.parity == Parity::odd) {
        s = apply_1q(s, ancilla, Unitary2::pauli_x());
        out.corrections.push_back({ancilla, "X", Unitary2::pauli_x()});
    }

    auto [p2, s2] = parity_gate(s, ancilla, target, ParityBasis::diagonal, cfg, rng, forced);
    out.second = std::move(p2);
    s = std::move(s2);
    if (out.second.parity == Parity::odd) {
        s = apply_1q(s, ancilla, Unitary2::pauli_z());
        s = apply_1q(s, control, Unitary2::pauli_z());
        out.corrections.push_back({ancilla, "Z", Unitary2::pauli_z()});
        out.corrections.push_back({control, "Z", Unitary2::pauli_z()});
    }

    auto [det, s3] = qnd_polarization_measure(s, ancilla, cfg, rng, forced);
    out.ancilla = std::move(det);
    s = std::move(s3);
    if (out.ancilla.polarization == PolLabel::V) {
        s = apply_1q(s, target, Unitary2::pauli_x());
        out.corrections.push_back({target, "X", Unitary2::pauli_x()});
    }

    s = drop_qubit(s, ancilla);
    return {std::move(out), std::move(s)};
}

} // namespace kerrsim
