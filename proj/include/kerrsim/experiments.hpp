#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "kerrsim/analysis.hpp"
#include "kerrsim/fock_oracle.hpp"
#include "kerrsim/gates.hpp"
#include "kerrsim/homodyne.hpp"
#include "kerrsim/hybrid_state.hpp"

namespace kerrsim::experiments {

// Photon presence discrimination at the quadrature signal-to-noise ratio
// 2 alpha sin(theta): the probe is allocated at -i alpha so the Kerr kick
// moves the measured quadrature mean from 0 (no photon) to 2 alpha sin(theta)
// (photon present); the midpoint threshold misidentifies with probability
// (1/2) erfc(alpha sin(theta) / sqrt(2)).
struct DetectorReport {
    ErrorModel model;
    MonteCarloReport mc; // estimated misidentification rate
};

inline DetectorReport detector_error_report(const GateConfig& cfg, std::uint64_t trials,
                                            std::uint64_t seed, unsigned jobs = 1) {
    cfg.validate();
    DetectorReport rep;
    rep.model = error_model(cfg.alpha, cfg.theta);
    const double threshold = cfg.alpha * std::sin(cfg.theta);
    rep.mc = run_trials(
        [&cfg, threshold](RngStream& rng) {
            const bool present = rng.uniform() < 0.5;
            HybridState s = present ? new_product_state({QubitInit::basis_h()})
                                    : new_product_state({QubitInit::vac()});
            auto [sp, probe] = allocate_probe(s, cplx{0.0, -cfg.alpha});
            s = conditional_kerr(sp, 0, PolLabel::H, probe, cfg.theta);
            s = conditional_kerr(s, 0, PolLabel::V, probe, cfg.theta);
            const HomodyneSample m = sample_readout(s, probe, rng, cfg.noiseSigma);
            const bool reported = m.xReported > threshold;
            return reported != present; // success counts a misidentification
        },
        trials, seed, jobs);
    return rep;
}

// Herald error of the rectilinear parity gate on definite-parity basis inputs.
struct ParityErrorReport {
    ErrorModel model;
    MonteCarloReport mc; // estimated herald error rate
};

inline ParityErrorReport parity_error_report(const GateConfig& cfg, std::uint64_t trials,
                                             std::uint64_t seed, unsigned jobs = 1) {
    cfg.validate();
    ParityErrorReport rep;
    rep.model = error_model(cfg.alpha, cfg.theta);
    rep.mc = run_trials(
        [&cfg](RngStream& rng) {
            const std::size_t k = static_cast<std::size_t>(rng.uniform() * 4.0) & 3;
            const bool evenTruth = (k == 0 || k == 3);
            const QubitInit a = (k & 2) ? QubitInit::basis_v() : QubitInit::basis_h();
            const QubitInit b = (k & 1) ? QubitInit::basis_v() : QubitInit::basis_h();
            HybridState s = new_product_state({a, b});
            auto [out, post] = parity_gate(s, 0, 1, ParityBasis::rectilinear, cfg, rng);
            const bool evenHerald = out.parity == Parity::even;
            return evenHerald != evenTruth;
        },
        trials, seed, jobs);
    return rep;
}

// Conditional post-states of the parity gate on the uniform two-qubit input:
// per-herald mean and minimum fidelity to (|HH>+|VV>)/sqrt2 resp.
// (|HV>+|VH>)/sqrt2 after feed-forward.
struct ParityConditionalReport {
    std::uint64_t trials = 0;
    std::uint64_t evenCount = 0;
    std::uint64_t oddCount = 0;
    double evenMeanFidelity = 0.0;
    double oddMeanFidelity = 0.0;
    double evenMinFidelity = 1.0;
    double oddMinFidelity = 1.0;
    std::uint64_t seed = 0;
};

inline ParityConditionalReport parity_conditional_report(const GateConfig& cfg,
                                                         std::uint64_t trials, std::uint64_t seed,
                                                         unsigned jobs = 1) {
    cfg.validate();
    const HybridState evenRef = make_bell(BellLabel::PhiPlus);
    const HybridState oddRef = make_bell(BellLabel::PsiPlus);
    const std::uint64_t nBlocks = (trials + kTrialBlock - 1) / kTrialBlock;
    struct Acc {
        std::uint64_t n[2] = {0, 0};
        double sum[2] = {0.0, 0.0};
        double min[2] = {1.0, 1.0};
    };
    std::vector<Acc> acc(nBlocks);
    detail::run_blocks(trials, seed, jobs, [&](std::uint64_t, std::uint64_t blk, RngStream& rng) {
        HybridState s = new_product_state({QubitInit::plus(), QubitInit::plus()});
        auto [out, post] = parity_gate(s, 0, 1, ParityBasis::rectilinear, cfg, rng);
        const int cls = out.parity == Parity::even ? 0 : 1;
        const double f = fidelity(post, cls == 0 ? evenRef : oddRef).value;
        auto& a = acc[blk];
        ++a.n[cls];
        a.sum[cls] += f;
        a.min[cls] = std::min(a.min[cls], f);
    });
    ParityConditionalReport rep;
    rep.trials = trials;
    rep.seed = seed;
    double sum[2] = {0.0, 0.0};
    for (const auto& a : acc) {
        rep.evenCount += a.n[0];
        rep.oddCount += a.n[1];
        sum[0] += a.sum[0];
        sum[1] += a.sum[1];
        rep.evenMinFidelity = std::min(rep.evenMinFidelity, a.min[0]);
        rep.oddMinFidelity = std::min(rep.oddMinFidelity, a.min[1]);
    }
    rep.evenMeanFidelity = rep.evenCount ? sum[0] / static_cast<double>(rep.evenCount) : 0.0;
    rep.oddMeanFidelity = rep.oddCount ? sum[1] / static_cast<double>(rep.oddCount) : 0.0;
    return rep;
}

// 4x4 Bell-analyzer confusion matrix plus post-measurement fidelity to the
// identified Bell state. Row = prepared state, column = reported label.
struct BellConfusionReport {
    std::uint64_t trialsPerState = 0;
    std::array<std::array<std::uint64_t, 4>, 4> counts{};
    std::array<double, 4> meanFidelity{};
    std::array<double, 4> minFidelity{};
    std::uint64_t seed = 0;

    double min_diagonal_rate() const {
        double m = 1.0;
        for (std::size_t i = 0; i < 4; ++i)
            m = std::min(m, static_cast<double>(counts[i][i]) / static_cast<double>(trialsPerState));
        return m;
    }
};

inline constexpr std::array<BellLabel, 4> kBellOrder{BellLabel::PhiPlus, BellLabel::PhiMinus,
                                                     BellLabel::PsiPlus, BellLabel::PsiMinus};

inline std::size_t bell_index(BellLabel l) {
    switch (l) {
        case BellLabel::PhiPlus: return 0;
        case BellLabel::PhiMinus: return 1;
        case BellLabel::PsiPlus: return 2;
        default: return 3;
    }
}

// One confusion-matrix row: measure a prepared Bell state trials times and
// tally the reported labels plus the post-state fidelity to each report.
struct BellStateRow {
    std::array<std::uint64_t, 4> counts{};
    double meanFidelity = 0.0;
    double minFidelity = 1.0;
};

inline BellStateRow bell_state_row(const GateConfig& cfg, BellLabel input, std::uint64_t trials,
                                   std::uint64_t seed, unsigned jobs = 1) {
    cfg.validate();
    const HybridState prepared = make_bell(input);
    const std::uint64_t nBlocks = (trials + kTrialBlock - 1) / kTrialBlock;
    struct Acc {
        std::uint64_t count[4] = {0, 0, 0, 0};
        double fidSum = 0.0;
        double fidMin = 1.0;
    };
    std::vector<Acc> acc(nBlocks);
    detail::run_blocks(trials, seed, jobs, [&](std::uint64_t, std::uint64_t blk, RngStream& rng) {
        auto [out, post] = bell_measure(prepared, 0, 1, cfg, rng);
        const std::size_t got = bell_index(out.label);
        const double f = fidelity(post, make_bell(out.label)).value;
        auto& a = acc[blk];
        ++a.count[got];
        a.fidSum += f;
        a.fidMin = std::min(a.fidMin, f);
    });
    BellStateRow row;
    double fidSum = 0.0;
    for (const auto& a : acc) {
        for (std::size_t c = 0; c < 4; ++c) row.counts[c] += a.count[c];
        fidSum += a.fidSum;
        row.minFidelity = std::min(row.minFidelity, a.fidMin);
    }
    row.meanFidelity = fidSum / static_cast<double>(trials);
    return row;
}

inline BellConfusionReport bell_confusion_report(const GateConfig& cfg, std::uint64_t trialsPerState,
                                                 std::uint64_t seed, unsigned jobs = 1) {
    BellConfusionReport rep;
    rep.trialsPerState = trialsPerState;
    rep.seed = seed;
    for (std::size_t input = 0; input < 4; ++input) {
        const BellStateRow row =
            bell_state_row(cfg, kBellOrder[input], trialsPerState, substream_seed(seed, input), jobs);
        rep.counts[input] = row.counts;
        rep.meanFidelity[input] = row.meanFidelity;
        rep.minFidelity[input] = row.minFidelity;
    }
    return rep;
}

// Reference output of an ideal CNOT: a label permutation branch by branch
// (target flips exactly when the control label is V).
inline HybridState ideal_cnot_reference(const HybridState& in, QubitId control, QubitId target) {
    in.require_qubit(control);
    in.require_qubit(target);
    std::vector<Branch> brs = in.branches();
    for (auto& b : brs) {
        if (b.label[control] != PolLabel::V) continue;
        if (b.label[target] == PolLabel::VAC)
            throw invalid_input("ideal_cnot_reference: target must carry a photon");
        b.label[target] = b.label[target] == PolLabel::H ? PolLabel::V : PolLabel::H;
    }
    return HybridState::from_branches(in.register_size(), std::move(brs), in.live_probes());
}

// CNOT evaluation: the exact truth table under forced heralds (all eight
// herald paths per basis input), the unconditioned basis error rate, and the
// entangling action on (|H>+|V>)|H>/sqrt2.
struct CnotReport {
    double truthTableMinFidelity = 0.0;
    MonteCarloReport basisError;
    MeanReport entanglingFidelity;
};

inline double cnot_truth_table_min_fidelity(const GateConfig& cfg) {
    cfg.validate();
    RngStream unused(0);
    const double xEven = 2.0 * cfg.alpha;
    const double xOdd = 2.0 * cfg.alpha * std::cos(cfg.theta);
    const double xAncH = xOdd;
    const double xAncV = xEven;
    double minFid = 1.0;
    for (int c = 0; c < 2; ++c) {
        for (int t = 0; t < 2; ++t) {
            const QubitInit ci = c ? QubitInit::basis_v() : QubitInit::basis_h();
            const QubitInit ti = t ? QubitInit::basis_v() : QubitInit::basis_h();
            const int to = t ^ c;
            const HybridState expect = new_product_state(
                {c ? QubitInit::basis_v() : QubitInit::basis_h(),
                 to ? QubitInit::basis_v() : QubitInit::basis_h()});
            for (double x1 : {xEven, xOdd}) {
                for (double x2 : {xEven, xOdd}) {
                    for (double x3 : {xAncH, xAncV}) {
                        ForcedOutcomes forced({x1, x2, x3});
                        const HybridState in = new_product_state({ci, ti});
                        auto [out, post] = cnot(in, 0, 1, cfg, unused, &forced);
                        minFid = std::min(minFid, fidelity(post, expect).value);
                    }
                }
            }
        }
    }
    return minFid;
}

inline CnotReport cnot_report(const GateConfig& cfg, std::uint64_t trials, std::uint64_t seed,
                              unsigned jobs = 1) {
    cfg.validate();
    CnotReport rep;
    rep.truthTableMinFidelity = cnot_truth_table_min_fidelity(cfg);
    rep.basisError = run_trials(
        [&cfg](RngStream& rng) {
            const bool c = rng.uniform() < 0.5;
            const bool t = rng.uniform() < 0.5;
            const HybridState in = new_product_state({c ? QubitInit::basis_v() : QubitInit::basis_h(),
                                                      t ? QubitInit::basis_v() : QubitInit::basis_h()});
            const bool to = c != t;
            const HybridState expect =
                new_product_state({c ? QubitInit::basis_v() : QubitInit::basis_h(),
                                   to ? QubitInit::basis_v() : QubitInit::basis_h()});
            auto [out, post] = cnot(in, 0, 1, cfg, rng);
            return fidelity(post, expect).value < 0.5; // success counts an error
        },
        trials, seed, jobs);
    rep.entanglingFidelity = run_mean(
        [&cfg](RngStream& rng) {
            const HybridState in = new_product_state({QubitInit::plus(), QubitInit::basis_h()});
            auto [out, post] = cnot(in, 0, 1, cfg, rng);
            return fidelity(post, make_bell(BellLabel::PhiPlus)).value;
        },
        std::max<std::uint64_t>(1, trials / 10), substream_seed(seed, 0x656e74), jobs);
    return rep;
}

// Resource sweep rows: the probe amplitude and photon number needed to hold
// the peak separation at targetXd for each theta.
struct SweepRow {
    double theta = 0.0;
    double alpha = 0.0;
    double photonNumber = 0.0;
    double pErrParity = 0.0;
};

inline std::vector<SweepRow> sweep_required_alpha(const std::vector<double>& thetas, double targetXd) {
    std::vector<SweepRow> rows;
    rows.reserve(thetas.size());
    for (double th : thetas) {
        const ResourceRequirement rr = required_alpha(th, targetXd);
        SweepRow row;
        row.theta = th;
        row.alpha = rr.alpha;
        row.photonNumber = rr.photonNumber;
        row.pErrParity = error_model(rr.alpha, th).pErrParity;
        rows.push_back(row);
    }
    return rows;
}

// Branch-engine vs truncated-Fock cross-validation.
inline std::vector<QubitInit> validation_corpus() {
    const double r = 0.70710678118654752440;
    const cplx i{0.0, 1.0};
    return {
        QubitInit::basis_h(),
        QubitInit::basis_v(),
        QubitInit::hv({r, 0.0}, {r, 0.0}),
        QubitInit::hv({r, 0.0}, {-r, 0.0}),
        QubitInit::hv({r, 0.0}, i * r),
        QubitInit::hv({r, 0.0}, -i * r),
        QubitInit::hv({0.6, 0.0}, {0.8, 0.0}),
        QubitInit::hv({0.6, 0.0}, {-0.8, 0.0}),
        QubitInit::hv({0.6, 0.0}, {0.0, 0.8}),
        QubitInit::hv({0.8, 0.0}, {0.6, 0.0}),
        QubitInit::hv({0.28, 0.0}, {0.96, 0.0}),
        QubitInit::hv({0.6, 0.0}, std::polar(0.8, 0.78539816339744830962)),
    };
}

struct ValidateRow {
    std::string name;
    double densityLinf = 0.0;
    double minPosteriorFidelity = 1.0;
};

struct ValidateReport {
    double alpha = 0.0;
    double theta = 0.0;
    std::vector<ValidateRow> rows;
    double maxDensityLinf = 0.0;
    double minPosteriorFidelity = 1.0;
    bool pass = false;
};

namespace detail_validate {

// Signal-mode encoding: occupation 1 of the Kerr-triggered rail is label H.
inline FockVector qubit_signal(const QubitInit& q) {
    FockVector v;
    v.amps = {q.v, q.h};
    return v;
}

inline std::vector<double> engine_density_on(const HybridState& s, ProbeId probe, const GridSpec& g) {
    return density(s, probe, g).p;
}

} // namespace detail_validate

inline ValidateReport validate_report(double alpha, double theta) {
    if (!(alpha > 0.0) || alpha > 10.0)
        throw invalid_input("validate: oracle cross-check supports 0 < alpha <= 10");
    if (!(theta > 0.0) || theta > kHalfPi)
        throw invalid_input("validate: theta must lie in (0, pi/2]");

    ValidateReport rep;
    rep.alpha = alpha;
    rep.theta = theta;
    const GridSpec grid{-(2.0 * alpha + 10.0), 2.0 * alpha + 10.0, 0.01};
    const FockVector probe = coherent_fock(cplx{alpha, 0.0});
    const double x0 = alpha * (1.0 + std::cos(theta));
    const std::vector<double> xs = {x0 - 2.0, x0 + 2.0, x0, 2.0 * alpha * std::cos(theta),
                                    2.0 * alpha};

    const auto corpus = validation_corpus();
    for (std::size_t ci = 0; ci < corpus.size(); ++ci) {
        const QubitInit& q = corpus[ci];
        ValidateRow row;
        row.name = "state" + std::to_string(ci);

        HybridState s = new_product_state({q});
        auto [sp, pid] = allocate_probe(s, cplx{alpha, 0.0});
        s = conditional_kerr(sp, 0, PolLabel::H, pid, theta);

        const FockJoint joint = oracle_kerr(detail_validate::qubit_signal(q), probe, theta);

        const std::vector<double> pe = detail_validate::engine_density_on(s, pid, grid);
        const std::vector<double> po = oracle_density(joint, grid);
        for (std::size_t g = 0; g < pe.size(); ++g)
            row.densityLinf = std::max(row.densityLinf, std::abs(pe[g] - po[g]));

        for (double x : xs) {
            const HybridState post = project(s, pid, x);
            cplx ampH{}, ampV{};
            for (const auto& b : post.branches())
                (b.label[0] == PolLabel::H ? ampH : ampV) = b.weight;
            const FockPosterior fp = oracle_project(joint, x);
            const double f = fock_fidelity({ampV, ampH}, fp.amps);
            row.minPosteriorFidelity = std::min(row.minPosteriorFidelity, f);
        }

        rep.maxDensityLinf = std::max(rep.maxDensityLinf, row.densityLinf);
        rep.minPosteriorFidelity = std::min(rep.minPosteriorFidelity, row.minPosteriorFidelity);
        rep.rows.push_back(std::move(row));
    }

    // Parity-style two-signal check: +theta and -theta kicks on one probe.
    {
        ValidateRow row;
        row.name = "parity-uniform";
        HybridState s = new_product_state({QubitInit::plus(), QubitInit::plus()});
        auto [sp, pid] = allocate_probe(s, cplx{alpha, 0.0});
        s = conditional_kerr(sp, 0, PolLabel::H, pid, theta);
        s = conditional_kerr(s, 1, PolLabel::H, pid, -theta);

        const QubitInit plus = QubitInit::plus();
        FockJoint joint = oracle_join(
            {detail_validate::qubit_signal(plus), detail_validate::qubit_signal(plus)}, probe);
        joint = oracle_kerr(std::move(joint), 0, theta);
        joint = oracle_kerr(std::move(joint), 1, -theta);

        const std::vector<double> pe = detail_validate::engine_density_on(s, pid, grid);
        const std::vector<double> po = oracle_density(joint, grid);
        for (std::size_t g = 0; g < pe.size(); ++g)
            row.densityLinf = std::max(row.densityLinf, std::abs(pe[g] - po[g]));

        for (double x : xs) {
            const HybridState post = project(s, pid, x);
            // Oracle layout (n0, n1) maps to labels via n=1 <-> H on each qubit.
            std::array<cplx, 4> eng{}; // index n0*2 + n1
            for (const auto& b : post.branches()) {
                const std::size_t n0 = b.label[0] == PolLabel::H ? 1 : 0;
                const std::size_t n1 = b.label[1] == PolLabel::H ? 1 : 0;
                eng[n0 * 2 + n1] = b.weight;
            }
            const FockPosterior fp = oracle_project(joint, x);
            const double f = fock_fidelity({eng[0], eng[1], eng[2], eng[3]}, fp.amps);
            row.minPosteriorFidelity = std::min(row.minPosteriorFidelity, f);
        }

        rep.maxDensityLinf = std::max(rep.maxDensityLinf, row.densityLinf);
        rep.minPosteriorFidelity = std::min(rep.minPosteriorFidelity, row.minPosteriorFidelity);
        rep.rows.push_back(std::move(row));
    }

    rep.pass = rep.maxDensityLinf <= 1e-8 && rep.minPosteriorFidelity >= 1.0 - 1e-10;
    return rep;
}

} // namespace kerrsim::experiments
