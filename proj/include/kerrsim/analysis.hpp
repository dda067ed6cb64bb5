#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <mutex>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "kerrsim/errors.hpp"
#include "kerrsim/hybrid_state.hpp"
#include "kerrsim/rng.hpp"

namespace kerrsim {

inline constexpr double kSqrt2 = 1.4142135623730950488016887242097;

// Closed-form error/resource quantities for a probe of amplitude alpha and a
// Kerr angle theta. pErrDetector is the photon-presence misidentification at
// SNR 2 alpha sin(theta); pErrParity the herald error at peak separation xd.
struct ErrorModel {
    double alpha = 0.0;
    double theta = 0.0;
    double snr = 0.0;
    double x0 = 0.0;
    double xd = 0.0;
    double pErrDetector = 0.0;
    double pErrParity = 0.0;
};

inline ErrorModel error_model(double alpha, double theta) {
    if (!(alpha > 0.0)) throw invalid_input("error_model: alpha must be positive");
    if (!(theta > 0.0) || theta > 1.5707963267948966192313216916398)
        throw invalid_input("error_model: theta must lie in (0, pi/2]");
    ErrorModel m;
    m.alpha = alpha;
    m.theta = theta;
    m.snr = 2.0 * alpha * std::sin(theta);
    m.x0 = alpha * (1.0 + std::cos(theta));
    m.xd = 2.0 * alpha * (1.0 - std::cos(theta));
    m.pErrDetector = 0.5 * std::erfc(alpha * std::sin(theta) / kSqrt2);
    m.pErrParity = 0.5 * std::erfc(m.xd / (2.0 * kSqrt2));
    return m;
}

// Smallest alpha reaching the requested peak separation, plus the mean probe
// photon number alpha^2 it costs. 1 - cos(theta) = 2 sin^2(theta/2) keeps the
// small-angle regime accurate.
struct ResourceRequirement {
    double theta = 0.0;
    double targetXd = 0.0;
    double alpha = 0.0;
    double photonNumber = 0.0;
};

inline ResourceRequirement required_alpha(double theta, double targetXd) {
    if (!(theta > 0.0) || theta > 1.5707963267948966192313216916398)
        throw invalid_input("required_alpha: theta must lie in (0, pi/2]");
    if (!(targetXd > 0.0)) throw invalid_input("required_alpha: targetXd must be positive");
    ResourceRequirement r;
    r.theta = theta;
    r.targetXd = targetXd;
    const double s = std::sin(0.5 * theta);
    r.alpha = targetXd / (4.0 * s * s);
    r.photonNumber = r.alpha * r.alpha;
    return r;
}

struct FidelityValue {
    double value = 0.0;
    std::string reference;
};

// |<reference|state>|^2 via the coherent overlap formula. Register sizes must
// match and live probe sets must be identical (typically both empty).
inline FidelityValue fidelity(const HybridState& state, const HybridState& reference,
                              std::string referenceDescription = {}) {
    const cplx ov = state_overlap(reference, state);
    FidelityValue f;
    f.value = std::clamp(std::norm(ov), 0.0, 1.0);
    f.reference = std::move(referenceDescription);
    return f;
}

struct WilsonInterval {
    double lo = 0.0;
    double hi = 1.0;
};

// 95% Wilson score interval; well-behaved at rare-event rates.
inline WilsonInterval wilson95(std::uint64_t successes, std::uint64_t trials) {
    if (trials == 0) throw invalid_input("wilson95: trials must be >= 1");
    constexpr double z = 1.959963984540054;
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(successes) / n;
    const double z2n = z * z / n;
    const double denom = 1.0 + z2n;
    const double center = (p + 0.5 * z2n) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + 0.25 * z2n / n) / denom;
    return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

struct MonteCarloReport {
    std::uint64_t trials = 0;
    std::uint64_t successes = 0;
    double pointEstimate = 0.0;
    WilsonInterval wilson;
    std::uint64_t seed = 0;
    double wallTimeSeconds = 0.0;
};

inline constexpr std::uint64_t kTrialBlock = 1024;

namespace detail {

// Runs trials in fixed blocks of kTrialBlock indices. Every trial owns the
// substream derived from (masterSeed, trialIndex) and writes only block-local
// results, so scheduling across any number of threads cannot change them;
// callers reduce the per-block buffers in block order. The first failing
// trial (smallest index seen) aborts the run.
template <typename PerTrial>
void run_blocks(std::uint64_t trials, std::uint64_t masterSeed, unsigned jobs, PerTrial&& perTrial) {
    if (trials < 1) throw invalid_input("trials must be >= 1");
    const std::uint64_t nBlocks = (trials + kTrialBlock - 1) / kTrialBlock;
    std::atomic<std::uint64_t> cursor{0};
    std::atomic<bool> failed{false};
    std::mutex failMx;
    std::uint64_t failIndex = std::numeric_limits<std::uint64_t>::max();
    std::string failWhat;

    auto worker = [&]() {
        while (!failed.load(std::memory_order_relaxed)) {
            const std::uint64_t blk = cursor.fetch_add(1, std::memory_order_relaxed);
            if (blk >= nBlocks) return;
            const std::uint64_t lo = blk * kTrialBlock;
            const std::uint64_t hi = std::min(trials, lo + kTrialBlock);
            for (std::uint64_t i = lo; i < hi; ++i) {
                RngStream rng = RngStream::substream(masterSeed, i);
                try {
                    perTrial(i, blk, rng);
                } catch (const std::exception& e) {
                    std::lock_guard<std::mutex> g(failMx);
                    if (i < failIndex) {
                        failIndex = i;
                        failWhat = e.what();
                    }
                    failed.store(true, std::memory_order_relaxed);
                    return;
                }
            }
        }
    };

    const unsigned nThreads =
        std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::min<std::uint64_t>(nBlocks, 256))));
    if (nThreads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(nThreads);
        for (unsigned t = 0; t < nThreads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failed.load()) throw trial_failure(failIndex, failWhat);
}

inline double elapsed_seconds(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

} // namespace detail

// Estimate P(success) of a boolean experiment. Bit-exact for a given
// (experiment, trials, masterSeed) regardless of the parallelism degree.
template <typename Experiment> // bool(RngStream&)
MonteCarloReport run_trials(Experiment&& experiment, std::uint64_t trials, std::uint64_t masterSeed,
                            unsigned jobs = 1) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::uint64_t nBlocks = (trials + kTrialBlock - 1) / kTrialBlock;
    std::vector<std::uint64_t> blockSucc(nBlocks, 0);
    detail::run_blocks(trials, masterSeed, jobs, [&](std::uint64_t, std::uint64_t blk, RngStream& rng) {
        if (experiment(rng)) ++blockSucc[blk];
    });
    MonteCarloReport r;
    r.trials = trials;
    for (std::uint64_t s : blockSucc) r.successes += s;
    r.pointEstimate = static_cast<double>(r.successes) / static_cast<double>(trials);
    r.wilson = wilson95(r.successes, trials);
    r.seed = masterSeed;
    r.wallTimeSeconds = detail::elapsed_seconds(t0);
    return r;
}

struct TallyReport {
    std::uint64_t trials = 0;
    std::vector<std::uint64_t> counts;
    std::uint64_t seed = 0;
    double wallTimeSeconds = 0.0;
};

// Count categorical outcomes (confusion matrices, herald statistics).
template <typename Experiment> // std::size_t(RngStream&), < categories
TallyReport run_tally(Experiment&& experiment, std::uint64_t trials, std::size_t categories,
                      std::uint64_t masterSeed, unsigned jobs = 1) {
    if (categories == 0) throw invalid_input("run_tally: need at least one category");
    const auto t0 = std::chrono::steady_clock::now();
    const std::uint64_t nBlocks = (trials + kTrialBlock - 1) / kTrialBlock;
    std::vector<std::uint64_t> blockCounts(nBlocks * categories, 0);
    detail::run_blocks(trials, masterSeed, jobs, [&](std::uint64_t, std::uint64_t blk, RngStream& rng) {
        const std::size_t c = experiment(rng);
        if (c >= categories) throw invalid_input("run_tally: category out of range");
        ++blockCounts[blk * categories + c];
    });
    TallyReport r;
    r.trials = trials;
    r.counts.assign(categories, 0);
    for (std::uint64_t blk = 0; blk < nBlocks; ++blk)
        for (std::size_t c = 0; c < categories; ++c) r.counts[c] += blockCounts[blk * categories + c];
    r.seed = masterSeed;
    r.wallTimeSeconds = detail::elapsed_seconds(t0);
    return r;
}

struct MeanReport {
    std::uint64_t trials = 0;
    double mean = 0.0;
    double min = 0.0;
    double max = 0.0;
    std::uint64_t seed = 0;
    double wallTimeSeconds = 0.0;
};

// Average a real-valued statistic. Block partial sums are reduced in block
// order, so the floating-point result is independent of the thread count.
template <typename Experiment> // double(RngStream&)
MeanReport run_mean(Experiment&& experiment, std::uint64_t trials, std::uint64_t masterSeed,
                    unsigned jobs = 1) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::uint64_t nBlocks = (trials + kTrialBlock - 1) / kTrialBlock;
    std::vector<double> blockSum(nBlocks, 0.0);
    std::vector<double> blockMin(nBlocks, std::numeric_limits<double>::infinity());
    std::vector<double> blockMax(nBlocks, -std::numeric_limits<double>::infinity());
    detail::run_blocks(trials, masterSeed, jobs, [&](std::uint64_t, std::uint64_t blk, RngStream& rng) {
        const double v = experiment(rng);
        blockSum[blk] += v;
        blockMin[blk] = std::min(blockMin[blk], v);
        blockMax[blk] = std::max(blockMax[blk], v);
    });
    MeanReport r;
    r.trials = trials;
    double sum = 0.0;
    for (std::uint64_t blk = 0; blk < nBlocks; ++blk) sum += blockSum[blk];
    r.min = *std::min_element(blockMin.begin(), blockMin.end());
    r.max = *std::max_element(blockMax.begin(), blockMax.end());
    r.mean = sum / static_cast<double>(trials);
    r.seed = masterSeed;
    r.wallTimeSeconds = detail::elapsed_seconds(t0);
    return r;
}

} // namespace kerrsim
