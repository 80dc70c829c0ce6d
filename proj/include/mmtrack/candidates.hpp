#pragma once

// Discretisation of the predicted measurement distribution into k candidate
// measurements.

#include <algorithm>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "mmtrack/estimation.hpp"

namespace mmtrack {

enum class CandidateMode { deterministic_quantile, seeded_gaussian };

constexpr std::string_view to_string(CandidateMode m) {
    return m == CandidateMode::deterministic_quantile ? "deterministic_quantile" : "seeded_gaussian";
}

/// Candidates are never placed further than this many standard deviations out.
inline constexpr double kCandidateClipSigma = 3.0;

struct CandidateSet {
    std::vector<Vec2> points;
    CandidateMode mode = CandidateMode::deterministic_quantile;

    [[nodiscard]] std::size_t size() const { return points.size(); }
};

/// splitmix64 finaliser.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Seed for the candidate draw at a tree node identified by its child-index path.
inline std::uint64_t derive_seed(std::uint64_t base, std::span<const std::uint32_t> path) {
    std::uint64_t h = mix64(base);
    for (auto step : path) h = mix64(h ^ (static_cast<std::uint64_t>(step) + 1));
    return h;
}

/// Standard-normal quantiles at the probability midpoints (2i-1)/(2k).
inline std::vector<double> quantile_midpoints(int k) {
    const boost::math::normal_distribution<double> unit;
    std::vector<double> out(static_cast<std::size_t>(k), 0.0);
    // lower half from the distribution, upper half mirrored so the set is exactly symmetric
    for (int i = 1; 2 * i - 1 < k; ++i) {
        const double p = (2.0 * i - 1.0) / (2.0 * k);
        const double z = std::clamp(boost::math::quantile(unit, p), -kCandidateClipSigma, kCandidateClipSigma);
        out[static_cast<std::size_t>(i - 1)] = z;
        out[static_cast<std::size_t>(k - i)] = -z;
    }
    return out;
}

/// Candidate measurements for the next observation from `robot`.
///
/// The predicted measurement is H*mean with innovation covariance
/// S = H cov H' + Sw. In quantile mode candidate i sits at z-score q_i along one
/// principal axis of S; i and k+1-i share an axis so the set is point
/// symmetric about the mean, and consecutive pairs alternate between the major
/// and minor axis. In seeded mode the k points are draws from N(H*mean, S).
inline CandidateSet generate_candidates(const TargetEstimate& est, const SensorModel& sensor, Vec2 robot, int k,
                                        CandidateMode mode, std::uint64_t seed) {
    if (k < 1) throw Error(ErrorCode::invalid_candidate_count, "candidate count must be >= 1");
    const Mat2 obs = sensor.observation(robot);
    const SymMat2 innov = innovation_covariance(est.cov, obs, noise_variance(robot, est.mean, sensor));
    if (!(std::abs(innov.det()) >= kSingularInnovationDet)) {
        throw Error(ErrorCode::singular_innovation, "innovation covariance is singular");
    }
    const Vec2 centre = obs * est.mean;

    CandidateSet out;
    out.mode = mode;
    out.points.reserve(static_cast<std::size_t>(k));
    if (k == 1) {
        out.points.push_back(centre);
        return out;
    }

    if (mode == CandidateMode::deterministic_quantile) {
        const SymEigen eig = innov.eigen();
        const double sigma_major = std::sqrt(std::max(eig.major, 0.0));
        const double sigma_minor = std::sqrt(std::max(eig.minor, 0.0));
        const auto q = quantile_midpoints(k);
        for (int i = 1; i <= k; ++i) {
            const int rank = std::min(i, k + 1 - i);
            const bool major = (rank - 1) % 2 == 0;
            const Vec2 axis = major ? eig.major_axis : eig.minor_axis;
            const double sigma = major ? sigma_major : sigma_minor;
            out.points.push_back(centre + (q[static_cast<std::size_t>(i - 1)] * sigma) * axis);
        }
        return out;
    }

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> unit(0.0, 1.0);
    const Mat2 chol = cholesky(innov);
    for (int i = 0; i < k; ++i) {
        const double u = unit(rng);
        const double v = unit(rng);
        out.points.push_back(centre + chol * Vec2{u, v});
    }
    return out;
}

}  // namespace mmtrack
