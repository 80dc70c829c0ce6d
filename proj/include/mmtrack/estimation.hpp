#pragma once

// Robot/target motion, distance-dependent sensor noise and the Kalman
// covariance (Riccati) and mean recursions.
//
// The estimate carried around is the one-step-ahead prior at measurement
// time: a measurement z taken at the current robot position corrects it, and
// the target dynamics then propagate it to the next step. With that
// convention the covariance recursion is exactly
//
//   rho(S) = C S C' - C S H' (H S H' + Sw)^-1 H S C' + Sv
//
// and the mean recursion is m' = C (m + K (z - H m)), K = S H' (H S H' + Sw)^-1.

#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mmtrack/error.hpp"
#include "mmtrack/linalg.hpp"

namespace mmtrack {

/// Determinant below which the innovation matrix is treated as singular.
inline constexpr double kSingularInnovationDet = 1e-12;

struct MotionModel {
    double step_size = 1.0;
    std::vector<Vec2> controls;

    /// The four axis moves {+e,0}, {-e,0}, {0,+e}, {0,-e}.
    static MotionModel axis_moves(double e) {
        return {e, {{e, 0.0}, {-e, 0.0}, {0.0, e}, {0.0, -e}}};
    }

    [[nodiscard]] std::size_t size() const { return controls.size(); }

    [[nodiscard]] bool contains(Vec2 u) const {
        for (const auto& c : controls) {
            if (c == u) return true;
        }
        return false;
    }
};

struct TargetModel {
    Mat2 dynamics = Mat2::identity();
    SymMat2 process_noise = SymMat2::zero();
};

struct SensorModel {
    Mat2 obs_matrix = Mat2::identity();
    double base_var = 1.0;   ///< delta_1^2
    double slope_var = 1.0;  ///< delta_2^2
    double range = 10.0;     ///< distance beyond which the noise saturates
    double ceiling = 5.0;    ///< saturated value of the distance term

    /// Optional position-dependent observation matrix H(X_r). Unset means
    /// obs_matrix is used everywhere.
    std::function<Mat2(Vec2)> obs_at;

    [[nodiscard]] Mat2 observation(Vec2 robot) const { return obs_at ? obs_at(robot) : obs_matrix; }

    /// Largest variance the sensor can report: delta_1^2 + delta_2^2 * ceiling.
    [[nodiscard]] double max_variance() const { return base_var + slope_var * ceiling; }
};

struct TargetEstimate {
    Vec2 mean;
    SymMat2 cov;
};

/// X_r(t+1) = X_r(t) + u, with u required to be one of the model's controls.
inline Vec2 apply_control(Vec2 state, Vec2 u, const MotionModel& motion) {
    if (!motion.contains(u)) {
        throw Error(ErrorCode::control_not_in_set, "control is not a member of the control set");
    }
    return state + u;
}

/// Scaled, saturating distance term d(X_r, X_o).
inline double distance_term(Vec2 robot, Vec2 target, const SensorModel& sensor) {
    const double dist = distance(robot, target);
    if (dist > sensor.range) return sensor.ceiling;
    return sensor.ceiling * dist / sensor.range;
}

/// Measurement variance delta_1^2 + delta_2^2 * d(robot, target).
inline double noise_variance(Vec2 robot, Vec2 target, const SensorModel& sensor) {
    return sensor.base_var + sensor.slope_var * distance_term(robot, target, sensor);
}

inline SymMat2 innovation_covariance(const SymMat2& cov, const Mat2& obs, double noise) {
    return congruence(obs, cov) + SymMat2::scaled_identity(noise);
}

/// K = S H' (H S H' + noise I)^-1.
inline Mat2 kalman_gain(const SymMat2& cov, const Mat2& obs, double noise) {
    const SymMat2 innov = innovation_covariance(cov, obs, noise);
    if (!(std::abs(innov.det()) >= kSingularInnovationDet)) {
        throw Error(ErrorCode::singular_innovation,
                    "innovation determinant " + std::to_string(innov.det()) + " below threshold");
    }
    return (cov * obs.transpose()) * innov.inverse();
}

/// One Riccati step with an explicit scalar noise level (Sw = noise * I).
///
/// The measurement correction is evaluated in Joseph form, which is
/// algebraically identical to S - S H'(H S H' + Sw)^-1 H S but keeps the result
/// PSD under rounding.
inline SymMat2 riccati_map(const SymMat2& cov, const Mat2& dynamics, const Mat2& obs,
                           const SymMat2& process_noise, double noise) {
    const Mat2 gain = kalman_gain(cov, obs, noise);
    const Mat2 residual = Mat2::identity() - gain * obs;
    const SymMat2 posterior = congruence(residual, cov) + noise * gram(gain);
    const SymMat2 out = congruence(dynamics, posterior) + process_noise;
    if (!out.finite()) throw Error(ErrorCode::non_finite_value, "Riccati step produced a non-finite covariance");
    return out;
}

/// Riccati step with Sw built from the estimated target position.
inline SymMat2 riccati_step(const SymMat2& cov, const TargetModel& target, const SensorModel& sensor,
                            Vec2 robot, Vec2 est_target) {
    return riccati_map(cov, target.dynamics, sensor.observation(robot), target.process_noise,
                       noise_variance(robot, est_target, sensor));
}

/// Filter a measurement z taken from `robot` and propagate to the next step.
inline TargetEstimate kf_mean_update(const TargetEstimate& est, Vec2 z, const TargetModel& target,
                                     const SensorModel& sensor, Vec2 robot) {
    const Mat2 obs = sensor.observation(robot);
    const double noise = noise_variance(robot, est.mean, sensor);
    const Mat2 gain = kalman_gain(est.cov, obs, noise);
    const Vec2 corrected = est.mean + gain * (z - obs * est.mean);
    TargetEstimate out{target.dynamics * corrected, riccati_step(est.cov, target, sensor, robot, est.mean)};
    if (!out.mean.finite()) throw Error(ErrorCode::non_finite_value, "mean update produced a non-finite value");
    return out;
}

/// lhs + slack*I - rhs is PSD within kPsdTolerance.
inline bool psd_dominates(const SymMat2& lhs, const SymMat2& rhs, double slack) {
    return (lhs + SymMat2::scaled_identity(slack) - rhs).is_psd();
}

/// Checks rho(cov_a) >= rho(cov_b) when each side uses its own scalar noise
/// level (s_a, s_b). Inputs must satisfy cov_a >= cov_b,
/// H cov_a H' + s_a I >= H cov_b H' + s_b I and s_a, s_b in [0, max_variance].
inline bool check_riccati_monotone(const SymMat2& cov_a, const SymMat2& cov_b, double s_a, double s_b,
                                   const TargetModel& model, const SensorModel& sensor) {
    const double cap = sensor.max_variance();
    const Mat2& obs = sensor.obs_matrix;
    if (s_a < 0.0 || s_b < 0.0 || s_a > cap || s_b > cap) {
        throw Error(ErrorCode::precondition_violated, "noise levels outside [0, max_variance]");
    }
    if (!psd_dominates(cov_a, cov_b, 0.0)) {
        throw Error(ErrorCode::precondition_violated, "cov_a does not dominate cov_b");
    }
    if (!psd_dominates(innovation_covariance(cov_a, obs, s_a), innovation_covariance(cov_b, obs, s_b), 0.0)) {
        throw Error(ErrorCode::precondition_violated, "innovation of a does not dominate innovation of b");
    }
    const SymMat2 next_a = riccati_map(cov_a, model.dynamics, obs, model.process_noise, s_a);
    const SymMat2 next_b = riccati_map(cov_b, model.dynamics, obs, model.process_noise, s_b);
    return psd_dominates(next_a, next_b, 0.0);
}

}  // namespace mmtrack
