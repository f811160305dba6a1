#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <vector>

#include "hdsys/errors.hpp"

namespace hdsys {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Uniform time grid on [0, T] with nodes t_k = k*dt, k = 0..N.
class TimeGrid {
public:
    TimeGrid(double horizon, int steps) : horizon_(horizon), steps_(steps) {
        require_arg(horizon > 0.0, "TimeGrid: horizon must be positive");
        require_arg(steps >= 1, "TimeGrid: need at least one step");
    }

    double horizon() const { return horizon_; }
    int steps() const { return steps_; }
    double dt() const { return horizon_ / steps_; }
    double node(int k) const { return k * dt(); }

    bool operator==(const TimeGrid& o) const {
        return horizon_ == o.horizon_ && steps_ == o.steps_;
    }

private:
    double horizon_;
    int steps_;
};

/// Finite-dimensional stand-in for one leg of an evolution triple.
///
/// gram_strong defines the V-type norm, gram_weak the H-type (or X-type)
/// norm. Duality pairings are raw coefficient dot products; the Grams only
/// enter through norms and through the weak-Gram mass action of steppers.
class DiscreteSpace {
public:
    DiscreteSpace(int dim, Mat gram_strong, Mat gram_weak, std::string label)
        : dim_(dim),
          gram_strong_(std::move(gram_strong)),
          gram_weak_(std::move(gram_weak)),
          label_(std::move(label)) {
        require_arg(dim >= 1, "DiscreteSpace: dim must be positive");
        require_arg(gram_strong_.rows() == dim && gram_strong_.cols() == dim,
                    "DiscreteSpace: gram_strong must be dim x dim");
        require_arg(gram_weak_.rows() == dim && gram_weak_.cols() == dim,
                    "DiscreteSpace: gram_weak must be dim x dim");
        require_arg(gram_strong_.isApprox(gram_strong_.transpose(), 1e-12),
                    "DiscreteSpace: gram_strong must be symmetric");
        require_arg(gram_weak_.isApprox(gram_weak_.transpose(), 1e-12),
                    "DiscreteSpace: gram_weak must be symmetric");
        llt_.compute(gram_strong_);
        require_arg(llt_.info() == Eigen::Success,
                    "DiscreteSpace: gram_strong must be positive definite");
        weak_scale_ = (dim_ == 0) ? 0.0 : gram_weak_.operatorNorm();
    }

    /// dim-dimensional space with identity Grams.
    static std::shared_ptr<const DiscreteSpace> euclidean(int dim, std::string label) {
        return std::make_shared<DiscreteSpace>(dim, Mat::Identity(dim, dim),
                                               Mat::Identity(dim, dim), std::move(label));
    }

    int dim() const { return dim_; }
    const std::string& label() const { return label_; }
    const Mat& gram_strong() const { return gram_strong_; }
    const Mat& gram_weak() const { return gram_weak_; }

    double norm_strong(const Vec& v) const {
        require_arg(v.size() == dim_, "norm_strong: dimension mismatch");
        return std::sqrt(std::max(0.0, v.dot(gram_strong_ * v)));
    }

    double norm_weak(const Vec& v) const {
        require_arg(v.size() == dim_, "norm_weak: dimension mismatch");
        return std::sqrt(std::max(0.0, v.dot(gram_weak_ * v)));
    }

    /// Mass action of the weak Gram (the H-identification of a rate vector).
    Vec mass_apply(const Vec& v) const {
        require_arg(v.size() == dim_, "mass_apply: dimension mismatch");
        return gram_weak_ * v;
    }

    /// Solve gram_strong * x = rhs (Riesz map V* -> V).
    Vec solve_strong(const Vec& rhs) const {
        require_arg(rhs.size() == dim_, "solve_strong: dimension mismatch");
        return llt_.solve(rhs);
    }

    /// Dual norm sqrt(f^T G_s^{-1} f): the V*-norm of a dual coefficient vector.
    double norm_dual(const Vec& f) const {
        require_arg(f.size() == dim_, "norm_dual: dimension mismatch");
        return std::sqrt(std::max(0.0, f.dot(llt_.solve(f))));
    }

    /// The dual space as a DiscreteSpace: strong Gram = inverse of this
    /// space's strong Gram, so trajectories of dual vectors reuse the same
    /// norm machinery.
    std::shared_ptr<const DiscreteSpace> dual(std::string label) const {
        Mat inv = llt_.solve(Mat::Identity(dim_, dim_));
        inv = 0.5 * (inv + inv.transpose());
        return std::make_shared<DiscreteSpace>(dim_, inv, Mat::Identity(dim_, dim_),
                                               std::move(label));
    }

    /// Largest eigenvalue of the weak Gram; scales the 1/dt term when
    /// choosing relaxation steps.
    double weak_scale() const { return weak_scale_; }

private:
    int dim_;
    Mat gram_strong_;
    Mat gram_weak_;
    std::string label_;
    Eigen::LLT<Mat> llt_;
    double weak_scale_;
};

using SpacePtr = std::shared_ptr<const DiscreteSpace>;

/// Duality pairing between a dual coefficient vector and a primal one.
inline double dual_pair(const Vec& f, const Vec& v) {
    require_arg(f.size() == v.size(), "dual_pair: dimension mismatch");
    return f.dot(v);
}

/// Time-grid-indexed coefficient vectors; the discrete image of L^2(0,T;V).
struct Trajectory {
    SpacePtr space;
    TimeGrid grid{1.0, 1};
    std::vector<Vec> values; // N+1 vectors of length space->dim()

    /// Empty placeholder; solvers validate that a real trajectory was set.
    Trajectory() = default;

    Trajectory(SpacePtr s, TimeGrid g)
        : space(std::move(s)), grid(g),
          values(static_cast<size_t>(g.steps()) + 1, Vec::Zero(space->dim())) {}

    Trajectory(SpacePtr s, TimeGrid g, std::vector<Vec> vals)
        : space(std::move(s)), grid(g), values(std::move(vals)) {
        require_arg(static_cast<int>(values.size()) == grid.steps() + 1,
                    "Trajectory: need N+1 value vectors");
        for (const Vec& v : values) {
            require_arg(v.size() == space->dim(), "Trajectory: value dimension mismatch");
            require_arg(v.allFinite(), "Trajectory: values must be finite");
        }
    }

    int nodes() const { return grid.steps() + 1; }

    static Trajectory zero(SpacePtr s, TimeGrid g) { return Trajectory(std::move(s), g); }

    /// Constant-in-time trajectory.
    static Trajectory constant(SpacePtr s, TimeGrid g, const Vec& v) {
        Trajectory traj(std::move(s), g);
        for (Vec& x : traj.values) x = v;
        return traj;
    }

    /// Sample a time-dependent vector field at the grid nodes.
    template <class Fn>
    static Trajectory sample(SpacePtr s, TimeGrid g, Fn&& fn) {
        Trajectory traj(std::move(s), g);
        for (int k = 0; k <= g.steps(); ++k) traj.values[k] = fn(g.node(k));
        return traj;
    }

    Trajectory operator-(const Trajectory& other) const {
        require_arg(grid == other.grid && space->dim() == other.space->dim(),
                    "Trajectory: incompatible difference");
        Trajectory out(space, grid);
        for (size_t k = 0; k < values.size(); ++k) out.values[k] = values[k] - other.values[k];
        return out;
    }
};

/// Exponentially weighted discrete Bochner norm
///   sqrt( sum_{k<N} dt * exp(-weight*t_k) * ||values[k]||_strong^2 ).
/// weight = 0 is the plain discrete L^2(0,T;.) norm (left-rectangle rule).
double bochner_norm(const Trajectory& traj, double weight);

/// Plain discrete L^2(0,T;.) norm.
inline double l2_norm(const Trajectory& traj) { return bochner_norm(traj, 0.0); }

/// Relative discrete L^2 distance between two trajectories on a common grid.
double relative_l2_distance(const Trajectory& a, const Trajectory& b);

/// Trajectory CSV: header `t,c0,c1,...`, one row per node, 17 significant
/// digits (round-trip exact).
void write_trajectory_csv(const Trajectory& traj, const std::string& path);
Trajectory read_trajectory_csv(SpacePtr space, const std::string& path);

} // namespace hdsys
