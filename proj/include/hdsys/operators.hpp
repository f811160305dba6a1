#pragma once

#include <functional>
#include <optional>
#include <span>
#include <utility>

#include "hdsys/core.hpp"

namespace hdsys {

/// Time-dependent scalar coefficient, e.g. the a0(t) of a growth envelope.
struct TimeFn {
    std::function<double(double)> fn;

    TimeFn() : fn([](double) { return 0.0; }) {}
    TimeFn(double constant) : fn([constant](double) { return constant; }) {}
    TimeFn(std::function<double(double)> f) : fn(std::move(f)) {}

    double operator()(double t) const { return fn(t); }
};

/// Nonlinear family A(t, theta, v) -> V* with its constants ledger.
struct OperatorFamilyA {
    std::function<Vec(double t, const Vec& theta, const Vec& v)> eval;
    double m = 0.0;    // m_A > 0: strong monotonicity in v (V-norm)
    double mbar = 0.0; // coupling coefficient against ||theta_1 - theta_2||
    TimeFn a0;
    double a1 = 0.0;
    double a2 = 0.0;
};

/// Clarke potential J(t, theta, z, v); accessed through a fixed
/// single-valued selection of its generalized gradient.
struct ClarkePotentialJ {
    std::function<Vec(double t, const Vec& theta, const Vec& z, const Vec& v)> subgrad;
    /// Optional upper bound for the generalized directional derivative at
    /// (v; dir). A-posteriori checks fall back to maximizing dual pairings of
    /// the selection over perturbed base points when this is absent.
    std::function<double(double t, const Vec& theta, const Vec& z, const Vec& v, const Vec& dir)>
        dirderiv_upper;
    TimeFn c0;
    double c1 = 0.0, c2 = 0.0, c3 = 0.0;
    double m = 0.0;    // m_J >= 0: relaxed monotonicity defect
    double mbar = 0.0; // coupling against ||dtheta|| + ||dz||
};

/// Convex potential phi(t, theta, y, v); algorithms only touch its prox
/// (the Euclidean resolvent of rho * subdifferential). Value and subgradient
/// selections are optional extras used by a-posteriori checks.
struct ConvexPotentialPhi {
    std::function<Vec(double t, const Vec& theta, const Vec& y, double rho, const Vec& x)> prox;
    std::function<Vec(double t, const Vec& theta, const Vec& y, const Vec& v)> subgrad; // may be null
    std::function<double(double t, const Vec& theta, const Vec& y, const Vec& v)> value; // may be null
    TimeFn c0;
    double c1 = 0.0, c2 = 0.0, c3 = 0.0;
    double m = 0.0; // m_phi

    bool present() const { return static_cast<bool>(prox); }

    /// Identity prox: phi == 0.
    static ConvexPotentialPhi none() {
        ConvexPotentialPhi p;
        p.prox = nullptr;
        return p;
    }
};

/// Nonlinear family B(t, w, wbar, theta) -> E* with its constants ledger.
struct OperatorFamilyB {
    std::function<Vec(double t, const Vec& w, const Vec& wbar, const Vec& theta)> eval;
    double m = 0.0;
    double mbar = 0.0;
    TimeFn b0;
    double b1 = 0.0, b2 = 0.0, b3 = 0.0;
};

/// Clarke potential g(t, w, theta) with selection access.
struct ClarkePotentialG {
    std::function<Vec(double t, const Vec& w, const Vec& theta)> subgrad;
    TimeFn c0;
    double c1 = 0.0, c2 = 0.0;
    double m = 0.0;
    double mbar = 0.0;
};

/// Affine growth envelope a0(t) + a1*n1 + a2*n2 + ... shared by the H(.)(c/d)
/// growth hypotheses; used by probes and step-size selection.
double growth_bound(const TimeFn& a0, double t, std::span<const double> slopes,
                    std::span<const double> norms);

/// History-dependent (Volterra-type) operator mapping a V-trajectory to a
/// target-space vector per node via left-rectangle quadrature over nodes
/// 0..k-1. Output at node k never reads values[k] (causality).
class HistoryOperator {
public:
    using KernelFn = std::function<Mat(double t, double s)>;
    using MapFn = std::function<Vec(const Vec&)>;
    using CustomFn = std::function<Vec(std::span<const Vec> prefix, const TimeGrid& grid, int k)>;

    /// Placeholder without a target space; must be replaced before use.
    HistoryOperator() : kind_(Kind::zero), lipschitz_(0.0) {}

    /// (Rv)(t_k) = offset (identically).
    static HistoryOperator zero(SpacePtr target);

    /// (Rv)(t_k) = sum_{j<k} dt * kernel(t_k, t_j) * v_j + offset.
    static HistoryOperator volterra(SpacePtr target, KernelFn kernel, double lipschitz,
                                    Vec offset = Vec());

    /// (Rv)(t_k) = sum_{j<k} dt * map(v_j) + offset.
    static HistoryOperator integral_of_map(SpacePtr target, MapFn map, double lipschitz,
                                           Vec offset = Vec());

    /// (Rv)(t_k) = post( sum_{j<k} dt * v_j ) + offset.
    static HistoryOperator accumulate_then_map(SpacePtr target, MapFn post, double lipschitz,
                                               Vec offset = Vec());

    /// Fully custom causal rule; eval receives values[0..k-1].
    static HistoryOperator custom(SpacePtr target, CustomFn eval, double lipschitz,
                                  Vec offset = Vec());

    const SpacePtr& target_space() const { return target_; }
    double lipschitz_const() const { return lipschitz_; }
    bool is_zero() const { return kind_ == Kind::zero; }

    /// history_eval at node k (0 <= k <= N).
    Vec eval(const Trajectory& traj, int k) const;

    /// Nodewise evaluation over the whole grid.
    Trajectory eval_all(const Trajectory& traj) const;

private:
    enum class Kind { zero, volterra, integral_of_map, accumulate_then_map, custom };

    HistoryOperator(Kind kind, SpacePtr target, double lipschitz, Vec offset)
        : kind_(kind), target_(std::move(target)), lipschitz_(lipschitz),
          offset_(std::move(offset)) {
        require_arg(lipschitz_ >= 0.0,
                    "HistoryOperator: Lipschitz constant must be nonnegative");
        if (offset_.size() == 0) offset_ = Vec::Zero(target_->dim());
        require_arg(offset_.size() == target_->dim(), "HistoryOperator: offset dimension");
    }

    Kind kind_;
    SpacePtr target_;
    double lipschitz_;
    Vec offset_;
    KernelFn kernel_;
    MapFn map_;
    CustomFn custom_;
};

/// history_eval as a free operation (wraps HistoryOperator::eval).
inline Vec history_eval(const HistoryOperator& op, const Trajectory& traj, int k) {
    return op.eval(traj, k);
}

} // namespace hdsys
