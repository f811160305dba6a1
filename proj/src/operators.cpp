#include "hdsys/operators.hpp"

namespace hdsys {

double growth_bound(const TimeFn& a0, double t, std::span<const double> slopes,
                    std::span<const double> norms) {
    require_arg(slopes.size() == norms.size(), "growth_bound: slope/norm count mismatch");
    double acc = a0(t);
    for (size_t i = 0; i < slopes.size(); ++i) acc += slopes[i] * norms[i];
    return acc;
}

HistoryOperator HistoryOperator::zero(SpacePtr target) {
    return HistoryOperator(Kind::zero, std::move(target), 0.0, Vec());
}

HistoryOperator HistoryOperator::volterra(SpacePtr target, KernelFn kernel, double lipschitz,
                                          Vec offset) {
    HistoryOperator op(Kind::volterra, std::move(target), lipschitz, std::move(offset));
    op.kernel_ = std::move(kernel);
    return op;
}

HistoryOperator HistoryOperator::integral_of_map(SpacePtr target, MapFn map, double lipschitz,
                                                 Vec offset) {
    HistoryOperator op(Kind::integral_of_map, std::move(target), lipschitz, std::move(offset));
    op.map_ = std::move(map);
    return op;
}

HistoryOperator HistoryOperator::accumulate_then_map(SpacePtr target, MapFn post,
                                                     double lipschitz, Vec offset) {
    HistoryOperator op(Kind::accumulate_then_map, std::move(target), lipschitz,
                       std::move(offset));
    op.map_ = std::move(post);
    return op;
}

HistoryOperator HistoryOperator::custom(SpacePtr target, CustomFn eval, double lipschitz,
                                        Vec offset) {
    HistoryOperator op(Kind::custom, std::move(target), lipschitz, std::move(offset));
    op.custom_ = std::move(eval);
    return op;
}

Vec HistoryOperator::eval(const Trajectory& traj, int k) const {
    require_arg(static_cast<bool>(target_), "history_eval: operator has no target space");
    require_arg(k >= 0 && k <= traj.grid.steps(), "history_eval: node index out of range");
    const double dt = traj.grid.dt();
    switch (kind_) {
    case Kind::zero:
        return offset_;
    case Kind::volterra: {
        Vec out = offset_;
        const double tk = traj.grid.node(k);
        for (int j = 0; j < k; ++j)
            out += dt * (kernel_(tk, traj.grid.node(j)) * traj.values[j]);
        return out;
    }
    case Kind::integral_of_map: {
        Vec out = offset_;
        for (int j = 0; j < k; ++j) out += dt * map_(traj.values[j]);
        return out;
    }
    case Kind::accumulate_then_map: {
        Vec acc = Vec::Zero(traj.space->dim());
        for (int j = 0; j < k; ++j) acc += dt * traj.values[j];
        return map_(acc) + offset_;
    }
    case Kind::custom: {
        Vec out = custom_(std::span<const Vec>(traj.values.data(), static_cast<size_t>(k)),
                          traj.grid, k);
        return out + offset_;
    }
    }
    return offset_;
}

Trajectory HistoryOperator::eval_all(const Trajectory& traj) const {
    Trajectory out(target_, traj.grid);
    for (int k = 0; k <= traj.grid.steps(); ++k) out.values[k] = eval(traj, k);
    return out;
}

} // namespace hdsys
