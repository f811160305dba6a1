#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "hdsys/core.hpp"
#include "hdsys/operators.hpp"

namespace hdsys {

/// Empirical counterpart of one structural hypothesis, estimated from samples.
struct ProbeReport {
    std::string target;
    int samples = 0;
    double estimated_constant = 0.0;
    double declared_constant = 0.0;
    double worst_t = 0.0;
    Vec worst_a; // the pair achieving the extreme
    Vec worst_b;
    bool pass = false;
};

/// Deterministic sampler: standard normal coefficients scaled to unit
/// strong-norm, optionally stretched over a radius range (log-uniform).
struct ProbeSampler {
    std::uint64_t seed = 20240901;
    int pairs = 256;
    double radius_min = 1.0;
    double radius_max = 1.0;
    double horizon = 1.0; // probe times are U(0, horizon)
};

/// Deterministic standard-normal stream (Box-Muller over mt19937_64); used
/// instead of std::normal_distribution so reports are reproducible bit-exactly.
class NormalStream {
public:
    explicit NormalStream(std::uint64_t seed) : engine_(seed) {}
    double next();
    double uniform(); // U(0,1)
    Vec vector(int dim);
    /// Normal vector scaled to unit strong-norm, then by a log-uniform radius.
    Vec on_sphere(const DiscreteSpace& space, double radius_min, double radius_max);

private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

struct SmallnessReport {
    bool pass = false;
    double margin1 = 0.0; // m_A - m_J
    double margin2 = 0.0; // m_B - m_g
    bool warn_thin = false; // some margin below 1e-6: contraction degrades as 1/margin
};

/// Smallness gate: both margins strictly positive. Also covers the single-
/// inclusion margin (use one overload slot) and the contact
/// gate via the wrappers in their modules.
SmallnessReport check_smallness(double m_A, double m_J, double m_B, double m_g);

/// Mixed-monotonicity probe for an A-type family:
///   <A(t,th,v1) - A(t,th,v2), v1 - v2> >= m ||dv||^2 - mbar ||dth|| ||dv||.
/// Estimates m over pairs with common theta (plus a local finite-difference
/// eigen refinement validated by a direct pair evaluation), then checks the
/// full two-term inequality with the declared constants on varying-theta pairs.
ProbeReport probe_mixed_monotonicity(const OperatorFamilyA& family, const DiscreteSpace& V,
                                     const DiscreteSpace& X, const ProbeSampler& sampler);

/// Same for a B-type family (extras are (w, wbar) with the sum-of-norms coupling).
ProbeReport probe_mixed_monotonicity(const OperatorFamilyB& family, const DiscreteSpace& E,
                                     const DiscreteSpace& V, const DiscreteSpace& Q,
                                     const ProbeSampler& sampler);

/// Relaxed-monotonicity probe for a J-type selection:
///   <s1 - s2, v1 - v2> >= -m ||dv||^2 - mbar (||dth|| + ||dz||) ||dv||.
/// Estimated constant is -inf of the monotonicity ratio (0 means monotone).
ProbeReport probe_relaxed_monotonicity(const ClarkePotentialJ& pot, const DiscreteSpace& V,
                                       const DiscreteSpace& X, const DiscreteSpace& Z,
                                       const ProbeSampler& sampler);

ProbeReport probe_relaxed_monotonicity(const ClarkePotentialG& pot, const DiscreteSpace& E,
                                       const DiscreteSpace& V, const ProbeSampler& sampler);

/// Volterra-Lipschitz probe for a history operator on trajectories over
/// `grid`: sup over pairs and nodes of ||d out(k)|| / sum_{j<k} dt ||d v_j||.
ProbeReport probe_history_lipschitz(const HistoryOperator& op, const DiscreteSpace& V,
                                    const TimeGrid& grid, const ProbeSampler& sampler);

} // namespace hdsys
