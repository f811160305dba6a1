#include "hdsys/probes.hpp"

#include <cmath>
#include <random>

namespace hdsys {

double NormalStream::next() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    // Box-Muller on raw uniforms keeps the stream platform-independent.
    double u1 = 0.0;
    do {
        u1 = uniform();
    } while (u1 <= 1e-300);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
}

double NormalStream::uniform() {
    return (engine_() >> 11) * 0x1.0p-53;
}

Vec NormalStream::vector(int dim) {
    Vec v(dim);
    for (int i = 0; i < dim; ++i) v[i] = next();
    return v;
}

Vec NormalStream::on_sphere(const DiscreteSpace& space, double radius_min, double radius_max) {
    Vec v = vector(space.dim());
    double n = space.norm_strong(v);
    if (n <= 1e-300) {
        v.setZero();
        v[0] = 1.0;
        n = space.norm_strong(v);
    }
    double r = radius_min;
    if (radius_max > radius_min)
        r = std::exp(std::log(radius_min) +
                     uniform() * (std::log(radius_max) - std::log(radius_min)));
    return v * (r / n);
}

SmallnessReport check_smallness(double m_A, double m_J, double m_B, double m_g) {
    require(std::isfinite(m_A) && std::isfinite(m_J) && std::isfinite(m_B) && std::isfinite(m_g),
            ErrorCode::config, "check_smallness: missing or non-finite constant");
    SmallnessReport rep;
    rep.margin1 = m_A - m_J;
    rep.margin2 = m_B - m_g;
    rep.pass = rep.margin1 > 0.0 && rep.margin2 > 0.0;
    rep.warn_thin = rep.pass && (rep.margin1 < 1e-6 || rep.margin2 < 1e-6);
    return rep;
}

namespace {

constexpr double kProbeTol = 1e-10;

// Generic monotonicity-family adaptor: dual-valued map of (t, extras, u).
struct FamilyView {
    std::function<Vec(double t, const std::vector<Vec>& extras, const Vec& u)> eval;
    const DiscreteSpace* principal = nullptr;
    std::vector<const DiscreteSpace*> extras;
};

std::vector<Vec> sample_extras(const FamilyView& view, NormalStream& rng,
                               const ProbeSampler& s) {
    std::vector<Vec> extras;
    extras.reserve(view.extras.size());
    for (const DiscreteSpace* sp : view.extras)
        extras.push_back(rng.on_sphere(*sp, s.radius_min, s.radius_max));
    return extras;
}

// inf over sampled pairs (extras shared within each pair) of
//   <eval(u1) - eval(u2), u1 - u2> / ||u1 - u2||_principal^2,
// refined by a local finite-difference eigen step validated through a direct
// pair evaluation.
struct RatioScan {
    double inf_ratio = std::numeric_limits<double>::infinity();
    double worst_t = 0.0;
    Vec worst_a, worst_b;
    std::vector<Vec> worst_extras;
    int used = 0;
};

RatioScan scan_ratios(const FamilyView& view, const ProbeSampler& s, NormalStream& rng) {
    RatioScan scan;
    for (int i = 0; i < s.pairs; ++i) {
        const double t = rng.uniform() * s.horizon;
        const std::vector<Vec> extras = sample_extras(view, rng, s);
        const Vec u1 = rng.on_sphere(*view.principal, s.radius_min, s.radius_max);
        const Vec u2 = rng.on_sphere(*view.principal, s.radius_min, s.radius_max);
        const Vec du = u1 - u2;
        const double nd = view.principal->norm_strong(du);
        if (nd <= 1e-14) continue; // degenerate sample
        const double ratio =
            dual_pair(view.eval(t, extras, u1) - view.eval(t, extras, u2), du) / (nd * nd);
        ++scan.used;
        if (ratio < scan.inf_ratio) {
            scan.inf_ratio = ratio;
            scan.worst_t = t;
            scan.worst_a = u1;
            scan.worst_b = u2;
            scan.worst_extras = extras;
        }
    }
    require(scan.used >= 1, ErrorCode::argument, "probe: all samples degenerate");

    // Local refinement: reconstruct the Jacobian action at the worst base by
    // central differences, take the extreme generalized eigenvector against
    // the strong Gram, and validate it as an ordinary sample pair.
    const int dim = view.principal->dim();
    const Vec base = scan.worst_a;
    const double h = 1e-5 * std::max(1.0, base.cwiseAbs().maxCoeff());
    Mat J(dim, dim);
    for (int i = 0; i < dim; ++i) {
        Vec e = Vec::Zero(dim);
        e[i] = h;
        J.col(i) = (view.eval(scan.worst_t, scan.worst_extras, base + e) -
                    view.eval(scan.worst_t, scan.worst_extras, base - e)) /
                   (2.0 * h);
    }
    const Mat sym = 0.5 * (J + J.transpose());
    Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(sym, view.principal->gram_strong());
    if (es.info() == Eigen::Success) {
        const Vec dir = es.eigenvectors().col(0); // smallest generalized eigenvalue
        // wide enough that the evaluated difference is safely above rounding
        const double eps = 1e-3 * std::max(1.0, base.norm());
        const Vec u1 = base - eps * dir;
        const Vec u2 = base + eps * dir;
        const Vec du = u1 - u2;
        const double nd = view.principal->norm_strong(du);
        if (nd > 1e-14) {
            const double ratio = dual_pair(view.eval(scan.worst_t, scan.worst_extras, u1) -
                                               view.eval(scan.worst_t, scan.worst_extras, u2),
                                           du) /
                                 (nd * nd);
            ++scan.used;
            if (ratio < scan.inf_ratio) {
                scan.inf_ratio = ratio;
                scan.worst_a = u1;
                scan.worst_b = u2;
            }
        }
    }
    return scan;
}

// Worst violation of the full two-term inequality
//   sign * <d eval, du> >= sign * (m0 ||du||^2) - mbar * (sum ||d extra||) ||du||
// with everything varying. Returns the most negative slack found.
double full_inequality_slack(const FamilyView& view, const ProbeSampler& s, NormalStream& rng,
                             double m_quad, double mbar) {
    double min_slack = std::numeric_limits<double>::infinity();
    for (int i = 0; i < s.pairs; ++i) {
        const double t = rng.uniform() * s.horizon;
        std::vector<Vec> extras1 = sample_extras(view, rng, s);
        std::vector<Vec> extras2 = sample_extras(view, rng, s);
        const Vec u1 = rng.on_sphere(*view.principal, s.radius_min, s.radius_max);
        const Vec u2 = rng.on_sphere(*view.principal, s.radius_min, s.radius_max);
        const Vec du = u1 - u2;
        const double nd = view.principal->norm_strong(du);
        if (nd <= 1e-14) continue;
        double coupling = 0.0;
        for (size_t j = 0; j < extras1.size(); ++j)
            coupling += view.extras[j]->norm_strong(extras1[j] - extras2[j]);
        const double lhs =
            dual_pair(view.eval(t, extras1, u1) - view.eval(t, extras2, u2), du);
        const double slack = lhs - m_quad * nd * nd + mbar * coupling * nd;
        min_slack = std::min(min_slack, slack);
    }
    return min_slack;
}

ProbeReport probe_monotone(const FamilyView& view, const ProbeSampler& s, std::string target,
                           double declared_m, double declared_mbar, bool relaxed) {
    NormalStream rng(s.seed);
    RatioScan scan = scan_ratios(view, s, rng);
    ProbeReport rep;
    rep.target = std::move(target);
    rep.samples = scan.used;
    rep.declared_constant = declared_m;
    rep.worst_t = scan.worst_t;
    rep.worst_a = scan.worst_a;
    rep.worst_b = scan.worst_b;
    if (relaxed) {
        // <ds, du> >= -m ||du||^2 - mbar (...) ||du||
        rep.estimated_constant = -scan.inf_ratio;
        const double slack = full_inequality_slack(view, s, rng, -declared_m, declared_mbar);
        rep.pass = rep.estimated_constant <= declared_m + kProbeTol && slack >= -kProbeTol;
    } else {
        // <dA, du> >= m ||du||^2 - mbar (...) ||du||
        rep.estimated_constant = scan.inf_ratio;
        const double slack = full_inequality_slack(view, s, rng, declared_m, declared_mbar);
        rep.pass = rep.estimated_constant >= declared_m - kProbeTol && slack >= -kProbeTol;
    }
    return rep;
}

} // namespace

ProbeReport probe_mixed_monotonicity(const OperatorFamilyA& family, const DiscreteSpace& V,
                                     const DiscreteSpace& X, const ProbeSampler& sampler) {
    FamilyView view;
    view.principal = &V;
    view.extras = {&X};
    view.eval = [&family](double t, const std::vector<Vec>& extras, const Vec& u) {
        return family.eval(t, extras[0], u);
    };
    return probe_monotone(view, sampler, "mixed-monotonicity(A)", family.m, family.mbar, false);
}

ProbeReport probe_mixed_monotonicity(const OperatorFamilyB& family, const DiscreteSpace& E,
                                     const DiscreteSpace& V, const DiscreteSpace& Q,
                                     const ProbeSampler& sampler) {
    FamilyView view;
    view.principal = &E;
    view.extras = {&V, &Q};
    view.eval = [&family](double t, const std::vector<Vec>& extras, const Vec& u) {
        return family.eval(t, extras[0], extras[1], u);
    };
    return probe_monotone(view, sampler, "mixed-monotonicity(B)", family.m, family.mbar, false);
}

ProbeReport probe_relaxed_monotonicity(const ClarkePotentialJ& pot, const DiscreteSpace& V,
                                       const DiscreteSpace& X, const DiscreteSpace& Z,
                                       const ProbeSampler& sampler) {
    FamilyView view;
    view.principal = &V;
    view.extras = {&X, &Z};
    view.eval = [&pot](double t, const std::vector<Vec>& extras, const Vec& u) {
        return pot.subgrad(t, extras[0], extras[1], u);
    };
    return probe_monotone(view, sampler, "relaxed-monotonicity(J)", pot.m, pot.mbar, true);
}

ProbeReport probe_relaxed_monotonicity(const ClarkePotentialG& pot, const DiscreteSpace& E,
                                       const DiscreteSpace& V, const ProbeSampler& sampler) {
    FamilyView view;
    view.principal = &E;
    view.extras = {&V};
    view.eval = [&pot](double t, const std::vector<Vec>& extras, const Vec& u) {
        return pot.subgrad(t, extras[0], u);
    };
    return probe_monotone(view, sampler, "relaxed-monotonicity(g)", pot.m, pot.mbar, true);
}

ProbeReport probe_history_lipschitz(const HistoryOperator& op, const DiscreteSpace& V,
                                    const TimeGrid& grid, const ProbeSampler& sampler) {
    NormalStream rng(sampler.seed);
    SpacePtr vspace = std::make_shared<DiscreteSpace>(V);
    const double dt = grid.dt();

    ProbeReport rep;
    rep.target = "history-lipschitz";
    rep.declared_constant = op.lipschitz_const();
    double sup = 0.0;
    int used = 0;
    for (int i = 0; i < sampler.pairs; ++i) {
        Trajectory v1(vspace, grid), v2(vspace, grid);
        const bool constant_difference = (i % 2 == 0);
        const Vec delta_const =
            rng.on_sphere(V, sampler.radius_min, sampler.radius_max);
        for (int k = 0; k <= grid.steps(); ++k) {
            v1.values[k] = rng.on_sphere(V, sampler.radius_min, sampler.radius_max);
            v2.values[k] = constant_difference
                               ? Vec(v1.values[k] + delta_const)
                               : Vec(v1.values[k] +
                                     rng.on_sphere(V, sampler.radius_min, sampler.radius_max));
        }
        double denom = 0.0;
        for (int k = 1; k <= grid.steps(); ++k) {
            denom += dt * V.norm_strong(v1.values[k - 1] - v2.values[k - 1]);
            if (denom <= 1e-300) continue; // identical prefix
            const Vec d = op.eval(v1, k) - op.eval(v2, k);
            const double ratio = op.target_space()->norm_strong(d) / denom;
            ++used;
            if (ratio > sup) {
                sup = ratio;
                rep.worst_t = grid.node(k);
                rep.worst_a = v1.values[k - 1];
                rep.worst_b = v2.values[k - 1];
            }
        }
    }
    require(used >= 1, ErrorCode::argument, "probe_history_lipschitz: all samples degenerate");
    rep.samples = used;
    rep.estimated_constant = sup;
    rep.pass = sup <= op.lipschitz_const() + kProbeTol;
    return rep;
}

} // namespace hdsys
