#include "hdsys/builtins.hpp"

#include <cmath>

namespace hdsys::builtins {

namespace {

double lambda_min_sym(const Mat& A) {
    const Mat sym = 0.5 * (A + A.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> es(sym);
    return es.eigenvalues().minCoeff();
}

double op_norm2(const Mat& A) {
    return A.size() == 0 ? 0.0 : A.operatorNorm();
}

} // namespace

OperatorFamilyA linear_A(const Mat& Av, const Mat& Atheta) {
    OperatorFamilyA fam;
    fam.eval = [Av, Atheta](double, const Vec& theta, const Vec& v) {
        Vec out = Av * v;
        if (Atheta.size() > 0) out += Atheta * theta;
        return out;
    };
    fam.m = lambda_min_sym(Av);
    fam.mbar = op_norm2(Atheta);
    fam.a0 = TimeFn(0.0);
    fam.a1 = op_norm2(Atheta);
    fam.a2 = op_norm2(Av);
    return fam;
}

ClarkePotentialJ linear_relaxed_J(double kappa, const Mat& Ctheta, const Mat& Cz) {
    ClarkePotentialJ pot;
    pot.subgrad = [kappa, Ctheta, Cz](double, const Vec& theta, const Vec& z, const Vec& v) {
        Vec out = -kappa * v;
        if (Ctheta.size() > 0) out += Ctheta * theta;
        if (Cz.size() > 0) out += Cz * z;
        return out;
    };
    pot.m = kappa;
    pot.mbar = std::max(op_norm2(Ctheta), op_norm2(Cz));
    pot.c0 = TimeFn(0.0);
    pot.c1 = op_norm2(Ctheta);
    pot.c2 = op_norm2(Cz);
    pot.c3 = std::abs(kappa);
    return pot;
}

ConvexPotentialPhi weighted_l1_phi(double w0, double wth, double wy, int dim) {
    auto weight = [w0, wth, wy](const Vec& th, const Vec& y) {
        double w = w0;
        if (th.size() > 0) w += wth * th.norm();
        if (y.size() > 0) w += wy * y.norm();
        return std::max(0.0, w);
    };
    ConvexPotentialPhi phi;
    phi.prox = [weight](double, const Vec& th, const Vec& y, double rho, const Vec& x) {
        const double tau = rho * weight(th, y);
        Vec out(x.size());
        for (int i = 0; i < x.size(); ++i)
            out[i] = std::copysign(std::max(0.0, std::abs(x[i]) - tau), x[i]);
        return out;
    };
    phi.subgrad = [weight](double, const Vec& th, const Vec& y, const Vec& v) {
        const double w = weight(th, y);
        Vec out(v.size());
        for (int i = 0; i < v.size(); ++i) out[i] = v[i] > 0.0 ? w : (v[i] < 0.0 ? -w : 0.0);
        return out;
    };
    phi.value = [weight](double, const Vec& th, const Vec& y, const Vec& v) {
        return weight(th, y) * v.lpNorm<1>();
    };
    const double root_d = std::sqrt(static_cast<double>(dim));
    phi.c0 = TimeFn(w0 * root_d);
    phi.c1 = wth * root_d;
    phi.c2 = wy * root_d;
    phi.c3 = 0.0;
    phi.m = std::max(wth, wy) * root_d;
    return phi;
}

ConvexPotentialPhi quadratic_phi(double alpha) {
    ConvexPotentialPhi phi;
    phi.prox = [alpha](double, const Vec&, const Vec&, double rho, const Vec& x) {
        return Vec(x / (1.0 + rho * alpha));
    };
    phi.subgrad = [alpha](double, const Vec&, const Vec&, const Vec& v) {
        return Vec(alpha * v);
    };
    phi.value = [alpha](double, const Vec&, const Vec&, const Vec& v) {
        return 0.5 * alpha * v.squaredNorm();
    };
    phi.c3 = alpha;
    phi.m = 0.0;
    return phi;
}

OperatorFamilyB linear_B(const Mat& Btheta, const Mat& Cw, const Mat& Cwbar) {
    OperatorFamilyB fam;
    fam.eval = [Btheta, Cw, Cwbar](double, const Vec& w, const Vec& wbar, const Vec& theta) {
        Vec out = Btheta * theta;
        if (Cw.size() > 0) out += Cw * w;
        if (Cwbar.size() > 0) out += Cwbar * wbar;
        return out;
    };
    fam.m = lambda_min_sym(Btheta);
    fam.mbar = op_norm2(Cw) + op_norm2(Cwbar);
    fam.b0 = TimeFn(0.0);
    fam.b1 = op_norm2(Cw);
    fam.b2 = op_norm2(Cwbar);
    fam.b3 = op_norm2(Btheta);
    return fam;
}

ClarkePotentialG linear_relaxed_g(double kappa, const Mat& Cw) {
    ClarkePotentialG pot;
    pot.subgrad = [kappa, Cw](double, const Vec& w, const Vec& theta) {
        Vec out = -kappa * theta;
        if (Cw.size() > 0) out += Cw * w;
        return out;
    };
    pot.m = kappa;
    pot.mbar = op_norm2(Cw);
    pot.c0 = TimeFn(0.0);
    pot.c1 = op_norm2(Cw);
    pot.c2 = std::abs(kappa);
    return pot;
}

HistoryOperator volterra_exp(SpacePtr target, const Mat& base, double decay) {
    const double lip = op_norm2(base) * (decay >= 0.0 ? 1.0 : std::exp(-decay));
    return HistoryOperator::volterra(
        std::move(target),
        [base, decay](double t, double s) { return Mat(std::exp(-decay * (t - s)) * base); },
        lip);
}

HistoryOperator accumulate_linear(SpacePtr target, const Mat& post, Vec offset) {
    return HistoryOperator::accumulate_then_map(
        std::move(target), [post](const Vec& acc) { return Vec(post * acc); }, op_norm2(post),
        std::move(offset));
}

Trajectory polynomial_trajectory(SpacePtr space, const TimeGrid& grid,
                                 const std::vector<std::vector<double>>& coeffs) {
    require_arg(static_cast<int>(coeffs.size()) == space->dim(),
                "polynomial_trajectory: one coefficient list per component");
    return Trajectory::sample(std::move(space), grid, [&coeffs](double t) {
        Vec v(static_cast<int>(coeffs.size()));
        for (size_t i = 0; i < coeffs.size(); ++i) {
            double acc = 0.0, p = 1.0;
            for (double c : coeffs[i]) {
                acc += c * p;
                p *= t;
            }
            v[static_cast<int>(i)] = acc;
        }
        return v;
    });
}

namespace {

SystemProblem scalar_pair_problem(const TimeGrid& grid) {
    SystemProblem p;
    p.V = DiscreteSpace::euclidean(1, "V");
    p.H = DiscreteSpace::euclidean(1, "H");
    p.E = DiscreteSpace::euclidean(1, "E");
    p.X = DiscreteSpace::euclidean(1, "X");
    p.Y = DiscreteSpace::euclidean(1, "Y");
    p.Z = DiscreteSpace::euclidean(1, "Z");
    p.Q = DiscreteSpace::euclidean(1, "Q");
    p.opA = linear_A(Mat::Identity(1, 1), Mat());
    p.opB = linear_B(Mat::Identity(1, 1), Mat(), Mat());
    p.histR = HistoryOperator::zero(p.Y);
    p.histR1 = HistoryOperator::zero(p.V->dual("V*"));
    p.histR2 = HistoryOperator::zero(p.Q);
    p.histS = HistoryOperator::zero(p.Z);
    p.load1 = Trajectory::zero(p.V->dual("V*"), grid);
    p.load2 = Trajectory::zero(p.E->dual("E*"), grid);
    p.w0 = Vec::Zero(1);
    p.theta0 = Vec::Zero(1);
    return p;
}

} // namespace

SystemProblem linear_decay_problem(const TimeGrid& grid) {
    SystemProblem p = scalar_pair_problem(grid);
    p.w0[0] = 1.0;
    p.theta0[0] = 1.0;
    return p;
}

SystemProblem benchmark_problem(double margin, const TimeGrid& grid) {
    require_arg(margin > 0.0 && margin < 1.5, "benchmark_problem: margin must lie in (0, 1.5)");
    const int d = 2;
    SystemProblem p;
    p.V = DiscreteSpace::euclidean(d, "V");
    p.H = DiscreteSpace::euclidean(d, "H");
    p.E = DiscreteSpace::euclidean(d, "E");
    p.X = DiscreteSpace::euclidean(d, "X");
    p.Y = DiscreteSpace::euclidean(d, "Y");
    p.Z = DiscreteSpace::euclidean(d, "Z");
    p.Q = DiscreteSpace::euclidean(d, "Q");

    Mat Av(d, d), Atheta(d, d), Btheta(d, d), Cwbar(d, d), Cz(d, d);
    Av << 1.5, 0.25, -0.25, 1.5;
    Atheta << 0.2, 0.0, 0.1, 0.1;
    Btheta << 1.5, 0.3, -0.3, 1.5;
    Cwbar << 0.0, 0.15, 0.15, 0.0;
    Cz << 0.0, 0.1, 0.1, 0.0;

    p.opA = linear_A(Av, Atheta);
    p.potJ = linear_relaxed_J(1.5 - margin, 0.15 * Mat::Identity(d, d), Cz);
    p.potPhi = weighted_l1_phi(0.05, 0.02, 0.03, d);
    p.opB = linear_B(Btheta, 0.2 * Mat::Identity(d, d), Cwbar);
    p.potG = linear_relaxed_g(1.5 - margin, 0.1 * Mat::Identity(d, d));

    p.histR = volterra_exp(p.Y, 0.3 * Mat::Identity(d, d), 1.0);
    p.histR1 = volterra_exp(p.V->dual("V*"), 0.2 * Mat::Identity(d, d), 0.0);
    p.histR2 = accumulate_linear(p.Q, 0.25 * Mat::Identity(d, d));
    p.histS = volterra_exp(p.Z, 0.15 * Mat::Identity(d, d), 2.0);

    p.load1 = polynomial_trajectory(p.V->dual("V*"), grid, {{0.5, 0.2}, {-0.3, 0.0, 0.1}});
    p.load2 = polynomial_trajectory(p.E->dual("E*"), grid, {{0.0, 0.1}, {0.4, -0.2}});
    p.w0 = Vec(d);
    p.w0 << 0.5, -0.3;
    p.theta0 = Vec(d);
    p.theta0 << 0.2, 0.4;
    return p;
}

double manufactured_w_exact(double t) { return 1.0 + std::cos(t); }
double manufactured_theta_exact(double t) { return 0.5 + std::sin(t); }

SystemProblem manufactured_problem(const TimeGrid& grid) {
    SystemProblem p = scalar_pair_problem(grid);
    p.load1 = Trajectory::sample(p.V->dual("V*"), grid, [](double t) {
        Vec v(1);
        v[0] = -std::sin(t) + manufactured_w_exact(t);
        return v;
    });
    p.load2 = Trajectory::sample(p.E->dual("E*"), grid, [](double t) {
        Vec v(1);
        v[0] = std::cos(t) + manufactured_theta_exact(t);
        return v;
    });
    p.w0 = Vec(1);
    p.w0[0] = manufactured_w_exact(0.0);
    p.theta0 = Vec(1);
    p.theta0[0] = manufactured_theta_exact(0.0);
    return p;
}

SystemProblem random_instance(std::uint64_t seed, const TimeGrid& grid, int max_dim,
                              double min_margin) {
    require_arg(max_dim >= 1, "random_instance: max_dim must be positive");
    NormalStream rng(seed);
    auto randint = [&rng](int lo, int hi) {
        const int span = hi - lo + 1;
        int v = lo + static_cast<int>(rng.uniform() * span);
        return std::min(v, hi);
    };
    auto randmat = [&rng](int rows, int cols, double scale) {
        Mat m(rows, cols);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) m(i, j) = scale * rng.next();
        return m;
    };

    const int dV = randint(1, max_dim);
    const int dE = randint(1, max_dim);
    const int dY = randint(1, 4);
    const int dZ = randint(1, 4);
    const int dQ = randint(1, 4);

    SystemProblem p;
    p.V = DiscreteSpace::euclidean(dV, "V");
    p.H = DiscreteSpace::euclidean(dV, "H");
    p.E = DiscreteSpace::euclidean(dE, "E");
    p.X = DiscreteSpace::euclidean(dE, "X");
    p.Y = DiscreteSpace::euclidean(dY, "Y");
    p.Z = DiscreteSpace::euclidean(dZ, "Z");
    p.Q = DiscreteSpace::euclidean(dQ, "Q");

    const double pert = 0.08;
    Mat Av = (1.0 + 0.5 * rng.uniform()) * Mat::Identity(dV, dV) +
             randmat(dV, dV, pert / std::sqrt(static_cast<double>(dV)));
    Mat Btheta = (1.0 + 0.5 * rng.uniform()) * Mat::Identity(dE, dE) +
                 randmat(dE, dE, pert / std::sqrt(static_cast<double>(dE)));
    const double couple = 0.12;
    p.opA = linear_A(Av, randmat(dV, dE, couple / std::sqrt(static_cast<double>(dE))));
    p.opB = linear_B(Btheta, randmat(dE, dV, couple / std::sqrt(static_cast<double>(dV))),
                     randmat(dE, dQ, couple / std::sqrt(static_cast<double>(dQ))));

    const double margin1 = min_margin + 0.5 * rng.uniform();
    const double margin2 = min_margin + 0.5 * rng.uniform();
    const double kJ = std::max(0.0, p.opA.m - margin1);
    const double kg = std::max(0.0, p.opB.m - margin2);
    p.potJ = linear_relaxed_J(kJ, randmat(dV, dE, 0.05), randmat(dV, dZ, 0.05));
    p.potG = linear_relaxed_g(kg, randmat(dE, dV, 0.05));
    p.potPhi = weighted_l1_phi(0.02 + 0.02 * rng.uniform(), 0.01 * rng.uniform(),
                               0.01 * rng.uniform(), dV);

    const double hist_scale = 0.15;
    p.histR = volterra_exp(p.Y, randmat(dY, dV, hist_scale / std::sqrt(static_cast<double>(dV))),
                           std::abs(rng.next()));
    p.histR1 = volterra_exp(p.V->dual("V*"),
                            randmat(dV, dV, hist_scale / std::sqrt(static_cast<double>(dV))),
                            std::abs(rng.next()));
    p.histR2 = accumulate_linear(
        p.Q, randmat(dQ, dV, hist_scale / std::sqrt(static_cast<double>(dV))));
    p.histS = volterra_exp(p.Z, randmat(dZ, dV, hist_scale / std::sqrt(static_cast<double>(dV))),
                           std::abs(rng.next()));

    std::vector<std::vector<double>> c1(dV), c2(dE);
    for (int i = 0; i < dV; ++i) c1[i] = {rng.next() * 0.5, rng.next() * 0.3};
    for (int i = 0; i < dE; ++i) c2[i] = {rng.next() * 0.5, rng.next() * 0.3};
    p.load1 = polynomial_trajectory(p.V->dual("V*"), grid, c1);
    p.load2 = polynomial_trajectory(p.E->dual("E*"), grid, c2);
    p.w0 = rng.on_sphere(*p.V, 1.0, 1.0);
    p.theta0 = rng.on_sphere(*p.E, 1.0, 1.0);
    return p;
}

SystemProblem linear_estimate_instance(const TimeGrid& grid) {
    const int d = 2;
    SystemProblem p;
    p.V = DiscreteSpace::euclidean(d, "V");
    p.H = DiscreteSpace::euclidean(d, "H");
    p.E = DiscreteSpace::euclidean(d, "E");
    p.X = DiscreteSpace::euclidean(d, "X");
    p.Y = DiscreteSpace::euclidean(d, "Y");
    p.Z = DiscreteSpace::euclidean(d, "Z");
    p.Q = DiscreteSpace::euclidean(d, "Q");

    Mat Av(d, d), Btheta(d, d), Cz(d, d), Cwbar(d, d);
    Av << 2.0, 0.3, -0.3, 2.0;
    Btheta << 2.0, 0.25, -0.25, 2.0;
    Cz << 0.0, 0.1, 0.1, 0.0;
    Cwbar << 0.0, 0.2, 0.2, 0.0;

    p.opA = linear_A(Av, 0.3 * Mat::Identity(d, d));
    p.potJ = linear_relaxed_J(0.5, 0.2 * Mat::Identity(d, d), Cz);
    p.opB = linear_B(Btheta, 0.25 * Mat::Identity(d, d), Cwbar);
    p.potG = linear_relaxed_g(0.5, 0.1 * Mat::Identity(d, d));

    p.histR = volterra_exp(p.Y, 0.2 * Mat::Identity(d, d), 1.0);
    p.histR1 = volterra_exp(p.V->dual("V*"), 0.15 * Mat::Identity(d, d), 0.5);
    p.histR2 = accumulate_linear(p.Q, 0.3 * Mat::Identity(d, d));
    p.histS = volterra_exp(p.Z, 0.1 * Mat::Identity(d, d), 1.0);

    p.load1 = polynomial_trajectory(p.V->dual("V*"), grid, {{0.3, 0.1}, {-0.2, 0.2}});
    p.load2 = polynomial_trajectory(p.E->dual("E*"), grid, {{0.1, -0.1}, {0.2, 0.1}});
    p.w0 = Vec(d);
    p.w0 << 0.4, -0.2;
    p.theta0 = Vec(d);
    p.theta0 << 0.1, 0.3;
    return p;
}

DvhiProblem dvhi_benchmark(bool smooth) {
    const int d = 2;
    DvhiProblem q;
    q.V = DiscreteSpace::euclidean(d, "V");
    q.E = DiscreteSpace::euclidean(d, "E");
    q.X = DiscreteSpace::euclidean(d, "X");
    q.X0 = DiscreteSpace::euclidean(d, "X0");
    q.Y0 = DiscreteSpace::euclidean(1, "Y0");

    Mat Av(d, d);
    Av << 1.5, 0.2, -0.2, 1.5;
    q.opAbar = [Av](double, const Vec& v) { return Vec(Av * v); };
    q.m_Abar = 1.5;
    q.abar1 = Av.operatorNorm();

    if (smooth) {
        q.subgradG = [d](double, const Vec&, const Vec&) { return Vec(Vec::Zero(d)); };
        q.m_G = 0.0;
        q.mbar_G = 0.0;
        q.potPhi = ConvexPotentialPhi::none();
    } else {
        q.subgradG = [](double, const Vec& theta, const Vec& x) {
            Vec out(x.size());
            for (int i = 0; i < x.size(); ++i)
                out[i] = -0.3 * x[i] + 0.05 * std::clamp(x[i], -1.0, 1.0) + 0.1 * theta[i];
            return out;
        };
        q.m_G = 0.3; // worst slope of -0.3 x + 0.05 clamp(x)
        q.mbar_G = 0.1;
        q.c2G = 0.35;
        q.potPhi = weighted_l1_phi(0.05, 0.02, 0.0, d);
    }

    Mat M(d, d);
    M << 0.8, 0.0, 0.0, 0.8;
    q.mapM = M;
    Mat Th(1, d);
    Th << 0.6, 0.3;
    q.mapTheta = Th;

    Mat Ftheta = 0.2 * Mat::Identity(d, d);
    q.rhsF = [Ftheta](double t, const Vec& theta) {
        Vec out(2);
        out << 0.3 + 0.1 * t, -0.2;
        out += Ftheta * theta;
        return out;
    };
    q.L_F = 0.2;
    q.c0F = TimeFn(0.5);
    q.c1F = 0.2;

    Mat Bt(d, d);
    Bt << 1.8, 0.15, -0.15, 1.8;
    q.opBbar = [Bt](double, const Vec& theta) { return Vec(Bt * theta); };
    q.m_Bbar = 1.8;
    q.bbar1 = Bt.operatorNorm();

    q.rhsf = [](double t, const Vec& theta, const Vec& y) {
        Vec out(2);
        out << 0.1 * std::sin(t), 0.2;
        out += 0.3 * theta;
        out[0] += 0.4 * y[0];
        out[1] -= 0.25 * y[0];
        return out;
    };
    q.L_f = std::sqrt(0.4 * 0.4 + 0.25 * 0.25);
    q.L_os = 0.3;
    q.c0f = TimeFn(0.3);
    q.c1f = 0.3;
    q.c2f = q.L_f;

    q.u0 = Vec(d);
    q.u0 << 0.4, -0.2;
    q.theta0 = Vec(d);
    q.theta0 << 0.1, 0.3;
    q.finalize();
    return q;
}

} // namespace hdsys::builtins
