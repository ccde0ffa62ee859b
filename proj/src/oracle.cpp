#include "varseq/oracle.hpp"

#include <algorithm>
#include <cmath>

namespace varseq {

double eval_on_section(const Expr& e, const TestSection& gamma, const std::vector<double>& x,
                       const BundleSpec& spec) {
    return eval(e, [&](const VarKey& k) -> double {
        switch (k.kind) {
            case Kind::Coord: return x[static_cast<size_t>(k.idx)];
            case Kind::Jet: {
                Expr d = iterated_total_derivative(gamma.comps[static_cast<size_t>(k.idx)], k.mi,
                                                   spec);
                return eval(d, [&](const VarKey& c) -> double {
                    if (c.kind == Kind::Coord) return x[static_cast<size_t>(c.idx)];
                    throw EvalError("section expression contains non-base variables");
                });
            }
            default: throw EvalError("eval_on_section: parameters are not evaluable");
        }
    });
}

double ActionGrid::h(int dir) const {
    double span = hi[static_cast<size_t>(dir)] - lo[static_cast<size_t>(dir)];
    int N = shape[static_cast<size_t>(dir)];
    return periodic ? span / N : span / (N - 1);
}

size_t ActionGrid::index(const std::vector<int>& node) const {
    size_t idx = 0;
    for (int d = 0; d < n; ++d) {
        int N = shape[static_cast<size_t>(d)];
        int k = node[static_cast<size_t>(d)];
        if (periodic) {
            k %= N;
            if (k < 0) k += N;
        } else if (k < 0 || k >= N) {
            throw StencilOutOfRange("grid index out of range");
        }
        idx = idx * static_cast<size_t>(N) + static_cast<size_t>(k);
    }
    return idx;
}

std::vector<double> ActionGrid::point(const std::vector<int>& node) const {
    std::vector<double> x(static_cast<size_t>(n));
    for (int d = 0; d < n; ++d)
        x[static_cast<size_t>(d)] = lo[static_cast<size_t>(d)] + h(d) * node[static_cast<size_t>(d)];
    return x;
}

ActionGrid sample_grid(const TestSection& gamma, const BundleSpec& spec, std::vector<int> shape,
                       std::vector<double> lo, std::vector<double> hi, bool periodic) {
    ActionGrid g;
    g.n = spec.n;
    g.shape = std::move(shape);
    g.lo = std::move(lo);
    g.hi = std::move(hi);
    g.periodic = periodic;
    size_t total = 1;
    for (int d = 0; d < g.n; ++d) total *= static_cast<size_t>(g.shape[static_cast<size_t>(d)]);
    g.values.assign(gamma.comps.size(), std::vector<double>(total, 0.0));
    std::vector<int> node(static_cast<size_t>(g.n), 0);
    for (size_t flat = 0; flat < total; ++flat) {
        size_t rem = flat;
        for (int d = g.n - 1; d >= 0; --d) {
            node[static_cast<size_t>(d)] =
                static_cast<int>(rem % static_cast<size_t>(g.shape[static_cast<size_t>(d)]));
            rem /= static_cast<size_t>(g.shape[static_cast<size_t>(d)]);
        }
        std::vector<double> x = g.point(node);
        for (size_t f = 0; f < gamma.comps.size(); ++f) {
            g.values[f][flat] = eval(gamma.comps[f], [&](const VarKey& k) -> double {
                if (k.kind == Kind::Coord) return x[static_cast<size_t>(k.idx)];
                throw EvalError("section expression contains non-base variables");
            });
        }
    }
    return g;
}

namespace {

struct Stencil {
    int radius;
    std::vector<double> w;  // offsets -radius..radius, already divided by h^k
};

Stencil stencil_for(int order, double h) {
    switch (order) {
        case 0: return {0, {1.0}};
        case 1: {
            double s = 1.0 / (12.0 * h);
            return {2, {1 * s, -8 * s, 0.0, 8 * s, -1 * s}};
        }
        case 2: {
            double s = 1.0 / (12.0 * h * h);
            return {2, {-1 * s, 16 * s, -30 * s, 16 * s, -1 * s}};
        }
        case 3: {
            double s = 1.0 / (8.0 * h * h * h);
            return {3, {-1 * s, 8 * s, -13 * s, 0.0, 13 * s, -8 * s, 1 * s}};
        }
        case 4: {
            double s = 1.0 / (6.0 * h * h * h * h);
            return {3, {-1 * s, 12 * s, -39 * s, 56 * s, -39 * s, 12 * s, -1 * s}};
        }
        default: throw NotSupported("grid stencils go up to fourth derivatives");
    }
}

}  // namespace

double grid_jet(const ActionGrid& grid, int field, const MultiIndex& a,
                const std::vector<int>& node) {
    // tensor product of one-dimensional stencils
    std::vector<Stencil> st;
    for (int d = 0; d < grid.n; ++d) st.push_back(stencil_for(a[d], grid.h(d)));
    std::vector<int> off(static_cast<size_t>(grid.n), 0);
    std::function<double(int)> rec = [&](int d) -> double {
        if (d == grid.n) {
            std::vector<int> probe = node;
            for (int k = 0; k < grid.n; ++k) probe[static_cast<size_t>(k)] += off[static_cast<size_t>(k)];
            return grid.values[static_cast<size_t>(field)][grid.index(probe)];
        }
        const Stencil& s = st[static_cast<size_t>(d)];
        double acc = 0.0;
        for (int o = -s.radius; o <= s.radius; ++o) {
            double w = s.w[static_cast<size_t>(o + s.radius)];
            if (w == 0.0) continue;
            off[static_cast<size_t>(d)] = o;
            acc += w * rec(d + 1);
        }
        off[static_cast<size_t>(d)] = 0;
        return acc;
    };
    return rec(0);
}

double eval_on_grid(const Expr& e, const ActionGrid& grid, const std::vector<int>& node,
                    const BundleSpec& spec) {
    (void)spec;
    std::vector<double> x = grid.point(node);
    return eval(e, [&](const VarKey& k) -> double {
        switch (k.kind) {
            case Kind::Coord: return x[static_cast<size_t>(k.idx)];
            case Kind::Jet: return grid_jet(grid, k.idx, k.mi, node);
            default: throw EvalError("eval_on_grid: parameters are not evaluable");
        }
    });
}

namespace {

// discrete Euler-Lagrange estimate at `node` for `field`: central-difference
// derivative of the local action sum with respect to the nodal value
double nodal_gradient(const Lagrangian& lag, ActionGrid& grid, const BundleSpec& spec,
                      const std::vector<int>& node, int field, int radius, double delta) {
    size_t idx = grid.index(node);
    double saved = grid.values[static_cast<size_t>(field)][idx];
    double d = delta * std::max(1.0, std::abs(saved));

    auto local_sum = [&]() {
        double acc = 0.0;
        std::vector<int> probe(static_cast<size_t>(grid.n), 0);
        std::function<void(int)> rec = [&](int dim) {
            if (dim == grid.n) {
                std::vector<int> j = node;
                for (int k = 0; k < grid.n; ++k)
                    j[static_cast<size_t>(k)] += probe[static_cast<size_t>(k)];
                acc += eval_on_grid(lag.L, grid, j, spec);
                return;
            }
            for (int o = -radius; o <= radius; ++o) {
                probe[static_cast<size_t>(dim)] = o;
                rec(dim + 1);
            }
        };
        rec(0);
        return acc;
    };

    grid.values[static_cast<size_t>(field)][idx] = saved + d;
    double plus = local_sum();
    grid.values[static_cast<size_t>(field)][idx] = saved - d;
    double minus = local_sum();
    grid.values[static_cast<size_t>(field)][idx] = saved;
    return (plus - minus) / (2.0 * d);
}

double gradient_estimate(const Lagrangian& lag, ActionGrid& grid, const BundleSpec& spec,
                         const std::vector<int>& node, int field, int radius,
                         const FdOptions& opts) {
    double g1 = nodal_gradient(lag, grid, spec, node, field, radius, opts.delta);
    if (!opts.richardson_delta) return g1;
    double g2 = nodal_gradient(lag, grid, spec, node, field, radius, opts.delta / 2.0);
    return (4.0 * g2 - g1) / 3.0;
}

}  // namespace

FdReport fd_gradient_check(const Lagrangian& lag, const TestSection& gamma,
                           const BundleSpec& spec, std::vector<int> shape, std::vector<double> lo,
                           std::vector<double> hi, const FdOptions& opts) {
    lag.validate(spec);
    SourceExpression E = euler_lagrange(lag, spec);

    int radius = 0;
    for (const auto& k : keys_of(lag.L)) {
        if (k.kind != Kind::Jet) continue;
        for (int d = 0; d < spec.n; ++d)
            radius = std::max(radius, stencil_for(k.mi[d], 1.0).radius);
    }

    ActionGrid coarse = sample_grid(gamma, spec, shape, lo, hi, true);
    ActionGrid fine;
    if (opts.richardson_h) {
        std::vector<int> shape2 = shape;
        for (auto& s : shape2) s *= 2;
        fine = sample_grid(gamma, spec, shape2, lo, hi, true);
    }

    // symbolic E at every coarse node first, for the error scale
    size_t total = 1;
    for (int d = 0; d < spec.n; ++d) total *= static_cast<size_t>(shape[static_cast<size_t>(d)]);
    std::vector<std::vector<double>> Esym(static_cast<size_t>(spec.m),
                                          std::vector<double>(total, 0.0));
    double scale = 0.0;
    std::vector<int> node(static_cast<size_t>(spec.n), 0);
    for (size_t flat = 0; flat < total; ++flat) {
        size_t rem = flat;
        for (int d = spec.n - 1; d >= 0; --d) {
            node[static_cast<size_t>(d)] =
                static_cast<int>(rem % static_cast<size_t>(shape[static_cast<size_t>(d)]));
            rem /= static_cast<size_t>(shape[static_cast<size_t>(d)]);
        }
        std::vector<double> x = coarse.point(node);
        for (int f = 0; f < spec.m; ++f) {
            double v = eval_on_section(E.comp[static_cast<size_t>(f)], gamma, x, spec);
            Esym[static_cast<size_t>(f)][flat] = v;
            scale = std::max(scale, std::abs(v));
        }
    }

    FdReport rep;
    rep.scale = scale;
    for (size_t flat = 0; flat < total; ++flat) {
        size_t rem = flat;
        for (int d = spec.n - 1; d >= 0; --d) {
            node[static_cast<size_t>(d)] =
                static_cast<int>(rem % static_cast<size_t>(shape[static_cast<size_t>(d)]));
            rem /= static_cast<size_t>(shape[static_cast<size_t>(d)]);
        }
        for (int f = 0; f < spec.m; ++f) {
            double est = gradient_estimate(lag, coarse, spec, node, f, radius, opts);
            if (opts.richardson_h) {
                std::vector<int> node2 = node;
                for (auto& k : node2) k *= 2;
                double est2 = gradient_estimate(lag, fine, spec, node2, f, radius, opts);
                est = (16.0 * est2 - est) / 15.0;
            }
            double diff = std::abs(est - Esym[static_cast<size_t>(f)][flat]);
            rep.max_abs_err = std::max(rep.max_abs_err, diff);
            rep.nodes += 1;
        }
    }
    rep.max_rel_err = scale > 1e-9 ? rep.max_abs_err / scale : rep.max_abs_err;
    return rep;
}

// ---------------------------------------------------------------------------
// Dormand-Prince 5(4) integration

namespace {

using Vec = std::vector<double>;

struct Ode {
    std::function<void(double, const Vec&, Vec&)> f;
    int dim;
};

struct StepRecord {
    double t;
    Vec y;
};

// integrates from (t, y) to t_end; appends accepted steps to `trace` when given
void rk45(const Ode& ode, double& t, Vec& y, double t_end, const OdeOptions& opts,
          std::vector<StepRecord>* trace) {
    static const double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static const double a21 = 1.0 / 5;
    static const double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static const double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static const double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                        a54 = -212.0 / 729;
    static const double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                        a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static const double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                        b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static const double e1 = 35.0 / 384 - 5179.0 / 57600, e3 = 500.0 / 1113 - 7571.0 / 16695,
                        e4 = 125.0 / 192 - 393.0 / 640, e5 = -2187.0 / 6784 + 92097.0 / 339200,
                        e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;

    int dim = ode.dim;
    Vec k1(dim), k2(dim), k3(dim), k4(dim), k5(dim), k6(dim), k7(dim), yt(dim), y5(dim);
    double h = std::min(opts.max_step, (t_end - t) / 10.0);
    if (h <= 0) return;
    int guard = 0;
    while (t < t_end - 1e-14) {
        if (++guard > 2000000) throw IntegrationFailure("step count exceeded");
        h = std::min(h, t_end - t);
        ode.f(t, y, k1);
        for (int i = 0; i < dim; ++i) yt[i] = y[i] + h * a21 * k1[i];
        ode.f(t + c2 * h, yt, k2);
        for (int i = 0; i < dim; ++i) yt[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
        ode.f(t + c3 * h, yt, k3);
        for (int i = 0; i < dim; ++i)
            yt[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        ode.f(t + c4 * h, yt, k4);
        for (int i = 0; i < dim; ++i)
            yt[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        ode.f(t + c5 * h, yt, k5);
        for (int i = 0; i < dim; ++i)
            yt[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] +
                                a65 * k5[i]);
        ode.f(t + h, yt, k6);
        for (int i = 0; i < dim; ++i)
            y5[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
        ode.f(t + h, y5, k7);

        double err = 0.0;
        for (int i = 0; i < dim; ++i) {
            double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] +
                            e7 * k7[i]);
            double tol = opts.atol + opts.rtol * std::max(std::abs(y[i]), std::abs(y5[i]));
            err = std::max(err, std::abs(e) / tol);
        }
        if (!std::isfinite(err)) throw IntegrationFailure("non-finite state");
        if (err <= 1.0) {
            t += h;
            y = y5;
            if (trace) trace->push_back({t, y});
        }
        double fac = err > 0 ? 0.9 * std::pow(err, -0.2) : 5.0;
        fac = std::clamp(fac, 0.2, 5.0);
        h = std::min(h * fac, opts.max_step);
        if (h < 1e-13) throw IntegrationFailure("step size underflow");
    }
}

// solve A x = b for small dense systems
Vec solve_dense(std::vector<Vec> A, Vec b) {
    int m = static_cast<int>(b.size());
    for (int col = 0; col < m; ++col) {
        int piv = col;
        for (int r = col + 1; r < m; ++r)
            if (std::abs(A[r][col]) > std::abs(A[piv][col])) piv = r;
        if (std::abs(A[piv][col]) < 1e-14)
            throw IntegrationFailure("singular leading coefficient matrix");
        std::swap(A[piv], A[col]);
        std::swap(b[piv], b[col]);
        for (int r = col + 1; r < m; ++r) {
            double f = A[r][col] / A[col][col];
            for (int c = col; c < m; ++c) A[r][c] -= f * A[col][c];
            b[r] -= f * b[col];
        }
    }
    Vec x(static_cast<size_t>(m), 0.0);
    for (int r = m - 1; r >= 0; --r) {
        double s = b[r];
        for (int c = r + 1; c < m; ++c) s -= A[r][c] * x[c];
        x[r] = s / A[r][r];
    }
    return x;
}

double det_dense(std::vector<Vec> A) {
    int m = static_cast<int>(A.size());
    double det = 1.0;
    for (int col = 0; col < m; ++col) {
        int piv = col;
        for (int r = col + 1; r < m; ++r)
            if (std::abs(A[r][col]) > std::abs(A[piv][col])) piv = r;
        if (std::abs(A[piv][col]) == 0.0) return 0.0;
        if (piv != col) {
            std::swap(A[piv], A[col]);
            det = -det;
        }
        det *= A[col][col];
        for (int r = col + 1; r < m; ++r) {
            double f = A[r][col] / A[col][col];
            for (int c = col; c < m; ++c) A[r][c] -= f * A[col][c];
        }
    }
    return det;
}

struct CoeffMatrices {
    int m;
    std::vector<std::vector<Expr>> A, B, C;
};

CoeffMatrices extract_second_order(const LinDiffOp& J, const BundleSpec& spec) {
    if (spec.n != 1) throw NotSupported("ODE integration needs a one-dimensional base");
    if (J.order() > 2) throw NotSupported("ODE integration expects a second-order operator");
    CoeffMatrices M;
    M.m = J.rows;
    auto blank = std::vector<std::vector<Expr>>(
        static_cast<size_t>(J.rows), std::vector<Expr>(static_cast<size_t>(J.cols), Expr::num(0)));
    M.A = blank;
    M.B = blank;
    M.C = blank;
    for (const auto& [key, c] : J.coeff) {
        auto [i, j, beta] = key;
        if (jet_order(c) > 0)
            throw NotSupported("operator coefficients must be restricted to a background");
        switch (beta.order()) {
            case 0: M.C[static_cast<size_t>(i)][static_cast<size_t>(j)] = c; break;
            case 1: M.B[static_cast<size_t>(i)][static_cast<size_t>(j)] = c; break;
            case 2: M.A[static_cast<size_t>(i)][static_cast<size_t>(j)] = c; break;
            default: break;
        }
    }
    return M;
}

double eval_at_t(const Expr& e, double t) {
    return eval(e, [&](const VarKey& k) -> double {
        if (k.kind == Kind::Coord && k.idx == 0) return t;
        throw EvalError("coefficient depends on more than the base coordinate");
    });
}

}  // namespace

JacobiOdeResult jacobi_ode_solve(const LinDiffOp& J, double t0, double t1,
                                 const BundleSpec& spec, const OdeOptions& opts) {
    CoeffMatrices M = extract_second_order(J, spec);
    int m = M.m;
    int dim = 2 * m * m;  // m columns, each with position and velocity blocks

    Ode ode;
    ode.dim = dim;
    ode.f = [&, m](double t, const Vec& y, Vec& dy) {
        std::vector<Vec> A(static_cast<size_t>(m), Vec(static_cast<size_t>(m)));
        std::vector<Vec> B = A, C = A;
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                A[i][j] = eval_at_t(M.A[static_cast<size_t>(i)][static_cast<size_t>(j)], t);
                B[i][j] = eval_at_t(M.B[static_cast<size_t>(i)][static_cast<size_t>(j)], t);
                C[i][j] = eval_at_t(M.C[static_cast<size_t>(i)][static_cast<size_t>(j)], t);
            }
        for (int col = 0; col < m; ++col) {
            const double* phi = y.data() + col * 2 * m;
            const double* dphi = phi + m;
            double* out_phi = dy.data() + col * 2 * m;
            double* out_dphi = out_phi + m;
            Vec rhs(static_cast<size_t>(m), 0.0);
            for (int i = 0; i < m; ++i) {
                double s = 0.0;
                for (int j = 0; j < m; ++j) s += B[i][j] * dphi[j] + C[i][j] * phi[j];
                rhs[static_cast<size_t>(i)] = -s;
            }
            Vec acc = solve_dense(A, rhs);
            for (int i = 0; i < m; ++i) {
                out_phi[i] = dphi[i];
                out_dphi[i] = acc[static_cast<size_t>(i)];
            }
        }
    };

    Vec y(static_cast<size_t>(dim), 0.0);
    for (int col = 0; col < m; ++col) y[static_cast<size_t>(col * 2 * m + m + col)] = 1.0;

    auto det_of = [m](const Vec& y_) {
        std::vector<Vec> Phi(static_cast<size_t>(m), Vec(static_cast<size_t>(m)));
        for (int col = 0; col < m; ++col)
            for (int i = 0; i < m; ++i) Phi[static_cast<size_t>(i)][static_cast<size_t>(col)] =
                y_[static_cast<size_t>(col * 2 * m + i)];
        return det_dense(Phi);
    };

    std::vector<StepRecord> trace;
    trace.push_back({t0, y});
    double t = t0;
    rk45(ode, t, y, t1, opts, &trace);

    JacobiOdeResult out;
    for (const auto& rec : trace) {
        out.ts.push_back(rec.t);
        out.dets.push_back(det_of(rec.y));
    }

    // establish the initial sign once det leaves the trivial zero at t0
    double scale = 0.0;
    for (double d : out.dets) scale = std::max(scale, std::abs(d));
    double thresh = 1e-8 * std::max(scale, 1e-300);
    int sign = 0;
    for (size_t k = 1; k < trace.size(); ++k) {
        double d = out.dets[k];
        if (sign == 0) {
            if (std::abs(d) > thresh) sign = d > 0 ? 1 : -1;
            continue;
        }
        if (d * sign >= 0) continue;
        // bisect inside (ts[k-1], ts[k])
        double ta = out.ts[k - 1];
        Vec ya = trace[k - 1].y;
        double tb = out.ts[k];
        double da = out.dets[k - 1];
        for (int it = 0; it < 80 && tb - ta > 1e-9; ++it) {
            double tmgoal = 0.5 * (ta + tb);
            Vec ym = ya;
            double tcur = ta;
            rk45(ode, tcur, ym, tmgoal, opts, nullptr);
            double dm = det_of(ym);
            if (dm * da >= 0) {
                ta = tmgoal;
                ya = ym;
                da = dm;
            } else {
                tb = tmgoal;
            }
        }
        out.conjugate_points.push_back(0.5 * (ta + tb));
        sign = -sign;
    }
    return out;
}

std::optional<double> first_zero(const LinDiffOp& J, double w0, double dw0, double t0, double t1,
                                 const BundleSpec& spec, const OdeOptions& opts) {
    CoeffMatrices M = extract_second_order(J, spec);
    if (M.m != 1) throw NotSupported("first_zero expects a scalar operator");
    Ode ode;
    ode.dim = 2;
    ode.f = [&](double t, const Vec& y, Vec& dy) {
        double a = eval_at_t(M.A[0][0], t);
        double b = eval_at_t(M.B[0][0], t);
        double c = eval_at_t(M.C[0][0], t);
        if (std::abs(a) < 1e-14) throw IntegrationFailure("degenerate leading coefficient");
        dy[0] = y[1];
        dy[1] = -(b * y[1] + c * y[0]) / a;
    };
    Vec y{w0, dw0};
    std::vector<StepRecord> trace;
    trace.push_back({t0, y});
    double t = t0;
    rk45(ode, t, y, t1, opts, &trace);

    double scale = 0.0;
    for (const auto& r : trace) scale = std::max(scale, std::abs(r.y[0]));
    double thresh = 1e-10 * std::max(scale, 1e-300);
    int sign = 0;
    for (size_t k = 0; k < trace.size(); ++k) {
        double w = trace[k].y[0];
        if (sign == 0) {
            if (std::abs(w) > thresh) sign = w > 0 ? 1 : -1;
            continue;
        }
        if (w * sign >= 0) continue;
        double ta = trace[k - 1].t, tb = trace[k].t;
        Vec ya = trace[k - 1].y;
        double wa = trace[k - 1].y[0];
        for (int it = 0; it < 80 && tb - ta > 1e-9; ++it) {
            double tm = 0.5 * (ta + tb);
            Vec ym = ya;
            double tc = ta;
            rk45(ode, tc, ym, tm, opts, nullptr);
            if (ym[0] * wa >= 0) {
                ta = tm;
                ya = ym;
                wa = ym[0];
            } else {
                tb = tm;
            }
        }
        return 0.5 * (ta + tb);
    }
    return std::nullopt;
}

}  // namespace varseq
