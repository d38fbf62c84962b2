#include "dcrm/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "dcrm/error.hpp"
#include "dcrm/parallel.hpp"

namespace dcrm {

std::string to_string(Benchmark b) {
    switch (b) {
        case Benchmark::Naive: return "naive";
        case Benchmark::Dglm: return "dglm";
        case Benchmark::Static: return "static";
        case Benchmark::Proposed: return "proposed";
    }
    return "proposed";
}

Benchmark benchmark_from_string(const std::string& s) {
    if (s == "naive") return Benchmark::Naive;
    if (s == "dglm") return Benchmark::Dglm;
    if (s == "static") return Benchmark::Static;
    if (s == "proposed") return Benchmark::Proposed;
    throw domain_error("unknown benchmark: " + s);
}

double portfolio_loglik(std::span<const PolicySeries> data, const CrmParams& params,
                        int threads) {
    return parallel_sum(data.size(), threads,
                        [&](std::size_t i) { return loglik(data[i], params); });
}

double independence_loglik(std::span<const PolicySeries> data, const CrmParams& params,
                           int threads) {
    auto one = [&](std::size_t i) {
        double ll = 0.0;
        for (const Period& obs : data[i]) {
            check_two_part(obs);
            Rates r = rates(params, obs.x);
            ll += log_pmf_poisson(obs.y1, r.lambda1);
            if (obs.y1 >= 1) {
                double lam2 = lambda2(params, r.lambda2_star, obs.y1);
                ll += log_pdf_gamma(obs.y2, static_cast<double>(obs.y1) / params.psi2,
                                    1.0 / (lam2 * params.psi2));
            }
        }
        return ll;
    };
    return parallel_sum(data.size(), threads, one);
}

namespace optim {

std::vector<double> fd_gradient(const std::function<double(std::span<const double>)>& f,
                                std::span<const double> x) {
    std::vector<double> g(x.size());
    std::vector<double> xp(x.begin(), x.end());
    for (size_t i = 0; i < x.size(); ++i) {
        double h = 1e-5 * (1.0 + std::fabs(x[i]));
        double orig = xp[i];
        xp[i] = orig + h;
        double fp = f(xp);
        xp[i] = orig - h;
        double fm = f(xp);
        xp[i] = orig;
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

Result nelder_mead(const std::function<double(std::span<const double>)>& f,
                   std::span<const double> x0, double scale, int max_iter, double tol) {
    const size_t n = x0.size();
    std::vector<std::vector<double>> simplex(n + 1, std::vector<double>(x0.begin(), x0.end()));
    for (size_t i = 0; i < n; ++i) simplex[i + 1][i] += scale;
    std::vector<double> fv(n + 1);
    int evals = 0;
    for (size_t i = 0; i <= n; ++i) fv[i] = (++evals, f(simplex[i]));

    std::vector<size_t> order(n + 1);
    auto sort_simplex = [&] {
        std::iota(order.begin(), order.end(), size_t{0});
        std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return fv[a] < fv[b]; });
    };

    Result res;
    for (int iter = 0; iter < max_iter; ++iter) {
        sort_simplex();
        size_t best = order[0], worst = order[n], second = order[n - 1];
        if (std::fabs(fv[worst] - fv[best]) <= tol * (std::fabs(fv[best]) + tol)) {
            res.converged = true;
            break;
        }
        // centroid of all but the worst
        std::vector<double> c(n, 0.0);
        for (size_t i = 0; i <= n; ++i) {
            if (i == worst) continue;
            for (size_t j = 0; j < n; ++j) c[j] += simplex[i][j];
        }
        for (double& v : c) v /= static_cast<double>(n);

        auto blend = [&](double t) {
            std::vector<double> p(n);
            for (size_t j = 0; j < n; ++j) p[j] = c[j] + t * (simplex[worst][j] - c[j]);
            return p;
        };

        std::vector<double> xr = blend(-1.0);
        double fr = (++evals, f(xr));
        if (fr < fv[best]) {
            std::vector<double> xe = blend(-2.0);
            double fe = (++evals, f(xe));
            if (fe < fr) { simplex[worst] = std::move(xe); fv[worst] = fe; }
            else { simplex[worst] = std::move(xr); fv[worst] = fr; }
        } else if (fr < fv[second]) {
            simplex[worst] = std::move(xr);
            fv[worst] = fr;
        } else {
            std::vector<double> xc = blend(fr < fv[worst] ? -0.5 : 0.5);
            double fc = (++evals, f(xc));
            if (fc < std::min(fr, fv[worst])) {
                simplex[worst] = std::move(xc);
                fv[worst] = fc;
            } else {
                // shrink toward the best vertex
                for (size_t i = 0; i <= n; ++i) {
                    if (i == best) continue;
                    for (size_t j = 0; j < n; ++j)
                        simplex[i][j] = simplex[best][j] + 0.5 * (simplex[i][j] - simplex[best][j]);
                    fv[i] = (++evals, f(simplex[i]));
                }
            }
        }
    }
    sort_simplex();
    res.x = simplex[order[0]];
    res.value = fv[order[0]];
    res.evaluations = evals;
    return res;
}

Result bfgs_refine(const std::function<double(std::span<const double>)>& f,
                   std::span<const double> x0, double grad_tol, int max_iter) {
    const size_t n = x0.size();
    std::vector<double> x(x0.begin(), x0.end());
    double fx = f(x);
    int evals = 1;
    std::vector<double> g = fd_gradient(f, x);
    evals += static_cast<int>(2 * n);

    // inverse Hessian approximation
    std::vector<std::vector<double>> H(n, std::vector<double>(n, 0.0));
    for (size_t i = 0; i < n; ++i) H[i][i] = 1.0;

    auto inf_norm = [](const std::vector<double>& v) {
        double m = 0.0;
        for (double a : v) m = std::max(m, std::fabs(a));
        return m;
    };

    Result res;
    for (int iter = 0; iter < max_iter; ++iter) {
        if (inf_norm(g) < grad_tol) {
            res.converged = true;
            break;
        }
        std::vector<double> d(n, 0.0);
        for (size_t i = 0; i < n; ++i)
            for (size_t j = 0; j < n; ++j) d[i] -= H[i][j] * g[j];

        double slope = std::inner_product(g.begin(), g.end(), d.begin(), 0.0);
        if (slope >= 0.0) { // reset to steepest descent
            for (size_t i = 0; i < n; ++i) {
                d[i] = -g[i];
                for (size_t j = 0; j < n; ++j) H[i][j] = (i == j) ? 1.0 : 0.0;
            }
            slope = -std::inner_product(g.begin(), g.end(), g.begin(), 0.0);
        }

        // backtracking Armijo search
        double step = 1.0;
        std::vector<double> xn(n);
        double fn = fx;
        bool ok = false;
        for (int ls = 0; ls < 50; ++ls) {
            for (size_t i = 0; i < n; ++i) xn[i] = x[i] + step * d[i];
            fn = (++evals, f(xn));
            if (std::isfinite(fn) && fn <= fx + 1e-4 * step * slope) {
                ok = true;
                break;
            }
            step *= 0.5;
        }
        if (!ok) break;

        std::vector<double> gn = fd_gradient(f, xn);
        evals += static_cast<int>(2 * n);
        std::vector<double> s(n), yv(n);
        for (size_t i = 0; i < n; ++i) {
            s[i] = xn[i] - x[i];
            yv[i] = gn[i] - g[i];
        }
        double sy = std::inner_product(s.begin(), s.end(), yv.begin(), 0.0);
        if (sy > 1e-12) {
            // BFGS inverse update
            std::vector<double> Hy(n, 0.0);
            for (size_t i = 0; i < n; ++i)
                for (size_t j = 0; j < n; ++j) Hy[i] += H[i][j] * yv[j];
            double yHy = std::inner_product(yv.begin(), yv.end(), Hy.begin(), 0.0);
            for (size_t i = 0; i < n; ++i)
                for (size_t j = 0; j < n; ++j)
                    H[i][j] += ((sy + yHy) * s[i] * s[j]) / (sy * sy) -
                               (Hy[i] * s[j] + s[i] * Hy[j]) / sy;
        }
        x = xn;
        fx = fn;
        g = std::move(gn);
    }
    res.x = x;
    res.value = fx;
    res.evaluations = evals;
    if (inf_norm(g) < grad_tol) res.converged = true;
    return res;
}

} // namespace optim

namespace {

double logit(double p) { return std::log(p / (1.0 - p)); }
double expit(double u) { return 1.0 / (1.0 + std::exp(-u)); }

// Natural-scale lower bound for the severity prior shape. The Standard
// schedule needs alpha > 2 for a valid beta transition; the EWMA schedule
// only needs alpha > 1.
double alpha2_floor(const CrmParams& p) {
    QSchedule s = p.severity_schedule();
    return s.kind == QScheduleKind::Standard ? 2.0 : 1.0;
}

CrmParams decode(const CrmParams& base, Benchmark b, std::span<const double> u) {
    CrmParams p = base;
    double floor2 = alpha2_floor(base);
    if (b == Benchmark::Proposed) {
        p.q1 = expit(u[0]);
        p.q2 = expit(u[1]);
        p.alpha0_1 = std::exp(u[2]);
        p.alpha0_2 = floor2 + std::exp(u[3]);
    } else { // Static
        p.q1 = 1.0;
        p.q2 = 1.0;
        p.alpha0_1 = std::exp(u[0]);
        p.alpha0_2 = floor2 + std::exp(u[1]);
    }
    p.beta0_1 = p.alpha0_1;
    p.beta0_2 = p.alpha0_2 - 1.0;
    return p;
}

std::vector<double> encode(const CrmParams& p, Benchmark b, double floor2) {
    if (b == Benchmark::Proposed)
        return {logit(p.q1), logit(p.q2), std::log(p.alpha0_1), std::log(p.alpha0_2 - floor2)};
    return {std::log(p.alpha0_1), std::log(p.alpha0_2 - floor2)};
}

} // namespace

FitResult fit_dependence(std::span<const PolicySeries> data, const CrmParams& base,
                         Benchmark benchmark, const OptimOptions& opts, int threads) {
    if (data.empty()) throw estimation_error("empty portfolio");
    bool any_claim = false;
    for (const auto& series : data)
        for (const auto& obs : series)
            if (obs.y1 > 0) any_claim = true;
    if (!any_claim)
        throw estimation_error("portfolio has no claims: severity parameters unidentifiable");

    FitResult res;
    res.benchmark = benchmark;

    if (benchmark == Benchmark::Naive || benchmark == Benchmark::Dglm) {
        CrmParams p = base;
        p.q1 = 1.0;
        p.q2 = 1.0;
        if (benchmark == Benchmark::Naive) p.eta = 0.0;
        res.params = p;
        res.loglik = independence_loglik(data, p, threads);
        res.converged = true;
        return res;
    }

    auto objective = [&](std::span<const double> u) {
        CrmParams p = decode(base, benchmark, u);
        try {
            return -portfolio_loglik(data, p, threads);
        } catch (const std::exception&) {
            return std::numeric_limits<double>::infinity();
        }
    };

    double floor2 = alpha2_floor(base);
    CrmParams start = base;
    start.q1 = std::clamp(base.q1, 0.05, 0.95);
    start.q2 = std::clamp(base.q2, 0.05, 0.95);
    start.alpha0_1 = base.alpha0_1 > 0.0 ? base.alpha0_1 : 1.0;
    start.alpha0_2 = base.alpha0_2 > floor2 ? base.alpha0_2 : floor2 + 1.0;

    std::vector<std::vector<double>> starts;
    starts.push_back(encode(start, benchmark, floor2));
    for (const auto& s : opts.starts) {
        CrmParams p = base;
        if (benchmark == Benchmark::Proposed && s.size() == 4) {
            p.q1 = s[0]; p.q2 = s[1]; p.alpha0_1 = s[2]; p.alpha0_2 = s[3];
            starts.push_back(encode(p, benchmark, floor2));
        } else if (benchmark == Benchmark::Static && s.size() == 2) {
            p.alpha0_1 = s[0]; p.alpha0_2 = s[1];
            starts.push_back(encode(p, benchmark, floor2));
        }
    }

    optim::Result best;
    best.value = std::numeric_limits<double>::infinity();
    int evals = 0;
    for (const auto& x0 : starts) {
        optim::Result nm = optim::nelder_mead(objective, x0, 0.5, opts.max_iter, opts.tol);
        evals += nm.evaluations;
        optim::Result qb = optim::bfgs_refine(objective, nm.x, opts.grad_tol, 200);
        evals += qb.evaluations;
        if (qb.value < best.value) best = std::move(qb);
    }
    if (!std::isfinite(best.value)) throw convergence_error("dependence fit failed to converge");

    res.params = decode(base, benchmark, best.x);
    res.loglik = -best.value;
    res.converged = best.converged;
    res.evaluations = evals;
    auto g = optim::fd_gradient(objective, best.x);
    for (double v : g) res.grad_norm = std::max(res.grad_norm, std::fabs(v));
    res.boundary = benchmark == Benchmark::Proposed &&
                   (res.params.q1 > 0.999 || res.params.q2 > 0.999);
    return res;
}

} // namespace dcrm
