#include "dcrm/oracle.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include <Eigen/Dense>

#include "dcrm/error.hpp"

namespace dcrm {
namespace oracle {

namespace {

// Gauss-Jacobi rule on (0,1) for the weight b^(A-1) (1-b)^(C-1), normalized
// so the weights sum to one. The endpoint singularities of the beta
// innovation density are absorbed by the weight function, leaving a smooth
// integrand; nodes come from the Golub-Welsch eigenproblem.
struct BetaRule {
    std::vector<double> b;
    std::vector<double> w;
};

BetaRule beta_rule(double A, double C, int m) {
    const double a = C - 1.0; // exponent on (1-x) after mapping to (-1,1)
    const double b = A - 1.0; // exponent on (1+x)
    Eigen::VectorXd diag(m), sub(m - 1);
    for (int i = 0; i < m; ++i) {
        if (i == 0) {
            diag(0) = (b - a) / (a + b + 2.0);
        } else {
            double s = 2.0 * i + a + b;
            diag(i) = (b * b - a * a) / (s * (s + 2.0));
        }
    }
    for (int i = 1; i < m; ++i) {
        double bi;
        if (i == 1) {
            double s = a + b + 2.0;
            bi = 4.0 * (a + 1.0) * (b + 1.0) / (s * s * (s + 1.0));
        } else {
            double s = 2.0 * i + a + b;
            bi = 4.0 * i * (i + a) * (i + b) * (i + a + b) / (s * s * (s + 1.0) * (s - 1.0));
        }
        sub(i - 1) = std::sqrt(bi);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub);
    if (es.info() != Eigen::Success)
        throw convergence_error("beta quadrature rule: eigen decomposition failed");

    BetaRule rule;
    rule.b.resize(static_cast<size_t>(m));
    rule.w.resize(static_cast<size_t>(m));
    double total = 0.0;
    for (int k = 0; k < m; ++k) {
        rule.b[static_cast<size_t>(k)] = 0.5 * (1.0 + es.eigenvalues()(k));
        double v = es.eigenvectors()(0, k);
        rule.w[static_cast<size_t>(k)] = v * v;
        total += v * v;
    }
    for (double& w : rule.w) w /= total;
    return rule;
}

// The smallest beta node scales like 1/m^2, and that node caps how far out
// the discrete mixture can reproduce the heavy polynomial tail the second
// moment needs when the inverse-gamma shape is close to two. 48 nodes leave
// a ~1e-3 variance error per transition step; 768 bring it near 2e-5.
constexpr int kRuleNodes = 768;

// One transition step in mixture form: the one-step-ahead density is
//   p(u) = sum_k w[k] * pi(u * r[k]) * r[k]
// where pi is the previous posterior density. The count chain has
// u = s B / q (so r = q / b); the severity chain has u = s q* / B
// (so r = b / q*). A frozen step copies the density.
struct Step {
    bool evolve = true;
    std::vector<double> r;
    std::vector<double> w;
};

Step freq_step(double q, double alpha) {
    Step st;
    if (q >= 1.0 - 1e-12) {
        st.r = {1.0};
        st.w = {1.0};
        return st;
    }
    BetaRule rule = beta_rule(q * alpha, (1.0 - q) * alpha, kRuleNodes);
    st.w = rule.w;
    st.r.resize(rule.b.size());
    for (size_t k = 0; k < rule.b.size(); ++k) st.r[k] = q / rule.b[k];
    return st;
}

Step sev_step(const QStep& qs, double alpha) {
    Step st;
    if (qs.q_t >= 1.0 - 1e-12) {
        st.r = {1.0 / qs.q_star};
        st.w = {1.0};
        return st;
    }
    BetaRule rule = beta_rule(qs.q_t * alpha, (1.0 - qs.q_t) * alpha, kRuleNodes);
    st.w = rule.w;
    st.r.resize(rule.b.size());
    for (size_t k = 0; k < rule.b.size(); ++k) st.r[k] = rule.b[k] / qs.q_star;
    return st;
}

Step frozen_step() {
    Step st;
    st.evolve = false;
    return st;
}

// Log-spaced grid with composite-Simpson integration weights (point count
// forced odd). Interior densities are recovered by cubic interpolation in the
// log abscissa.
struct LogGrid {
    std::vector<double> theta;
    std::vector<double> cell;
    double x0, h;
    int n;

    LogGrid(double lo, double hi, int points) {
        n = points | 1; // Simpson needs an even interval count
        x0 = std::log(lo);
        h = (std::log(hi) - x0) / (n - 1);
        theta.resize(static_cast<size_t>(n));
        cell.resize(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) {
            theta[static_cast<size_t>(i)] = std::exp(x0 + i * h);
            double c = (i == 0 || i == n - 1) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
            cell[static_cast<size_t>(i)] = c * h / 3.0 * theta[static_cast<size_t>(i)];
        }
    }

    double interp(const std::vector<double>& d, double th) const {
        double x = (std::log(th) - x0) / h;
        if (x < 0.0 || x > n - 1) return 0.0;
        int i = static_cast<int>(x) - 1;
        i = std::max(0, std::min(i, n - 4));
        double u = x - i;
        // cubic Lagrange on nodes i..i+3 (local offsets 0..3)
        double l0 = -(u - 1.0) * (u - 2.0) * (u - 3.0) / 6.0;
        double l1 = u * (u - 2.0) * (u - 3.0) / 2.0;
        double l2 = -u * (u - 1.0) * (u - 3.0) / 2.0;
        double l3 = u * (u - 1.0) * (u - 2.0) / 6.0;
        double v = l0 * d[static_cast<size_t>(i)] + l1 * d[static_cast<size_t>(i + 1)] +
                   l2 * d[static_cast<size_t>(i + 2)] + l3 * d[static_cast<size_t>(i + 3)];
        return std::max(v, 0.0);
    }
};

GridPosterior summarize(const LogGrid& grid, const std::vector<double>& density) {
    GridPosterior post;
    post.theta = grid.theta;
    post.weight.resize(density.size());
    double total = 0.0;
    for (size_t i = 0; i < density.size(); ++i) {
        post.weight[i] = density[i] * grid.cell[i];
        total += post.weight[i];
    }
    if (!(total > 0.0)) throw convergence_error("grid posterior has zero mass");
    double m1 = 0.0, m2 = 0.0;
    for (size_t i = 0; i < post.weight.size(); ++i) {
        post.weight[i] /= total;
        m1 += post.weight[i] * post.theta[i];
        m2 += post.weight[i] * post.theta[i] * post.theta[i];
    }
    post.mean = m1;
    post.variance = m2 - m1 * m1;
    post.log_joint = std::log(total);
    return post;
}

using ObsLoglik = std::function<double(int t, double theta)>;

// The random-effect posteriors can have polynomial right tails, so the
// truncated mass and second moment are bounded by geometric extrapolation of
// the per-log-theta contribution at the grid edges. 0 = fine, -1 = widen the
// left edge, +1 = widen the right edge.
int tail_verdict(const LogGrid& grid, const std::vector<double>& density, double tol) {
    const size_t n = density.size();
    double mass = 0.0, m2 = 0.0;
    for (size_t i = 0; i < n; ++i) {
        mass += density[i] * grid.cell[i];
        m2 += density[i] * grid.theta[i] * grid.theta[i] * grid.cell[i];
    }
    // decay rate measured over a ~0.2 log-theta stencil (single-node ratios
    // are too close to one on fine grids)
    size_t k = std::max<size_t>(1, static_cast<size_t>(0.2 / grid.h));
    k = std::min(k, n / 4);
    auto side_ok = [&](size_t edge, size_t inner) {
        // per-log-theta contributions g = density * theta (mass) and
        // s = g * theta^2 (second moment)
        double g0 = density[edge] * grid.theta[edge];
        double g1 = density[inner] * grid.theta[inner];
        double s0 = g0 * grid.theta[edge] * grid.theta[edge];
        double s1 = g1 * grid.theta[inner] * grid.theta[inner];
        double dist = static_cast<double>(k) * grid.h;
        auto tail_small = [&](double c0, double c1, double total) {
            if (c0 <= 0.0) return true;
            if (!(c1 > 0.0)) return false;
            double gamma = std::log(c1 / c0) / dist; // exponential decay rate
            if (!(gamma > 0.05)) return false;       // too flat to bound
            return c0 / gamma <= tol * total;        // integral of c0 e^(-gamma x)
        };
        return tail_small(g0, g1, mass) && tail_small(s0, s1, m2);
    };
    if (!side_ok(0, k)) return -1;
    if (!side_ok(n - 1, n - 1 - k)) return +1;
    return 0;
}

std::vector<GridPosterior> grid_filter(const std::function<double(double)>& prior,
                                       const std::vector<Step>& steps, const ObsLoglik& obs,
                                       double center, const GridConfig& cfg) {
    const int periods = static_cast<int>(steps.size());
    double span_lo = 1e4, span_hi = 1e6; // asymmetric: right tails are heavy
    int n_points = cfg.n;
    for (int attempt = 0; attempt <= cfg.max_refine; ++attempt) {
        LogGrid grid(center / span_lo, center * span_hi, n_points);
        const size_t n = grid.theta.size();
        std::vector<double> density(n);
        for (size_t i = 0; i < n; ++i) density[i] = prior(grid.theta[i]);
        bool density_is_prior = true;

        if (periods == 0) return {summarize(grid, density)}; // the prior itself

        std::vector<GridPosterior> out;
        int verdict = 0;
        for (int t = 1; t <= periods && verdict == 0; ++t) {
            const Step& st = steps[static_cast<size_t>(t - 1)];
            std::vector<double> predictive;
            if (st.evolve) {
                predictive.assign(n, 0.0);
                for (size_t i = 0; i < n; ++i) {
                    double acc = 0.0;
                    for (size_t k = 0; k < st.r.size(); ++k) {
                        double arg = grid.theta[i] * st.r[k];
                        double pi = density_is_prior ? prior(arg) : grid.interp(density, arg);
                        acc += st.w[k] * pi * st.r[k];
                    }
                    predictive[i] = acc;
                }
            } else {
                predictive = density;
            }
            for (size_t i = 0; i < n; ++i)
                predictive[i] *= std::exp(obs(t, grid.theta[i]));
            density = std::move(predictive);
            density_is_prior = false;

            verdict = tail_verdict(grid, density, cfg.tail_mass);
            if (verdict == 0) out.push_back(summarize(grid, density));
        }
        if (verdict == 0) return out;
        if (verdict < 0) span_lo *= 256.0;
        if (verdict > 0) span_hi *= 256.0;
        n_points = std::min(2 * n_points, 32769); // keep the log spacing fine
    }
    throw convergence_error("grid filter: insufficient tail mass after refinement");
}

} // namespace

std::vector<GridPosterior> quadrature_filter_freq(const FreqParams& params,
                                                  std::span<const long long> counts,
                                                  const GridConfig& cfg) {
    // shape path of the transition kernels (model arithmetic, not the
    // posterior claim being verified)
    std::vector<Step> steps(counts.size());
    double alpha = params.alpha0;
    for (size_t t = 0; t < counts.size(); ++t) {
        steps[t] = freq_step(params.q, alpha);
        alpha = params.q * alpha + static_cast<double>(counts[t]);
    }
    auto prior = [&](double th) {
        return std::exp(log_pdf_gamma(th, params.alpha0, params.beta0));
    };
    auto obs = [&](int t, double th) {
        return log_pmf_poisson(counts[static_cast<size_t>(t - 1)], params.rate(t) * th);
    };
    return grid_filter(prior, steps, obs, params.alpha0 / params.beta0, cfg);
}

std::vector<GridPosterior> quadrature_filter_sev(const SevParams& params,
                                                 std::span<const double> ys,
                                                 const GridConfig& cfg) {
    std::vector<Step> steps(ys.size());
    double alpha = params.alpha0;
    for (size_t t = 0; t < ys.size(); ++t) {
        QStep qs = q_step(params.schedule, alpha);
        steps[t] = sev_step(qs, alpha);
        alpha = qs.q_t * alpha + 1.0 / params.psi;
    }
    auto prior = [&](double th) {
        return std::exp(log_pdf_inverse_gamma(th, params.alpha0, params.beta0));
    };
    auto obs = [&](int t, double th) {
        return log_pdf_gamma(ys[static_cast<size_t>(t - 1)], 1.0 / params.psi,
                             1.0 / (th * params.rate(t) * params.psi));
    };
    return grid_filter(prior, steps, obs, params.beta0 / (params.alpha0 - 1.0), cfg);
}

CrmGridResult quadrature_filter(std::span<const Period> history, const CrmParams& params,
                                const GridConfig& cfg) {
    // frequency chain
    std::vector<Step> steps1(history.size());
    double a1 = params.alpha0_1;
    for (size_t t = 0; t < history.size(); ++t) {
        steps1[t] = freq_step(params.q1, a1);
        a1 = params.q1 * a1 + static_cast<double>(history[t].y1);
    }
    auto prior1 = [&](double th) {
        return std::exp(log_pdf_gamma(th, params.alpha0_1, params.beta0_1));
    };
    auto obs1 = [&](int t, double th) {
        const Period& p = history[static_cast<size_t>(t - 1)];
        return log_pmf_poisson(p.y1, rates(params, p.x).lambda1 * th);
    };

    CrmGridResult res;
    res.freq = grid_filter(prior1, steps1, obs1, params.alpha0_1 / params.beta0_1, cfg);

    // severity chain; frozen on zero-claim periods for the three-part variants
    QSchedule sched = params.severity_schedule();
    std::vector<Step> steps2(history.size());
    double a2 = params.alpha0_2;
    for (size_t t = 0; t < history.size(); ++t) {
        if (history[t].y1 == 0 && params.freezes_severity_on_zero()) {
            steps2[t] = frozen_step();
        } else {
            QStep qs = q_step(sched, a2);
            steps2[t] = sev_step(qs, a2);
            a2 = qs.q_t * a2 + static_cast<double>(history[t].y1) / params.psi2;
        }
    }
    auto prior2 = [&](double th) {
        return std::exp(log_pdf_inverse_gamma(th, params.alpha0_2, params.beta0_2));
    };
    auto obs2 = [&](int t, double th) {
        const Period& p = history[static_cast<size_t>(t - 1)];
        if (p.y1 == 0) return 0.0; // no severity information
        double lam2 = lambda2(params, rates(params, p.x).lambda2_star, p.y1);
        return log_pdf_gamma(p.y2, static_cast<double>(p.y1) / params.psi2,
                             1.0 / (th * lam2 * params.psi2));
    };
    res.sev = grid_filter(prior2, steps2, obs2, params.beta0_2 / (params.alpha0_2 - 1.0), cfg);
    return res;
}

namespace {

PfEstimate weighted_summary(const std::vector<double>& x, const std::vector<double>& w) {
    double m1 = 0.0, m2 = 0.0, w2 = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        m1 += w[i] * x[i];
        m2 += w[i] * x[i] * x[i];
        w2 += w[i] * w[i];
    }
    PfEstimate e;
    e.mean = m1;
    e.variance = std::max(m2 - m1 * m1, 0.0);
    e.ess = 1.0 / w2;
    e.mean_se = std::sqrt(e.variance / std::max(e.ess, 1.0));
    return e;
}

void systematic_resample(std::vector<double>& th1, std::vector<double>& th2,
                         std::vector<double>& w, Rng& rng) {
    const size_t n = w.size();
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double u0 = unif(rng) / static_cast<double>(n);
    std::vector<double> n1(n), n2(n);
    double cum = w[0];
    size_t j = 0;
    for (size_t i = 0; i < n; ++i) {
        double u = u0 + static_cast<double>(i) / static_cast<double>(n);
        while (cum < u && j + 1 < n) cum += w[++j];
        n1[i] = th1[j];
        n2[i] = th2[j];
    }
    th1 = std::move(n1);
    th2 = std::move(n2);
    std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(n));
}

} // namespace

PfResult particle_filter(std::span<const Period> history, const CrmParams& params,
                         int n_particles, Rng& rng) {
    if (n_particles < 1000) throw domain_error("need at least 1000 particles");
    const size_t n = static_cast<size_t>(n_particles);

    std::vector<double> th1(n), th2(n), w(n, 1.0 / static_cast<double>(n));
    for (size_t i = 0; i < n; ++i) {
        th1[i] = sample(Gamma{params.alpha0_1, params.beta0_1}, rng);
        th2[i] = sample(InverseGamma{params.alpha0_2, params.beta0_2}, rng);
    }

    // filtering shape paths from the model recursion (transition parameters)
    double a1 = params.alpha0_1;
    double a2 = params.alpha0_2;
    QSchedule sched = params.severity_schedule();

    PfResult res;
    for (const Period& obs : history) {
        Rates r = rates(params, obs.x);
        bool evolve2 = !(obs.y1 == 0 && params.freezes_severity_on_zero());
        QStep qs{1.0, 1.0, false};
        if (evolve2) qs = q_step(sched, a2);

        double max_lw = -std::numeric_limits<double>::infinity();
        std::vector<double> lw(n);
        for (size_t i = 0; i < n; ++i) {
            if (params.q1 < 1.0) {
                double b1 = sample(Beta{params.q1 * a1, (1.0 - params.q1) * a1}, rng);
                th1[i] = th1[i] * b1 / params.q1;
            }
            if (evolve2 && qs.q_t < 1.0) {
                double b2 = sample(Beta{qs.q_t * a2, (1.0 - qs.q_t) * a2}, rng);
                th2[i] = th2[i] * qs.q_star / b2;
            } else if (evolve2) {
                th2[i] = th2[i] * qs.q_star;
            }
            double l = log_pmf_poisson(obs.y1, r.lambda1 * th1[i]);
            if (obs.y1 >= 1) {
                double lam2 = lambda2(params, r.lambda2_star, obs.y1);
                l += log_pdf_gamma(obs.y2, static_cast<double>(obs.y1) / params.psi2,
                                   1.0 / (th2[i] * lam2 * params.psi2));
            }
            lw[i] = std::log(w[i]) + l;
            max_lw = std::max(max_lw, lw[i]);
        }
        double total = 0.0;
        for (size_t i = 0; i < n; ++i) {
            w[i] = std::exp(lw[i] - max_lw);
            total += w[i];
        }
        for (size_t i = 0; i < n; ++i) w[i] /= total;

        PfEstimate e1 = weighted_summary(th1, w);
        PfEstimate e2 = weighted_summary(th2, w);
        if (e1.ess < 0.01 * static_cast<double>(n))
            throw convergence_error("particle filter: weight degeneracy");
        res.freq.push_back(e1);
        res.sev.push_back(e2);

        if (e1.ess < 0.5 * static_cast<double>(n)) systematic_resample(th1, th2, w, rng);

        a1 = params.q1 * a1 + static_cast<double>(obs.y1);
        if (evolve2) a2 = qs.q_t * a2 + static_cast<double>(obs.y1) / params.psi2;
    }
    return res;
}

namespace {

TransitionCheck summarize_draws(const std::vector<double>& x) {
    const double n = static_cast<double>(x.size());
    double m1 = 0.0;
    for (double v : x) m1 += v;
    m1 /= n;
    double m2 = 0.0, m4 = 0.0;
    for (double v : x) {
        double d = v - m1;
        m2 += d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m4 /= n;
    TransitionCheck c;
    c.mean = m1;
    c.mean_se = std::sqrt(m2 / n);
    c.variance = m2;
    c.variance_se = std::sqrt(std::max(m4 - m2 * m2, 0.0) / n);
    return c;
}

} // namespace

TransitionCheck transition_check_gamma(const Gamma& law, double q, int n_draws, Rng& rng) {
    if (n_draws < 100000) throw domain_error("need at least 1e5 draws");
    std::vector<double> draws(static_cast<size_t>(n_draws));
    for (double& d : draws) {
        double th = sample(law, rng);
        double b = sample(Beta{q * law.shape, (1.0 - q) * law.shape}, rng);
        d = th * b / q;
    }
    return summarize_draws(draws);
}

TransitionCheck transition_check_ig(const InverseGamma& law, const QSchedule& schedule,
                                    int n_draws, Rng& rng) {
    if (n_draws < 100000) throw domain_error("need at least 1e5 draws");
    QStep qs = q_step(schedule, law.shape);
    std::vector<double> draws(static_cast<size_t>(n_draws));
    for (double& d : draws) {
        double th = sample(law, rng);
        double b = sample(Beta{qs.q_t * law.shape, (1.0 - qs.q_t) * law.shape}, rng);
        d = th * qs.q_star / b;
    }
    return summarize_draws(draws);
}

} // namespace oracle
} // namespace dcrm
