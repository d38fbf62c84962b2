// Throughput benchmarks for the hot paths: the closed-form filtering
// recursions, the portfolio log-likelihood (the optimizer's inner loop), and
// the quadrature oracle.

#include <cmath>
#include <vector>

#include <benchmark/benchmark.h>

#include "dcrm/crm.hpp"
#include "dcrm/fit.hpp"
#include "dcrm/oracle.hpp"

namespace {

const std::vector<double> kX{1.0};

dcrm::CrmParams make_params() {
    dcrm::CrmParams p;
    p.q1 = 0.8;
    p.q2 = 0.8;
    p.zeta1 = {std::log(0.4)};
    p.zeta2 = {std::log(2000.0)};
    p.eta = -0.3;
    p.psi2 = 1.2;
    return p;
}

std::vector<dcrm::PolicySeries> make_portfolio(int n_policies, int years, unsigned seed) {
    dcrm::CrmParams p = make_params();
    dcrm::Rng rng(seed);
    std::vector<std::vector<double>> xs(static_cast<size_t>(years), kX);
    std::vector<dcrm::PolicySeries> out;
    for (int i = 0; i < n_policies; ++i) {
        auto traj = dcrm::simulate(p, xs, years, rng);
        dcrm::PolicySeries series;
        for (const auto& step : traj) series.push_back(dcrm::Period{kX, step.y1, step.y2});
        out.push_back(std::move(series));
    }
    return out;
}

void BM_FilterUpdate(benchmark::State& state) {
    dcrm::CrmParams p = make_params();
    dcrm::Period obs{kX, 1, 1800.0};
    dcrm::CrmState s = dcrm::initial_state(p);
    for (auto _ : state) {
        dcrm::CrmState next = dcrm::update(s, p, kX, obs);
        benchmark::DoNotOptimize(next);
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_FilterUpdate);

void BM_PolicyLoglik(benchmark::State& state) {
    dcrm::CrmParams p = make_params();
    auto data = make_portfolio(1, static_cast<int>(state.range(0)), 7);
    for (auto _ : state) {
        double ll = dcrm::loglik(data[0], p);
        benchmark::DoNotOptimize(ll);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_PolicyLoglik)->Arg(5)->Arg(20);

void BM_PortfolioLoglik(benchmark::State& state) {
    dcrm::CrmParams p = make_params();
    auto data = make_portfolio(500, 5, 11);
    int threads = static_cast<int>(state.range(0));
    for (auto _ : state) {
        double ll = dcrm::portfolio_loglik(data, p, threads);
        benchmark::DoNotOptimize(ll);
    }
    state.SetItemsProcessed(state.iterations() * 500 * 5);
}
BENCHMARK(BM_PortfolioLoglik)->Arg(1)->Arg(4);

void BM_PremiumWeights(benchmark::State& state) {
    dcrm::CrmParams p = make_params();
    auto data = make_portfolio(1, 10, 13);
    std::vector<std::vector<double>> xs(10, kX);
    for (auto _ : state) {
        dcrm::PremiumWeights w = dcrm::premium_weights(data[0], xs, p, 11);
        benchmark::DoNotOptimize(w);
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_PremiumWeights);

void BM_QuadratureOracle(benchmark::State& state) {
    dcrm::FreqParams fp = dcrm::FreqParams::constant_rate(0.8, 1.0, 1.0, 0.4, 4);
    std::vector<long long> counts{1, 0, 2, 1};
    for (auto _ : state) {
        auto grid = dcrm::oracle::quadrature_filter_freq(fp, counts);
        benchmark::DoNotOptimize(grid);
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_QuadratureOracle);

} // namespace

BENCHMARK_MAIN();
