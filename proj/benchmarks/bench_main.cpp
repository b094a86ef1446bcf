#include <benchmark/benchmark.h>

#include <random>

#include <Eigen/Dense>

#include "missgraph/augmentation.hpp"
#include "missgraph/ggm.hpp"
#include "missgraph/imputation.hpp"
#include "missgraph/nonparanormal.hpp"
#include "missgraph/pipeline.hpp"
#include "missgraph/simulator.hpp"

using namespace missgraph;

namespace {

Eigen::MatrixXd random_correlation(Eigen::Index p, std::uint64_t seed) {
    std::mt19937_64 eng(seed);
    std::normal_distribution<double> nd;
    Eigen::MatrixXd f(p, p + 3);
    for (Eigen::Index i = 0; i < f.rows(); ++i)
        for (Eigen::Index j = 0; j < f.cols(); ++j) f(i, j) = nd(eng);
    Eigen::MatrixXd s = f * f.transpose();
    const Eigen::VectorXd d = s.diagonal().cwiseSqrt().cwiseInverse();
    s = d.asDiagonal() * s * d.asDiagonal();
    s.diagonal().setOnes();
    return 0.5 * (s + s.transpose());
}

GroundTruth mnar_truth(std::size_t p, std::size_t n) {
    GroundTruth t;
    for (std::size_t j = 0; j < p; ++j) t.variables.push_back({"v" + std::to_string(j)});
    t.precision = random_correlation(static_cast<Eigen::Index>(p), 1).inverse();
    t.n = n;
    t.seed = 3;
    t.mechanisms = {{Mechanism::MNAR, "v0", 0.3, {}, 1.5, 4}, {Mechanism::MCAR, "v1", 0.2, {}, 0.0, 5}};
    return t;
}

}  // namespace

void BM_Glasso(benchmark::State& state) {
    const Eigen::MatrixXd s = random_correlation(state.range(0), 7);
    for (auto _ : state) benchmark::DoNotOptimize(glasso(s, 0.1));
}
BENCHMARK(BM_Glasso)->Arg(10)->Arg(25)->Arg(50);

void BM_Nonparanormal(benchmark::State& state) {
    std::mt19937_64 eng(1);
    std::normal_distribution<double> nd;
    Eigen::MatrixXd x(state.range(0), 20);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = nd(eng);
    for (auto _ : state) benchmark::DoNotOptimize(nonparanormal_transform(x));
}
BENCHMARK(BM_Nonparanormal)->Arg(1000)->Arg(10000);

void BM_FitMember(benchmark::State& state) {
    const SimulatedData sim = simulate(mnar_truth(static_cast<std::size_t>(state.range(0)), 5000));
    const AugmentedDataset a = make_completeness_indicators(sim.data);
    const auto names = a.variables();
    std::vector<std::string> labels;
    for (const auto& v : names) labels.push_back(v.name);
    const TransformedMatrix t = nonparanormal_transform(hot_deck_impute(a, 9), labels);
    FitOptions o;
    o.seed = 11;
    for (auto _ : state) benchmark::DoNotOptimize(fit_precision(t, o));
}
BENCHMARK(BM_FitMember)->Arg(5)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_Analysis(benchmark::State& state) {
    const SimulatedData sim = simulate(mnar_truth(5, 5000));
    AnalysisOptions o;
    o.settings.n_imputations = 25;
    o.threads = 1;
    for (auto _ : state) benchmark::DoNotOptimize(run_analysis(sim.data, o));
}
BENCHMARK(BM_Analysis)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
