// Serial reference vs OpenMP kernel for each parallel hot path.
//
//   mas_bench --benchmark_filter=verify
//
// Thread count follows OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include "mas/containment_index.hpp"
#include "mas/exact_mas.hpp"
#include "mas/masnet.hpp"
#include "mas/rng.hpp"
#include "mas/separation_lab.hpp"
#include "mas/set_distance.hpp"

using namespace mas;

namespace {

RealMultiset gaussian(Rng& rng, std::size_t size, std::size_t d)
{
    std::vector<double> flat(size * d);
    for (double& x : flat) x = rng.normal();
    return RealMultiset(d, std::move(flat));
}

EmbeddingMatrix projection()
{
    static const auto e = random_projection_mas(7, 2, projection_rows(7, 2), 1, 20).matrix;
    return e;
}

template <bool Parallel>
void verify(benchmark::State& state)
{
    const auto e = projection();
    for (auto _ : state) benchmark::DoNotOptimize(Parallel ? verify_mas(e, 3) : verify_mas_serial(e, 3));
}

std::vector<std::pair<RealMultiset, RealMultiset>> distance_pairs()
{
    Rng rng(2);
    std::vector<std::pair<RealMultiset, RealMultiset>> pairs;
    for (int i = 0; i < 2000; ++i) pairs.emplace_back(gaussian(rng, 6, 3), gaussian(rng, 12, 3));
    return pairs;
}

template <bool Parallel>
void distance(benchmark::State& state)
{
    const auto pairs = distance_pairs();
    for (auto _ : state) benchmark::DoNotOptimize(Parallel ? d_as_batch(pairs) : d_as_batch_serial(pairs));
}

template <bool Parallel>
void separation(benchmark::State& state)
{
    ExperimentConfig cfg;
    cfg.num_pairs = 8;
    cfg.num_param_draws = 20000;
    cfg.seed = 3;
    const auto pairs = generate_pairs(cfg);
    for (auto _ : state)
        benchmark::DoNotOptimize(Parallel ? run_separation_experiment(cfg, pairs)
                                          : run_separation_experiment_serial(cfg, pairs));
}

template <bool Parallel>
void index_scan(benchmark::State& state)
{
    const MasNet model(MasNetConfig::for_variant(Variant::hat_mas, 4, 64, 64), 4);
    Rng rng(4);
    Corpus corpus;
    for (int i = 0; i < 20000; ++i) corpus.emplace_back("t" + std::to_string(i), gaussian(rng, 8, 4));
    const auto idx = ContainmentIndex::build(model, corpus, {false, 0.0, 0});
    const auto fs = model.forward(gaussian(rng, 2, 4));
    for (auto _ : state)
        benchmark::DoNotOptimize(Parallel ? idx.query_embedding(fs) : idx.query_embedding_serial(fs));
}

template <bool Parallel>
void backward_pass(benchmark::State& state)
{
    const MasNet model(MasNetConfig::for_variant(Variant::hat_mas, 4, 256, 64), 5);
    SyntheticSpec spec;
    spec.num_pairs = 256;
    spec.seed = 5;
    const auto batch = generate_synthetic(spec);
    std::vector<double> grad;
    for (auto _ : state) {
        const double loss = Parallel ? backward(model, batch, 0.1, HingeForm::separating, grad)
                                     : backward_serial(model, batch, 0.1, HingeForm::separating, grad);
        benchmark::DoNotOptimize(loss);
    }
}

} // namespace

BENCHMARK(verify<false>)->Name("verify_mas/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(verify<true>)->Name("verify_mas/parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(distance<false>)->Name("d_as_batch/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(distance<true>)->Name("d_as_batch/parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(separation<false>)->Name("separation/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(separation<true>)->Name("separation/parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(index_scan<false>)->Name("index_scan/serial")->Unit(benchmark::kMicrosecond);
BENCHMARK(index_scan<true>)->Name("index_scan/parallel")->Unit(benchmark::kMicrosecond);
BENCHMARK(backward_pass<false>)->Name("backward/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(backward_pass<true>)->Name("backward/parallel")->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
