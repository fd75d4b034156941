#include <benchmark/benchmark.h>

#include "lstmdssm/eval.hpp"
#include "lstmdssm/lstm.hpp"
#include "lstmdssm/synthetic.hpp"
#include "lstmdssm/trainer.hpp"

using namespace lstmdssm;

namespace {

struct Fixture {
    SyntheticDataset data;
    TrigramVocabulary vocab;

    Fixture() {
        SyntheticSpec spec;
        spec.train_with_negatives = true;
        data = make_synthetic_dataset(spec);
        std::vector<WordSequence> corpus;
        for (const auto& inst : data.train) {
            corpus.push_back(inst.query);
            corpus.push_back(inst.clicked);
            for (const auto& n : inst.negatives) corpus.push_back(n);
        }
        vocab = build_vocabulary(corpus);
    }
};

const Fixture& fixture() {
    static const Fixture f;
    return f;
}

void BM_EmbedSequence(benchmark::State& state) {
    const auto& f = fixture();
    const auto ncell = static_cast<std::size_t>(state.range(0));
    const auto params = init_parameters({f.vocab.dimension(), ncell}, 1);
    const auto seq = hash_sequence(f.data.train[0].clicked, f.vocab);
    for (auto _ : state) {
        benchmark::DoNotOptimize(embed_sequence(params, seq).embedding.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(seq.size()));
}
BENCHMARK(BM_EmbedSequence)->Arg(32)->Arg(96)->Arg(288);

void BM_InstanceGradients(benchmark::State& state) {
    const auto& f = fixture();
    const auto params = init_parameters({f.vocab.dimension(), static_cast<std::size_t>(state.range(0))}, 1);
    const auto hashed = hash_instance(f.data.train[0], f.vocab);
    Gradients grads(params.dims());
    for (auto _ : state) {
        grads.set_zero();
        benchmark::DoNotOptimize(accumulate_instance_gradients(params, hashed, 1.0, std::nullopt, grads));
    }
}
BENCHMARK(BM_InstanceGradients)->Arg(32)->Arg(96);

void BM_TrainEpoch(benchmark::State& state) {
    const auto& f = fixture();
    TrainConfig config;
    for (auto _ : state) {
        benchmark::DoNotOptimize(train(config, f.data.train, f.vocab).steps);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.data.train.size()));
}
BENCHMARK(BM_TrainEpoch)->Unit(benchmark::kMillisecond);

void BM_EvaluateBm25(benchmark::State& state) {
    const auto& f = fixture();
    for (auto _ : state) {
        benchmark::DoNotOptimize(evaluate_bm25(f.data.heldout_judgments).mean_ndcg[0]);
    }
}
BENCHMARK(BM_EvaluateBm25);

void BM_NdcgAt10(benchmark::State& state) {
    const std::vector<int> grades = {0, 2, 4, 1, 0, 3, 0, 0, 1, 2, 0, 4};
    for (auto _ : state) benchmark::DoNotOptimize(ndcg_at_k(grades, 10));
}
BENCHMARK(BM_NdcgAt10);

}  // namespace

BENCHMARK_MAIN();
