// End-to-end acceptance run: one PASS/FAIL line per criterion, exit status
// nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <numeric>
#include <sstream>
#include <string>

#include "cli.hpp"
#include "lstmdssm/error.hpp"
#include "lstmdssm/eval.hpp"
#include "lstmdssm/grad_check.hpp"
#include "lstmdssm/lstm.hpp"
#include "lstmdssm/ranking_loss.hpp"
#include "lstmdssm/rng.hpp"
#include "lstmdssm/synthetic.hpp"
#include "lstmdssm/trainer.hpp"

using namespace lstmdssm;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void report(int id, const char* name, const std::function<Outcome()>& body) {
    const auto start = Clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    if (!o.pass) ++failures;
    std::printf("[%s] %2d %-28s %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str(),
                secs);
    std::fflush(stdout);
}

std::string fmt(const char* format, auto... args) {
    char buf[256];
    std::snprintf(buf, sizeof buf, format, args...);
    return buf;
}

// Shared by the retrieval, loss-decrease and BM25 criteria.
struct SyntheticRun {
    double init_ndcg1 = 0.0;
    EvalResult model;
    EvalResult bm25;
    TrainResult trained;
    double seconds = 0.0;
};

const SyntheticRun& synthetic_run() {
    static const SyntheticRun run = [] {
        const auto start = Clock::now();
        const auto data = make_synthetic_dataset(SyntheticSpec{});
        std::vector<WordSequence> corpus;
        for (const auto& inst : data.train) {
            corpus.push_back(inst.query);
            corpus.push_back(inst.clicked);
        }
        const auto vocab = build_vocabulary(corpus);

        TrainConfig config;  // ncell 32, lr 0.05, momentum 0.9, 4 negatives, clip 5
        config.epochs = 50;

        SyntheticRun r;
        r.init_ndcg1 = evaluate_model(init_parameters({vocab.dimension(), config.ncell}, config.seed),
                                      data.heldout_judgments, vocab)
                           .at(1);
        r.trained = train(config, data.train, vocab);
        r.model = evaluate_model(r.trained.params, data.heldout_judgments, vocab);
        r.bm25 = evaluate_bm25(data.heldout_judgments);
        r.seconds = std::chrono::duration<double>(Clock::now() - start).count();
        return r;
    }();
    return run;
}

double brute_ndcg(std::vector<int> rel, std::size_t k) {
    auto dcg = [k](const std::vector<int>& r) {
        double s = 0.0;
        for (std::size_t i = 0; i < std::min(k, r.size()); ++i) {
            s += (std::pow(2.0, r[i]) - 1.0) / std::log2(static_cast<double>(i) + 2.0);
        }
        return s;
    };
    const double actual = dcg(rel);
    std::sort(rel.rbegin(), rel.rend());
    const double ideal = dcg(rel);
    return ideal == 0.0 ? 0.0 : actual / ideal;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// synth -> build-vocab -> train -> eval in dir. Returns the eval table, or
// empty if a step failed.
std::string cli_pipeline(const std::filesystem::path& dir, std::string& log) {
    std::filesystem::create_directories(dir);
    const auto d = dir.string();
    const std::vector<std::vector<std::string>> steps = {
        {"synth", "--out-dir", d, "--seed", "7"},
        {"build-vocab", "--corpus", d + "/train.tsv", "--out", d + "/vocab.txt"},
        {"train", "--data", d + "/train.tsv", "--vocab", d + "/vocab.txt", "--checkpoint",
         d + "/model.ckpt", "--loss-log", d + "/loss.tsv", "--epochs", "3", "--seed", "5"},
        {"eval", "--checkpoint", d + "/model.ckpt", "--vocab", d + "/vocab.txt", "--judgments",
         d + "/judgments.tsv", "--with-bm25"},
    };
    std::string table;
    for (const auto& args : steps) {
        std::ostringstream out, err;
        if (cli::run_cli(args, out, err) != 0) {
            log = args[0] + ": " + err.str();
            return {};
        }
        table = out.str();
    }
    return table;
}

}  // namespace

int main() {
    report(1, "parameter budget", [] {
        const auto n = count_parameters({37500, 96});
        return Outcome{n == 14437536ULL,
                       fmt("count_parameters(37500, 96) = %llu (%.1fM)",
                           static_cast<unsigned long long>(n), static_cast<double>(n) / 1e6)};
    });

    report(2, "gradient fidelity", [] {
        const auto start = Clock::now();
        double worst = 0.0;
        std::size_t passed = 0;
        std::string worst_where = "-";
        for (std::uint64_t trial = 0; trial < 20; ++trial) {
            const auto c = make_gradcheck_case(1 + trial, {});
            const double gamma = trial % 2 == 0 ? 1.0 : 10.0;
            const auto r = check_gradients(c.params, c.instance, c.vocab, gamma, 1e-5, 1e-5);
            if (r.pass) ++passed;
            for (const auto& g : r.groups) {
                if (!(g.max_relative_error <= worst)) {
                    worst = g.max_relative_error;
                    worst_where = std::string(group_name(g.group));
                }
            }
        }
        const double secs = std::chrono::duration<double>(Clock::now() - start).count();
        return Outcome{passed == 20 && secs < 60.0,
                       fmt("%zu/20 trials, 15 groups each, max rel err %.2e (%s), %.1fs < 60s",
                           passed, worst, worst_where.c_str(), secs)};
    });

    report(3, "synthetic retrieval", [] {
        const auto& r = synthetic_run();
        return Outcome{r.model.at(1) >= 0.95 && r.seconds < 300.0,
                       fmt("held-out NDCG@1 %.3f >= 0.95 (untrained %.3f), @3 %.3f, @10 %.3f, "
                           "%.0fs < 300s",
                           r.model.at(1), r.init_ndcg1, r.model.at(3), r.model.at(10), r.seconds)};
    });

    report(4, "loss decrease", [] {
        const auto& t = synthetic_run().trained;
        const bool finite = std::all_of(t.batches.begin(), t.batches.end(),
                                        [](const BatchRecord& b) { return std::isfinite(b.loss); });
        const double first = t.epoch_mean_loss.front();
        const double last = t.epoch_mean_loss.back();
        return Outcome{finite && last < first,
                       fmt("epoch mean batch loss %.3f -> %.3f over %zu epochs, %s", first, last,
                           t.epoch_mean_loss.size(), finite ? "all finite" : "NON-FINITE")};
    });

    report(5, "NDCG oracle", [] {
        Rng rng(555);
        double worst = 0.0;
        for (int draw = 0; draw < 1000; ++draw) {
            std::vector<int> rel(1 + uniform_index(rng, 20));
            for (int& g : rel) g = static_cast<int>(uniform_index(rng, 5));
            for (std::size_t k : kNdcgCutoffs) {
                worst = std::max(worst, std::abs(ndcg_at_k(rel, k) - brute_ndcg(rel, k)));
            }
        }
        const std::vector<int> example{0, 3};
        const double v = ndcg_at_k(example, 2);
        return Outcome{worst <= 1e-12 && std::abs(v - 0.63093) <= 1e-5,
                       fmt("max |diff| %.1e over 1000 lists x 3 cutoffs, [0,3]@2 = %.5f", worst, v)};
    });

    report(6, "memory preservation", [] {
        const ModelDims dims{20, 8};
        LstmParameters p(dims);
        for (double& v : p[Group::b3].values) v = -50.0;
        for (double& v : p[Group::b2].values) v = 50.0;
        Rng rng(66);
        std::vector<double> y(dims.ncell, 0.0), c(dims.ncell);
        for (double& v : c) v = uniform_real(rng, -2.0, 2.0);
        double worst = 0.0;
        for (int t = 0; t < 50; ++t) {
            SparseTermVector l{{}, dims.input_dim};
            for (std::uint32_t k = 0; k < dims.input_dim; ++k) {
                if (uniform_unit(rng) < 0.3) l.pairs.emplace_back(k, 1 + uniform_index(rng, 3));
            }
            const auto s = cell_step(p, l, y, c);
            for (std::size_t k = 0; k < dims.ncell; ++k) worst = std::max(worst, std::abs(s.c[k] - c[k]));
            y = s.y;
            c = s.c;
        }
        return Outcome{worst <= 1e-12, fmt("max |c(t) - c(t-1)| = %.1e over 50 steps", worst)};
    });

    report(7, "end-only error signal", [] {
        Rng rng(77);
        std::size_t nonzero = 0;
        const int traces = 50;
        for (int trial = 0; trial < traces; ++trial) {
            const ModelDims dims{1 + uniform_index(rng, 30), 1 + uniform_index(rng, 10)};
            auto p = init_parameters(dims, rng());
            for (Group g : kAllGroups) {
                for (double& v : p[g].values) v += uniform_real(rng, -0.5, 0.5);
            }
            std::vector<SparseTermVector> seq(1 + uniform_index(rng, 12));
            for (auto& l : seq) {
                l.dimension = dims.input_dim;
                for (std::uint32_t k = 0; k < dims.input_dim; ++k) {
                    if (uniform_unit(rng) < 0.3) l.pairs.emplace_back(k, 1 + uniform_index(rng, 3));
                }
            }
            const auto trace = embed_sequence(p, seq);
            const std::vector<double> zero(dims.ncell, 0.0);
            for (auto depth : {std::optional<std::size_t>{}, std::optional<std::size_t>{2}}) {
                const auto g = backward_sequence(p, trace, zero, depth);
                for (Group grp : kAllGroups) {
                    for (double v : g[grp].values) nonzero += v != 0.0;
                }
            }
        }
        return Outcome{nonzero == 0,
                       fmt("%zu nonzero entries across %d random traces (full and truncated)",
                           nonzero, traces)};
    });

    report(8, "determinism", [] {
        const auto root = std::filesystem::temp_directory_path() /
                          ("lstmdssm-acceptance-" + std::to_string(Clock::now().time_since_epoch().count()));
        std::string log_a, log_b;
        const auto a = cli_pipeline(root / "a", log_a);
        const auto b = cli_pipeline(root / "b", log_b);
        Outcome o;
        if (a.empty() || b.empty()) {
            o = {false, "pipeline failed: " + log_a + log_b};
        } else {
            const bool same_ckpt = slurp(root / "a" / "model.ckpt") == slurp(root / "b" / "model.ckpt");
            const bool same_table = a == b;
            o = {same_ckpt && same_table,
                 fmt("checkpoints %s, eval tables %s (synth -> build-vocab -> train -> eval, twice)",
                     same_ckpt ? "bitwise identical" : "DIFFER", same_table ? "identical" : "DIFFER")};
        }
        std::error_code ec;
        std::filesystem::remove_all(root, ec);
        return o;
    });

    report(9, "BM25 tie", [] {
        const std::vector<WordSequence> docs = {{"x", "x"}, {"x", "y"}, {"y", "z"}, {"z", "w"}};
        const double score = bm25_score({"x"}, docs[0], build_corpus_stats(docs));
        const auto& r = synthetic_run();
        return Outcome{std::abs(score - 0.95305) <= 1e-5 && r.bm25.at(1) < r.model.at(1),
                       fmt("example %.7f vs expected 0.95305 +- 1e-5 (ln2*4.4/3.2 = %.7f), "
                           "held-out NDCG@1 BM25 %.3f < model %.3f",
                           score, std::log(2.0) * 4.4 / 3.2, r.bm25.at(1), r.model.at(1))};
    });

    report(10, "softmax/cosine properties", [] {
        Rng rng(1010);
        double sum_err = 0.0, shift_err = 0.0, scale_err = 0.0;
        for (int draw = 0; draw < 1000; ++draw) {
            SimilaritySet s;
            s.clicked_sim = uniform_real(rng, -1, 1);
            s.negative_sims.resize(uniform_index(rng, 10));
            for (double& v : s.negative_sims) v = uniform_real(rng, -1, 1);
            s.gamma = uniform_real(rng, 0.1, 20.0);
            const auto p = posterior(s);
            sum_err = std::max(sum_err, std::abs(std::accumulate(p.begin(), p.end(), 0.0) - 1.0));

            const double shift = uniform_real(rng, -1, 1);
            auto t = s;
            t.clicked_sim += shift;
            for (double& v : t.negative_sims) v += shift;
            const auto q = posterior(t);
            for (std::size_t j = 0; j < p.size(); ++j) shift_err = std::max(shift_err, std::abs(p[j] - q[j]));

            std::vector<double> u(1 + uniform_index(rng, 32)), v(u.size());
            for (double& x : u) x = uniform_real(rng, -1, 1);
            for (double& x : v) x = uniform_real(rng, -1, 1);
            const double base = cosine_similarity(u, v);
            const double a = std::exp(uniform_real(rng, -6, 6));
            const double b = std::exp(uniform_real(rng, -6, 6));
            for (double& x : u) x *= a;
            for (double& x : v) x *= b;
            scale_err = std::max(scale_err, std::abs(cosine_similarity(u, v) - base));
        }
        return Outcome{sum_err <= 1e-12 && shift_err <= 1e-12 && scale_err <= 1e-12,
                       fmt("1000 draws: |sum-1| %.1e, shift %.1e, scale %.1e (all <= 1e-12)",
                           sum_err, shift_err, scale_err)};
    });

    std::printf("%d of 10 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
