#include "lstmdssm/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <string>

#include "lstmdssm/error.hpp"
#include "lstmdssm/ranking_loss.hpp"
#include "lstmdssm/rng.hpp"

namespace lstmdssm {

namespace {

double squared_norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    return splitmix64(splitmix64(splitmix64(seed) ^ a) ^ b);
}

// Adds da (length ncell) into the gradient of one gate's W, Wrec and bias.
void accumulate_gate(std::span<const double> da, const SparseTermVector& input,
                     std::span<const double> y_prev, Tensor& gw, Tensor& gwrec, Tensor& gb) {
    const std::size_t n = da.size();
    for (const auto& [col, count] : input.pairs) {
        const double scale = static_cast<double>(count);
        for (std::size_t r = 0; r < n; ++r) gw(r, col) += scale * da[r];
    }
    for (std::size_t r = 0; r < n; ++r) {
        if (da[r] == 0.0) continue;
        double* row = &gwrec.values[r * n];
        for (std::size_t k = 0; k < n; ++k) row[k] += da[r] * y_prev[k];
        gb[r] += da[r];
    }
}

// out += W^T da for a square recurrent matrix.
void add_transposed_product(const Tensor& w, std::span<const double> da, std::vector<double>& out) {
    const std::size_t n = da.size();
    for (std::size_t r = 0; r < n; ++r) {
        if (da[r] == 0.0) continue;
        const double* row = &w.values[r * n];
        for (std::size_t k = 0; k < n; ++k) out[k] += row[k] * da[r];
    }
}

}  // namespace

HeadGradients loss_head_gradients(std::span<const double> y_q,
                                  std::span<const std::vector<double>> candidates, double gamma) {
    if (candidates.empty()) throw InputError("loss_head_gradients: no candidates");
    const std::size_t m = candidates.size();
    const double nq = std::sqrt(squared_norm(y_q));

    SimilaritySet sims;
    sims.gamma = gamma;
    std::vector<double> sim(m);
    for (std::size_t j = 0; j < m; ++j) {
        sim[j] = cosine_similarity(y_q, candidates[j]);
        if (j == 0) {
            sims.clicked_sim = sim[j];
        } else {
            sims.negative_sims.push_back(sim[j]);
        }
    }
    const auto p = posterior(sims);

    HeadGradients out;
    out.query.assign(y_q.size(), 0.0);
    out.candidates.reserve(m);
    for (std::size_t j = 0; j < m; ++j) {
        // dL/dR_j = gamma (p_j - [j is clicked])
        const double dl_dr = gamma * (p[j] - (j == 0 ? 1.0 : 0.0));
        const auto& y_d = candidates[j];
        const double nd = std::sqrt(squared_norm(y_d));
        const double r = sim[j];
        std::vector<double> g_d(y_d.size());
        for (std::size_t k = 0; k < y_q.size(); ++k) {
            out.query[k] += dl_dr * (y_d[k] / (nq * nd) - r * y_q[k] / (nq * nq));
            g_d[k] = dl_dr * (y_q[k] / (nq * nd) - r * y_d[k] / (nd * nd));
        }
        out.candidates.push_back(std::move(g_d));
    }
    return out;
}

void accumulate_backward_sequence(const LstmParameters& params, const SequenceTrace& trace,
                                  std::span<const double> dl_dy_last,
                                  std::optional<std::size_t> truncation_depth, Gradients& out) {
    const std::size_t n = params.dims().ncell;
    if (dl_dy_last.size() != n) throw InputError("backward_sequence: seed length != ncell");
    if (trace.length() == 0) throw InputError("backward_sequence: empty trace");
    if (truncation_depth && *truncation_depth == 0) {
        throw InputError("backward_sequence: truncation depth must be >= 1");
    }

    const Tensor& wp1 = params[Group::Wp1];
    const Tensor& wp2 = params[Group::Wp2];
    const Tensor& wp3 = params[Group::Wp3];

    const std::size_t length = trace.length();
    const std::size_t steps = std::min(length, truncation_depth.value_or(length));
    const std::vector<double> zero(n, 0.0);

    std::vector<double> dy(dl_dy_last.begin(), dl_dy_last.end());
    std::vector<double> dc_carry(n, 0.0);
    std::vector<double> da_o(n), da_i(n), da_f(n), da_g(n), dc(n);

    for (std::size_t s = 0; s < steps; ++s) {
        const std::size_t t = length - 1 - s;
        const CellSnapshot& snap = trace.snapshots[t];
        const auto& y_prev = t == 0 ? zero : trace.snapshots[t - 1].y;
        const auto& c_prev = t == 0 ? zero : trace.snapshots[t - 1].c;

        for (std::size_t k = 0; k < n; ++k) {
            const double o = snap.o[k];
            const double h = snap.h_c[k];
            da_o[k] = dy[k] * h * o * (1.0 - o);
            // Cell gradient: carried from t+1, through y = o h(c), and through
            // the output-gate peephole on c(t).
            dc[k] = dc_carry[k] + dy[k] * o * (1.0 - h) * (1.0 + h) + da_o[k] * wp1[k];
            const double i = snap.i[k];
            const double f = snap.f[k];
            const double g = snap.y_g[k];
            da_i[k] = dc[k] * g * i * (1.0 - i);
            da_f[k] = dc[k] * c_prev[k] * f * (1.0 - f);
            da_g[k] = dc[k] * i * (1.0 - g) * (1.0 + g);
        }

        const auto& input = trace.inputs[t];
        accumulate_gate(da_o, input, y_prev, out[Group::W1], out[Group::Wrec1], out[Group::b1]);
        accumulate_gate(da_f, input, y_prev, out[Group::W2], out[Group::Wrec2], out[Group::b2]);
        accumulate_gate(da_i, input, y_prev, out[Group::W3], out[Group::Wrec3], out[Group::b3]);
        accumulate_gate(da_g, input, y_prev, out[Group::W4], out[Group::Wrec4], out[Group::b4]);

        Tensor& gp1 = out[Group::Wp1];
        Tensor& gp2 = out[Group::Wp2];
        Tensor& gp3 = out[Group::Wp3];
        for (std::size_t k = 0; k < n; ++k) {
            gp1[k] += da_o[k] * snap.c[k];
            gp2[k] += da_f[k] * c_prev[k];
            gp3[k] += da_i[k] * c_prev[k];
        }

        if (s + 1 == steps) break;

        std::fill(dy.begin(), dy.end(), 0.0);
        add_transposed_product(params[Group::Wrec1], da_o, dy);
        add_transposed_product(params[Group::Wrec2], da_f, dy);
        add_transposed_product(params[Group::Wrec3], da_i, dy);
        add_transposed_product(params[Group::Wrec4], da_g, dy);
        for (std::size_t k = 0; k < n; ++k) {
            dc_carry[k] = dc[k] * snap.f[k] + da_i[k] * wp3[k] + da_f[k] * wp2[k];
        }
    }
}

Gradients backward_sequence(const LstmParameters& params, const SequenceTrace& trace,
                            std::span<const double> dl_dy_last,
                            std::optional<std::size_t> truncation_depth) {
    Gradients grads(params.dims());
    accumulate_backward_sequence(params, trace, dl_dy_last, truncation_depth, grads);
    if (!grads.all_finite()) throw DivergenceError("backward_sequence: non-finite gradient");
    return grads;
}

HashedInstance hash_instance(const ClickThroughInstance& instance,
                             const TrigramVocabulary& vocab) {
    HashedInstance h;
    h.query = hash_sequence(instance.query, vocab);
    h.clicked = hash_sequence(instance.clicked, vocab);
    for (const auto& neg : instance.negatives) h.negatives.push_back(hash_sequence(neg, vocab));
    return h;
}

double accumulate_instance_gradients(const LstmParameters& params, const HashedInstance& instance,
                                     double gamma, std::optional<std::size_t> truncation_depth,
                                     Gradients& out) {
    const auto query = embed_sequence(params, instance.query);
    std::vector<SequenceTrace> docs;
    docs.reserve(instance.negatives.size() + 1);
    docs.push_back(embed_sequence(params, instance.clicked));
    for (const auto& neg : instance.negatives) docs.push_back(embed_sequence(params, neg));

    std::vector<std::vector<double>> y_docs;
    y_docs.reserve(docs.size());
    for (const auto& d : docs) y_docs.push_back(d.embedding);

    const auto head = loss_head_gradients(query.embedding, y_docs, gamma);
    accumulate_backward_sequence(params, query, head.query, truncation_depth, out);
    for (std::size_t j = 0; j < docs.size(); ++j) {
        accumulate_backward_sequence(params, docs[j], head.candidates[j], truncation_depth, out);
    }

    const std::span<const std::vector<double>> negs(y_docs.data() + 1, y_docs.size() - 1);
    return instance_loss(similarity_set(query.embedding, y_docs[0], negs, gamma));
}

Gradients instance_gradients(const LstmParameters& params, const ClickThroughInstance& instance,
                             const TrigramVocabulary& vocab, double gamma,
                             std::optional<std::size_t> truncation_depth) {
    Gradients grads(params.dims());
    accumulate_instance_gradients(params, hash_instance(instance, vocab), gamma, truncation_depth,
                                  grads);
    if (!grads.all_finite()) throw DivergenceError("instance_gradients: non-finite gradient");
    return grads;
}

std::pair<LstmParameters, Velocity> nesterov_update(const LstmParameters& params,
                                                    const Velocity& velocity,
                                                    const GradientFn& grad_fn, double lr,
                                                    double mu) {
    LstmParameters lookahead = params;
    axpy(lookahead, mu, velocity);
    const Gradients grads = grad_fn(lookahead);

    Velocity next_velocity = velocity;
    scale(next_velocity, mu);
    axpy(next_velocity, -lr, grads);

    LstmParameters next = params;
    axpy(next, 1.0, next_velocity);
    if (!next.all_finite() || !next_velocity.all_finite()) {
        throw DivergenceError("nesterov_update: non-finite parameters");
    }
    return {std::move(next), std::move(next_velocity)};
}

double clip_gradients(Gradients& grads, double clip_norm) {
    const double norm = global_norm(grads);
    if (norm > clip_norm) scale(grads, clip_norm / norm);
    return norm;
}

void TrainConfig::validate() const {
    auto fail = [](const std::string& what) { throw InputError("train config: " + what); };
    if (ncell < 1) fail("ncell must be >= 1");
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) fail("learning rate must be >= 0");
    if (!(momentum >= 0.0 && momentum < 1.0)) fail("momentum must be in [0, 1)");
    if (batch_size < 1) fail("batch size must be >= 1");
    if (epochs < 1) fail("epochs must be >= 1");
    if (!(gamma > 0.0) || !std::isfinite(gamma)) fail("gamma must be positive");
    if (truncation_depth && *truncation_depth < 1) fail("truncation depth must be >= 1");
    if (clip_norm && !(*clip_norm > 0.0)) fail("clip norm must be positive");
    if (max_sequence_length < 1) fail("max sequence length must be >= 1");
}

TrainResult train(const TrainConfig& config, std::span<const ClickThroughInstance> data,
                  const TrigramVocabulary& vocab) {
    config.validate();
    if (data.empty()) throw InputError("train: no training instances");

    TrainResult result;
    std::vector<ClickThroughInstance> pool(data.begin(), data.end());
    auto clamp_length = [&](WordSequence& words) {
        if (words.size() > config.max_sequence_length) {
            words.resize(config.max_sequence_length);
            ++result.truncated_sequences;
        }
    };
    bool needs_sampling = false;
    for (std::size_t r = 0; r < pool.size(); ++r) {
        auto& inst = pool[r];
        clamp_length(inst.query);
        clamp_length(inst.clicked);
        for (auto& neg : inst.negatives) clamp_length(neg);
        if (inst.negatives.empty()) {
            needs_sampling = needs_sampling || config.n_negatives > 0;
        } else if (inst.negatives.size() != config.n_negatives) {
            throw InputError("train: instance " + std::to_string(r) + " has " +
                             std::to_string(inst.negatives.size()) + " negatives, expected " +
                             std::to_string(config.n_negatives));
        }
    }

    std::vector<HashedInstance> hashed;
    hashed.reserve(pool.size());
    for (const auto& inst : pool) hashed.push_back(hash_instance(inst, vocab));

    const ModelDims dims{vocab.dimension(), config.ncell};
    result.params = init_parameters(dims, config.seed);
    result.velocity = Velocity(dims);

    std::vector<std::size_t> order(pool.size());
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(mix_seed(config.seed, 0x5348554646ULL, 0));

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        if (needs_sampling) {
            for (std::size_t r = 0; r < pool.size(); ++r) {
                if (!pool[r].negatives.empty()) continue;
                const auto negs =
                    sample_negatives(pool, r, config.n_negatives, mix_seed(config.seed, epoch, r));
                hashed[r].negatives.clear();
                for (const auto& neg : negs) hashed[r].negatives.push_back(hash_sequence(neg, vocab));
            }
        }
        shuffle(order.begin(), order.end(), shuffle_rng);

        double epoch_loss = 0.0;
        std::size_t batch_count = 0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t stop = std::min(order.size(), start + config.batch_size);
            std::vector<std::size_t> batch(order.begin() + static_cast<std::ptrdiff_t>(start),
                                           order.begin() + static_cast<std::ptrdiff_t>(stop));
            std::sort(batch.begin(), batch.end());

            BatchRecord record{epoch, batch_count, 0.0, 0.0};
            auto grad_fn = [&](const LstmParameters& at) {
                Gradients grads(dims);
                double loss = 0.0;
                for (std::size_t r : batch) {
                    loss += accumulate_instance_gradients(at, hashed[r], config.gamma,
                                                          config.truncation_depth, grads);
                }
                if (!std::isfinite(loss) || !grads.all_finite()) {
                    throw DivergenceError("train: non-finite loss at epoch " +
                                          std::to_string(epoch) + " batch " +
                                          std::to_string(batch_count));
                }
                record.loss = loss;
                record.grad_norm =
                    config.clip_norm ? clip_gradients(grads, *config.clip_norm) : global_norm(grads);
                return grads;
            };

            try {
                auto [next, velocity] = nesterov_update(result.params, result.velocity, grad_fn,
                                                        config.learning_rate, config.momentum);
                result.params = std::move(next);
                result.velocity = std::move(velocity);
            } catch (const DivergenceError& e) {
                const std::string what = e.what();
                if (what.rfind("train:", 0) == 0) throw;
                throw DivergenceError("train: epoch " + std::to_string(epoch) + " batch " +
                                      std::to_string(batch_count) + ": " + what);
            }
            ++result.steps;
            epoch_loss += record.loss;
            result.batches.push_back(record);
            ++batch_count;
        }
        result.epoch_mean_loss.push_back(epoch_loss / static_cast<double>(batch_count));
    }
    return result;
}

void write_loss_log(std::ostream& out, std::span<const BatchRecord> batches) {
    char buf[128];
    for (const auto& b : batches) {
        std::snprintf(buf, sizeof buf, "%zu\t%zu\t%.17g\t%.17g\n", b.epoch, b.batch, b.loss,
                      b.grad_norm);
        out << buf;
    }
}

}  // namespace lstmdssm
