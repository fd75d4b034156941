#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "lstmdssm/lstm.hpp"
#include "lstmdssm/parameters.hpp"
#include "lstmdssm/text.hpp"

namespace lstmdssm {

/// dL/dy_Q and dL/dy_D for every candidate (clicked first) of one instance.
struct HeadGradients {
    std::vector<double> query;
    std::vector<std::vector<double>> candidates;
};

/// Analytic gradients of instance_loss with respect to the final embeddings.
/// candidates[0] is the clicked title. Throws DegenerateEmbeddingError on a
/// zero-norm vector.
HeadGradients loss_head_gradients(std::span<const double> y_q,
                                  std::span<const std::vector<double>> candidates, double gamma);

/// Backpropagation through time seeded only at the last timestep with
/// dL/dy(T). Walks back at most truncation_depth steps (nullopt: the whole
/// sequence) and returns gradients for all fifteen groups.
Gradients backward_sequence(const LstmParameters& params, const SequenceTrace& trace,
                            std::span<const double> dl_dy_last,
                            std::optional<std::size_t> truncation_depth);

/// Same as backward_sequence but adds into an existing accumulator.
void accumulate_backward_sequence(const LstmParameters& params, const SequenceTrace& trace,
                                  std::span<const double> dl_dy_last,
                                  std::optional<std::size_t> truncation_depth, Gradients& out);

/// Gradient of one instance's loss. Query and document sides share one
/// parameter set, so all their contributions sum into one Gradients.
Gradients instance_gradients(const LstmParameters& params, const ClickThroughInstance& instance,
                             const TrigramVocabulary& vocab, double gamma,
                             std::optional<std::size_t> truncation_depth);

/// One instance hashed once, ready for repeated forward/backward passes.
struct HashedInstance {
    std::vector<SparseTermVector> query;
    std::vector<SparseTermVector> clicked;
    std::vector<std::vector<SparseTermVector>> negatives;
};

HashedInstance hash_instance(const ClickThroughInstance& instance, const TrigramVocabulary& vocab);

/// Adds the instance's gradient into out and returns its loss.
double accumulate_instance_gradients(const LstmParameters& params, const HashedInstance& instance,
                                     double gamma, std::optional<std::size_t> truncation_depth,
                                     Gradients& out);

using GradientFn = std::function<Gradients(const LstmParameters&)>;

/// Lookahead Nesterov step:
///   v' = mu v - lr grad(params + mu v)
///   params' = params + v'
/// Throws DivergenceError if the result is not finite.
std::pair<LstmParameters, Velocity> nesterov_update(const LstmParameters& params,
                                                    const Velocity& velocity,
                                                    const GradientFn& grad_fn, double lr,
                                                    double mu);

/// Rescales grads to global norm clip_norm if it is larger. Returns the norm
/// before clipping.
double clip_gradients(Gradients& grads, double clip_norm);

struct TrainConfig {
    std::size_t ncell = 32;
    double learning_rate = 0.05;
    double momentum = 0.9;
    std::size_t n_negatives = 4;
    std::size_t batch_size = 100;
    std::size_t epochs = 1;
    double gamma = 1.0;
    std::optional<std::size_t> truncation_depth;  // nullopt: full BPTT
    std::optional<double> clip_norm = 5.0;        // nullopt: no clipping
    std::size_t max_sequence_length = 64;
    std::uint64_t seed = 1;

    /// Throws InputError when a field is out of range.
    void validate() const;
};

struct BatchRecord {
    std::size_t epoch = 0;
    std::size_t batch = 0;
    double loss = 0.0;       // summed over the batch, at the lookahead point
    double grad_norm = 0.0;  // before clipping
};

struct TrainResult {
    LstmParameters params;
    Velocity velocity;
    std::vector<BatchRecord> batches;
    std::vector<double> epoch_mean_loss;  // mean of the epoch's batch losses
    std::uint64_t steps = 0;
    std::size_t truncated_sequences = 0;  // sequences cut to max_sequence_length
};

/// Minibatch training from init_parameters(seed). Instances without
/// negatives get n_negatives sampled from the other clicked titles, freshly
/// each epoch; instances with negatives must carry exactly n_negatives.
/// Throws DivergenceError naming epoch and batch on a non-finite loss.
TrainResult train(const TrainConfig& config, std::span<const ClickThroughInstance> data,
                  const TrigramVocabulary& vocab);

/// Loss log line: epoch, batch, summed loss, gradient norm; tab-separated.
void write_loss_log(std::ostream& out, std::span<const BatchRecord> batches);

}  // namespace lstmdssm
