#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lstmdssm/parameters.hpp"
#include "lstmdssm/text.hpp"

namespace lstmdssm {

/// Glorot-uniform input and recurrent weights, zero peepholes, forget-gate
/// bias 1.0 and every other bias zero. Deterministic in seed.
LstmParameters init_parameters(const ModelDims& dims, std::uint64_t seed);

/// Number of trainable scalars: four input matrices, four recurrent
/// matrices, three diagonal peepholes and four biases.
std::uint64_t count_parameters(const ModelDims& dims);

/// Every quantity of one timestep, kept for the backward pass.
struct CellSnapshot {
    std::vector<double> pre_g;  // candidate pre-activation
    std::vector<double> pre_i;
    std::vector<double> pre_f;
    std::vector<double> pre_o;
    std::vector<double> y_g;
    std::vector<double> i;
    std::vector<double> f;
    std::vector<double> o;
    std::vector<double> c;
    std::vector<double> h_c;  // tanh(c)
    std::vector<double> y;
};

/// One forward step of the peephole cell:
///
///   y_g = tanh(W4 l + Wrec4 y_prev + b4)
///   i   = sigm(W3 l + Wrec3 y_prev + Wp3 . c_prev + b3)
///   f   = sigm(W2 l + Wrec2 y_prev + Wp2 . c_prev + b2)
///   c   = f . c_prev + i . y_g
///   o   = sigm(W1 l + Wrec1 y_prev + Wp1 . c + b1)
///   y   = o . tanh(c)
///
/// where '.' is the elementwise product. Throws DivergenceError on a
/// non-finite result and InputError on a dimension mismatch.
CellSnapshot cell_step(const LstmParameters& params, const SparseTermVector& input,
                       std::span<const double> y_prev, std::span<const double> c_prev);

/// Forward record of a whole sequence.
struct SequenceTrace {
    std::vector<SparseTermVector> inputs;
    std::vector<CellSnapshot> snapshots;
    std::vector<double> embedding;  // y at the last timestep

    std::size_t length() const { return snapshots.size(); }
};

/// Runs cell_step from the zero state over the whole sequence.
/// Throws InputError on an empty sequence.
SequenceTrace embed_sequence(const LstmParameters& params,
                             std::span<const SparseTermVector> sequence);

/// Convenience: hash the words, then embed. Returns only y(T).
std::vector<double> embed_words(const LstmParameters& params, const WordSequence& words,
                                const TrigramVocabulary& vocab);

}  // namespace lstmdssm
