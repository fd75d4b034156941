#include "lstmdssm/lstm.hpp"

#include <cmath>
#include <string>

#include "lstmdssm/error.hpp"
#include "lstmdssm/rng.hpp"

namespace lstmdssm {

namespace {

double sigmoid(double x) {
    // Split by sign so exp never overflows.
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// out = W l + Wrec y_prev + b, with W used through the sparse columns of l.
void affine(const Tensor& w, const Tensor& wrec, const Tensor& bias, const SparseTermVector& l,
            std::span<const double> y_prev, std::vector<double>& out) {
    const std::size_t n = wrec.rows;
    out.assign(bias.values.begin(), bias.values.end());
    for (const auto& [col, count] : l.pairs) {
        const double scale = static_cast<double>(count);
        for (std::size_t r = 0; r < n; ++r) out[r] += scale * w(r, col);
    }
    for (std::size_t r = 0; r < n; ++r) {
        double acc = 0.0;
        const double* row = &wrec.values[r * n];
        for (std::size_t k = 0; k < n; ++k) acc += row[k] * y_prev[k];
        out[r] += acc;
    }
}

}  // namespace

LstmParameters init_parameters(const ModelDims& dims, std::uint64_t seed) {
    if (!dims.valid()) throw InputError("init_parameters: input_dim and ncell must be >= 1");
    LstmParameters p(dims);
    Rng rng(seed);
    for (Group g : {Group::W1, Group::W2, Group::W3, Group::W4, Group::Wrec1, Group::Wrec2,
                    Group::Wrec3, Group::Wrec4}) {
        Tensor& t = p[g];
        const double bound = std::sqrt(6.0 / static_cast<double>(t.rows + t.cols));
        for (double& v : t.values) v = uniform_real(rng, -bound, bound);
    }
    for (double& v : p[Group::b2].values) v = 1.0;
    return p;
}

std::uint64_t count_parameters(const ModelDims& dims) {
    const std::uint64_t in = dims.input_dim;
    const std::uint64_t n = dims.ncell;
    return 4 * n * in + 4 * n * n + 3 * n + 4 * n;
}

CellSnapshot cell_step(const LstmParameters& params, const SparseTermVector& input,
                       std::span<const double> y_prev, std::span<const double> c_prev) {
    const auto& dims = params.dims();
    const std::size_t n = dims.ncell;
    if (y_prev.size() != n || c_prev.size() != n) {
        throw InputError("cell_step: state length does not match ncell");
    }
    if (input.dimension != dims.input_dim ||
        (!input.pairs.empty() && input.pairs.back().first >= dims.input_dim)) {
        throw InputError("cell_step: input dimension " + std::to_string(input.dimension) +
                         " does not match model input_dim " + std::to_string(dims.input_dim));
    }

    CellSnapshot s;
    affine(params[Group::W4], params[Group::Wrec4], params[Group::b4], input, y_prev, s.pre_g);
    affine(params[Group::W3], params[Group::Wrec3], params[Group::b3], input, y_prev, s.pre_i);
    affine(params[Group::W2], params[Group::Wrec2], params[Group::b2], input, y_prev, s.pre_f);
    affine(params[Group::W1], params[Group::Wrec1], params[Group::b1], input, y_prev, s.pre_o);

    const Tensor& wp1 = params[Group::Wp1];
    const Tensor& wp2 = params[Group::Wp2];
    const Tensor& wp3 = params[Group::Wp3];

    s.y_g.resize(n);
    s.i.resize(n);
    s.f.resize(n);
    s.c.resize(n);
    s.o.resize(n);
    s.h_c.resize(n);
    s.y.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        s.pre_i[k] += wp3[k] * c_prev[k];
        s.pre_f[k] += wp2[k] * c_prev[k];
        s.y_g[k] = std::tanh(s.pre_g[k]);
        s.i[k] = sigmoid(s.pre_i[k]);
        s.f[k] = sigmoid(s.pre_f[k]);
        s.c[k] = s.f[k] * c_prev[k] + s.i[k] * s.y_g[k];
        // The output gate peeks at the updated cell.
        s.pre_o[k] += wp1[k] * s.c[k];
        s.o[k] = sigmoid(s.pre_o[k]);
        s.h_c[k] = std::tanh(s.c[k]);
        s.y[k] = s.o[k] * s.h_c[k];
    }
    if (!all_finite(s.c) || !all_finite(s.y)) {
        throw DivergenceError("cell_step: non-finite cell state");
    }
    return s;
}

SequenceTrace embed_sequence(const LstmParameters& params,
                             std::span<const SparseTermVector> sequence) {
    if (sequence.empty()) throw InputError("embed_sequence: empty sequence");
    const std::size_t n = params.dims().ncell;
    SequenceTrace trace;
    trace.inputs.assign(sequence.begin(), sequence.end());
    trace.snapshots.reserve(sequence.size());

    const std::vector<double> zero(n, 0.0);
    for (std::size_t t = 0; t < sequence.size(); ++t) {
        const auto& y_prev = t == 0 ? zero : trace.snapshots.back().y;
        const auto& c_prev = t == 0 ? zero : trace.snapshots.back().c;
        trace.snapshots.push_back(cell_step(params, sequence[t], y_prev, c_prev));
    }
    trace.embedding = trace.snapshots.back().y;
    return trace;
}

std::vector<double> embed_words(const LstmParameters& params, const WordSequence& words,
                                const TrigramVocabulary& vocab) {
    const auto seq = hash_sequence(words, vocab);
    return embed_sequence(params, seq).embedding;
}

}  // namespace lstmdssm
