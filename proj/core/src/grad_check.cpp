#include "lstmdssm/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

#include "lstmdssm/error.hpp"
#include "lstmdssm/lstm.hpp"
#include "lstmdssm/rng.hpp"
#include "lstmdssm/trainer.hpp"

namespace lstmdssm {

Gradients numeric_gradient(const LossFn& loss_fn, const LstmParameters& params, double epsilon) {
    if (!(epsilon > 0.0)) throw InputError("numeric_gradient: epsilon must be positive");
    Gradients grads(params.dims());
    LstmParameters probe = params;
    for (Group g : kAllGroups) {
        auto& values = probe[g].values;
        for (std::size_t k = 0; k < values.size(); ++k) {
            const double saved = values[k];
            const double hi = saved + epsilon;
            const double lo = saved - epsilon;
            values[k] = hi;
            const long double up = loss_fn(probe);
            values[k] = lo;
            const long double down = loss_fn(probe);
            values[k] = saved;
            if (!std::isfinite(up) || !std::isfinite(down)) {
                throw DivergenceError("numeric_gradient: non-finite loss at " +
                                      std::string(group_name(g)) + "[" + std::to_string(k) + "]");
            }
            const long double step = static_cast<long double>(hi) - static_cast<long double>(lo);
            grads[g][k] = static_cast<double>((up - down) / step);
        }
    }
    return grads;
}

double relative_error(double analytic, double numeric) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
    return std::abs(analytic - numeric) / denom;
}

GradCheckReport compare_gradients(const Gradients& analytic, const Gradients& numeric,
                                  double tolerance, double epsilon) {
    GradCheckReport report;
    report.epsilon = epsilon;
    report.tolerance = tolerance;
    for (std::size_t gi = 0; gi < kGroupCount; ++gi) {
        const Group g = kAllGroups[gi];
        GroupCheck check;
        check.group = g;
        const auto& a = analytic[g].values;
        const auto& n = numeric[g].values;
        if (a.size() != n.size()) throw InputError("compare_gradients: shape mismatch");
        for (std::size_t k = 0; k < a.size(); ++k) {
            const double err = relative_error(a[k], n[k]);
            // NaN compares false; route it to a failure explicitly.
            if (err > check.max_relative_error || std::isnan(err)) {
                check.max_relative_error = err;
                check.argmax = k;
            }
        }
        check.pass = check.max_relative_error <= tolerance;
        report.groups[gi] = check;
        report.pass = report.pass && check.pass;
    }
    return report;
}

namespace {

using Vec = std::vector<long double>;

long double logistic(long double x) { return 1.0L / (1.0L + std::exp(-x)); }

Vec reference_embedding(const LstmParameters& p, const WordSequence& words,
                        const TrigramVocabulary& vocab) {
    const std::size_t n = p.dims().ncell;
    Vec y(n, 0.0L), c(n, 0.0L);
    if (words.empty()) throw InputError("reference_embedding: empty sequence");
    for (const auto& word : words) {
        const auto l = hash_word(word, vocab);
        // pre[gate][k] for gates 1..4 (output, forget, input, candidate).
        std::array<Vec, 4> pre;
        const std::array<Group, 4> w = {Group::W1, Group::W2, Group::W3, Group::W4};
        const std::array<Group, 4> rec = {Group::Wrec1, Group::Wrec2, Group::Wrec3, Group::Wrec4};
        const std::array<Group, 4> bias = {Group::b1, Group::b2, Group::b3, Group::b4};
        for (std::size_t gate = 0; gate < 4; ++gate) {
            pre[gate].assign(n, 0.0L);
            for (std::size_t r = 0; r < n; ++r) {
                long double acc = p[bias[gate]][r];
                for (const auto& [col, count] : l.pairs) {
                    acc += static_cast<long double>(count) * p[w[gate]](r, col);
                }
                for (std::size_t k = 0; k < n; ++k) acc += p[rec[gate]](r, k) * y[k];
                pre[gate][r] = acc;
            }
        }
        Vec c_new(n), y_new(n);
        for (std::size_t k = 0; k < n; ++k) {
            const long double cand = std::tanh(pre[3][k]);
            const long double in = logistic(pre[2][k] + p[Group::Wp3][k] * c[k]);
            const long double forget = logistic(pre[1][k] + p[Group::Wp2][k] * c[k]);
            c_new[k] = forget * c[k] + in * cand;
            const long double out = logistic(pre[0][k] + p[Group::Wp1][k] * c_new[k]);
            y_new[k] = out * std::tanh(c_new[k]);
        }
        c = std::move(c_new);
        y = std::move(y_new);
    }
    return y;
}

long double reference_cosine(const Vec& a, const Vec& b) {
    long double dot = 0.0L, aa = 0.0L, bb = 0.0L;
    for (std::size_t k = 0; k < a.size(); ++k) {
        dot += a[k] * b[k];
        aa += a[k] * a[k];
        bb += b[k] * b[k];
    }
    if (aa == 0.0L || bb == 0.0L) throw DegenerateEmbeddingError("reference: zero-norm embedding");
    return dot / (std::sqrt(aa) * std::sqrt(bb));
}

}  // namespace

long double reference_instance_loss(const LstmParameters& params,
                                    const ClickThroughInstance& instance,
                                    const TrigramVocabulary& vocab, double gamma) {
    const Vec q = reference_embedding(params, instance.query, vocab);
    std::vector<long double> z;
    z.push_back(gamma * reference_cosine(q, reference_embedding(params, instance.clicked, vocab)));
    for (const auto& neg : instance.negatives) {
        z.push_back(gamma * reference_cosine(q, reference_embedding(params, neg, vocab)));
    }
    const long double zmax = *std::max_element(z.begin(), z.end());
    long double total = 0.0L;
    for (long double v : z) total += std::exp(v - zmax);
    return zmax + std::log(total) - z[0];
}

GradCheckReport check_gradients(const LstmParameters& params, const ClickThroughInstance& instance,
                                const TrigramVocabulary& vocab, double gamma, double tolerance,
                                double epsilon) {
    const auto analytic = instance_gradients(params, instance, vocab, gamma, std::nullopt);
    const auto numeric = numeric_gradient(
        [&](const LstmParameters& p) { return reference_instance_loss(p, instance, vocab, gamma); },
        params, epsilon);
    return compare_gradients(analytic, numeric, tolerance, epsilon);
}

void print_report(std::ostream& out, const GradCheckReport& report) {
    char line[160];
    std::snprintf(line, sizeof line, "%-8s %16s %10s  %s\n", "group", "max_rel_error", "argmax",
                  "status");
    out << line;
    for (const auto& g : report.groups) {
        std::snprintf(line, sizeof line, "%-8s %16.6e %10zu  %s\n",
                      std::string(group_name(g.group)).c_str(), g.max_relative_error, g.argmax,
                      g.pass ? "PASS" : "FAIL");
        out << line;
    }
    std::snprintf(line, sizeof line, "epsilon %.3g  tolerance %.3g  overall %s\n", report.epsilon,
                  report.tolerance, report.pass ? "PASS" : "FAIL");
    out << line;
}

namespace {

std::string random_word(Rng& rng) {
    static constexpr char kLetters[] = "abcdefghijklmnop";
    const auto len = 2 + uniform_index(rng, 5);
    std::string w;
    for (std::uint64_t i = 0; i < len; ++i) w.push_back(kLetters[uniform_index(rng, 16)]);
    return w;
}

WordSequence random_sequence(Rng& rng, const std::vector<std::string>& words,
                             const GradCheckCaseSpec& spec) {
    const auto span = spec.max_length - spec.min_length + 1;
    const auto len = spec.min_length + uniform_index(rng, span);
    WordSequence seq;
    for (std::uint64_t i = 0; i < len; ++i) seq.push_back(words[uniform_index(rng, words.size())]);
    return seq;
}

}  // namespace

GradCheckCase make_gradcheck_case(std::uint64_t seed, const GradCheckCaseSpec& spec) {
    if (!spec.dims.valid() || spec.min_length < 1 || spec.max_length < spec.min_length) {
        throw InputError("make_gradcheck_case: invalid spec");
    }
    Rng rng(seed);

    std::vector<std::string> words;
    VocabularyBuilder builder;
    while (builder.dimension() < spec.dims.input_dim) {
        words.push_back(random_word(rng));
        builder.add_sequence({words.back()});
    }
    auto entries = std::move(builder).finish().entries();
    entries.resize(spec.dims.input_dim);

    GradCheckCase out;
    out.vocab = TrigramVocabulary::from_entries(std::move(entries));
    out.params = init_parameters(spec.dims, rng());
    for (Group g : {Group::Wp1, Group::Wp2, Group::Wp3, Group::b1, Group::b2, Group::b3,
                    Group::b4}) {
        for (double& v : out.params[g].values) v = uniform_real(rng, -0.5, 0.5);
    }

    out.instance.query = random_sequence(rng, words, spec);
    out.instance.clicked = random_sequence(rng, words, spec);
    while (out.instance.negatives.size() < spec.n_negatives) {
        auto neg = random_sequence(rng, words, spec);
        if (neg != out.instance.clicked) out.instance.negatives.push_back(std::move(neg));
    }
    return out;
}

}  // namespace lstmdssm
