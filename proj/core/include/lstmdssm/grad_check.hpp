#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>

#include "lstmdssm/parameters.hpp"
#include "lstmdssm/text.hpp"

namespace lstmdssm {

/// Scalar loss of the parameters. Extended precision keeps the central
/// difference of nearby losses above rounding noise.
using LossFn = std::function<long double(const LstmParameters&)>;

/// Central differences (L(p + eps e_k) - L(p - eps e_k)) / 2 eps for every
/// coordinate, dividing by the step actually representable in double.
/// Throws DivergenceError naming the coordinate if a perturbed loss is not
/// finite.
Gradients numeric_gradient(const LossFn& loss_fn, const LstmParameters& params, double epsilon);

/// Straight-line long double evaluation of one instance's loss: forward
/// pass, cosine and softmax written independently of the training path.
long double reference_instance_loss(const LstmParameters& params,
                                    const ClickThroughInstance& instance,
                                    const TrigramVocabulary& vocab, double gamma);

struct GroupCheck {
    Group group = Group::W1;
    double max_relative_error = 0.0;
    std::size_t argmax = 0;  // flat row-major coordinate of the worst entry
    bool pass = true;
};

struct GradCheckReport {
    std::array<GroupCheck, kGroupCount> groups{};
    bool pass = true;
    double epsilon = 0.0;
    double tolerance = 0.0;
};

/// |a - n| / max(|a|, |n|, 1e-8)
double relative_error(double analytic, double numeric);

/// Groups pass when every coordinate is within tolerance; the overall flag
/// is the conjunction of the group flags.
GradCheckReport compare_gradients(const Gradients& analytic, const Gradients& numeric,
                                  double tolerance, double epsilon);

/// instance_gradients (full BPTT) against numeric_gradient of
/// reference_instance_loss. Failures are reported, not thrown.
GradCheckReport check_gradients(const LstmParameters& params, const ClickThroughInstance& instance,
                                const TrigramVocabulary& vocab, double gamma, double tolerance,
                                double epsilon);

void print_report(std::ostream& out, const GradCheckReport& report);

/// A seeded random model, vocabulary and instance for gradient checking.
struct GradCheckCase {
    LstmParameters params;
    TrigramVocabulary vocab;
    ClickThroughInstance instance;
};

struct GradCheckCaseSpec {
    ModelDims dims{50, 8};
    std::size_t n_negatives = 2;
    std::size_t min_length = 3;
    std::size_t max_length = 7;
};

/// Vocabulary of exactly dims.input_dim trigrams; every parameter group,
/// peepholes and biases included, is randomized so no group sits at zero.
GradCheckCase make_gradcheck_case(std::uint64_t seed, const GradCheckCaseSpec& spec);

}  // namespace lstmdssm
