#pragma once

#include <span>
#include <vector>

#include "lstmdssm/parameters.hpp"
#include "lstmdssm/text.hpp"

namespace lstmdssm {

/// Cosine similarities of one query against its clicked title and negatives.
struct SimilaritySet {
    double clicked_sim = 0.0;
    std::vector<double> negative_sims;
    /// Smoothing factor applied inside the softmax; 1.0 is the plain form.
    double gamma = 1.0;
};

/// y_q . y_d / (|y_q| |y_d|). Throws DegenerateEmbeddingError if either
/// norm is at most 1e-12.
double cosine_similarity(std::span<const double> y_q, std::span<const double> y_d);

/// Softmax over gamma-scaled similarities, clicked entry first.
std::vector<double> posterior(const SimilaritySet& sims);

/// -log P(clicked | query).
double instance_loss(const SimilaritySet& sims);

/// Builds a SimilaritySet from precomputed embeddings.
SimilaritySet similarity_set(std::span<const double> y_q, std::span<const double> y_clicked,
                             std::span<const std::vector<double>> y_negatives, double gamma);

/// Summed instance_loss over the instances, in index order. Errors carry the
/// offending instance index.
double batch_loss(const LstmParameters& params, std::span<const ClickThroughInstance> instances,
                  const TrigramVocabulary& vocab, double gamma);

}  // namespace lstmdssm
