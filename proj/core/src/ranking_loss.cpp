#include "lstmdssm/ranking_loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lstmdssm/error.hpp"
#include "lstmdssm/lstm.hpp"

namespace lstmdssm {

double cosine_similarity(std::span<const double> y_q, std::span<const double> y_d) {
    if (y_q.size() != y_d.size()) throw InputError("cosine_similarity: length mismatch");
    double dot = 0.0, qq = 0.0, dd = 0.0;
    for (std::size_t k = 0; k < y_q.size(); ++k) {
        dot += y_q[k] * y_d[k];
        qq += y_q[k] * y_q[k];
        dd += y_d[k] * y_d[k];
    }
    const double nq = std::sqrt(qq);
    const double nd = std::sqrt(dd);
    if (nq <= 1e-12 || nd <= 1e-12) {
        throw DegenerateEmbeddingError("cosine_similarity: zero-norm embedding");
    }
    return std::clamp(dot / (nq * nd), -1.0, 1.0);
}

std::vector<double> posterior(const SimilaritySet& sims) {
    std::vector<double> z;
    z.reserve(sims.negative_sims.size() + 1);
    z.push_back(sims.gamma * sims.clicked_sim);
    for (double s : sims.negative_sims) z.push_back(sims.gamma * s);

    const double zmax = *std::max_element(z.begin(), z.end());
    double total = 0.0;
    for (double& v : z) {
        v = std::exp(v - zmax);
        total += v;
    }
    for (double& v : z) v /= total;
    return z;
}

double instance_loss(const SimilaritySet& sims) {
    // log-sum-exp form; -log(posterior[0]) loses digits when p is near 1.
    double zmax = sims.gamma * sims.clicked_sim;
    for (double s : sims.negative_sims) zmax = std::max(zmax, sims.gamma * s);
    double total = std::exp(sims.gamma * sims.clicked_sim - zmax);
    for (double s : sims.negative_sims) total += std::exp(sims.gamma * s - zmax);
    return zmax + std::log(total) - sims.gamma * sims.clicked_sim;
}

SimilaritySet similarity_set(std::span<const double> y_q, std::span<const double> y_clicked,
                             std::span<const std::vector<double>> y_negatives, double gamma) {
    SimilaritySet sims;
    sims.gamma = gamma;
    sims.clicked_sim = cosine_similarity(y_q, y_clicked);
    for (const auto& y : y_negatives) sims.negative_sims.push_back(cosine_similarity(y_q, y));
    return sims;
}

double batch_loss(const LstmParameters& params, std::span<const ClickThroughInstance> instances,
                  const TrigramVocabulary& vocab, double gamma) {
    if (instances.empty()) throw InputError("batch_loss: no instances");
    double total = 0.0;
    for (std::size_t r = 0; r < instances.size(); ++r) {
        const auto& inst = instances[r];
        try {
            const auto y_q = embed_words(params, inst.query, vocab);
            const auto y_c = embed_words(params, inst.clicked, vocab);
            std::vector<std::vector<double>> y_neg;
            for (const auto& neg : inst.negatives) y_neg.push_back(embed_words(params, neg, vocab));
            total += instance_loss(similarity_set(y_q, y_c, y_neg, gamma));
        } catch (const DegenerateEmbeddingError& e) {
            throw DegenerateEmbeddingError("instance " + std::to_string(r) + ": " + e.what());
        } catch (const DivergenceError& e) {
            throw DivergenceError("instance " + std::to_string(r) + ": " + e.what());
        } catch (const InputError& e) {
            throw InputError("instance " + std::to_string(r) + ": " + e.what());
        }
    }
    return total;
}

}  // namespace lstmdssm
