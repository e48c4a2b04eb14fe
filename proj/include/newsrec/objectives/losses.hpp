#pragma once

#include <span>
#include <string>

#include "newsrec/nn/tensor.hpp"

namespace newsrec::objectives {

enum class LossKind { kCe, kScl, kDual };
enum class AuxKind { kNone, kTanr, kSentiRec };

std::string to_string(LossKind k);
std::string to_string(AuxKind k);
LossKind parse_loss(const std::string& s);
AuxKind parse_aux(const std::string& s);

struct LossConfig {
  LossKind kind = LossKind::kCe;
  double temperature = 0.1;
  double dual_weight = 0.5;
  AuxKind aux = AuxKind::kNone;
  double tanr_weight = 0.2;
  double sentiment_weight = 0.4;  // mu
  double diversity_weight = 0.4;  // lambda_s

  void validate() const;
};

// -log softmax(scores)[positive_index].
nn::Tensor ce_loss(const nn::Tensor& scores, std::size_t positive_index = 0);

// Mean over positives P of -log(exp(s_i/t) / sum_a exp(s_a/t)), all
// candidates in the denominator. Requires >= 1 positive and >= 1 negative.
nn::Tensor scl_loss(const nn::Tensor& scores, std::span<const int> labels, double temperature);

// (1 - lambda) ce + lambda scl.
nn::Tensor dual_loss(const nn::Tensor& ce, const nn::Tensor& scl, double lambda);

// Softmax cross-entropy over category logits.
nn::Tensor tanr_aux(const nn::Tensor& topic_logits, int true_category);

// tanh(emb . weight + bias) with weight [d x 1], bias [1]; rows of a [n x d]
// matrix give [n] predictions.
nn::Tensor predict_sentiment(const nn::Tensor& news_embeddings, const nn::Tensor& weight,
                             const nn::Tensor& bias);

// sum_i softmax(rec_scores)_i * max(0, cand_sent_i * hist_mean_sentiment).
nn::Tensor sentiment_diversity_regularizer(const nn::Tensor& rec_scores,
                                           std::span<const double> cand_sentiments,
                                           double hist_mean_sentiment);

// mu * mean_n (pred_n - true_n)^2 + lambda_s * regularizer.
nn::Tensor sentirec_aux(const nn::Tensor& news_embeddings, const nn::Tensor& weight,
                        const nn::Tensor& bias, std::span<const double> true_scores,
                        const nn::Tensor& rec_scores, std::span<const double> cand_sentiments,
                        double hist_mean_sentiment, double mu, double lambda_s);

}  // namespace newsrec::objectives
