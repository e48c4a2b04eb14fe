#include "newsrec/objectives/losses.hpp"

#include <cmath>

#include "newsrec/common/error.hpp"
#include "newsrec/nn/ops.hpp"

namespace newsrec::objectives {

using nn::Tensor;

std::string to_string(LossKind k) {
  switch (k) {
    case LossKind::kCe: return "ce";
    case LossKind::kScl: return "scl";
    case LossKind::kDual: return "dual";
  }
  return "?";
}

std::string to_string(AuxKind k) {
  switch (k) {
    case AuxKind::kNone: return "none";
    case AuxKind::kTanr: return "tanr";
    case AuxKind::kSentiRec: return "sentirec";
  }
  return "?";
}

LossKind parse_loss(const std::string& s) {
  for (auto k : {LossKind::kCe, LossKind::kScl, LossKind::kDual}) {
    if (to_string(k) == s) return k;
  }
  throw ConfigError("unknown loss '" + s + "' (expected ce, scl or dual)");
}

AuxKind parse_aux(const std::string& s) {
  for (auto k : {AuxKind::kNone, AuxKind::kTanr, AuxKind::kSentiRec}) {
    if (to_string(k) == s) return k;
  }
  throw ConfigError("unknown auxiliary objective '" + s + "' (expected none, tanr or sentirec)");
}

void LossConfig::validate() const {
  auto bad_weight = [](double w) { return !std::isfinite(w) || w < 0.0; };
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw ConfigError("loss temperature must be > 0");
  }
  if (!(dual_weight >= 0.0 && dual_weight <= 1.0)) {
    throw ConfigError("dual_weight must lie in [0, 1]");
  }
  if (bad_weight(tanr_weight) || bad_weight(sentiment_weight) || bad_weight(diversity_weight)) {
    throw ConfigError("auxiliary loss weights must be finite and non-negative");
  }
}

namespace {

void require_finite(const Tensor& t, const char* what) {
  for (double v : t.data()) {
    if (!std::isfinite(v)) throw Error(std::string(what) + ": non-finite score");
  }
}

}  // namespace

Tensor ce_loss(const Tensor& scores, std::size_t positive_index) {
  if (scores.dim() != 1 || scores.numel() < 2) {
    throw Error("ce_loss: need one positive and at least one negative score");
  }
  if (positive_index >= scores.numel()) throw Error("ce_loss: positive index out of range");
  require_finite(scores, "ce_loss");
  return nn::scale(nn::pick(nn::log_softmax(scores), positive_index), -1.0);
}

Tensor scl_loss(const Tensor& scores, std::span<const int> labels, double temperature) {
  if (scores.dim() != 1 || scores.numel() != labels.size()) {
    throw Error("scl_loss: scores and labels differ in length");
  }
  if (!(temperature > 0.0)) throw Error("scl_loss: temperature must be > 0");
  require_finite(scores, "scl_loss");
  std::size_t positives = 0;
  for (int l : labels) positives += l == 1;
  if (positives == 0 || positives == labels.size()) {
    throw Error("scl_loss: need at least one positive and one negative");
  }
  const Tensor lsm = nn::log_softmax(nn::scale(scores, 1.0 / temperature));
  Tensor total;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 1) continue;
    const Tensor term = nn::pick(lsm, i);
    total = total.defined() ? nn::add(total, term) : term;
  }
  return nn::scale(total, -1.0 / static_cast<double>(positives));
}

Tensor dual_loss(const Tensor& ce, const Tensor& scl, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw Error("dual_loss: lambda must lie in [0, 1]");
  if (lambda == 0.0) return ce;
  if (lambda == 1.0) return scl;
  return nn::add(nn::scale(ce, 1.0 - lambda), nn::scale(scl, lambda));
}

Tensor tanr_aux(const Tensor& logits, int true_category) {
  if (logits.dim() != 1 || true_category < 0 ||
      static_cast<std::size_t>(true_category) >= logits.numel()) {
    throw Error("tanr_aux: category " + std::to_string(true_category) + " out of range for " +
                std::to_string(logits.numel()) + " logits");
  }
  return nn::scale(nn::pick(nn::log_softmax(logits), static_cast<std::size_t>(true_category)),
                   -1.0);
}

Tensor predict_sentiment(const Tensor& news_embeddings, const Tensor& weight,
                         const Tensor& bias) {
  const Tensor x = news_embeddings.dim() == 1
                       ? nn::reshape(news_embeddings, {1, news_embeddings.numel()})
                       : news_embeddings;
  const Tensor y = nn::tanh(nn::add_row_bias(nn::matmul(x, weight), bias));
  return nn::reshape(y, {x.rows()});
}

Tensor sentiment_diversity_regularizer(const Tensor& rec_scores,
                                       std::span<const double> cand_sentiments,
                                       double hist_mean_sentiment) {
  if (rec_scores.dim() != 1 || rec_scores.numel() != cand_sentiments.size()) {
    throw Error("sentiment regularizer: scores and sentiments differ in length");
  }
  std::vector<double> hinge(cand_sentiments.size());
  for (std::size_t i = 0; i < hinge.size(); ++i) {
    hinge[i] = std::max(0.0, cand_sentiments[i] * hist_mean_sentiment);
  }
  const Tensor w = nn::masked_softmax(rec_scores, {});
  const std::size_t n = hinge.size();
  return nn::dot(w, Tensor::from_data({n}, std::move(hinge)));
}

Tensor sentirec_aux(const Tensor& news_embeddings, const Tensor& weight, const Tensor& bias,
                    std::span<const double> true_scores, const Tensor& rec_scores,
                    std::span<const double> cand_sentiments, double hist_mean_sentiment,
                    double mu, double lambda_s) {
  const Tensor pred = predict_sentiment(news_embeddings, weight, bias);
  if (pred.numel() != true_scores.size()) {
    throw Error("sentirec_aux: one true sentiment per news embedding expected");
  }
  const Tensor target =
      Tensor::from_data({true_scores.size()}, {true_scores.begin(), true_scores.end()});
  const Tensor mse = nn::mean(nn::square(nn::sub(pred, target)));
  const Tensor reg = sentiment_diversity_regularizer(rec_scores, cand_sentiments,
                                                     hist_mean_sentiment);
  return nn::add(nn::scale(mse, mu), nn::scale(reg, lambda_s));
}

}  // namespace newsrec::objectives
