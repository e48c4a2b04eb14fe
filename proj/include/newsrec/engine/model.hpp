#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "newsrec/data/cache.hpp"
#include "newsrec/encoders/news_encoder.hpp"
#include "newsrec/engine/experiment.hpp"
#include "newsrec/nn/parameter.hpp"
#include "newsrec/users/user_model.hpp"

namespace newsrec::engine {

struct ModelSizes {
  encoders::NewsEncoderSizes news;
  std::size_t user_rows = 1;  // known users + COLD
};

ModelSizes model_sizes(const data::PreparedData& data);

// News encoder + user model + click predictor (+ auxiliary heads) over one
// parameter store. Parameter names are stable across user-model kinds, so a
// checkpoint of an early-fusion model loads into its late-fusion twin.
class Recommender {
 public:
  Recommender(const ModelConfig& cfg, const ModelSizes& sizes, std::uint64_t seed,
              const encoders::PretrainedTables& pretrained = {});

  nn::ParameterStore& store() { return store_; }
  const nn::ParameterStore& store() const { return store_; }
  const ModelConfig& config() const { return cfg_; }
  const encoders::NewsEncoder& news_encoder() const { return *news_; }
  bool late_fusion() const { return cfg_.user_model.kind == users::UserModelKind::kLateFusion; }
  bool personalized_news() const { return news_->personalized(); }

  // [user_id_dim] user-id vector, or undefined when the model has none.
  nn::Tensor user_id_embedding(std::int64_t user_id) const;

  nn::Tensor encode(const data::NewsItem& item, const nn::ForwardContext& ctx,
                    std::int64_t user_id) const;

  // history [L x d] (L may be 0), candidates [m x d] -> scores [m].
  // Late fusion with L = 0 uses `fallback` as the single history row.
  nn::Tensor score(const nn::Tensor& history, const nn::Tensor& candidates,
                   std::int64_t user_id, const nn::ForwardContext& ctx,
                   const nn::Tensor& fallback = {}) const;

  // Auxiliary heads (undefined unless the matching aux objective is on).
  const nn::Tensor& topic_weight() const { return topic_w_; }
  const nn::Tensor& topic_bias() const { return topic_b_; }
  const nn::Tensor& sentiment_weight() const { return senti_w_; }
  const nn::Tensor& sentiment_bias() const { return senti_b_; }

 private:
  ModelConfig cfg_;
  std::size_t user_rows_;
  nn::ParameterStore store_;
  nn::Tensor user_table_;
  std::unique_ptr<encoders::NewsEncoder> news_;
  std::unique_ptr<users::UserEncoder> user_;
  nn::Tensor topic_w_, topic_b_, senti_w_, senti_b_;
};

}  // namespace newsrec::engine
