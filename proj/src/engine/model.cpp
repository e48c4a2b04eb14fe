#include "newsrec/engine/model.hpp"

#include "newsrec/common/error.hpp"
#include "newsrec/common/hash.hpp"
#include "newsrec/nn/ops.hpp"

namespace newsrec::engine {

using nn::Tensor;

ModelSizes model_sizes(const data::PreparedData& data) {
  ModelSizes s;
  s.news.words = data.tables.words.size();
  s.news.categories = std::max<std::size_t>(1, data.tables.categories.size());
  s.news.subcategories = std::max<std::size_t>(1, data.tables.subcategories.size());
  s.news.entities = data.tables.entities.size();
  s.user_rows = data.users.n_users + 1;
  return s;
}

Recommender::Recommender(const ModelConfig& cfg, const ModelSizes& sizes, std::uint64_t seed,
                         const encoders::PretrainedTables& pretrained)
    : cfg_(cfg), user_rows_(sizes.user_rows), store_(mix_seed(seed, 0x6d6f64656cULL)) {
  cfg_.loss.validate();
  cfg_.user_model.d_model = cfg_.news_encoder.d_model;
  cfg_.news_encoder.user_query_dim = cfg_.user_model.user_id_dim;
  const bool needs_ids = cfg_.news_encoder.text_block == encoders::TextBlock::kPersonalized ||
                         cfg_.user_model.kind == users::UserModelKind::kNpaPersonalized;
  if (needs_ids) {
    user_table_ = store_.create("user.id_emb", {user_rows_, cfg_.user_model.user_id_dim},
                                nn::Init::kNormal);
  }
  news_ = std::make_unique<encoders::NewsEncoder>(store_, cfg_.news_encoder, sizes.news,
                                                  pretrained);
  user_ = std::make_unique<users::UserEncoder>(store_, cfg_.user_model, user_rows_);
  const std::size_t d = cfg_.news_encoder.d_model;
  if (cfg_.loss.aux == objectives::AuxKind::kTanr) {
    topic_w_ = store_.create("aux.topic.weight", {d, sizes.news.categories},
                             nn::Init::kGlorotUniform);
    topic_b_ = store_.create("aux.topic.bias", {sizes.news.categories}, nn::Init::kZeros);
  }
  if (cfg_.loss.aux == objectives::AuxKind::kSentiRec) {
    senti_w_ = store_.create("aux.sentiment.weight", {d, 1}, nn::Init::kGlorotUniform);
    senti_b_ = store_.create("aux.sentiment.bias", {1}, nn::Init::kZeros);
  }
}

Tensor Recommender::user_id_embedding(std::int64_t user_id) const {
  if (!user_table_.defined()) return {};
  if (user_id < 0 || static_cast<std::size_t>(user_id) >= user_rows_) {
    throw Error("unknown user id " + std::to_string(user_id));
  }
  const std::int64_t ids[] = {user_id};
  return nn::reshape(nn::embedding_lookup(user_table_, ids, -1), {cfg_.user_model.user_id_dim});
}

Tensor Recommender::encode(const data::NewsItem& item, const nn::ForwardContext& ctx,
                           std::int64_t user_id) const {
  if (!personalized_news()) return news_->encode(item, ctx);
  return news_->encode(item, ctx, user_id_embedding(user_id));
}

Tensor Recommender::score(const Tensor& history, const Tensor& candidates, std::int64_t user_id,
                          const nn::ForwardContext& ctx, const Tensor& fallback) const {
  const bool empty = !history.defined() || history.dim() != 2 || history.rows() == 0;
  if (late_fusion()) {
    if (!empty) return users::score_late(history, candidates);
    if (!fallback.defined()) throw Error("late fusion needs a fallback for empty histories");
    return users::score_late(nn::reshape(fallback, {1, fallback.numel()}), candidates);
  }
  const Tensor h = empty ? Tensor::zeros({0, cfg_.news_encoder.d_model}) : history;
  std::optional<Tensor> uid;
  if (cfg_.user_model.kind == users::UserModelKind::kNpaPersonalized) {
    uid = user_id_embedding(user_id);
  }
  return users::score_early(user_->embed(h, user_id, ctx, uid), candidates);
}

}  // namespace newsrec::engine
