#include "newsrec/users/user_model.hpp"

#include <random>

#include "newsrec/common/error.hpp"
#include "newsrec/nn/ops.hpp"

namespace newsrec::users {

using nn::Tensor;

std::string to_string(UserModelKind k) {
  switch (k) {
    case UserModelKind::kAttnPool: return "attn_pool";
    case UserModelKind::kMhsaPool: return "mhsa_pool";
    case UserModelKind::kLsturIni: return "lstur_ini";
    case UserModelKind::kNpaPersonalized: return "npa_personalized";
    case UserModelKind::kLateFusion: return "late_fusion";
  }
  return "?";
}

UserModelKind parse_user_model(const std::string& s) {
  for (auto k : {UserModelKind::kAttnPool, UserModelKind::kMhsaPool, UserModelKind::kLsturIni,
                 UserModelKind::kNpaPersonalized, UserModelKind::kLateFusion}) {
    if (to_string(k) == s) return k;
  }
  throw ConfigError("unknown user model '" + s +
                    "' (expected attn_pool, mhsa_pool, lstur_ini, npa_personalized or "
                    "late_fusion)");
}

UserEncoder::UserEncoder(nn::ParameterStore& store, const UserModelConfig& cfg,
                         std::size_t user_rows)
    : cfg_(cfg), user_rows_(user_rows) {
  if (!(cfg.long_term_mask_prob >= 0.0 && cfg.long_term_mask_prob <= 1.0)) {
    throw ConfigError("long_term_mask_prob must lie in [0, 1]");
  }
  const std::size_t d = cfg.d_model;
  switch (cfg.kind) {
    case UserModelKind::kAttnPool:
      att_ = nn::AdditiveAttention(store, "user.att", d, cfg.attention_dim);
      break;
    case UserModelKind::kMhsaPool:
      mhsa_ = nn::MultiHeadSelfAttention(store, "user.mhsa", d, cfg.heads);
      att_ = nn::AdditiveAttention(store, "user.att", d, cfg.attention_dim);
      break;
    case UserModelKind::kLsturIni:
      if (user_rows == 0) throw ConfigError("lstur_ini needs a user-id table");
      long_term_ = store.create("user.long_term", {user_rows, d}, nn::Init::kNormal);
      gru_ = nn::Gru(store, "user.gru", d, d);
      break;
    case UserModelKind::kNpaPersonalized:
      query_proj_ = nn::Dense(store, "user.query", cfg.user_id_dim, d);
      break;
    case UserModelKind::kLateFusion:
      break;
  }
}

Tensor UserEncoder::long_term(std::int64_t user_id) const {
  if (user_id < 0 || static_cast<std::size_t>(user_id) >= user_rows_) {
    throw Error("unknown user id " + std::to_string(user_id) + " (table has " +
                std::to_string(user_rows_) + " rows including COLD)");
  }
  const std::int64_t ids[] = {user_id};
  return nn::reshape(nn::embedding_lookup(long_term_, ids, -1), {cfg_.d_model});
}

Tensor UserEncoder::embed(const Tensor& history, std::int64_t user_id,
                          const nn::ForwardContext& ctx,
                          const std::optional<Tensor>& user_embedding) const {
  const std::size_t d = cfg_.d_model;
  const bool empty = history.dim() != 2 || history.rows() == 0;
  if (!empty && history.cols() != d) {
    throw Error("history width " + std::to_string(history.cols()) + " != d_model " +
                std::to_string(d));
  }
  switch (cfg_.kind) {
    case UserModelKind::kAttnPool:
      if (empty) return Tensor::zeros({d});
      return att_(history, {}).output;
    case UserModelKind::kMhsaPool:
      if (empty) return Tensor::zeros({d});
      return att_(mhsa_(history, {}), {}).output;
    case UserModelKind::kLsturIni: {
      Tensor h0 = long_term(user_id);
      if (ctx.training && cfg_.long_term_mask_prob > 0.0) {
        if (ctx.rng == nullptr) throw Error("lstur_ini training needs a random stream");
        std::bernoulli_distribution mask(cfg_.long_term_mask_prob);
        if (mask(*ctx.rng)) h0 = Tensor::zeros({d});
      }
      return empty ? h0 : gru_(history, h0);
    }
    case UserModelKind::kNpaPersonalized: {
      if (!user_embedding || !user_embedding->defined()) {
        throw Error("npa_personalized needs the user-id embedding");
      }
      if (empty) return Tensor::zeros({d});
      const Tensor q = nn::tanh(query_proj_.forward_vector(*user_embedding));
      return nn::dot_attention(history, q, {}).output;
    }
    case UserModelKind::kLateFusion:
      break;
  }
  throw Error("late_fusion has no user encoder; score with score_late");
}

Tensor score_early(const Tensor& user_embedding, const Tensor& candidates) {
  if (candidates.dim() != 2 || candidates.cols() != user_embedding.numel()) {
    throw Error("score_early: candidates " + nn::shape_string(candidates.shape()) +
                " do not match user width " + std::to_string(user_embedding.numel()));
  }
  return nn::matvec(candidates, user_embedding);
}

Tensor score_late(const Tensor& history, const Tensor& candidates) {
  if (history.dim() != 2 || history.rows() == 0) {
    throw Error("score_late: empty history (cold users need the COLD fallback upstream)");
  }
  if (candidates.dim() != 2 || candidates.cols() != history.cols()) {
    throw Error("score_late: candidates " + nn::shape_string(candidates.shape()) +
                " do not match history " + nn::shape_string(history.shape()));
  }
  const std::size_t l = history.rows();
  const Tensor pair = nn::matmul(candidates, nn::transpose(history));  // [m x L]
  return nn::matvec(pair, Tensor::full({l}, 1.0 / static_cast<double>(l)));
}

}  // namespace newsrec::users
