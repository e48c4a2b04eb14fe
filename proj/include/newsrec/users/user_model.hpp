#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "newsrec/nn/blocks.hpp"
#include "newsrec/nn/parameter.hpp"

namespace newsrec::users {

enum class UserModelKind { kAttnPool, kMhsaPool, kLsturIni, kNpaPersonalized, kLateFusion };

std::string to_string(UserModelKind k);
UserModelKind parse_user_model(const std::string& s);

struct UserModelConfig {
  UserModelKind kind = UserModelKind::kMhsaPool;
  std::size_t d_model = 64;
  std::size_t heads = 4;
  std::size_t attention_dim = 32;
  double long_term_mask_prob = 0.5;  // lstur_ini
  std::size_t user_id_dim = 32;      // npa_personalized
};

// Early-fusion user encoders. late_fusion owns no parameters and has no
// embed(); use score_late instead.
class UserEncoder {
 public:
  // user_rows: number of rows of the per-user tables (known users + COLD).
  UserEncoder(nn::ParameterStore& store, const UserModelConfig& cfg, std::size_t user_rows);

  // history: [L x d_model], L >= 0. user_embedding ([user_id_dim]) is the
  // caller-owned user-id vector, required for npa_personalized. ctx.rng drives
  // the long-term mask in training mode.
  nn::Tensor embed(const nn::Tensor& history, std::int64_t user_id,
                   const nn::ForwardContext& ctx,
                   const std::optional<nn::Tensor>& user_embedding = std::nullopt) const;

  const UserModelConfig& config() const { return cfg_; }

 private:
  nn::Tensor long_term(std::int64_t user_id) const;

  UserModelConfig cfg_;
  std::size_t user_rows_ = 0;
  nn::AdditiveAttention att_;
  nn::MultiHeadSelfAttention mhsa_;
  nn::Tensor long_term_;
  nn::Gru gru_;
  nn::Dense query_proj_;
};

// score_i = <user, cand_i>.
nn::Tensor score_early(const nn::Tensor& user_embedding, const nn::Tensor& candidates);

// score_i = (1/L) sum_j <cand_i, history_j>. L = 0 is fatal.
nn::Tensor score_late(const nn::Tensor& history, const nn::Tensor& candidates);

}  // namespace newsrec::users
