#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>

#include "newsrec/data/types.hpp"
#include "newsrec/nn/blocks.hpp"
#include "newsrec/nn/parameter.hpp"

namespace newsrec::encoders {

enum class TextBlock { kCnnAdditive, kMhsaAdditive, kPersonalized };
enum class Fusion { kConcatProject, kAttend };

std::string to_string(TextBlock b);
std::string to_string(Fusion f);
TextBlock parse_text_block(const std::string& s);
Fusion parse_fusion(const std::string& s);

struct NewsEncoderConfig {
  TextBlock text_block = TextBlock::kMhsaAdditive;
  bool use_abstract = false;
  bool use_category = false;
  bool use_entities = false;
  std::size_t d_model = 64;
  std::size_t word_dim = 64;
  std::size_t cnn_window = 3;
  std::size_t heads = 4;
  std::size_t attention_dim = 32;
  std::size_t category_dim = 32;
  std::size_t entity_dim = 100;
  std::size_t user_query_dim = 32;  // personalized block only
  Fusion fusion = Fusion::kAttend;
  double dropout = 0.2;
};

// Vocabulary sizes the encoder tables are built for.
struct NewsEncoderSizes {
  std::size_t words = 2;
  std::size_t categories = 1;
  std::size_t subcategories = 1;
  std::size_t entities = 2;
};

// Optional pretrained tables. The word table is fine-tuned, the entity
// table is frozen.
struct PretrainedTables {
  nn::Tensor words;     // [words x word_dim]
  nn::Tensor entities;  // [entities x entity_dim]
};

// One embedding of width d_model per news item.
class NewsEncoder {
 public:
  NewsEncoder(nn::ParameterStore& store, const NewsEncoderConfig& cfg,
              const NewsEncoderSizes& sizes, const PretrainedTables& pretrained = {});

  // user_query ([user_query_dim]) is required iff text_block is personalized.
  nn::Tensor encode(const data::NewsItem& item, const nn::ForwardContext& ctx,
                    const std::optional<nn::Tensor>& user_query = std::nullopt) const;

  // Row i equals encode(items[i]); an empty batch gives [0 x d_model].
  nn::Tensor encode_batch(std::span<const data::NewsItem> items, const nn::ForwardContext& ctx,
                          std::span<const nn::Tensor> user_queries = {}) const;

  const NewsEncoderConfig& config() const { return cfg_; }
  bool personalized() const { return cfg_.text_block == TextBlock::kPersonalized; }

 private:
  nn::Tensor encode_text(std::span<const std::int64_t> tokens, const nn::ForwardContext& ctx,
                         const std::optional<nn::Tensor>& query) const;
  nn::Tensor encode_label(const nn::Tensor& table, const nn::Dense& dense, int id,
                          const nn::ForwardContext& ctx) const;
  nn::Tensor encode_entities(std::span<const std::int64_t> ids,
                             const nn::ForwardContext& ctx) const;

  NewsEncoderConfig cfg_;
  nn::Tensor word_emb_;
  nn::Dense word_proj_;  // word_dim -> d_model before MHSA when widths differ
  bool project_words_ = false;
  nn::Conv1d conv_;
  nn::MultiHeadSelfAttention text_mhsa_;
  nn::AdditiveAttention text_att_;
  nn::Dense query_proj_;
  nn::Tensor cat_emb_, subcat_emb_;
  nn::Dense cat_dense_, subcat_dense_;
  nn::Tensor ent_emb_;
  nn::Dense ent_dense_;
  nn::MultiHeadSelfAttention ent_mhsa_;
  nn::AdditiveAttention ent_att_;
  nn::AdditiveAttention fusion_att_;
  nn::Dense fusion_proj_;
  std::size_t n_features_ = 1;
};

struct PretrainedEmbeddings {
  nn::Tensor table;  // [vocab.size() x dim]; PAD row zero
  std::size_t dim = 0;
  std::size_t covered = 0;
  double coverage = 0.0;  // covered / non-special vocabulary entries
};

// Text file, one "token v1 ... vd" per line. Vocabulary entries missing from
// the file are drawn from N(0, 0.1). Inconsistent widths are fatal with the
// line number.
PretrainedEmbeddings load_pretrained_embeddings(const std::filesystem::path& path,
                                                const data::Vocabulary& vocab,
                                                std::uint64_t seed);

// Unnormalized category logits: emb [d] . weight [d x C] + bias [C].
nn::Tensor topic_logits(const nn::Tensor& news_embedding, const nn::Tensor& weight,
                        const nn::Tensor& bias);

}  // namespace newsrec::encoders
